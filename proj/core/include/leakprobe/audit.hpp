#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "leakprobe/dataset.hpp"
#include "leakprobe/forest.hpp"
#include "leakprobe/probes.hpp"

namespace leakprobe {

/// Probe decisions echoed into each report so a run is reproducible from the
/// report alone.
struct ProbeEcho {
  /// Sharpness estimator name; filled for blur-probe audits.
  std::string blur_metric_name;
  /// Sampling positions actually used; filled for 8px audits.
  std::vector<std::array<int, 2>> pixel_coordinates;

  bool operator==(const ProbeEcho&) const = default;
};

/// Outcome of one audit: probe accuracy against the chance baseline, plus
/// full provenance.
struct AuditReport {
  std::string dataset_name;
  ProbeKind probe = ProbeKind::kEightPixel;
  int n_classes = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::int64_t> per_class_test_counts;
  double accuracy_percent = 0.0;
  double chance_percent = 0.0;
  double bias_ratio = 0.0;  // accuracy_percent / chance_percent
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  ForestConfig forest;
  ProbeEcho probe_details;
  std::string toolkit_version;

  bool operator==(const AuditReport&) const = default;
};

enum class ReportFormat { kJson, kText };

/// The end-to-end experiment: probe features, split, fit on the train
/// partition only, evaluate test accuracy against 100/K chance. No test-set
/// information reaches fit. Errors from the stages are re-thrown tagged with
/// the stage name.
AuditReport run_audit(const LabeledImageSet& set, ProbeKind probe,
                      const SplitSpec& split_spec,
                      const ForestConfig& forest_config, unsigned threads = 0);

/// Audit core over an already-built matrix and a fixed partition; exposed so
/// callers can reuse one split across several feature sets or drop test rows
/// without touching training.
AuditReport run_audit_on_matrix(const FeatureMatrix& matrix,
                                const std::string& dataset_name,
                                const SplitIndices& indices,
                                const SplitSpec& split_spec,
                                const ForestConfig& forest_config,
                                const ProbeEcho& probe_details,
                                unsigned threads = 0);

struct BlurTripletReports {
  AuditReport full;
  AuditReport foreground;
  AuditReport background;
};

/// Measures whether background removal removes capture bias: derives the
/// background set via separate_background, then runs the blur-probe audit on
/// the full, foreground-only and background-only sets with the SAME split
/// indices, so the three accuracies differ only by probe input. The two sets
/// must be image-aligned (same order, labels and dimensions).
BlurTripletReports run_blur_triplet(const LabeledImageSet& original,
                                    const LabeledImageSet& foreground,
                                    const SplitSpec& split_spec,
                                    const ForestConfig& forest_config,
                                    unsigned threads = 0);

/// json: machine-parseable, schema leakprobe.report.v1, round-trips through
/// parse_report. text: human summary with accuracy vs chance, the bias
/// ratio, and a normal-approximation chance band.
std::string render_report(const AuditReport& report, ReportFormat format);

/// Inverse of render_report(report, kJson).
AuditReport parse_report(const std::string& json_text);

}  // namespace leakprobe
