#include "leakprobe/audit.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "json_detail.hpp"
#include "leakprobe/error.hpp"
#include "leakprobe/version.hpp"
#include "parallel_for.hpp"

namespace leakprobe {

namespace {

using ordered_json = nlohmann::ordered_json;

/// Re-throws component errors tagged with the pipeline stage, preserving the
/// error type so the CLI exit-code mapping still sees it.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError("audit stage \"" + std::string(name) + "\": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("audit stage \"" + std::string(name) + "\": " +
                          e.what());
  } catch (const Error& e) {
    throw Error("audit stage \"" + std::string(name) + "\": " + e.what());
  }
}

FeatureMatrix gather_rows(const FeatureMatrix& matrix,
                          const std::vector<std::size_t>& rows) {
  FeatureMatrix out;
  out.rows = rows.size();
  out.cols = matrix.cols;
  out.n_classes = matrix.n_classes;
  out.probe = matrix.probe;
  out.values.resize(out.rows * out.cols);
  out.labels.resize(out.rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= matrix.rows) {
      throw InvalidArgument("audit: split index " + std::to_string(r) +
                            " outside the matrix (" +
                            std::to_string(matrix.rows) + " rows)");
    }
    const auto row = matrix.row(r);
    std::copy(row.begin(), row.end(), out.values.begin() + i * out.cols);
    out.labels[i] = matrix.labels[r];
  }
  return out;
}

std::string percent(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.1f%%", value);
  return buffer;
}

std::string one_decimal(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.1f", value);
  return buffer;
}

}  // namespace

AuditReport run_audit_on_matrix(const FeatureMatrix& matrix,
                                const std::string& dataset_name,
                                const SplitIndices& indices,
                                const SplitSpec& split_spec,
                                const ForestConfig& forest_config,
                                const ProbeEcho& probe_details,
                                unsigned threads) {
  if (matrix.n_classes < 2) {
    throw InvalidArgument("audit: needs at least 2 classes, got " +
                          std::to_string(matrix.n_classes));
  }
  if (indices.train.empty() || indices.test.empty()) {
    throw InvalidArgument("audit: both split partitions must be non-empty");
  }

  // The trained model sees only the gathered train rows; the test partition
  // stays outside fit entirely.
  const FeatureMatrix train = gather_rows(matrix, indices.train);
  const FeatureMatrix test = gather_rows(matrix, indices.test);

  const RandomForestModel model =
      stage("fit", [&] { return fit(train, forest_config, threads); });
  const double test_accuracy =
      stage("evaluate", [&] { return accuracy(model, test, threads); });

  AuditReport report;
  report.dataset_name = dataset_name;
  report.probe = matrix.probe;
  report.n_classes = matrix.n_classes;
  report.n_train = train.rows;
  report.n_test = test.rows;
  report.per_class_test_counts.assign(matrix.n_classes, 0);
  for (int label : test.labels) {
    ++report.per_class_test_counts[label];
  }
  report.accuracy_percent = test_accuracy;
  report.chance_percent = random_guess_accuracy(matrix.n_classes);
  report.bias_ratio = report.accuracy_percent / report.chance_percent;
  report.seed = split_spec.seed;
  report.train_fraction = split_spec.train_fraction;
  report.forest = forest_config;
  report.probe_details = probe_details;
  report.toolkit_version = kVersion;
  return report;
}

AuditReport run_audit(const LabeledImageSet& set, ProbeKind probe,
                      const SplitSpec& split_spec,
                      const ForestConfig& forest_config, unsigned threads) {
  if (set.n_classes() < 2) {
    throw InvalidArgument("audit: needs at least 2 classes, got " +
                          std::to_string(set.n_classes()));
  }
  const FeatureMatrix matrix = stage(
      "probe", [&] { return build_feature_matrix(set, probe, threads); });
  const SplitIndices indices =
      stage("split", [&] { return split(set, split_spec); });

  ProbeEcho echo;
  if (probe == ProbeKind::kBlur) {
    echo.blur_metric_name = kBlurMetricName;
  } else {
    const auto coords =
        eight_pixel_coords(set.records[0].width, set.records[0].height);
    for (const auto& [x, y] : coords) {
      echo.pixel_coordinates.push_back({x, y});
    }
  }
  return run_audit_on_matrix(matrix, set.name, indices, split_spec,
                             forest_config, echo, threads);
}

BlurTripletReports run_blur_triplet(const LabeledImageSet& original,
                                    const LabeledImageSet& foreground,
                                    const SplitSpec& split_spec,
                                    const ForestConfig& forest_config,
                                    unsigned threads) {
  if (original.size() != foreground.size()) {
    throw DataError("blur triplet: " + std::to_string(original.size()) +
                    " originals vs " + std::to_string(foreground.size()) +
                    " foreground images");
  }
  for (std::size_t i = 0; i < original.size(); ++i) {
    const ImageRecord& a = original.records[i];
    const ImageRecord& b = foreground.records[i];
    if (a.label != b.label) {
      throw DataError("blur triplet: label mismatch at record " +
                      std::to_string(i) + ": \"" + a.label + "\" vs \"" +
                      b.label + "\"");
    }
    if (!a.same_shape(b)) {
      throw DataError(
          "blur triplet: shape mismatch at record " + std::to_string(i) +
          ": " + std::to_string(a.width) + "x" + std::to_string(a.height) +
          "x" + std::to_string(a.channels) + " vs " + std::to_string(b.width) +
          "x" + std::to_string(b.height) + "x" + std::to_string(b.channels));
    }
  }

  LabeledImageSet background;
  background.name = original.name + "_bg";
  background.class_index = original.class_index;
  background.records.resize(original.size());
  stage("separate_background", [&] {
    detail::parallel_for(original.size(), threads, [&](std::size_t i) {
      background.records[i] = separate_background(original.records[i],
                                                  foreground.records[i]);
      background.records[i].label = original.records[i].label;
    });
  });

  const SplitIndices indices =
      stage("split", [&] { return split(original, split_spec); });
  ProbeEcho echo;
  echo.blur_metric_name = kBlurMetricName;

  auto audit_one = [&](const LabeledImageSet& set, const std::string& name) {
    const FeatureMatrix matrix = stage("probe", [&] {
      return build_feature_matrix(set, ProbeKind::kBlur, threads);
    });
    return run_audit_on_matrix(matrix, name, indices, split_spec,
                               forest_config, echo, threads);
  };

  BlurTripletReports reports;
  reports.full = audit_one(original, original.name + "_blur");
  reports.foreground = audit_one(foreground, original.name + "_fg_blur");
  reports.background = audit_one(background, original.name + "_bg_blur");
  return reports;
}

std::string render_report(const AuditReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    ordered_json j;
    j["schema"] = kReportSchema;
    j["toolkit_version"] = report.toolkit_version;
    j["dataset_name"] = report.dataset_name;
    j["probe"] = probe_name(report.probe);
    j["n_classes"] = report.n_classes;
    j["n_train"] = report.n_train;
    j["n_test"] = report.n_test;
    j["per_class_test_counts"] = report.per_class_test_counts;
    j["accuracy_percent"] = report.accuracy_percent;
    j["chance_percent"] = report.chance_percent;
    j["bias_ratio"] = report.bias_ratio;
    j["seed"] = report.seed;
    j["train_fraction"] = report.train_fraction;
    j["forest_config"] = detail::forest_config_to_json(report.forest);
    ordered_json details;
    if (report.probe_details.blur_metric_name.empty()) {
      details["blur_metric"] = nullptr;
    } else {
      details["blur_metric"] = report.probe_details.blur_metric_name;
    }
    ordered_json coords = ordered_json::array();
    for (const auto& coord : report.probe_details.pixel_coordinates) {
      coords.push_back({coord[0], coord[1]});
    }
    details["pixel_coordinates"] = std::move(coords);
    j["probe_details"] = std::move(details);
    return j.dump(2) + "\n";
  }

  // Text summary: accuracy against chance, the ratio, and a 3-sigma
  // normal-approximation band around chance for the verdict.
  const double band =
      3.0 * std::sqrt(report.chance_percent * (100.0 - report.chance_percent) /
                      static_cast<double>(report.n_test));
  const bool flagged = report.accuracy_percent > report.chance_percent + band;

  std::string text;
  text += "audit report (leakprobe " + report.toolkit_version + ")\n";
  text += "dataset: " + report.dataset_name + "\n";
  text += std::string("probe: ") + probe_name(report.probe) + "\n";
  text += "classes: " + std::to_string(report.n_classes) + ", chance " +
          percent(report.chance_percent) + "\n";
  text += "train/test: " + std::to_string(report.n_train) + "/" +
          std::to_string(report.n_test) + "\n";
  text += "test accuracy: " + percent(report.accuracy_percent) + "\n";
  text += "bias ratio " + one_decimal(report.bias_ratio) +
          " (accuracy / chance)\n";
  text += "chance band: accuracy above " +
          percent(report.chance_percent + band) +
          " flags bias (3-sigma around chance, n_test " +
          std::to_string(report.n_test) + ")\n";
  text += std::string("verdict: ") +
          (flagged ? "bias flagged" : "no bias flagged") + "\n";
  return text;
}

AuditReport parse_report(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("parse_report: not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) {
      throw DataError("parse_report: unsupported schema \"" +
                      j.at("schema").get<std::string>() + "\"");
    }
    AuditReport report;
    report.toolkit_version = j.at("toolkit_version").get<std::string>();
    report.dataset_name = j.at("dataset_name").get<std::string>();
    report.probe = parse_probe(j.at("probe").get<std::string>());
    report.n_classes = j.at("n_classes").get<int>();
    report.n_train = j.at("n_train").get<std::size_t>();
    report.n_test = j.at("n_test").get<std::size_t>();
    report.per_class_test_counts =
        j.at("per_class_test_counts").get<std::vector<std::int64_t>>();
    report.accuracy_percent = j.at("accuracy_percent").get<double>();
    report.chance_percent = j.at("chance_percent").get<double>();
    report.bias_ratio = j.at("bias_ratio").get<double>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.train_fraction = j.at("train_fraction").get<double>();
    report.forest = detail::forest_config_from_json(j.at("forest_config"));
    const auto& details = j.at("probe_details");
    if (!details.at("blur_metric").is_null()) {
      report.probe_details.blur_metric_name =
          details.at("blur_metric").get<std::string>();
    }
    for (const auto& coord : details.at("pixel_coordinates")) {
      report.probe_details.pixel_coordinates.push_back(
          {coord.at(0).get<int>(), coord.at(1).get<int>()});
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("parse_report: malformed report: ") +
                    e.what());
  }
}

}  // namespace leakprobe
