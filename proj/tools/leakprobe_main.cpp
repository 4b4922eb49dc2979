#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>

#include <CLI11.hpp>

#include "leakprobe/audit.hpp"
#include "leakprobe/dataset.hpp"
#include "leakprobe/error.hpp"
#include "leakprobe/probes.hpp"
#include "leakprobe/synth.hpp"
#include "leakprobe/version.hpp"

namespace {

using namespace leakprobe;

struct InputFlags {
  std::string dataset;
  std::string idx_images;
  std::string idx_labels;
};

void add_input_flags(CLI::App* cmd, InputFlags& flags) {
  cmd->add_option("--dataset", flags.dataset,
                  "Folder-per-class image tree (root/<class>/img.png)");
  cmd->add_option("--idx-images", flags.idx_images,
                  "IDX images file (use together with --idx-labels)");
  cmd->add_option("--idx-labels", flags.idx_labels,
                  "IDX labels file (use together with --idx-images)");
}

LabeledImageSet load_input(const InputFlags& flags, unsigned threads) {
  const bool folder = !flags.dataset.empty();
  const bool idx = !flags.idx_images.empty() || !flags.idx_labels.empty();
  if (folder == idx) {
    throw InvalidArgument(
        "pass either --dataset or --idx-images with --idx-labels");
  }
  if (folder) {
    return load_image_folder(flags.dataset, threads);
  }
  if (flags.idx_images.empty() || flags.idx_labels.empty()) {
    throw InvalidArgument("--idx-images and --idx-labels go together");
  }
  return load_idx_pair(flags.idx_images, flags.idx_labels);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw DataError("cannot open output file: " + out_path);
  }
  out << text;
  out.flush();
  if (!out) {
    throw DataError("cannot write output file: " + out_path);
  }
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto sep = text.find('x');
  std::size_t w_end = 0;
  std::size_t h_end = 0;
  int width = 0;
  int height = 0;
  try {
    width = std::stoi(text.substr(0, sep), &w_end);
    height = std::stoi(text.substr(sep + 1), &h_end);
  } catch (const std::exception&) {
    w_end = std::string::npos;
  }
  if (sep == std::string::npos || w_end != sep ||
      h_end != text.size() - sep - 1) {
    throw InvalidArgument("--size expects WxH, e.g. 64x64, got \"" + text +
                          "\"");
  }
  return {width, height};
}

ReportFormat parse_format(const std::string& name) {
  return name == "text" ? ReportFormat::kText : ReportFormat::kJson;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leakprobe: audits image datasets for capture bias by "
               "training a random forest on label-uninformative probes"};
  app.require_subcommand(1);

  struct {
    InputFlags input;
    std::string probe = "8px";
    std::uint64_t seed = 0;
    double train_frac = 0.8;
    int trees = 100;
    std::string format = "json";
    std::string out;
    unsigned threads = 0;
  } audit_flags;
  CLI::App* audit_cmd = app.add_subcommand(
      "audit", "Probe a dataset and report accuracy against chance");
  add_input_flags(audit_cmd, audit_flags.input);
  audit_cmd->add_option("--probe", audit_flags.probe, "Probe to audit with")
      ->check(CLI::IsMember({"8px", "blur"}))
      ->capture_default_str();
  audit_cmd->add_option("--seed", audit_flags.seed, "Split and forest seed")
      ->capture_default_str();
  audit_cmd
      ->add_option("--train-frac", audit_flags.train_frac,
                   "Train fraction of the split, in (0, 1)")
      ->capture_default_str();
  audit_cmd->add_option("--trees", audit_flags.trees, "Trees in the forest")
      ->capture_default_str();
  audit_cmd->add_option("--format", audit_flags.format, "Report format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  audit_cmd->add_option("--out", audit_flags.out,
                        "Write the report here instead of stdout");
  audit_cmd
      ->add_option("--threads", audit_flags.threads,
                   "Worker threads (0 = hardware)")
      ->capture_default_str();

  struct {
    std::string dataset;
    std::string foreground;
    std::uint64_t seed = 0;
    double train_frac = 0.8;
    int trees = 100;
    std::string format = "json";
    std::string out;
    unsigned threads = 0;
  } triplet_flags;
  CLI::App* triplet_cmd = app.add_subcommand(
      "blur-triplet",
      "Blur-probe audits of full, foreground-only and background-only "
      "variants sharing one split");
  triplet_cmd
      ->add_option("--dataset", triplet_flags.dataset,
                   "Folder-per-class tree of the full images")
      ->required();
  triplet_cmd
      ->add_option("--foreground", triplet_flags.foreground,
                   "Aligned tree of foreground images (background pure black)")
      ->required();
  triplet_cmd->add_option("--seed", triplet_flags.seed, "Split and forest seed")
      ->capture_default_str();
  triplet_cmd
      ->add_option("--train-frac", triplet_flags.train_frac,
                   "Train fraction of the split, in (0, 1)")
      ->capture_default_str();
  triplet_cmd->add_option("--trees", triplet_flags.trees, "Trees in the forest")
      ->capture_default_str();
  triplet_cmd->add_option("--format", triplet_flags.format, "Report format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  triplet_cmd->add_option("--out", triplet_flags.out,
                          "Write the reports here instead of stdout");
  triplet_cmd
      ->add_option("--threads", triplet_flags.threads,
                   "Worker threads (0 = hardware)")
      ->capture_default_str();

  struct {
    InputFlags input;
    std::string probe = "8px";
    std::string out;
    unsigned threads = 0;
  } dump_flags;
  CLI::App* dump_cmd = app.add_subcommand(
      "probe-dump", "Dump per-image probe features as CSV");
  add_input_flags(dump_cmd, dump_flags.input);
  dump_cmd->add_option("--probe", dump_flags.probe, "Probe to dump")
      ->check(CLI::IsMember({"8px", "blur"}))
      ->capture_default_str();
  dump_cmd->add_option("--out", dump_flags.out,
                       "Write the CSV here instead of stdout");
  dump_cmd
      ->add_option("--threads", dump_flags.threads,
                   "Worker threads (0 = hardware)")
      ->capture_default_str();

  struct {
    std::string out;
    std::string foreground_out;
    int classes = 5;
    int per_class = 200;
    double bias = 1.0;
    std::string bias_channel = "bg";
    double noise_sd = 5.0;
    std::string size = "64x64";
    std::uint64_t seed = 0;
    unsigned threads = 0;
  } synth_flags;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic dataset with bias known by construction");
  synth_cmd->add_option("--out", synth_flags.out, "Output dataset root")
      ->required();
  synth_cmd->add_option(
      "--foreground-out", synth_flags.foreground_out,
      "Also write the aligned foreground-only variant here");
  synth_cmd->add_option("--classes", synth_flags.classes, "Class count")
      ->capture_default_str();
  synth_cmd->add_option("--per-class", synth_flags.per_class,
                        "Images per class")
      ->capture_default_str();
  synth_cmd
      ->add_option("--bias", synth_flags.bias,
                   "Bias strength in [0, 1]; 0 = no class signal anywhere")
      ->capture_default_str();
  synth_cmd
      ->add_option("--bias-channel", synth_flags.bias_channel,
                   "Capture condition the bias rides on")
      ->check(CLI::IsMember({"bg", "blur"}))
      ->capture_default_str();
  synth_cmd
      ->add_option("--noise-sd", synth_flags.noise_sd,
                   "Gaussian pixel noise standard deviation")
      ->capture_default_str();
  synth_cmd->add_option("--size", synth_flags.size, "Image size as WxH")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_flags.seed, "Generator seed")
      ->capture_default_str();
  synth_cmd
      ->add_option("--threads", synth_flags.threads,
                   "Worker threads (0 = hardware)")
      ->capture_default_str();

  CLI::App* version_cmd =
      app.add_subcommand("version", "Print the toolkit version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (version_cmd->parsed()) {
      std::cout << "leakprobe " << kVersion << "\n";
      return 0;
    }

    if (audit_cmd->parsed()) {
      const LabeledImageSet set =
          load_input(audit_flags.input, audit_flags.threads);
      SplitSpec split_spec;
      split_spec.train_fraction = audit_flags.train_frac;
      split_spec.seed = audit_flags.seed;
      ForestConfig forest_config;
      forest_config.n_trees = audit_flags.trees;
      forest_config.seed = audit_flags.seed;
      const AuditReport report =
          run_audit(set, parse_probe(audit_flags.probe), split_spec,
                    forest_config, audit_flags.threads);
      emit(render_report(report, parse_format(audit_flags.format)),
           audit_flags.out);
      return 0;
    }

    if (triplet_cmd->parsed()) {
      const LabeledImageSet original =
          load_image_folder(triplet_flags.dataset, triplet_flags.threads);
      const LabeledImageSet foreground =
          load_image_folder(triplet_flags.foreground, triplet_flags.threads);
      SplitSpec split_spec;
      split_spec.train_fraction = triplet_flags.train_frac;
      split_spec.seed = triplet_flags.seed;
      ForestConfig forest_config;
      forest_config.n_trees = triplet_flags.trees;
      forest_config.seed = triplet_flags.seed;
      const BlurTripletReports reports = run_blur_triplet(
          original, foreground, split_spec, forest_config,
          triplet_flags.threads);
      const ReportFormat format = parse_format(triplet_flags.format);
      std::string text;
      if (format == ReportFormat::kJson) {
        // Three leakprobe.report.v1 documents under one wrapper object.
        text = "{\n\"full\": " + render_report(reports.full, format) +
               ",\n\"foreground\": " +
               render_report(reports.foreground, format) +
               ",\n\"background\": " +
               render_report(reports.background, format) + "}\n";
      } else {
        text = render_report(reports.full, format) + "\n" +
               render_report(reports.foreground, format) + "\n" +
               render_report(reports.background, format);
      }
      emit(text, triplet_flags.out);
      return 0;
    }

    if (dump_cmd->parsed()) {
      const LabeledImageSet set =
          load_input(dump_flags.input, dump_flags.threads);
      std::ostringstream csv;
      write_probe_csv(set, parse_probe(dump_flags.probe), csv,
                      dump_flags.threads);
      emit(csv.str(), dump_flags.out);
      return 0;
    }

    if (synth_cmd->parsed()) {
      SynthConfig config;
      config.n_classes = synth_flags.classes;
      config.n_per_class = synth_flags.per_class;
      std::tie(config.width, config.height) = parse_size(synth_flags.size);
      config.bias_strength = synth_flags.bias;
      config.bias_channel = parse_bias_channel(synth_flags.bias_channel);
      config.background_noise_sd = synth_flags.noise_sd;
      config.seed = synth_flags.seed;
      if (synth_flags.foreground_out.empty()) {
        write_image_folder(generate(config, synth_flags.threads),
                           synth_flags.out);
      } else {
        const SynthPair pair =
            generate_with_foreground(config, synth_flags.threads);
        write_image_folder(pair.full, synth_flags.out);
        write_image_folder(pair.foreground, synth_flags.foreground_out);
      }
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
