// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "crowdflux/config.hpp"
#include "crowdflux/error.hpp"
#include "crowdflux/eval.hpp"
#include "crowdflux/model.hpp"
#include "crowdflux/pipeline.hpp"
#include "crowdflux/synth.hpp"

namespace crowdflux::cli {
namespace {

namespace fs = std::filesystem;

// Raised for bad flag values found after CLI11 has parsed the line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& scenario_keys() {
  static const std::vector<std::string> keys = {"preset",       "width",     "height", "frames",
                                                "agents",       "v_walk",    "agent_radius",
                                                "t_anomaly",    "seed",      "panic_speed",
                                                "intruder_speed"};
  return keys;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Pipeline settings shared by train, detect and eval. Layers apply in the
// order profile, config file, individual flags.
struct ConfigFlags {
  std::string profile;
  std::string file;
  std::map<std::string, std::string> values;
  bool no_update = false;

  void attach(CLI::App& app) {
    app.add_option("--profile", profile, "Named parameter profile")->check(CLI::IsMember(profile_names()));
    app.add_option("--config", file, "key=value pipeline config file")->check(CLI::ExistingFile);
    app.add_flag("--no-update", no_update, "Freeze the dictionary group during detection");
    for (const auto& key : config_keys()) {
      app.add_option("--" + key, values[key], "Override config key '" + key + "'");
    }
  }

  PipelineConfig build(PipelineConfig base = {}) const {
    try {
      if (!profile.empty()) apply_profile(base, profile);
      if (!file.empty()) apply_config_text(base, read_text(file));
      for (const auto& [key, value] : values) {
        if (!value.empty()) set_config_value(base, key, value);
      }
      if (no_update) base.update = false;
      base.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return base;
  }
};

struct FrameWindow {
  int first = 0;
  int count = -1;

  void attach(CLI::App& app, const char* count_help) {
    app.add_option("--first", first, "First flow frame to use")->check(CLI::NonNegativeNumber);
    app.add_option("--frames", count, count_help);
  }
};

void print_error(std::ostream& err, const Error& e) {
  err << "error: " << e.what() << '\n';
}

// ---------------------------------------------------------------------------

struct SynthCommand {
  std::string config_file;
  std::string out_dir;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "Scenario key=value file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory for flow, gt/ masks and scenario.cfg")->required();
    for (const auto& key : scenario_keys()) {
      app.add_option("--" + key, values[key], "Override scenario key '" + key + "'");
    }
  }

  int run(std::ostream& out) const {
    std::string text = config_file.empty() ? std::string() : read_text(config_file);
    for (const auto& [key, value] : values) {
      if (!value.empty()) text += "\n" + key + "=" + value;
    }
    ScenarioConfig config;
    try {
      config = parse_scenario_config(text);
      config.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    const Scenario scenario = simulate_scenario(config);
    write_scenario(scenario, out_dir);
    out << "wrote " << scenario.frame_count() - 1 << " flow frames to " << out_dir << '\n';
    return kExitOk;
  }
};

struct TrainCommand {
  ConfigFlags config;
  FrameWindow window;
  std::string flows;
  std::string model_out;

  void attach(CLI::App& app) {
    app.add_option("--flows", flows, "Directory of frame_%06d.flo files")->required()->check(CLI::ExistingDirectory);
    app.add_option("--out", model_out, "Model file to write")->required();
    window.attach(app, "Number of training frames (default: all)");
    config.attach(app);
  }

  int run(std::ostream& out, std::ostream& err) const {
    const PipelineConfig cfg = config.build();
    FloReadOptions read;
    read.non_finite = cfg.strict_flo ? NonFinitePolicy::kReject : NonFinitePolicy::kZero;
    const DirectoryFlowSource source(flows, read);
    TrainSummary summary;
    const Model model = run_train(source, cfg, window.first, window.count, &summary);
    save_model(model_out, model);
    out << "words " << summary.words << " dictionaries " << model.group.size() << " uncovered "
        << summary.uncovered << '\n';
    if (summary.coverage_failure) err << "warning: coverage target " << cfg.coverage << " not reached\n";
    return kExitOk;
  }
};

struct DetectCommand {
  ConfigFlags config;
  FrameWindow window;
  std::string flows;
  std::string model_path;
  std::string records;
  std::string masks;

  void attach(CLI::App& app) {
    app.add_option("--flows", flows, "Directory of frame_%06d.flo files")->required()->check(CLI::ExistingDirectory);
    app.add_option("--model", model_path, "Trained model file")->required()->check(CLI::ExistingFile);
    app.add_option("--records", records, "Records CSV to write")->required();
    app.add_option("--masks", masks, "Directory for det_%06d.pgm masks");
    window.attach(app, "Number of frames to scan (default: to the end)");
    config.attach(app);
  }

  int run(std::ostream& out) const {
    const Model model = load_model(model_path);
    // The model's own settings are the base; flags only override them.
    const PipelineConfig cfg = config.build(model.config);
    FloReadOptions read;
    read.non_finite = cfg.strict_flo ? NonFinitePolicy::kReject : NonFinitePolicy::kZero;
    const DirectoryFlowSource source(flows, read);
    const DetectionResult result = run_detect(source, model, cfg, window.first, window.count);
    save_records(records, result.records);
    if (!masks.empty()) {
      write_detection_masks(masks, result.verdicts, cfg.grid_for(source.width(), source.height()));
    }
    std::size_t abnormal = 0;
    for (const auto& v : result.verdicts) abnormal += v.abnormal;
    out << "clips " << result.stats.clips << " abnormal_frames " << abnormal << " local_updates "
        << result.stats.local_updates << " global_updates " << result.stats.global_updates << '\n';
    return kExitOk;
  }
};

struct EvalCommand {
  ConfigFlags config;
  std::string records;
  std::string truth;
  std::string mode = "frame";
  std::string out_csv;
  std::string model_path;
  double coverage = 0.4;

  void attach(CLI::App& app) {
    app.add_option("--records", records, "Records CSV from detect")->required()->check(CLI::ExistingFile);
    app.add_option("--truth", truth, "Directory of gt_%06d.pgm masks")->required()->check(CLI::ExistingDirectory);
    app.add_option("--mode", mode, "frame or pixel")->check(CLI::IsMember({"frame", "pixel"}));
    app.add_option("--out", out_csv, "ROC CSV to write (default: stdout)");
    app.add_option("--model", model_path, "Take clip length and grid from this model")->check(CLI::ExistingFile);
    app.add_option("--coverage-threshold", coverage, "Truth fraction a pixel-level hit must exceed")->check(CLI::Range(0.0, 1.0));
    config.attach(app);
  }

  int run(std::ostream& out) const {
    const PipelineConfig cfg = config.build(model_path.empty() ? PipelineConfig{} : load_model(model_path).config);
    const auto recs = load_records(records);
    const auto masks = load_truth_masks(truth);
    EvalReport report;
    if (mode == "frame") {
      report = frame_level_eval(recs, cfg.clip, masks);
    } else {
      const GrayImage& any = masks.begin()->second;
      report = pixel_level_eval(recs, cfg.clip, cfg.grid_for(any.width, any.height), masks, coverage);
    }
    if (out_csv.empty()) {
      write_eval_csv(out, report);
    } else {
      std::ofstream csv(out_csv, std::ios::binary);
      if (!csv) throw Error(ErrorCode::kIo, "cannot write " + out_csv);
      write_eval_csv(csv, report);
    }
    out << format_summary(report);
    return kExitOk;
  }
};

struct ReportCommand {
  std::vector<std::string> inputs;
  std::vector<std::string> names;
  std::string out_csv;

  void attach(CLI::App& app) {
    app.add_option("--eval", inputs, "Eval CSVs to merge")->required()->check(CLI::ExistingFile);
    app.add_option("--name", names, "Row names, one per --eval (default: file stem)");
    app.add_option("--out", out_csv, "Table to write (default: stdout)");
  }

  int run(std::ostream& out) const {
    if (!names.empty() && names.size() != inputs.size()) throw UsageError("give one --name per --eval");
    std::vector<std::pair<std::string, EvalReport>> rows;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::ifstream in(inputs[i], std::ios::binary);
      if (!in) throw Error(ErrorCode::kIo, "cannot open " + inputs[i]);
      rows.emplace_back(names.empty() ? fs::path(inputs[i]).stem().string() : names[i], read_eval_csv(in));
    }
    if (out_csv.empty()) {
      write_report_table(out, rows);
    } else {
      std::ofstream table(out_csv, std::ios::binary);
      if (!table) throw Error(ErrorCode::kIo, "cannot write " + out_csv);
      write_report_table(table, rows);
    }
    return kExitOk;
  }
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"crowdflux: crowd anomaly detection from interaction force flow"};
  app.name("crowdflux");
  app.require_subcommand(1);

  SynthCommand synth;
  TrainCommand train;
  DetectCommand detect;
  EvalCommand eval;
  ReportCommand report;
  CLI::App* synth_app = app.add_subcommand("synth", "Simulate a scenario and write flow plus truth masks");
  CLI::App* train_app = app.add_subcommand("train", "Train a dictionary group on normal footage");
  CLI::App* detect_app = app.add_subcommand("detect", "Classify clips and write records and masks");
  CLI::App* eval_app = app.add_subcommand("eval", "Score records against truth masks");
  CLI::App* report_app = app.add_subcommand("report", "Merge eval CSVs into one table");
  synth.attach(*synth_app);
  train.attach(*train_app);
  detect.attach(*detect_app);
  eval.attach(*eval_app);
  report.attach(*report_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_app) return synth.run(out);
    if (*train_app) return train.run(out, err);
    if (*detect_app) return detect.run(out);
    if (*eval_app) return eval.run(out);
    if (*report_app) return report.run(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, e);
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace crowdflux::cli
