#pragma once

// `greenlens` command line: one subcommand per pipeline stage.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 runtime failure. Diagnostics go to `err`, data to files or `out`.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "greenlens/error.hpp"
#include "greenlens/green.hpp"
#include "greenlens/ingest.hpp"
#include "greenlens/preprocess.hpp"
#include "greenlens/report.hpp"
#include "greenlens/runner.hpp"
#include "greenlens/split.hpp"

namespace greenlens {

namespace cli_detail {

struct InputFlags {
  std::string path;
  std::string format = "canonical_csv";
  std::vector<std::string> column_order;
  std::optional<double> rating_min, rating_max;

  void add(CLI::App& app, bool format_required) {
    app.add_option("--in", path, "Input interaction file (relative paths also try $GREENLENS_DATA_DIR)")->required();
    auto* f = app.add_option("--format", format, "ml100k_tsv | ml_dat | amazon_csv | canonical_csv");
    if (format_required) f->required();
    app.add_option("--column-order", column_order, "amazon_csv field roles, e.g. item,user,rating,timestamp")
        ->delimiter(',');
    app.add_option("--rating-min", rating_min, "Lower rating bound (default per format)");
    app.add_option("--rating-max", rating_max, "Upper rating bound (default per format)");
  }

  InteractionDataset load() const {
    const auto fmt = parse_format(format);
    ParseOptions opts;
    if (!column_order.empty()) opts.column_order = ColumnOrder::parse(column_order);
    if (rating_min || rating_max) {
      RatingScale s = default_scale(fmt);
      if (rating_min) s.min = *rating_min;
      if (rating_max) s.max = *rating_max;
      opts.scale = s;
    }
    return parse_interactions(resolve_data_path(path), fmt, opts);
  }
};

struct EnergyFlags {
  EnergyParams params;

  void add(CLI::App& app) {
    app.add_option("--kwh-per-run", params.kwh_per_run, "Energy of one algorithm run on one dataset")
        ->capture_default_str();
    app.add_option("--n-configs", params.n_configs, "Hyperparameter configurations per algorithm")
        ->capture_default_str();
    app.add_option("--intensity", params.intensity_g_per_kwh, "Carbon intensity in gCO2e per kWh")
        ->capture_default_str();
    app.add_option("--overhead-factor", params.overhead_factor, "Multiplier for prototyping, debugging and re-runs")
        ->capture_default_str();
    app.add_option("--device-power", params.device_power_watts, "Device power in watts for runtime conversion")
        ->capture_default_str();
  }
};

inline void write_json(const nlohmann::json& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Dataset downsampling benchmark for classic recommender algorithms", "greenlens"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // ingest
  cli_detail::InputFlags ingest_in;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Parse a raw dump, print its statistics, optionally write canonical CSV");
  ingest_in.add(*ingest, true);
  ingest->add_option("--out", ingest_out, "Canonical CSV output path");

  // preprocess
  cli_detail::InputFlags pre_in;
  int pre_k = 10;
  std::string pre_out, pre_stats;
  auto* pre = app.add_subcommand("preprocess", "Deduplicate, average duplicate ratings and apply k-core pruning");
  pre_in.add(*pre, true);
  pre->add_option("--k", pre_k, "Core size")->capture_default_str()->check(CLI::PositiveNumber);
  pre->add_option("--out", pre_out, "Canonical CSV output path")->required();
  pre->add_option("--stats", pre_stats, "Before/after statistics JSON path (default: stdout)");

  // split
  cli_detail::InputFlags split_in;
  std::uint64_t split_seed = 1;
  SplitRatios split_ratios;
  std::string split_dir;
  std::vector<double> split_fractions;
  auto* split = app.add_subcommand("split", "Per-user train/validation/test split of a preprocessed dataset");
  split_in.add(*split, false);
  split->add_option("--seed", split_seed, "Random seed")->capture_default_str();
  split->add_option("--test-frac", split_ratios.test_frac, "Per-user test share")->capture_default_str();
  split->add_option("--valid-frac", split_ratios.valid_frac, "Per-user validation share")->capture_default_str();
  split->add_option("--out-dir", split_dir, "Output directory")->required();
  split->add_option("--fractions", split_fractions, "Also write train_<fraction>.csv downsampled sets")
      ->delimiter(',');

  // run
  std::string run_config;
  std::optional<std::size_t> run_jobs;
  bool run_exclusive = false, run_verbose = false;
  auto* run = app.add_subcommand("run", "Execute an experiment grid from a JSON config");
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--jobs", run_jobs, "Worker threads (overrides config)");
  run->add_flag("--exclusive-timing", run_exclusive, "Run cells one at a time for clean runtime ratios");
  run->add_flag("--verbose", run_verbose, "Log every finished cell to stderr");

  // report
  std::string report_results, report_dir;
  cli_detail::EnergyFlags report_energy;
  auto* report = app.add_subcommand("report", "Aggregate a results CSV into curves, group drops, ratios and SVGs");
  report->add_option("--results", report_results, "results.csv from `run`")->required();
  report->add_option("--out-dir", report_dir, "Output directory")->required();
  report_energy.add(*report);

  // estimate
  double est_ratio = 0.5;
  std::optional<double> est_seconds;
  cli_detail::EnergyFlags est_energy;
  auto* estimate = app.add_subcommand("estimate", "CO2e savings estimate for a runtime ratio");
  estimate->add_option("--runtime-ratio", est_ratio, "Runtime at reduced data over full-data runtime, in (0,1]")
      ->required();
  estimate->add_option("--seconds", est_seconds, "Also convert a measured runtime to kWh at --device-power");
  est_energy.add(*estimate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      const auto ds = ingest_in.load();
      if (!ingest_out.empty()) write_canonical_csv(ingest_out, ds);
      if (ds.empty())
        out << nlohmann::json{{"n_users", 0}, {"n_items", 0}, {"n_interactions", 0}}.dump(2) << '\n';
      else
        out << to_json(dataset_stats(ds)).dump(2) << '\n';
    } else if (*pre) {
      const auto raw = pre_in.load();
      const auto deduped = dedup_average(raw);
      const auto kept = k_core(deduped, KCoreParams{pre_k});
      write_canonical_csv(pre_out, kept);
      auto doc = stats_comparison(raw, kept, pre_k);
      const auto single = k_core_single_pass(deduped, KCoreParams{pre_k});
      doc["after_single_pass"] = single.empty() ? nlohmann::json(nullptr) : to_json(dataset_stats(single));
      cli_detail::write_json(doc, pre_stats, out);
    } else if (*split) {
      const auto ds = split_in.load();
      const auto bundle = user_holdout_split(ds, split_ratios, split_seed);
      write_split(bundle, ds, split_dir);
      for (double f : split_fractions) {
        InteractionDataset view;
        view.users = ds.users;
        view.items = ds.items;
        view.interactions = downsample_train(bundle, f);
        write_canonical_csv((std::filesystem::path(split_dir) / ("train_" + fraction_label(f) + ".csv")).string(),
                            view);
      }
    } else if (*run) {
      auto config = load_config(run_config);
      if (run_jobs) config.jobs = *run_jobs;
      if (run_exclusive) config.exclusive_timing = true;
      if (run_verbose) config.verbose = true;
      const auto written = run_grid(config);
      std::size_t failed = 0;
      for (const auto& r : written) failed += r.ok() ? 0 : 1;
      err << "wrote " << written.size() << " records (" << failed << " failed) to " << config.results_path().string()
          << '\n';
    } else if (*report) {
      const auto files = emit_report(read_results(report_results), GroupMap{}, report_dir, report_energy.params);
      for (const auto& f : files.written) out << f.string() << '\n';
    } else if (*estimate) {
      auto doc = to_json(energy_report(est_ratio, est_energy.params));
      if (est_seconds) {
        doc["measured_seconds"] = *est_seconds;
        doc["measured_kwh"] = estimate_energy(*est_seconds, est_energy.params);
      }
      out << doc.dump(2) << '\n';
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace greenlens
