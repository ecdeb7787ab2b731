#pragma once

// Experiment grid: dataset x algorithm x fraction x seed, with validation
// tuning at the full training set and a resumable append-only results CSV.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenlens/error.hpp"
#include "greenlens/eval.hpp"
#include "greenlens/green.hpp"
#include "greenlens/ingest.hpp"
#include "greenlens/models/fit.hpp"
#include "greenlens/preprocess.hpp"
#include "greenlens/split.hpp"

namespace greenlens {

namespace fs = std::filesystem;

using Fitter = std::function<FittedModel(const AlgorithmSpec&, const RatingMatrix&, std::uint64_t)>;

inline FittedModel default_fitter(const AlgorithmSpec& spec, const RatingMatrix& m, std::uint64_t seed) {
  return fit(spec, m, seed);
}

// Ten configurations for every tunable algorithm; singletons otherwise.
inline std::vector<Params> default_grid(AlgorithmKind kind) {
  using K = AlgorithmKind;
  std::vector<Params> grid;
  auto sweep = [&](const char* name, std::initializer_list<double> values, Params fixed = {}) {
    for (double v : values) {
      Params p = fixed;
      p[name] = v;
      grid.push_back(p);
    }
  };
  switch (kind) {
    case K::bias: sweep("damping", {0, 1, 2, 5, 10, 15, 25, 50, 100, 250}); break;
    case K::user_knn:
      for (double m : {1.0, 5.0, 10.0, 15.0, 20.0})
        for (double n : {30.0, 50.0}) grid.push_back({{"nnbrs", n}, {"min_nbrs", m}});
      break;
    case K::item_knn:
      for (double m : {1.0, 5.0, 10.0, 15.0, 20.0})
        for (double n : {20.0, 50.0}) grid.push_back({{"nnbrs", n}, {"min_nbrs", m}, {"max_neighbors", 100}});
      break;
    case K::item_knn_binary: sweep("max_neighbors", {5, 10, 20, 30, 50, 75, 100, 150, 200, 300}); break;
    case K::funk_svd:
      for (double reg : {0.02, 0.1})
        for (double f : {10.0, 20.0}) grid.push_back({{"factors", f}, {"learning_rate", 0.01}, {"epochs", 40}, {"regularization", reg}});
      for (double f : {10.0, 20.0, 50.0}) grid.push_back({{"factors", f}, {"learning_rate", 0.01}, {"epochs", 20}});
      for (double f : {10.0, 20.0, 50.0}) grid.push_back({{"factors", f}});
      break;
    case K::biased_mf:
      for (double reg : {0.02, 0.05})
        for (double f : {10.0, 20.0, 50.0}) grid.push_back({{"factors", f}, {"learning_rate", 0.01}, {"epochs", 50}, {"regularization", reg}});
      for (double f : {10.0, 20.0, 50.0, 100.0}) grid.push_back({{"factors", f}});
      break;
    case K::svd: sweep("factors", {5, 10, 15, 20, 30, 40, 50, 75, 100, 150}); break;
    case K::nmf: sweep("factors", {5, 10, 15, 20, 30, 40, 50, 75, 100, 150}); break;
    default: grid.push_back({}); break;
  }
  return grid;
}

struct DatasetConfig {
  std::string id;
  std::string path;
  Format format = Format::canonical_csv;
  ParseOptions options;
};

struct AlgorithmEntry {
  AlgorithmKind kind = AlgorithmKind::popularity;
  std::vector<Params> grid;  // one entry: fixed configuration
};

struct ExperimentConfig {
  DatasetConfig dataset;
  int k_core = 10;
  SplitRatios ratios;
  std::vector<double> fractions;
  std::vector<AlgorithmEntry> algorithms;
  std::vector<std::uint64_t> seeds;
  std::size_t k = 10;
  fs::path output_dir = "results";
  bool exclusive_timing = false;
  std::size_t jobs = 1;
  bool verbose = false;

  fs::path results_path() const { return output_dir / "results.csv"; }

  void validate() const {
    if (dataset.path.empty()) throw DataError("config: dataset path is required");
    if (dataset.id.empty()) throw DataError("config: dataset id is required");
    if (k_core < 1) throw DataError("config: k_core must be >= 1");
    ratios.validate();
    if (fractions.empty()) throw DataError("config: fraction list is empty");
    for (double f : fractions) validate_fraction(f);
    if (seeds.empty()) throw DataError("config: seed list is empty");
    if (algorithms.empty()) throw DataError("config: algorithm list is empty");
    std::set<AlgorithmKind> kinds;
    for (const auto& a : algorithms) {
      if (a.grid.empty()) throw DataError("config: empty grid for " + std::string(to_string(a.kind)));
      if (!kinds.insert(a.kind).second) throw DataError("config: algorithm listed twice: " + std::string(to_string(a.kind)));
      for (const auto& p : a.grid) AlgorithmSpec(a.kind, p);  // validates
    }
    if (k < 1) throw DataError("config: k must be >= 1");
    if (jobs < 1) throw DataError("config: jobs must be >= 1");
  }
};

// Relative dataset paths resolve against GREENLENS_DATA_DIR when set.
inline std::string resolve_data_path(const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute() || fs::exists(p)) return path;
  if (const char* root = std::getenv("GREENLENS_DATA_DIR"); root && *root) return (fs::path(root) / p).string();
  return path;
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw DataError(std::string("config: unknown key '") + key + "' in " + where);
  }
}

inline Params params_from_json(const nlohmann::json& j) {
  Params p;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw DataError("config: parameter '" + key + "' must be numeric");
    p[key] = value.get<double>();
  }
  return p;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::reject_unknown;
  try {
    if (!j.is_object()) throw DataError("config: top level must be an object");
    reject_unknown(j,
                   {"dataset", "k_core", "ratios", "fractions", "algorithms", "seeds", "k", "output_dir",
                    "exclusive_timing", "jobs", "verbose"},
                   "config");
    ExperimentConfig c;
    const auto& d = j.at("dataset");
    reject_unknown(d, {"id", "path", "format", "column_order", "rating_min", "rating_max"}, "dataset");
    c.dataset.path = d.at("path").get<std::string>();
    c.dataset.format = parse_format(d.value("format", std::string("canonical_csv")));
    c.dataset.id = d.value("id", fs::path(c.dataset.path).stem().string());
    if (d.contains("column_order"))
      c.dataset.options.column_order = ColumnOrder::parse(d.at("column_order").get<std::vector<std::string>>());
    if (d.contains("rating_min") || d.contains("rating_max")) {
      RatingScale s = default_scale(c.dataset.format);
      s.min = d.value("rating_min", s.min);
      s.max = d.value("rating_max", s.max);
      c.dataset.options.scale = s;
    }
    c.k_core = j.value("k_core", 10);
    if (j.contains("ratios")) {
      const auto& r = j.at("ratios");
      reject_unknown(r, {"test", "validation"}, "ratios");
      c.ratios.test_frac = r.value("test", 0.1);
      c.ratios.valid_frac = r.value("validation", 0.1);
    }
    c.fractions = j.value("fractions", std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
    c.seeds = j.value("seeds", std::vector<std::uint64_t>{1, 2, 3});
    c.k = j.value("k", std::size_t{10});
    c.output_dir = j.value("output_dir", std::string("results"));
    c.exclusive_timing = j.value("exclusive_timing", false);
    c.jobs = j.value("jobs", std::size_t{1});
    c.verbose = j.value("verbose", false);

    const nlohmann::json algos = j.contains("algorithms") ? j.at("algorithms") : nlohmann::json::array();
    for (const auto& a : algos) {
      AlgorithmEntry e;
      if (a.is_string()) {
        e.kind = parse_algorithm(a.get<std::string>());
        e.grid = default_grid(e.kind);
      } else {
        reject_unknown(a, {"kind", "params", "grid"}, "algorithm entry");
        e.kind = parse_algorithm(a.at("kind").get<std::string>());
        if (a.contains("params") && a.contains("grid")) throw DataError("config: give either params or grid");
        if (a.contains("params")) {
          e.grid.push_back(detail::params_from_json(a.at("params")));
        } else if (a.contains("grid") && a.at("grid").is_string()) {
          if (a.at("grid").get<std::string>() != "default") throw DataError("config: grid must be a list or \"default\"");
          e.grid = default_grid(e.kind);
        } else if (a.contains("grid")) {
          for (const auto& p : a.at("grid")) e.grid.push_back(detail::params_from_json(p));
        } else {
          e.grid = default_grid(e.kind);
        }
      }
      c.algorithms.push_back(std::move(e));
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config file '" + path + "' not found or unreadable");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

struct ExperimentRecord {
  std::string dataset;
  std::string algorithm;
  std::string params_fingerprint;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::optional<double> ndcg_mean;
  std::size_t n_evaluated = 0;
  double fit_seconds = 0.0;
  double eval_seconds = 0.0;
  std::string status = "ok";
  std::string error;
  std::string completed_at;

  bool ok() const { return status == "ok"; }
  PhaseTiming timing() const { return {fit_seconds, eval_seconds}; }
};

inline constexpr const char* kResultsHeader =
    "dataset,algorithm,params_fingerprint,fraction,seed,ndcg_mean,n_evaluated,fit_seconds,eval_seconds,status,"
    "error,completed_at";

inline std::string fraction_label(double f) { return text::fixed(f, 2); }

using CellKey = std::tuple<std::string, std::string, std::string, std::uint64_t>;  // dataset, algorithm, fraction, seed

inline CellKey cell_key(const ExperimentRecord& r) {
  return {r.dataset, r.algorithm, fraction_label(r.fraction), r.seed};
}

inline std::string to_csv_line(const ExperimentRecord& r) {
  using text::csv_escape;
  std::string s;
  s += csv_escape(r.dataset) + ',' + csv_escape(r.algorithm) + ',' + r.params_fingerprint + ',' +
       fraction_label(r.fraction) + ',' + std::to_string(r.seed) + ',';
  if (r.ndcg_mean) s += text::shortest(*r.ndcg_mean);
  s += ',' + std::to_string(r.n_evaluated) + ',' + text::shortest(r.fit_seconds) + ',' +
       text::shortest(r.eval_seconds) + ',' + r.status + ',' + csv_escape(r.error) + ',' + r.completed_at;
  return s;
}

inline ExperimentRecord record_from_fields(const std::vector<std::string>& f, std::size_t lineno) {
  if (f.size() != 12) throw DataError("results line " + std::to_string(lineno) + ": expected 12 fields");
  auto num = [&](const std::string& s) {
    auto v = text::parse_double(s);
    if (!v) throw DataError("results line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return *v;
  };
  ExperimentRecord r;
  r.dataset = f[0];
  r.algorithm = f[1];
  r.params_fingerprint = f[2];
  r.fraction = num(f[3]);
  r.seed = std::stoull(f[4]);
  if (!f[5].empty()) r.ndcg_mean = num(f[5]);
  r.n_evaluated = static_cast<std::size_t>(num(f[6]));
  r.fit_seconds = num(f[7]);
  r.eval_seconds = num(f[8]);
  r.status = f[9];
  r.error = f[10];
  r.completed_at = f[11];
  return r;
}

inline std::vector<ExperimentRecord> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read results file '" + path.string() + "'");
  std::vector<ExperimentRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (text::trim(line) != kResultsHeader) throw DataError("'" + path.string() + "' is not a results file");
      continue;
    }
    if (text::trim(line).empty()) continue;
    out.push_back(record_from_fields(text::csv_split(line), lineno));
  }
  return out;
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Model seed of one cell. Depends only on its coordinates, so adding
// algorithms or fractions never changes other cells.
inline std::uint64_t cell_seed(std::uint64_t master, std::string_view dataset, AlgorithmKind kind, double fraction) {
  const std::string tag = std::string(dataset) + '|' + std::string(to_string(kind)) + '|' + fraction_label(fraction);
  return mix_seed(master, fnv1a(tag));
}

// Fits every configuration on the full training set and keeps the best
// validation nDCG@k; earlier grid entries win ties. Failing configurations
// are skipped with a warning.
inline AlgorithmSpec tune_hyperparameters(AlgorithmKind kind, const std::vector<Params>& grid,
                                          const SplitBundle& bundle, std::size_t k, std::uint64_t fit_seed,
                                          const Fitter& fitter = default_fitter) {
  if (grid.empty()) throw DataError("tuning grid is empty");
  if (grid.size() == 1) return AlgorithmSpec(kind, grid.front());
  const auto matrix = build_matrix(bundle.train, bundle.n_users, bundle.n_items);
  std::optional<AlgorithmSpec> best;
  double best_score = -1.0;
  std::string last_error;
  for (const auto& params : grid) {
    try {
      AlgorithmSpec spec(kind, params);
      const auto model = fitter(spec, matrix, fit_seed);
      const double score = evaluate_validation(model, bundle, bundle.train, k).mean;
      if (!best || score > best_score) {
        best = spec;
        best_score = score;
      }
    } catch (const std::exception& e) {
      last_error = e.what();
      std::clog << "warning: skipping " << to_string(kind) << " configuration: " << e.what() << '\n';
    }
  }
  if (!best) throw RuntimeError("every configuration of " + std::string(to_string(kind)) + " failed: " + last_error);
  return *best;
}

// downsample -> matrix -> timed fit -> timed evaluation. Errors become a
// failed record instead of propagating.
inline ExperimentRecord run_cell(std::string_view dataset_id, const SplitBundle& bundle, const AlgorithmSpec& spec,
                                 double fraction, std::uint64_t seed, std::size_t k,
                                 const Fitter& fitter = default_fitter) {
  ExperimentRecord r;
  r.dataset = dataset_id;
  r.algorithm = to_string(spec.kind);
  r.params_fingerprint = spec.fingerprint();
  r.fraction = fraction;
  r.seed = seed;
  try {
    const auto train = downsample_train(bundle, fraction);
    const auto matrix = build_matrix(train, bundle.n_users, bundle.n_items);
    const auto fitted = time_phase([&] { return fitter(spec, matrix, cell_seed(seed, dataset_id, spec.kind, fraction)); });
    r.fit_seconds = fitted.seconds;
    const auto metric = time_phase([&] { return evaluate_model(fitted.result, bundle, train, k); });
    r.eval_seconds = metric.seconds;
    r.ndcg_mean = metric.result.mean;
    r.n_evaluated = metric.result.n_evaluated;
  } catch (const std::exception& e) {
    r.status = "failed";
    r.error = e.what();
    r.ndcg_mean.reset();
  }
  r.completed_at = utc_now();
  return r;
}

// Prepared inputs shared by every cell of a grid.
struct GridData {
  InteractionDataset dataset;
  std::vector<SplitBundle> bundles;  // one per seed, config order
};

inline GridData prepare_grid(const ExperimentConfig& config) {
  GridData g;
  const auto raw = parse_interactions(resolve_data_path(config.dataset.path), config.dataset.format,
                                      config.dataset.options);
  g.dataset = preprocess_pipeline(raw, config.k_core);
  if (g.dataset.empty()) throw DataError("dataset is empty after preprocessing");
  for (auto seed : config.seeds) g.bundles.push_back(user_holdout_split(g.dataset, config.ratios, seed));
  return g;
}

// Runs every missing (seed, algorithm, fraction) cell and appends the
// records to <output_dir>/results.csv in grid order. Cells whose
// (dataset, algorithm, fraction, seed) already appear are skipped. Returns
// the newly written records.
inline std::vector<ExperimentRecord> run_grid(const ExperimentConfig& config, const Fitter& fitter = default_fitter) {
  config.validate();
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + config.output_dir.string() + "': " + ec.message());

  const auto path = config.results_path();
  std::set<CellKey> done;
  if (fs::exists(path))
    for (const auto& r : read_results(path)) done.insert(cell_key(r));

  struct Job {
    std::size_t seed_index;
    const AlgorithmEntry* algo;
    std::vector<double> fractions;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    for (const auto& a : config.algorithms) {
      Job job{s, &a, {}};
      for (double f : config.fractions) {
        const CellKey key{config.dataset.id, std::string(to_string(a.kind)), fraction_label(f), config.seeds[s]};
        if (!done.count(key)) job.fractions.push_back(f);
      }
      if (!job.fractions.empty()) jobs.push_back(std::move(job));
    }
  }
  if (jobs.empty()) return {};

  const GridData data = prepare_grid(config);
  auto log = [&](const std::string& msg) {
    if (config.verbose) std::clog << msg << '\n';
  };

  std::vector<std::vector<ExperimentRecord>> results(jobs.size());
  std::vector<char> ready(jobs.size(), 0);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};

  auto execute = [&](const Job& job) {
    const auto seed = config.seeds[job.seed_index];
    const auto& bundle = data.bundles[job.seed_index];
    std::vector<ExperimentRecord> out;
    std::optional<AlgorithmSpec> spec;
    try {
      spec = tune_hyperparameters(job.algo->kind, job.algo->grid, bundle, config.k,
                                  cell_seed(seed, config.dataset.id, job.algo->kind, 1.0), fitter);
    } catch (const std::exception& e) {
      for (double f : job.fractions) {
        ExperimentRecord r;
        r.dataset = config.dataset.id;
        r.algorithm = to_string(job.algo->kind);
        r.params_fingerprint = "untuned";
        r.fraction = f;
        r.seed = seed;
        r.status = "failed";
        r.error = std::string("tuning failed: ") + e.what();
        r.completed_at = utc_now();
        out.push_back(std::move(r));
      }
      return out;
    }
    for (double f : job.fractions) {
      out.push_back(run_cell(config.dataset.id, bundle, *spec, f, seed, config.k, fitter));
      log(to_csv_line(out.back()));
    }
    return out;
  };

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      auto recs = execute(jobs[j]);
      std::lock_guard lock(mu);
      results[j] = std::move(recs);
      ready[j] = 1;
      cv.notify_all();
    }
  };

  const std::size_t width = config.exclusive_timing ? 1 : std::min(config.jobs, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);

  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) {
    for (auto& t : pool) t.join();
    throw DataError("cannot open results file '" + path.string() + "'");
  }
  if (fresh) out << kResultsHeader << '\n' << std::flush;

  std::vector<ExperimentRecord> written;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    std::vector<ExperimentRecord> recs;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return ready[j] != 0; });
      recs = std::move(results[j]);
    }
    for (auto& r : recs) {
      out << to_csv_line(r) << '\n';
      written.push_back(std::move(r));
    }
    out.flush();
  }
  for (auto& t : pool) t.join();
  if (!out) throw RuntimeError("write failed for '" + path.string() + "'");
  return written;
}

}  // namespace greenlens
