/**
 * Experiment runner. Every (phase, algorithm, size, seed) cell is an
 * independent seeded episode; cells run on a pool of worker threads and
 * their records go through one writer that appends to runs.csv as they
 * finish. Once all cells are done the file is rewritten in cell order, so
 * identical configs give identical files apart from the ms column.
 */

#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vmcts/harness/config.hpp"
#include "vmcts/harness/stats.hpp"
#include "vmcts/harness/training.hpp"
#include "vmcts/learn/mlp.hpp"
#include "vmcts/planner/run.hpp"

namespace vmcts::harness {

inline constexpr const char* kCsvHeader = "algorithm,env,size,phase,seed,return,success,expansions_to_goal,ms";

/// Calls `f` with the environment of the given family built from `spec`.
template <class F>
decltype(auto) with_env(const std::string& family, const env::MazeSpec& spec, F&& f) {
  if (family == "geometric") return f(env::GeometricMaze(spec));
  if (family == "dubins") return f(env::DubinsMaze(spec));
  throw ConfigError("unknown environment family: " + family);
}

inline std::string format_number(double x) {
  std::ostringstream o;
  o << std::setprecision(12) << x;
  return o.str();
}

inline std::string csv_row(const planner::RunRecord& r) {
  std::ostringstream o;
  o << r.algorithm << ',' << r.env << ',' << r.size << ',' << r.phase << ',' << r.seed << ','
    << format_number(r.ret) << ',' << (r.success ? 1 : 0) << ',';
  if (r.expansions_to_goal) o << *r.expansions_to_goal;
  o << ',' << format_number(r.ms);
  return o.str();
}

/// Parses a runs.csv written by this module.
inline std::vector<planner::RunRecord> read_runs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error(path + ": unexpected header");
  std::vector<planner::RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw std::runtime_error(path + ": malformed row: " + line);
    planner::RunRecord r;
    r.algorithm = f[0];
    r.env = f[1];
    r.size = std::stoi(f[2]);
    r.phase = f[3];
    r.seed = std::stoull(f[4]);
    r.ret = std::stod(f[5]);
    r.success = f[6] == "1";
    if (!f[7].empty()) r.expansions_to_goal = std::stoull(f[7]);
    r.ms = std::stod(f[8]);
    out.push_back(r);
  }
  return out;
}

struct TableRow {
  std::string algorithm;
  std::string env;
  int size = 0;
  std::string phase;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Groups records by (algorithm, env, size, phase) in order of first appearance.
inline std::vector<TableRow> aggregate(const std::vector<planner::RunRecord>& records) {
  std::vector<TableRow> rows;
  std::vector<std::vector<double>> values;
  for (const auto& r : records) {
    std::size_t k = 0;
    while (k < rows.size() && !(rows[k].algorithm == r.algorithm && rows[k].env == r.env && rows[k].size == r.size &&
                                rows[k].phase == r.phase))
      ++k;
    if (k == rows.size()) {
      rows.push_back({r.algorithm, r.env, r.size, r.phase});
      values.emplace_back();
    }
    values[k].push_back(r.ret);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].mean = mean(values[k]);
    rows[k].stderr_ = standard_error(values[k]);
    rows[k].n = values[k].size();
  }
  return rows;
}

inline nlohmann::json table_json(const std::vector<TableRow>& rows, const nlohmann::json& config) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"algorithm", r.algorithm},
                   {"env", r.env},
                   {"size", r.size},
                   {"phase", r.phase},
                   {"mean", r.mean},
                   {"stderr", r.stderr_},
                   {"n", r.n}});
  return {{"config", config}, {"rows", arr}};
}

/// Serializes appends from many workers.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot write " + path);
    out_ << kCsvHeader << '\n' << std::flush;
  }
  void append(const planner::RunRecord& r) {
    std::lock_guard lock(mu_);
    out_ << csv_row(r) << '\n' << std::flush;
  }
  /// Rewrites the file with `records` in the given order.
  void finalize(const std::vector<planner::RunRecord>& records) {
    std::lock_guard lock(mu_);
    out_.close();
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream o(tmp, std::ios::trunc);
      o << kCsvHeader << '\n';
      for (const auto& r : records) o << csv_row(r) << '\n';
      if (!o) throw std::runtime_error("cannot write " + tmp);
    }
    std::filesystem::rename(tmp, path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::mutex mu_;
};

/// Runs `jobs[i]()` for every i on `workers` threads; rethrows the first failure.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  auto loop = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(fail_mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const int t = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (t == 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

struct Cell {
  std::string phase;
  std::string algorithm;
  int size = 0;
  std::uint64_t seed = 0;
};

inline std::vector<Cell> cells_of(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (const auto& phase : cfg.phases)
    for (const auto& alg : cfg.algorithms)
      for (int size : cfg.sizes)
        for (auto seed : cfg.seeds) cells.push_back({phase, alg, size, seed});
  return cells;
}

struct ExperimentResult {
  std::vector<planner::RunRecord> records;  // in cell order
  std::vector<TableRow> table;
  nlohmann::json training;                  // per (algorithm, size) training reports
};

namespace detail {
inline std::string model_key(const std::string& alg, int size) { return alg + "_" + std::to_string(size); }

inline nlohmann::json training_json(const TrainingReport& r) {
  return {{"eval_episodes", r.eval_episodes},
          {"heldout_mse", r.heldout_mse},
          {"episode_returns", r.episode_returns},
          {"final_batch_loss", r.final_batch_loss}};
}
}  // namespace detail

/**
 * Runs the whole grid. The output directory is created and runs.csv opened
 * before any work starts, so an unwritable path fails fast.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out);
  const std::filesystem::path dir(cfg.out);
  CsvWriter writer((dir / "runs.csv").string());

  ExperimentResult result;
  const auto cells = cells_of(cfg);

  // Trained phase: one learner per (algorithm, size), trained before evaluation.
  std::map<std::string, std::unique_ptr<learn::Learner>> learners;
  const bool want_trained = std::find(cfg.phases.begin(), cfg.phases.end(), "trained") != cfg.phases.end();
  if (want_trained && !cfg.seeds.empty()) {
    std::vector<std::pair<std::string, int>> jobs;
    for (const auto& alg : cfg.algorithms)
      for (int size : cfg.sizes) jobs.emplace_back(alg, size);
    const int state_dim = cfg.env == "dubins" ? 3 : 2;
    std::vector<TrainingReport> reports(jobs.size());
    for (const auto& [alg, size] : jobs) {
      Rng init(mix_seed(static_cast<std::uint64_t>(size), 0x6E6574));
      learners[detail::model_key(alg, size)] = std::make_unique<learn::Learner>(state_dim, 2, init);
    }
    parallel_for(jobs.size(), cfg.worker_count(), [&](std::size_t i) {
      const auto& [alg, size] = jobs[i];
      TrainingSettings ts;
      ts.episodes = cfg.training_episodes;
      ts.batches = cfg.training_batches;
      ts.seed = static_cast<std::uint64_t>(size);
      auto& learner = *learners.at(detail::model_key(alg, size));
      const auto base = cfg.planner_config(alg, 0);
      if (cfg.env == "dubins")
        reports[i] = train_models([&](std::uint64_t s) { return env::DubinsMaze(env::generate_maze(size, s)); }, base,
                                  learner, ts);
      else
        reports[i] = train_models([&](std::uint64_t s) { return env::GeometricMaze(env::generate_maze(size, s)); },
                                  base, learner, ts);
      const std::string stem = (dir / ("model_" + detail::model_key(alg, size))).string();
      learn::save_checkpoint(learner.value, stem + "_value.bin");
      learn::save_checkpoint(learner.policy.net, stem + "_policy.bin");
    });
    result.training = nlohmann::json::object();
    for (std::size_t i = 0; i < jobs.size(); ++i)
      result.training[detail::model_key(jobs[i].first, jobs[i].second)] = detail::training_json(reports[i]);
  }

  result.records.resize(cells.size());
  parallel_for(cells.size(), cfg.worker_count(), [&](std::size_t i) {
    const auto& cell = cells[i];
    const auto pc = cfg.planner_config(cell.algorithm, cell.seed);
    const auto spec = cfg.maze_for(cell.size, cell.seed);
    const learn::Learner* learner =
        cell.phase == "trained" ? learners.at(detail::model_key(cell.algorithm, cell.size)).get() : nullptr;
    auto r = with_env(cfg.env, spec, [&](const auto& e) {
      using E = std::decay_t<decltype(e)>;
      planner::Models<E::kStateDim, E::kActionDim> models;
      if (learner) {
        models.value = &learner->value;
        models.policy = &learner->policy;
      }
      return planner::run_planner(e, pc, models, cell.size, false, cfg.export_trees);
    });
    r.record.phase = cell.phase;
    if (cfg.export_trees) {
      nlohmann::json j{{"algorithm", cell.algorithm}, {"env", cfg.env},      {"size", cell.size},
                       {"seed", cell.seed},           {"phase", cell.phase}, {"maze", env::to_json(spec)},
                       {"nodes", r.tree}};
      std::ofstream o(dir / ("tree_" + cell.algorithm + "_" + std::to_string(cell.size) + "_" + cell.phase + "_" +
                             std::to_string(cell.seed) + ".json"));
      o << j.dump() << '\n';
    }
    writer.append(r.record);
    result.records[i] = std::move(r.record);
  });
  writer.finalize(result.records);

  result.table = aggregate(result.records);
  auto table = table_json(result.table, to_json(cfg));
  if (!result.training.is_null()) table["training"] = result.training;
  std::ofstream t(dir / "table.json");
  t << table.dump(2) << '\n';
  if (!t) throw std::runtime_error("cannot write table.json");
  return result;
}

/// Runs one untrained search and returns its tree together with the maze.
inline nlohmann::json export_tree(const std::string& family, int size, std::uint64_t seed,
                                  const std::string& algorithm, int rollouts) {
  planner::PlannerConfig pc;
  pc.algorithm = planner::parse_algorithm(algorithm);
  pc.rollouts = rollouts;
  pc.seed = seed;
  const auto spec = env::generate_maze(size, seed);
  auto r = with_env(family, spec, [&](const auto& e) { return planner::run_planner(e, pc, {}, size, false, true); });
  return {{"algorithm", algorithm}, {"env", family},          {"size", size},
          {"seed", seed},           {"maze", env::to_json(spec)}, {"return", r.record.ret},
          {"nodes", r.tree}};
}

}  // namespace vmcts::harness
