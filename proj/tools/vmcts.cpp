// Command-line front end: experiment grids, the exploration-bound check,
// the property suite and search-tree export.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmcts/harness/bound.hpp"
#include "vmcts/harness/experiment.hpp"
#include "vmcts/harness/properties.hpp"

namespace fs = std::filesystem;
using namespace vmcts;

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream o(path);
  o << j.dump(2) << '\n';
  if (!o) throw std::runtime_error("cannot write " + path.string());
}

/// The full grid: every algorithm, both phases, 30 seeds.
void apply_full(harness::ExperimentConfig& c) {
  c.algorithms = {"volume-mcts", "alphazero", "alphazero-cbe", "alphazero-openloop", "volume-rrt-ablation"};
  c.phases = {"untrained", "trained"};
  c.seeds.clear();
  for (std::uint64_t s = 0; s < 30; ++s) c.seeds.push_back(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-MCTS planners, baselines and experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int seeds = -1, rollouts = -1, workers = -1;
  bool full = false;

  auto* run = app.add_subcommand("run", "run an experiment grid and write runs.csv and table.json");
  run->add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "number of seeds (0..n-1), overrides the config")->check(CLI::NonNegativeNumber);
  run->add_option("--rollouts", rollouts, "rollouts per episode")->check(CLI::PositiveNumber);
  run->add_option("--workers", workers, "worker threads (0 = hardware threads)")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--full", full, "all algorithms, trained and untrained, 30 seeds");

  int bound_seeds = 40, bound_budget = 20000;
  std::string bound_out = "results/bound.json";
  auto* bound = app.add_subcommand("bound-check", "exploration-bound check on an open corridor");
  bound->add_option("--seeds", bound_seeds, "number of seeds")->check(CLI::PositiveNumber);
  bound->add_option("--rollouts", bound_budget, "iteration budget per seed")->check(CLI::PositiveNumber);
  bound->add_option("--out", bound_out, "report path");

  std::uint64_t prop_seed = 0;
  bool inject_bug = false;
  std::string prop_out;
  auto* props = app.add_subcommand("props", "run the property suite; nonzero exit on any failure");
  props->add_option("--seed", prop_seed, "seed for the random inputs");
  props->add_flag("--inject-volume-bug", inject_bug, "break volume bookkeeping (mutation fixture)");
  props->add_option("--out", prop_out, "also write the JSON report here");

  std::string tree_env = "geometric", tree_alg = "volume-mcts", tree_out = "results";
  int tree_size = 3, tree_rollouts = 1000;
  std::uint64_t tree_seed = 0;
  auto* tree = app.add_subcommand("export-tree", "run one search and write tree_<seed>.json");
  tree->add_option("--env", tree_env, "geometric or dubins");
  tree->add_option("--size", tree_size, "maze size")->check(CLI::Range(2, 64));
  tree->add_option("--seed", tree_seed, "run and maze seed");
  tree->add_option("--algorithm", tree_alg, "planner");
  tree->add_option("--rollouts", tree_rollouts, "rollouts")->check(CLI::PositiveNumber);
  tree->add_option("--out", tree_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      harness::ExperimentConfig cfg = config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(config_path);
      if (full) apply_full(cfg);
      if (seeds >= 0) {
        cfg.seeds.clear();
        for (int s = 0; s < seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      if (rollouts > 0) cfg.rollouts = rollouts;
      if (workers >= 0) cfg.workers = workers;
      if (!out_dir.empty()) cfg.out = out_dir;
      cfg.validate();
      const auto result = harness::run_experiment(cfg);
      std::cout << "algorithm,env,size,phase,mean,stderr,n\n";
      for (const auto& r : result.table)
        std::cout << r.algorithm << ',' << r.env << ',' << r.size << ',' << r.phase << ',' << r.mean << ','
                  << r.stderr_ << ',' << r.n << '\n';
      std::cout << "wrote " << (fs::path(cfg.out) / "runs.csv").string() << " and table.json\n";
      return 0;
    }
    if (*bound) {
      harness::ExplorationBoundParams p;
      std::vector<std::uint64_t> s;
      for (int i = 0; i < bound_seeds; ++i) s.push_back(static_cast<std::uint64_t>(i));
      const auto rep = harness::run_exploration_bound_check(p, s, bound_budget);
      auto j = rep.to_json();
      write_json(bound_out, j);
      j.erase("runs");
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*props) {
      harness::PropertyOptions o;
      o.seed = prop_seed;
      o.inject_volume_bug = inject_bug;
      const auto rep = harness::run_property_suite(o);
      const auto j = rep.to_json();
      if (!prop_out.empty()) write_json(prop_out, j);
      std::cout << j.dump(2) << '\n';
      return rep.passed() ? 0 : 1;
    }
    if (*tree) {
      const auto j = harness::export_tree(tree_env, tree_size, tree_seed, tree_alg, tree_rollouts);
      const auto path = fs::path(tree_out) / ("tree_" + std::to_string(tree_seed) + ".json");
      write_json(path, j);
      std::cout << "wrote " << path.string() << " (" << j["nodes"].size() << " nodes, return " << j["return"]
                << ")\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
