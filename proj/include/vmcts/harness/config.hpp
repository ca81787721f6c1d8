/**
 * Experiment configuration: which environment family, maze sizes,
 * algorithms, seeds and phases to run, and where to write the results.
 * Parsed from JSON with unknown keys rejected; every field is echoed back
 * into the outputs.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vmcts/env/maze.hpp"
#include "vmcts/planner/search_tree.hpp"

namespace vmcts::harness {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string env = "geometric";  // "geometric" or "dubins"
  std::vector<int> sizes{2, 3, 4, 5, 6};
  std::vector<std::string> algorithms{"volume-mcts", "alphazero", "alphazero-cbe"};
  int rollouts = 5000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::string> phases{"untrained"};  // any of "untrained", "trained"
  int training_episodes = 200;
  int training_batches = 40;
  int horizon = 50;
  double gamma = 0.95;
  double c = 20.0;
  std::string out = "results";
  int workers = 0;  // 0 = one per hardware thread
  bool export_trees = false;
  /// Hand-made mazes; a pinned maze replaces the generated one for its size.
  std::vector<env::MazeSpec> mazes;

  int worker_count() const {
    if (workers > 0) return workers;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }

  planner::PlannerConfig planner_config(const std::string& algorithm, std::uint64_t seed) const {
    planner::PlannerConfig p;
    p.algorithm = planner::parse_algorithm(algorithm);
    p.rollouts = rollouts;
    p.seed = seed;
    p.horizon = horizon;
    p.gamma = gamma;
    p.c = c;
    return p;
  }

  /// Maze for one (size, seed) cell: a pinned maze if present, else the generated one.
  env::MazeSpec maze_for(int size, std::uint64_t seed) const {
    for (const auto& m : mazes)
      if (m.size_n == size) return m;
    return env::generate_maze(size, seed);
  }

  void validate() const {
    if (env != "geometric" && env != "dubins") throw ConfigError("env: expected \"geometric\" or \"dubins\"");
    for (int s : sizes)
      if (s < 2) throw ConfigError("sizes: every size must be >= 2");
    for (const auto& a : algorithms) {
      try {
        planner::parse_algorithm(a);
      } catch (const std::invalid_argument&) {
        throw ConfigError("algorithms: unknown algorithm \"" + a + "\"");
      }
    }
    for (const auto& p : phases)
      if (p != "untrained" && p != "trained") throw ConfigError("phases: expected \"untrained\" or \"trained\"");
    if (rollouts < 1) throw ConfigError("rollouts: must be >= 1");
    if (training_episodes < 0) throw ConfigError("training_episodes: must be >= 0");
    if (training_batches < 1) throw ConfigError("training_batches: must be >= 1");
    if (horizon < 1) throw ConfigError("horizon: must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma: must be in (0, 1)");
    if (!(c > 0.0)) throw ConfigError("c: must be > 0");
    if (workers < 0) throw ConfigError("workers: must be >= 0");
    if (out.empty()) throw ConfigError("out: must not be empty");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json mazes = nlohmann::json::array();
  for (const auto& m : c.mazes) mazes.push_back(env::to_json(m));
  return {{"env", c.env},
          {"sizes", c.sizes},
          {"algorithms", c.algorithms},
          {"rollouts", c.rollouts},
          {"seeds", c.seeds},
          {"phases", c.phases},
          {"training_episodes", c.training_episodes},
          {"training_batches", c.training_batches},
          {"horizon", c.horizon},
          {"gamma", c.gamma},
          {"c", c.c},
          {"out", c.out},
          {"workers", c.workers},
          {"export_trees", c.export_trees},
          {"mazes", mazes}};
}

namespace detail {
template <class T>
void read_field(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(key) + ": wrong type");
  }
}
}  // namespace detail

/**
 * Missing keys keep their defaults. `seeds` may be a list or a count n,
 * meaning 0..n-1.
 */
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> known{"env",     "sizes",  "algorithms", "rollouts",     "seeds",
                                           "phases",  "training_episodes", "training_batches", "horizon",
                                           "gamma",   "c",      "out",        "workers",      "export_trees",
                                           "mazes"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown key: " + k);

  ExperimentConfig c;
  detail::read_field(j, "env", c.env);
  detail::read_field(j, "sizes", c.sizes);
  detail::read_field(j, "algorithms", c.algorithms);
  detail::read_field(j, "rollouts", c.rollouts);
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_number_unsigned() || s.is_number_integer()) {
      const auto n = s.get<std::int64_t>();
      if (n < 0) throw ConfigError("seeds: count must be >= 0");
      c.seeds.clear();
      for (std::int64_t i = 0; i < n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
    } else {
      detail::read_field(j, "seeds", c.seeds);
    }
  }
  detail::read_field(j, "phases", c.phases);
  detail::read_field(j, "training_episodes", c.training_episodes);
  detail::read_field(j, "training_batches", c.training_batches);
  detail::read_field(j, "horizon", c.horizon);
  detail::read_field(j, "gamma", c.gamma);
  detail::read_field(j, "c", c.c);
  detail::read_field(j, "out", c.out);
  detail::read_field(j, "workers", c.workers);
  detail::read_field(j, "export_trees", c.export_trees);
  if (j.contains("mazes")) {
    if (!j.at("mazes").is_array()) throw ConfigError("mazes: expected an array");
    for (const auto& m : j.at("mazes")) {
      try {
        c.mazes.push_back(env::maze_from_json(m));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("mazes: ") + e.what());
      }
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

}  // namespace vmcts::harness
