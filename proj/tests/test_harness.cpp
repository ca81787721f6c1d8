#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "vmcts/harness/bound.hpp"
#include "vmcts/harness/experiment.hpp"
#include "vmcts/harness/properties.hpp"
#include "vmcts/harness/stats.hpp"

using namespace vmcts;
using namespace vmcts::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vmcts_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.sizes = {2, 3};
  c.algorithms = {"volume-mcts", "alphazero", "volume-rrt-ablation"};
  c.rollouts = 300;
  c.seeds = {0, 1, 2};
  c.workers = 2;
  c.out = out.string();
  return c;
}

std::string strip_time(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream o;
  std::string line;
  while (std::getline(in, line)) o << line.substr(0, line.rfind(',')) << '\n';
  return o.str();
}

}  // namespace

TEST(Stats, MeanAndStandardError) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_NEAR(sample_stddev(x), std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_NEAR(standard_error(x), std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(standard_error(std::vector<double>{7.0}), 0.0);
}

TEST(Stats, ChiSquareKnownValue) {
  // Statistic 4 with 1 degree of freedom: p = 0.0455.
  const std::vector<double> obs{60, 40}, exp{50, 50};
  EXPECT_NEAR(chi_square_p(obs, exp), 0.0455003, 1e-6);
}

TEST(Stats, TTests) {
  const std::vector<double> a{5, 6, 7, 8}, b{1, 2, 3, 4};
  EXPECT_LT(welch_greater(a, b).p, 0.01);
  EXPECT_GT(welch_greater(b, a).p, 0.99);
  const auto tied = paired_greater(a, a);
  EXPECT_DOUBLE_EQ(tied.p, 0.5);
}

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(ExperimentConfig{}.validate()); }

TEST(Config, SeedsAsCountAndRoundTrip) {
  const auto c = config_from_json(nlohmann::json{{"seeds", 4}, {"sizes", {2}}, {"env", "dubins"}});
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1, 2, 3}));
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(config_from_json(nlohmann::json{{"rollout", 5}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"env", "water"}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"algorithms", {"mcts"}}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"rollouts", "many"}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::array()), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(fs::path(VMCTS_SOURCE_DIR) / "configs"))
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
}

TEST(Config, PinnedMazeOverridesGenerated) {
  ExperimentConfig c;
  auto m = env::generate_maze(3, 99);
  c.mazes = {m};
  EXPECT_EQ(c.maze_for(3, 0), m);
  EXPECT_EQ(c.maze_for(4, 0), env::generate_maze(4, 0));
}

TEST(Experiment, ZeroSeedsGiveEmptyTable) {
  const auto dir = scratch_dir("zero");
  auto c = small_config(dir);
  c.seeds.clear();
  const auto r = run_experiment(c);
  EXPECT_TRUE(r.table.empty());
  EXPECT_TRUE(read_runs_csv((dir / "runs.csv").string()).empty());
  std::ifstream t(dir / "table.json");
  const auto j = nlohmann::json::parse(t);
  EXPECT_TRUE(j["rows"].empty());
}

TEST(Experiment, UnwritableOutputFailsFast) {
  const auto dir = scratch_dir("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  auto c = small_config(dir / "file" / "sub");
  c.rollouts = 1'000'000;  // would take minutes if any work started
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_ANY_THROW(run_experiment(c));
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(Experiment, CsvIsDeterministicAndTableMatchesCsv) {
  const auto d1 = scratch_dir("det1"), d2 = scratch_dir("det2");
  const auto r1 = run_experiment(small_config(d1));
  run_experiment(small_config(d2));
  EXPECT_EQ(strip_time((d1 / "runs.csv").string()), strip_time((d2 / "runs.csv").string()));

  const auto records = read_runs_csv((d1 / "runs.csv").string());
  ASSERT_EQ(records.size(), 3u * 2 * 3);
  std::ifstream t(d1 / "table.json");
  const auto j = nlohmann::json::parse(t);
  ASSERT_EQ(j["rows"].size(), 6u);
  for (const auto& row : j["rows"]) {
    std::vector<double> xs;
    for (const auto& r : records)
      if (r.algorithm == row["algorithm"] && r.size == row["size"] && r.phase == row["phase"]) xs.push_back(r.ret);
    ASSERT_EQ(xs.size(), row["n"].get<std::size_t>());
    double m = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double se = std::sqrt(ss / (xs.size() - 1)) / std::sqrt(xs.size());
    EXPECT_NEAR(row["mean"].get<double>(), m, 1e-9);
    EXPECT_NEAR(row["stderr"].get<double>(), se, 1e-9);
  }
  EXPECT_EQ(j["config"]["rollouts"], 300);
}

TEST(Experiment, ExportsTrees) {
  const auto dir = scratch_dir("trees");
  auto c = small_config(dir);
  c.sizes = {2};
  c.seeds = {0};
  c.algorithms = {"volume-mcts"};
  c.export_trees = true;
  run_experiment(c);
  std::ifstream in(dir / "tree_volume-mcts_2_untrained_0.json");
  ASSERT_TRUE(in.good());
  const auto j = nlohmann::json::parse(in);
  EXPECT_FALSE(j["nodes"].empty());
  EXPECT_EQ(j["maze"]["size"], 2);
}

TEST(Experiment, ExportTreeHasMazeAndNodes) {
  const auto j = export_tree("dubins", 2, 3, "alphazero-openloop", 200);
  EXPECT_EQ(j["env"], "dubins");
  EXPECT_GT(j["nodes"].size(), 1u);
  EXPECT_THROW(export_tree("ocean", 2, 3, "volume-mcts", 10), ConfigError);
}

TEST(Experiment, TrainedPhaseWritesCheckpoints) {
  const auto dir = scratch_dir("trained");
  auto c = small_config(dir);
  c.sizes = {2};
  c.seeds = {0, 1};
  c.algorithms = {"volume-mcts"};
  c.phases = {"untrained", "trained"};
  c.training_episodes = 2;
  c.training_batches = 2;
  const auto r = run_experiment(c);
  EXPECT_EQ(r.table.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "model_volume-mcts_2_value.bin"));
  EXPECT_EQ(r.training["volume-mcts_2"]["episode_returns"].size(), 2u);
  const auto net = learn::load_checkpoint((dir / "model_volume-mcts_2_value.bin").string());
  EXPECT_EQ(net.input_dim(), 2);
}

TEST(Bound, ClosedForms) {
  ExplorationBoundParams p;
  const double k = p.c * p.c * (1 - p.gamma) * (1 - p.gamma);
  EXPECT_NEAR(k, 1.0, 1e-12);
  EXPECT_NEAR(p.sigma(), std::numbers::pi / 4, 1e-15);
  const double term = 0.5 * p.balls * p.ball_volume() * p.sigma() * p.delta * p.delta;
  EXPECT_NEAR(p.stated_bound(), k * (term + 1) * (term + 1), 1e-12);
  EXPECT_GT(p.inverted_bound(), p.stated_bound());
  p.balls = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Bound, SingleBallIsReachedImmediately) {
  ExplorationBoundParams p;
  p.balls = 1;
  const auto rep = run_exploration_bound_check(p, {0, 1, 2, 3}, 100);
  for (const auto& e : rep.expansions_to_goal) EXPECT_EQ(e, std::optional<std::uint64_t>(0));
  EXPECT_DOUBLE_EQ(rep.success_fraction(0), 1.0);
}

TEST(Bound, SuccessMonotoneInBudget) {
  ExplorationBoundParams p;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
  const auto rep = run_exploration_bound_check(p, seeds, 20000);
  double prev = 0.0;
  for (double n = 1; n < 40000; n *= 2) {
    const double f = rep.success_fraction(n);
    EXPECT_GE(f, prev);
    prev = f;
  }
  EXPECT_DOUBLE_EQ(rep.success_fraction(20000), 1.0);
  const auto j = rep.to_json();
  EXPECT_EQ(j["runs"].size(), 10u);
}

TEST(Properties, SuitePassesAndReportIsValid) {
  PropertyOptions o;
  o.seed = 3;
  o.random_instances = 300;
  const auto rep = run_property_suite(o);
  const auto j = rep.to_json();
  EXPECT_EQ(validate_property_report(j), "");
  for (const auto& r : rep.results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  EXPECT_GE(rep.results.size(), 10u);
}

TEST(Properties, InjectedVolumeBugReportsNodePath) {
  PropertyOptions o;
  o.inject_volume_bug = true;
  o.random_instances = 50;
  const auto rep = run_property_suite(o);
  EXPECT_FALSE(rep.passed());
  bool found = false;
  for (const auto& r : rep.results)
    if (r.name == "planner.volume_conservation") {
      found = true;
      EXPECT_FALSE(r.passed);
      ASSERT_TRUE(r.counterexample.is_object());
      EXPECT_TRUE(r.counterexample["path"].is_string());
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(validate_property_report(rep.to_json()), "");
}

TEST(Properties, SchemaValidatorRejectsBrokenReports) {
  EXPECT_NE(validate_property_report(nlohmann::json::array()), "");
  EXPECT_NE(validate_property_report({{"schema", "other"}}), "");
  auto j = PropertyReport{}.to_json();
  EXPECT_EQ(validate_property_report(j), "");
  j["properties"].push_back({{"name", 3}});
  EXPECT_NE(validate_property_report(j), "");
}
