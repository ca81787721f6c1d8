// Plans one episode on a random 4x4 maze with Volume-MCTS and with
// AlphaZero, then replays the Volume-MCTS plan step by step.

#include <iostream>

#include "vmcts/planner/run.hpp"

using namespace vmcts;

int main() {
  const env::GeometricMaze maze(env::generate_maze(4, 7));

  planner::PlannerConfig cfg;
  cfg.rollouts = 3000;
  cfg.seed = 7;

  planner::VolumeSearch<env::GeometricMaze> search(maze, cfg);
  search.run();
  const auto plan = search.plan();
  const auto outcome = planner::execute_plan(maze, plan, cfg.horizon);
  std::cout << "volume-mcts: " << search.tree().size() << " nodes, plan of " << plan.size()
            << " actions, return " << outcome.ret << '\n';

  auto s = maze.start();
  for (std::size_t t = 0; t < outcome.steps.size(); ++t) {
    const auto& step = outcome.steps[t];
    if (step.next_state == s && !step.terminal) continue;
    std::cout << "  step " << t + 1 << ": (" << step.next_state[0] << ", " << step.next_state[1] << ")"
              << (step.terminal ? "  goal" : "") << '\n';
    s = step.next_state;
  }

  cfg.algorithm = planner::Algorithm::AlphaZero;
  const auto az = planner::run_planner(maze, cfg);
  std::cout << "alphazero: return " << az.record.ret << '\n';
}
