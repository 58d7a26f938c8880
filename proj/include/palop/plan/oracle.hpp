#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "palop/error.hpp"
#include "palop/plan/task.hpp"

namespace palop::plan {

inline constexpr std::size_t kOracleBound = std::size_t{1} << 20;

// Shortest plan by breadth-first search; nullopt means unsolvable.
inline std::optional<pddl::Plan> bfs_oracle(const Task& task,
                                            std::size_t bound = kOracleBound) {
  struct Node {
    std::int64_t parent;
    std::int32_t action;
  };
  std::vector<Node> nodes{{-1, -1}};
  std::vector<Bits> states{task.init()};
  std::unordered_map<Bits, std::int64_t, BitsHash> seen{{task.init(), 0}};
  std::deque<std::int64_t> frontier{0};

  auto extract = [&](std::int64_t i) {
    pddl::Plan p;
    for (; nodes[i].parent >= 0; i = nodes[i].parent) {
      p.steps.insert(p.steps.begin(), task.actions()[nodes[i].action].ground);
    }
    return p;
  };

  while (!frontier.empty()) {
    std::int64_t id = frontier.front();
    frontier.pop_front();
    if (task.is_goal(states[id])) return extract(id);
    for (std::size_t a = 0; a < task.actions().size(); ++a) {
      const TaskAction& act = task.actions()[a];
      if (!act.applicable(states[id])) continue;
      Bits next = act.successor(states[id]);
      if (seen.contains(next)) continue;
      if (states.size() >= bound) {
        throw SearchLimitExceeded("oracle state bound " + std::to_string(bound) +
                                  " exceeded");
      }
      auto child = static_cast<std::int64_t>(states.size());
      seen.emplace(next, child);
      states.push_back(std::move(next));
      nodes.push_back({id, static_cast<std::int32_t>(a)});
      frontier.push_back(child);
    }
  }
  return std::nullopt;
}

inline std::optional<pddl::Plan> bfs_oracle(const PlanningProblem& problem,
                                            std::size_t bound = kOracleBound) {
  Task task(problem);
  return bfs_oracle(task, bound);
}

}  // namespace palop::plan
