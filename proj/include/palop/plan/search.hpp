#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "palop/plan/heuristic.hpp"
#include "palop/plan/task.hpp"

namespace palop::plan {

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t generated = 0;
  std::size_t evaluations = 0;
  double wall_time = 0.0;  // seconds
};

enum class PlanStatus { kSolved, kUnsolvable, kResourceLimit };

inline const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::kSolved:
      return "solved";
    case PlanStatus::kUnsolvable:
      return "unsolvable";
    case PlanStatus::kResourceLimit:
      return "resource-limit";
  }
  return "?";
}

struct PlanResult {
  PlanStatus status = PlanStatus::kUnsolvable;
  pddl::Plan plan;
  SearchStats stats;

  bool solved() const { return status == PlanStatus::kSolved; }
};

struct SearchOptions {
  std::size_t node_budget = 2'000'000;  // generated nodes, both phases together
  std::optional<double> time_budget;    // seconds
};

namespace detail {

struct Node {
  Bits state;
  std::int64_t parent = -1;
  std::int32_t action = -1;
  std::size_t g = 0;
};

inline pddl::Plan extract(const Task& task, const std::vector<Node>& nodes,
                          std::int64_t i) {
  pddl::Plan p;
  for (; nodes[i].parent >= 0; i = nodes[i].parent) {
    p.steps.push_back(task.actions()[nodes[i].action].ground);
  }
  std::reverse(p.steps.begin(), p.steps.end());
  return p;
}

class Clock {
 public:
  explicit Clock(std::optional<double> limit)
      : start_(std::chrono::steady_clock::now()), limit_(limit) {}
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }
  bool expired() const { return limit_ && elapsed() > *limit_; }

 private:
  std::chrono::steady_clock::time_point start_;
  std::optional<double> limit_;
};

enum class Outcome { kFound, kExhausted, kBudget };

// Greedy best-first search, deferred evaluation, FIFO ties.
inline Outcome gbfs(const Task& task, RelaxedHeuristic& h, std::size_t budget,
                    const Clock& clock, SearchStats& stats, pddl::Plan& out) {
  std::vector<Node> nodes;
  std::unordered_map<Bits, std::int64_t, BitsHash> seen;
  using Entry = std::tuple<double, std::uint64_t, std::int64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t tick = 0;

  nodes.push_back({task.init(), -1, -1, 0});
  seen.emplace(task.init(), 0);
  if (task.is_goal(task.init())) return Outcome::kFound;
  open.push({0.0, tick++, 0});
  std::size_t generated = 0;

  while (!open.empty()) {
    auto [key, order, id] = open.top();
    open.pop();
    ++stats.evaluations;
    double hv = h(nodes[id].state);
    if (hv == kInfinity) continue;
    ++stats.expanded;
    for (std::size_t a = 0; a < task.actions().size(); ++a) {
      const TaskAction& act = task.actions()[a];
      if (!act.applicable(nodes[id].state)) continue;
      Bits next = act.successor(nodes[id].state);
      if (seen.contains(next)) continue;
      if (++generated > budget || clock.expired()) return Outcome::kBudget;
      ++stats.generated;
      auto child = static_cast<std::int64_t>(nodes.size());
      nodes.push_back({std::move(next), id, static_cast<std::int32_t>(a),
                       nodes[id].g + 1});
      seen.emplace(nodes.back().state, child);
      if (task.is_goal(nodes.back().state)) {
        out = extract(task, nodes, child);
        return Outcome::kFound;
      }
      open.push({hv, tick++, child});
    }
  }
  return Outcome::kExhausted;
}

// A* on f = g + h with eager evaluation; reopens on cheaper paths.
inline Outcome astar(const Task& task, RelaxedHeuristic& h, std::size_t budget,
                     const Clock& clock, SearchStats& stats, pddl::Plan& out) {
  std::vector<Node> nodes;
  std::vector<double> hs;
  std::unordered_map<Bits, std::int64_t, BitsHash> best;
  using Entry = std::tuple<double, double, std::uint64_t, std::int64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t tick = 0;

  ++stats.evaluations;
  double h0 = h(task.init());
  if (h0 == kInfinity) return Outcome::kExhausted;
  nodes.push_back({task.init(), -1, -1, 0});
  hs.push_back(h0);
  best.emplace(task.init(), 0);
  open.push({h0, h0, tick++, 0});
  std::size_t generated = 0;

  while (!open.empty()) {
    auto [f, hv, order, id] = open.top();
    open.pop();
    if (best.at(nodes[id].state) != id) continue;
    if (task.is_goal(nodes[id].state)) {
      out = extract(task, nodes, id);
      return Outcome::kFound;
    }
    ++stats.expanded;
    for (std::size_t a = 0; a < task.actions().size(); ++a) {
      const TaskAction& act = task.actions()[a];
      if (!act.applicable(nodes[id].state)) continue;
      Bits next = act.successor(nodes[id].state);
      std::size_t g = nodes[id].g + 1;
      auto it = best.find(next);
      if (it != best.end() && nodes[it->second].g <= g) continue;
      if (++generated > budget || clock.expired()) return Outcome::kBudget;
      ++stats.generated;
      double hn;
      if (it != best.end()) {
        hn = hs[it->second];
      } else {
        ++stats.evaluations;
        hn = h(next);
      }
      if (hn == kInfinity) continue;
      auto child = static_cast<std::int64_t>(nodes.size());
      nodes.push_back({next, id, static_cast<std::int32_t>(a), g});
      hs.push_back(hn);
      best[std::move(next)] = child;
      open.push({static_cast<double>(g) + hn, hn, tick++, child});
    }
  }
  return Outcome::kExhausted;
}

}  // namespace detail

// GBFS over the grounded task; if it runs out of its share of the budget,
// A* continues with what is left. Exhaustion of either proves unsolvability
// since only relaxed dead ends are pruned.
inline PlanResult plan(const Task& task, const SearchOptions& opts = {}) {
  PlanResult r;
  detail::Clock clock(opts.time_budget);
  RelaxedHeuristic h(task);
  std::size_t first = opts.node_budget / 2;
  auto o = detail::gbfs(task, h, first, clock, r.stats, r.plan);
  if (o == detail::Outcome::kBudget) {
    std::size_t rest = opts.node_budget - r.stats.generated;
    r.plan = {};
    o = detail::astar(task, h, rest, clock, r.stats, r.plan);
  }
  switch (o) {
    case detail::Outcome::kFound:
      r.status = PlanStatus::kSolved;
      break;
    case detail::Outcome::kExhausted:
      r.status = PlanStatus::kUnsolvable;
      break;
    case detail::Outcome::kBudget:
      r.status = PlanStatus::kResourceLimit;
      break;
  }
  r.stats.wall_time = clock.elapsed();
  return r;
}

inline PlanResult plan(const PlanningProblem& problem,
                       const SearchOptions& opts = {}) {
  Task task(problem);
  return plan(task, opts);
}

}  // namespace palop::plan
