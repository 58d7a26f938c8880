#include <map>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "palop/agent/agent.hpp"
#include "palop/pddl/parser.hpp"
#include "support.hpp"

namespace palop {
namespace {

sim::WorldConfig tv_world(std::uint64_t seed, int tvs = 2, double failure = 0.0) {
  auto wc = sim::parse_world_config(nlohmann::json::parse(testing::slurp(testing::data("tv_world.json"))));
  wc.seed = seed;
  wc.action_failure_rate = failure;
  for (auto& t : wc.types) {
    if (t.name == "Tv") t.count = tvs;
  }
  return wc;
}

agent::Agent make_agent(const sim::WorldConfig& wc, int n_min = 16,
                        sim::DetectionMode mode = sim::DetectionMode::kGTD) {
  agent::AgentConfig cfg;
  cfg.extension.n_min = n_min;
  return agent::Agent(testing::tv_base(), testing::tv_pairs(), sim::generate_world(wc), mode,
                      cfg);
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

TEST(Agent, NoTargetObjectsExploresAndStops) {
  auto a = make_agent(tv_world(3, 0));
  auto r = a.run();
  EXPECT_EQ(r.termination, agent::Termination::kExploredExhausted);
  EXPECT_TRUE(r.dataset_sizes.empty());
  EXPECT_TRUE(r.learned.empty());
  ASSERT_FALSE(r.executed.empty());
  for (const auto& e : r.executed) EXPECT_TRUE(starts_with(e, "(Explore_for tv")) << e;
  EXPECT_TRUE(a.state().contains(pddl::Atom{"Explored_for", {"tv"}}));
}

TEST(Agent, TvWorldLearnsTheGoal) {
  auto a = make_agent(tv_world(7));
  auto r = a.run();
  EXPECT_EQ(r.termination, agent::Termination::kGoalLearned);
  ASSERT_EQ(r.learned.size(), 1u);
  EXPECT_EQ(r.learned[0], "(Learned tv is_turned_on not_is_turned_on)");
  bool trained = false;
  for (const auto& e : r.executed) trained |= starts_with(e, "(Train tv");
  EXPECT_TRUE(trained);
  EXPECT_TRUE(a.models().at(agent::dataset_key("tv", "is_turned_on")).trained());
  EXPECT_GE(r.dataset_sizes.at(agent::dataset_key("tv", "is_turned_on")), 16u);
  EXPECT_GE(r.dataset_sizes.at(agent::dataset_key("tv", "not_is_turned_on")), 16u);
}

// With n_min above one Observe's worth of views, observing one TV leaves
// Sufficient_Obs false and the replanned sequence moves on to a second TV.
TEST(Agent, InsufficientObservationsTriggerReplanOnAnotherObject) {
  auto a = make_agent(tv_world(7), 12);
  auto r = a.run();
  ASSERT_EQ(r.termination, agent::Termination::kGoalLearned);
  std::set<std::string> observed;
  bool first_checked = false;
  for (const auto& rec : r.trace) {
    if (!starts_with(rec.action, "(Observe ") || rec.failed) continue;
    std::istringstream in(rec.action.substr(9));
    std::string o;
    in >> o;
    observed.insert(o);
    if (!first_checked) {
      first_checked = true;
      for (const auto& add : rec.added) {
        EXPECT_FALSE(starts_with(add, "(Sufficient_Obs")) << add;
      }
    }
  }
  EXPECT_GE(observed.size(), 2u);
}

TEST(Agent, ObserveAddsViewsPerObserve) {
  auto a = make_agent(tv_world(7));
  auto r = a.run();
  std::map<std::string, std::size_t> prev;
  int checked = 0;
  for (const auto& rec : r.trace) {
    if (starts_with(rec.action, "(Observe ") && !rec.failed) {
      std::istringstream in(rec.action.substr(9));
      std::string o, t, p;
      in >> o >> t >> p;
      p.pop_back();
      auto key = agent::dataset_key(t, p);
      std::size_t before = prev.contains(key) ? prev.at(key) : 0;
      EXPECT_EQ(rec.datasets.at(key), before + 8) << rec.action;
      ++checked;
    }
    prev = rec.datasets;
  }
  EXPECT_GT(checked, 0);
}

// Properties every run satisfies: the executed action was applicable (the
// agent throws otherwise), one replan per executed action, a bounded number
// of iterations, no repeated Observe, and anchored objects and datasets only
// grow.
TEST(Agent, RunInvariants) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (int tvs : {1, 2, 3}) {
      auto a = make_agent(tv_world(seed, tvs, 0.1));
      agent::RunReport r;
      ASSERT_NO_THROW(r = a.run()) << "seed " << seed;
      EXPECT_LE(r.iterations, 2000);
      std::size_t extra = r.termination == agent::Termination::kBudget ? 0 : 1;
      EXPECT_EQ(r.replans, r.trace.size() + extra);
      std::set<std::string> observed;
      std::map<std::string, std::size_t> prev;
      for (const auto& rec : r.trace) {
        if (starts_with(rec.action, "(Observe ") && !rec.failed) {
          EXPECT_TRUE(observed.insert(rec.action).second) << rec.action;
        }
        for (const auto& gone : rec.removed) {
          EXPECT_FALSE(starts_with(gone, "(Tv ") || starts_with(gone, "(Box ")) << gone;
          EXPECT_FALSE(starts_with(gone, "(Viewed ")) << gone;
        }
        for (const auto& [key, n] : prev) EXPECT_GE(rec.datasets.at(key), n);
        prev = rec.datasets;
      }
    }
  }
}

TEST(Agent, BudgetTerminates) {
  sim::WorldConfig wc = tv_world(7);
  agent::AgentConfig cfg;
  cfg.max_iterations = 25;
  agent::Agent a(testing::tv_base(), testing::tv_pairs(), sim::generate_world(wc),
                 sim::DetectionMode::kGTD, cfg);
  auto r = a.run();
  EXPECT_EQ(r.termination, agent::Termination::kBudget);
  EXPECT_LE(r.iterations, 25);
}

// A manipulation that silently fails leaves the believed labels in place:
// the dataset records what the agent believed, not the ground truth.
TEST(Agent, FailedManipulationKeepsBelievedLabel) {
  auto a = make_agent(tv_world(7, 2, 1.0));
  auto r = a.run();
  EXPECT_GT(a.simulator().silent_failures(), 0u);
  std::size_t wrong = 0, total = 0;
  for (const auto& [key, set] : a.datasets()) {
    for (const auto& s : set.samples) {
      const perception::Anchor* anchor = a.anchors().find(s.constant);
      ASSERT_NE(anchor, nullptr);
      const sim::WorldObject* o = a.simulator().world().object_at(anchor->cell);
      ASSERT_NE(o, nullptr);
      bool on = o->properties.at("Is_Turned_On");
      ++total;
      if (s.positive != on) ++wrong;
    }
  }
  EXPECT_GT(total, 0u);
  EXPECT_GT(wrong, 0u);
  (void)r;
}

TEST(Agent, Deterministic) {
  auto trace = [] {
    auto a = make_agent(tv_world(11, 3, 0.05), 16, sim::DetectionMode::kND);
    std::ostringstream out;
    auto r = a.run(&out);
    return out.str() + agent::to_json(r).dump();
  };
  EXPECT_EQ(trace(), trace());
}

TEST(Agent, GtdAndNdShareTheWorld) {
  auto wc = tv_world(5);
  auto gtd = make_agent(wc, 16, sim::DetectionMode::kGTD);
  auto nd = make_agent(wc, 16, sim::DetectionMode::kND);
  const auto& x = gtd.simulator().world().objects;
  const auto& y = nd.simulator().world().objects;
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].cell, y[i].cell);
    EXPECT_EQ(x[i].properties, y[i].properties);
  }
}

}  // namespace
}  // namespace palop
