#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "palop/pddl/parser.hpp"
#include "palop/pddl/semantics.hpp"
#include "palop/plan/heuristic.hpp"
#include "palop/plan/oracle.hpp"
#include "palop/plan/search.hpp"
#include "support.hpp"

namespace palop {
namespace {

using pddl::Formula;

std::vector<std::string> sorted_names(const pddl::Plan& p) {
  std::vector<std::string> out;
  for (const auto& s : p.steps) out.push_back(s.name());
  std::sort(out.begin(), out.end());
  return out;
}

bool validates(const plan::PlanningProblem& pp, const pddl::Plan& p) {
  return pddl::validate(p, pp.domain, pp.init, pp.goal, pp.universe).valid;
}

plan::PlanningProblem parse(const std::string& domain, const std::string& problem) {
  pddl::Domain d = pddl::parse_domain(domain);
  return plan::make_problem(d, pddl::parse_problem(problem, d));
}

const char* kChain =
    "(define (domain chain) (:predicates (A) (B) (C))\n"
    "  (:action ab :parameters () :precondition (A) :effect (B))\n"
    "  (:action bc :parameters () :precondition (B) :effect (C)))";

TEST(Plan, GoalAlreadyTrue) {
  plan::PlanningProblem pp = testing::tv0_problem();
  pp.goal = Formula::make_atom({"Tv", {"tv0"}});
  auto r = plan::plan(pp);
  ASSERT_TRUE(r.solved());
  EXPECT_TRUE(r.plan.empty());
  EXPECT_EQ(plan::h_relaxed(pp, pp.init), 0.0);
}

TEST(Plan, WorkedTvPlan) {
  plan::PlanningProblem pp = testing::tv0_problem();
  auto r = plan::plan(pp);
  ASSERT_TRUE(r.solved());
  EXPECT_TRUE(validates(pp, r.plan));
  std::vector<std::string> expected{
      "(Go_Close_To tv0)",
      "(Observe tv0 tv is_turned_on)",
      "(Observe tv0 tv not_is_turned_on)",
      "(Train tv is_turned_on not_is_turned_on)",
      "(Turn_Off tv0)",
      "(Turn_On tv0)"};
  EXPECT_EQ(sorted_names(r.plan), expected);
  EXPECT_LE(r.stats.expanded, r.stats.generated);
}

TEST(Plan, UnsolvableFixture) {
  plan::PlanningProblem pp = testing::tv0_problem("tv0_unsolvable.problem.pddl");
  EXPECT_EQ(plan::plan(pp).status, plan::PlanStatus::kUnsolvable);
  EXPECT_FALSE(plan::bfs_oracle(pp).has_value());
}

TEST(Plan, ResourceLimitIsDistinct) {
  plan::PlanningProblem pp = testing::tv0_problem();
  plan::SearchOptions o;
  o.node_budget = 2;
  EXPECT_EQ(plan::plan(pp, o).status, plan::PlanStatus::kResourceLimit);
}

TEST(Plan, Deterministic) {
  plan::PlanningProblem pp = testing::tv0_problem();
  auto a = plan::plan(pp);
  auto b = plan::plan(pp);
  EXPECT_EQ(a.plan.steps, b.plan.steps);
  EXPECT_EQ(a.stats.expanded, b.stats.expanded);
  EXPECT_EQ(a.stats.generated, b.stats.generated);
  EXPECT_EQ(a.stats.evaluations, b.stats.evaluations);
}

TEST(Plan, EitherDisjunctAccepted) {
  // Only the second disjunct is reachable.
  auto pp = parse(kChain,
                  "(define (problem p) (:domain chain) (:init (A))\n"
                  "  (:goal (or (and (C) (not (A))) (B))))");
  auto r = plan::plan(pp);
  ASSERT_TRUE(r.solved());
  EXPECT_EQ(r.plan.size(), 1u);
  EXPECT_TRUE(validates(pp, r.plan));
}

TEST(Heuristic, OneActionAway) {
  auto pp = parse(kChain, "(define (problem p) (:domain chain) (:init (A)) (:goal (B)))");
  EXPECT_GE(plan::h_relaxed(pp, pp.init), 1.0);
  auto far = parse(kChain, "(define (problem p) (:domain chain) (:init) (:goal (C)))");
  EXPECT_EQ(plan::h_relaxed(far, far.init), plan::kInfinity);
}

TEST(Oracle, EmptyGoal) {
  auto pp = parse(kChain, "(define (problem p) (:domain chain) (:init) (:goal (and)))");
  auto o = plan::bfs_oracle(pp);
  ASSERT_TRUE(o.has_value());
  EXPECT_TRUE(o->empty());
}

TEST(Oracle, TwoActionChain) {
  auto pp = parse(kChain, "(define (problem p) (:domain chain) (:init (A)) (:goal (C)))");
  auto o = plan::bfs_oracle(pp);
  ASSERT_TRUE(o.has_value());
  EXPECT_EQ(o->size(), 2u);
}

TEST(Oracle, TvPlanOptimalLengthSix) {
  auto o = plan::bfs_oracle(testing::tv0_problem());
  ASSERT_TRUE(o.has_value());
  EXPECT_EQ(o->size(), 6u);
}

TEST(Oracle, BoundExceeded) {
  EXPECT_THROW(plan::bfs_oracle(testing::tv0_problem(), 3), SearchLimitExceeded);
}

// plan() finds a plan iff the oracle does; found plans validate; an infinite
// relaxed estimate implies the oracle proves unsolvability.
TEST(Agreement, RandomProblems) {
  int solvable = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto inst = testing::random_instance(seed);
    auto pp = parse(inst.domain, inst.problem);
    auto r = plan::plan(pp);
    auto o = plan::bfs_oracle(pp);
    ASSERT_NE(r.status, plan::PlanStatus::kResourceLimit) << "seed " << seed;
    EXPECT_EQ(r.solved(), o.has_value()) << "seed " << seed << "\n" << inst.domain << inst.problem;
    if (r.solved()) {
      ++solvable;
      EXPECT_TRUE(validates(pp, r.plan)) << "seed " << seed;
      EXPECT_GE(r.plan.size(), o->size());
      EXPECT_TRUE(validates(pp, *o));
    }
    if (plan::h_relaxed(pp, pp.init) == plan::kInfinity) {
      EXPECT_FALSE(o.has_value()) << "seed " << seed;
    }
  }
  std::cout << solvable << " of 100 solvable\n";
  // the generator should exercise both verdicts
  EXPECT_GT(solvable, 10);
  EXPECT_LT(solvable, 100);
}

}  // namespace
}  // namespace palop
