#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "palop/error.hpp"
#include "palop/pddl/ground.hpp"
#include "palop/pddl/state.hpp"

namespace palop::pddl {

// Truth of a closed formula in s. Quantifiers range over `universe`.
inline bool holds(const State& s, const Formula& f,
                  std::span<const Constant> universe = {}) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
      if (!f.atom().is_ground()) {
        throw UnboundVariable("unbound variable in " + to_string(f.atom()));
      }
      return s.contains(f.atom());
    case K::kNot:
      return !holds(s, f.children()[0], universe);
    case K::kAnd:
      for (const auto& c : f.children()) {
        if (!holds(s, c, universe)) return false;
      }
      return true;
    case K::kOr:
      for (const auto& c : f.children()) {
        if (holds(s, c, universe)) return true;
      }
      return false;
    case K::kImply:
      return !holds(s, f.children()[0], universe) ||
             holds(s, f.children()[1], universe);
    case K::kForall:
      return holds(s, expand_quantifiers(f, universe), universe);
  }
  return false;
}

// First top-level conjunct of a ground precondition that is false in s.
inline std::optional<std::string> first_failing(const State& s,
                                                const Formula& pre) {
  if (pre.kind() == Formula::Kind::kAnd) {
    for (const auto& c : pre.children()) {
      if (!holds(s, c)) return to_string(c);
    }
    return std::nullopt;
  }
  if (!holds(s, pre)) return to_string(pre);
  return std::nullopt;
}

// s' = s ∪ add \ del. Throws PreconditionViolated when pre does not hold.
inline State apply(const State& s, const GroundAction& a) {
  if (auto failing = first_failing(s, a.pre)) {
    throw PreconditionViolated(a.name(), *failing);
  }
  State next = s;
  for (const auto& atom : a.add) next.insert(atom);
  for (const auto& atom : a.del) next.erase(atom);
  return next;
}

struct ValidationReport {
  bool valid = false;
  std::optional<std::size_t> failed_step;
  std::string message;
  State final_state;
};

// Replays each step, re-instantiated from the domain by name, from s0.
inline ValidationReport validate(const Plan& plan, const Domain& d,
                                 const State& s0, const Formula& goal,
                                 std::span<const Constant> universe) {
  ValidationReport r;
  State s = s0;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const GroundAction& step = plan.steps[i];
    GroundAction a;
    try {
      a = instantiate(d, step.op, step.args, universe);
    } catch (const DomainError& e) {
      r.failed_step = i;
      r.message = e.what();
      r.final_state = s;
      return r;
    }
    if (auto failing = first_failing(s, a.pre)) {
      r.failed_step = i;
      r.message = "step " + std::to_string(i) + " " + a.name() +
                  ": precondition " + *failing + " does not hold";
      r.final_state = s;
      return r;
    }
    s = apply(s, a);
  }
  r.final_state = s;
  if (!holds(s, goal, universe)) {
    r.message = "goal does not hold in the final state";
    return r;
  }
  r.valid = true;
  return r;
}

}  // namespace palop::pddl
