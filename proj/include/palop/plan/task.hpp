#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "palop/pddl/domain.hpp"
#include "palop/pddl/ground.hpp"
#include "palop/pddl/semantics.hpp"
#include "palop/pddl/state.hpp"

namespace palop::plan {

// Π = ⟨D(C), s0, g⟩ with C = universe.
struct PlanningProblem {
  pddl::Domain domain;
  std::vector<pddl::Constant> universe;
  pddl::State init;
  pddl::Formula goal;
};

// Type atoms are implied by constant declarations and always part of s0.
inline std::vector<pddl::Atom> type_atoms(std::span<const pddl::Constant> cs) {
  std::vector<pddl::Atom> out;
  for (const auto& c : cs) out.push_back({c.type, {c.name}});
  return out;
}

inline PlanningProblem make_problem(const pddl::Domain& d,
                                    const pddl::Problem& p) {
  PlanningProblem out;
  out.domain = d;
  out.universe = pddl::universe_of(d, p);
  for (const auto& a : p.init) out.init.insert(a);
  for (const auto& a : type_atoms(out.universe)) out.init.insert(a);
  out.goal = p.goal;
  return out;
}

using AtomId = std::uint32_t;

struct AtomHash {
  std::size_t operator()(const pddl::Atom& a) const {
    std::size_t h = std::hash<std::string>{}(a.predicate);
    for (const auto& s : a.args) {
      h ^= std::hash<std::string>{}(s) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// Packed state: one bit per interned atom.
class Bits {
 public:
  Bits() = default;
  explicit Bits(std::size_t n) : words_((n + 63) / 64, 0) {}

  bool test(AtomId i) const { return (words_[i >> 6] >> (i & 63)) & 1ULL; }
  void set(AtomId i) { words_[i >> 6] |= 1ULL << (i & 63); }
  void reset(AtomId i) { words_[i >> 6] &= ~(1ULL << (i & 63)); }

  bool operator==(const Bits&) const = default;

  std::size_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto w : words_) {
      h ^= w;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }

 private:
  std::vector<std::uint64_t> words_;
};

struct BitsHash {
  std::size_t operator()(const Bits& b) const { return b.hash(); }
};

// Ground formula over atom ids.
struct Cond {
  enum class Kind { kAtom, kNot, kAnd, kOr, kImply };
  Kind kind = Kind::kAnd;
  AtomId atom = 0;
  std::vector<Cond> kids;

  bool eval(const Bits& s) const {
    switch (kind) {
      case Kind::kAtom:
        return s.test(atom);
      case Kind::kNot:
        return !kids[0].eval(s);
      case Kind::kAnd:
        for (const auto& k : kids) {
          if (!k.eval(s)) return false;
        }
        return true;
      case Kind::kOr:
        for (const auto& k : kids) {
          if (k.eval(s)) return true;
        }
        return false;
      case Kind::kImply:
        return !kids[0].eval(s) || kids[1].eval(s);
    }
    return false;
  }
};

struct TaskAction {
  pddl::GroundAction ground;
  std::vector<AtomId> pos_pre;
  std::vector<AtomId> neg_pre;
  std::vector<Cond> residual;
  std::vector<AtomId> add;
  std::vector<AtomId> del;

  bool applicable(const Bits& s) const {
    for (AtomId a : pos_pre) {
      if (!s.test(a)) return false;
    }
    for (AtomId a : neg_pre) {
      if (s.test(a)) return false;
    }
    for (const auto& c : residual) {
      if (!c.eval(s)) return false;
    }
    return true;
  }

  Bits successor(const Bits& s) const {
    Bits n = s;
    for (AtomId a : add) n.set(a);
    for (AtomId a : del) n.reset(a);
    return n;
  }
};

// A grounded problem with interned atoms and statically pruned actions.
class Task {
 public:
  explicit Task(const PlanningProblem& p) {
    for (const auto& a : p.init) intern(a);
    std::vector<pddl::GroundAction> grounded = pddl::ground(p.domain, p.universe);
    goal_ = compile(pddl::expand_quantifiers(p.goal, p.universe));
    std::vector<TaskAction> all;
    all.reserve(grounded.size());
    for (auto& g : grounded) all.push_back(compile(std::move(g)));
    init_ = Bits(atoms_.size());
    for (const auto& a : p.init) init_.set(ids_.at(a));
    prune(std::move(all));
  }

  std::size_t num_atoms() const { return atoms_.size(); }
  const pddl::Atom& atom(AtomId i) const { return atoms_[i]; }
  const std::vector<TaskAction>& actions() const { return actions_; }
  const Bits& init() const { return init_; }
  const Cond& goal() const { return goal_; }
  bool deletable(AtomId a) const { return deletable_[a]; }

  Bits encode(const pddl::State& s) const {
    Bits b(atoms_.size());
    for (const auto& a : s) {
      if (auto it = ids_.find(a); it != ids_.end()) b.set(it->second);
    }
    return b;
  }

  pddl::State decode(const Bits& b) const {
    pddl::State s;
    for (AtomId i = 0; i < atoms_.size(); ++i) {
      if (b.test(i)) s.insert(atoms_[i]);
    }
    return s;
  }

  bool is_goal(const Bits& s) const { return goal_.eval(s); }

 private:
  AtomId intern(const pddl::Atom& a) {
    auto [it, inserted] = ids_.try_emplace(a, static_cast<AtomId>(atoms_.size()));
    if (inserted) atoms_.push_back(a);
    return it->second;
  }

  Cond compile(const pddl::Formula& f) {
    using K = pddl::Formula::Kind;
    Cond c;
    switch (f.kind()) {
      case K::kAtom:
        c.kind = Cond::Kind::kAtom;
        c.atom = intern(f.atom());
        return c;
      case K::kNot:
        c.kind = Cond::Kind::kNot;
        break;
      case K::kAnd:
        c.kind = Cond::Kind::kAnd;
        break;
      case K::kOr:
        c.kind = Cond::Kind::kOr;
        break;
      case K::kImply:
        c.kind = Cond::Kind::kImply;
        break;
      case K::kForall:
        // Callers expand quantifiers first.
        throw UnboundVariable("unexpanded quantifier in ground formula");
    }
    for (const auto& k : f.children()) c.kids.push_back(compile(k));
    return c;
  }

  TaskAction compile(pddl::GroundAction g) {
    TaskAction a;
    auto take = [&](const pddl::Formula& f) {
      if (f.kind() == pddl::Formula::Kind::kAtom) {
        a.pos_pre.push_back(intern(f.atom()));
      } else if (f.is_literal()) {
        a.neg_pre.push_back(intern(f.children()[0].atom()));
      } else {
        a.residual.push_back(compile(f));
      }
    };
    if (g.pre.kind() == pddl::Formula::Kind::kAnd) {
      for (const auto& c : g.pre.children()) take(c);
    } else {
      take(g.pre);
    }
    for (const auto& x : g.add) a.add.push_back(intern(x));
    for (const auto& x : g.del) a.del.push_back(intern(x));
    a.ground = std::move(g);
    return a;
  }

  // Replaces atoms no action can change by their initial value. An empty
  // conjunction is true, an empty disjunction false.
  Cond fold(const Cond& c, const std::vector<char>& addable,
            const std::vector<char>& deletable) const {
    using K = Cond::Kind;
    auto constant = [](bool v) { return Cond{v ? K::kAnd : K::kOr, 0, {}}; };
    auto truth = [](const Cond& x) -> int {
      if (x.kind == K::kAnd && x.kids.empty()) return 1;
      if (x.kind == K::kOr && x.kids.empty()) return 0;
      return -1;
    };
    switch (c.kind) {
      case K::kAtom:
        if (init_.test(c.atom) && !deletable[c.atom]) return constant(true);
        if (!init_.test(c.atom) && !addable[c.atom]) return constant(false);
        return c;
      case K::kNot: {
        Cond k = fold(c.kids[0], addable, deletable);
        if (int t = truth(k); t >= 0) return constant(t == 0);
        return Cond{K::kNot, 0, {std::move(k)}};
      }
      case K::kAnd:
      case K::kOr: {
        const int absorbing = c.kind == K::kAnd ? 0 : 1;
        Cond out{c.kind, 0, {}};
        for (const auto& k : c.kids) {
          Cond f = fold(k, addable, deletable);
          int t = truth(f);
          if (t == absorbing) return constant(t == 1);
          if (t < 0) out.kids.push_back(std::move(f));
        }
        if (out.kids.size() == 1) return std::move(out.kids[0]);
        return out;
      }
      case K::kImply: {
        Cond a = fold(c.kids[0], addable, deletable);
        Cond b = fold(c.kids[1], addable, deletable);
        int ta = truth(a), tb = truth(b);
        if (ta == 0 || tb == 1) return constant(true);
        if (ta == 1) return b;
        if (tb == 0) return Cond{K::kNot, 0, {std::move(a)}};
        return Cond{K::kImply, 0, {std::move(a), std::move(b)}};
      }
    }
    return c;
  }

  // Simplifies residual conditions against static atoms and re-splits them
  // into literals; false when the precondition became unsatisfiable.
  bool simplify(TaskAction& a, const std::vector<char>& addable,
                const std::vector<char>& deletable) const {
    std::vector<Cond> pending = std::move(a.residual);
    a.residual.clear();
    while (!pending.empty()) {
      Cond c = fold(pending.back(), addable, deletable);
      pending.pop_back();
      if (c.kind == Cond::Kind::kAtom) {
        a.pos_pre.push_back(c.atom);
      } else if (c.kind == Cond::Kind::kNot && c.kids[0].kind == Cond::Kind::kAtom) {
        a.neg_pre.push_back(c.kids[0].atom);
      } else if (c.kind == Cond::Kind::kAnd) {
        for (auto& k : c.kids) pending.push_back(std::move(k));
      } else if (c.kind == Cond::Kind::kOr && c.kids.empty()) {
        return false;
      } else {
        a.residual.push_back(std::move(c));
      }
    }
    std::reverse(a.residual.begin(), a.residual.end());
    return true;
  }

  // Drops actions whose preconditions contradict atoms that no remaining
  // action can change, to a fixpoint. The result is specific to init_.
  void prune(std::vector<TaskAction> all) {
    const std::size_t n = atoms_.size();
    std::vector<char> alive(all.size(), 1);
    std::vector<char> addable(n, 0), deletable(n, 0);
    for (bool changed = true; changed;) {
      changed = false;
      addable.assign(n, 0);
      deletable.assign(n, 0);
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (!alive[i]) continue;
        for (AtomId x : all[i].add) addable[x] = 1;
        for (AtomId x : all[i].del) deletable[x] = 1;
      }
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (!alive[i]) continue;
        bool dead = !simplify(all[i], addable, deletable);
        for (AtomId x : all[i].pos_pre) {
          if (!init_.test(x) && !addable[x]) dead = true;
        }
        for (AtomId x : all[i].neg_pre) {
          if (init_.test(x) && !deletable[x]) dead = true;
        }
        if (dead) {
          alive[i] = 0;
          changed = true;
        }
      }
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (alive[i]) actions_.push_back(std::move(all[i]));
    }
    goal_ = fold(goal_, addable, deletable);
    deletable_.assign(n, 0);
    for (const auto& a : actions_) {
      for (AtomId x : a.del) deletable_[x] = 1;
    }
  }

  std::vector<pddl::Atom> atoms_;
  std::unordered_map<pddl::Atom, AtomId, AtomHash> ids_;
  std::vector<TaskAction> actions_;
  std::vector<char> deletable_;
  Bits init_;
  Cond goal_;
};

}  // namespace palop::plan
