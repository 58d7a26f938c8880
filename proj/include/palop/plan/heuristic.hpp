#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "palop/plan/task.hpp"

namespace palop::plan {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// FF-style delete-relaxation estimate. Negative literals are free unless
// no action deletes the atom ("guard"): a true guard disables the variant,
// a false one that other actions can add restricts it to facts reachable
// without those adders. Disjunctive conditions become one relaxed variant
// per disjunct; every top-level goal conjunct gets an artificial fact
// achieved by zero-cost variants.
class RelaxedHeuristic {
 public:
  explicit RelaxedHeuristic(const Task& task) : task_(task) {
    num_facts_ = task.num_atoms();
    for (std::size_t i = 0; i < task.actions().size(); ++i) {
      const TaskAction& a = task.actions()[i];
      Term base;
      base.pos = a.pos_pre;
      for (AtomId x : a.neg_pre) {
        if (!task.deletable(x)) base.guard.push_back(x);
      }
      Terms terms{base};
      for (const auto& r : a.residual) terms = product(terms, dnf(r, true));
      for (auto& t : terms) {
        add_variant(std::move(t), static_cast<int>(i), a.add, 1);
      }
    }
    std::vector<const Cond*> conjuncts;
    const Cond& g = task.goal();
    if (g.kind == Cond::Kind::kAnd) {
      for (const auto& k : g.kids) conjuncts.push_back(&k);
    } else {
      conjuncts.push_back(&g);
    }
    for (const Cond* c : conjuncts) {
      auto fact = static_cast<AtomId>(num_facts_++);
      goal_facts_.push_back(fact);
      for (auto& t : dnf(*c, true)) add_variant(std::move(t), -1, {fact}, 0);
    }
    pre_of_.resize(num_facts_);
    for (std::size_t v = 0; v < variants_.size(); ++v) {
      for (AtomId f : variants_[v].pre) pre_of_[f].push_back(static_cast<int>(v));
    }
  }

  double operator()(const Bits& s) {
    if (task_.is_goal(s)) return 0.0;
    const double inf = kInfinity;

    // Negative preconditions on atoms that can become true but never false
    // must hold before any achiever of the atom runs, so their variants only
    // see facts reachable without those achievers.
    std::vector<AtomId> late;
    for (const auto& v : variants_) {
      if (!enabled(v, s)) continue;
      for (AtomId q : v.late) {
        if (!s.test(q)) late.push_back(q);
      }
    }
    std::sort(late.begin(), late.end());
    late.erase(std::unique(late.begin(), late.end()), late.end());
    if (late.size() > kMaxLate) late.resize(kMaxLate);
    tables_.resize(late.size() + 1);
    for (std::size_t i = 0; i < late.size(); ++i) {
      explore(s, late[i], tables_[i + 1], nullptr);
    }
    late_cost_.assign(variants_.size(), 0.0);
    late_table_.assign(variants_.size(), 0);
    for (std::size_t v = 0; v < variants_.size(); ++v) {
      for (AtomId q : variants_[v].late) {
        auto it = std::lower_bound(late.begin(), late.end(), q);
        if (it == late.end() || *it != q) continue;
        std::size_t t = static_cast<std::size_t>(it - late.begin()) + 1;
        double c = 0;
        for (AtomId f : variants_[v].pre) c += tables_[t].cost[f];
        if (c >= late_cost_[v]) {
          late_cost_[v] = c;
          late_table_[v] = t;
        }
      }
    }
    Table& main = tables_[0];
    explore(s, kNoAtom, main, &late_cost_);
    for (AtomId g : goal_facts_) {
      if (main.cost[g] == inf) return inf;
    }

    // Relaxed plan extraction over best supporters.
    std::vector<std::vector<char>> marked(tables_.size());
    std::vector<char> used_action(task_.actions().size(), 0);
    std::vector<std::pair<AtomId, std::size_t>> stack;
    for (AtomId g : goal_facts_) stack.push_back({g, 0});
    std::size_t count = 0;
    while (!stack.empty()) {
      auto [f, t] = stack.back();
      stack.pop_back();
      auto& m = marked[t];
      if (m.empty()) m.assign(num_facts_, 0);
      if (m[f]) continue;
      m[f] = 1;
      if (f < task_.num_atoms() && s.test(f)) continue;
      int v = tables_[t].supporter[f];
      if (v < 0) continue;
      const Variant& var = variants_[v];
      if (var.action >= 0 && !used_action[var.action]) {
        used_action[var.action] = 1;
        ++count;
      }
      std::size_t next = t == 0 ? late_table_[v] : t;
      for (AtomId p : var.pre) stack.push_back({p, next});
    }
    return static_cast<double>(std::max<std::size_t>(count, 1));
  }

 private:
  struct Term {
    std::vector<AtomId> pos;
    std::vector<AtomId> guard;
  };
  using Terms = std::vector<Term>;

  struct Variant {
    std::vector<AtomId> pre;
    std::vector<AtomId> guard;
    std::vector<AtomId> add;
    int action = -1;
    double cost = 0.0;
    std::vector<AtomId> late;  // guards that some other action can add
  };

  struct Table {
    std::vector<double> cost;
    std::vector<int> supporter;
  };

  static constexpr std::size_t kMaxTerms = 64;
  static constexpr std::size_t kMaxLate = 32;
  static constexpr AtomId kNoAtom = static_cast<AtomId>(-1);

  // Cheapest relaxed costs from s. Variants adding `banned` are skipped;
  // `extra` raises each variant's firing cost to at least its entry.
  void explore(const Bits& s, AtomId banned, Table& out,
               const std::vector<double>* extra) {
    const double inf = kInfinity;
    out.cost.assign(num_facts_, inf);
    out.supporter.assign(num_facts_, -1);
    remaining_.resize(variants_.size());
    sum_.assign(variants_.size(), 0.0);
    using Entry = std::pair<double, AtomId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    for (AtomId f = 0; f < task_.num_atoms(); ++f) {
      if (s.test(f)) {
        out.cost[f] = 0.0;
        queue.push({0.0, f});
      }
    }
    auto fire = [&](int v) {
      const Variant& var = variants_[v];
      double c = sum_[v];
      if (extra) c = std::max(c, (*extra)[v]);
      if (c == inf) return;
      c += var.cost;
      for (AtomId g : var.add) {
        if (c < out.cost[g]) {
          out.cost[g] = c;
          out.supporter[g] = v;
          queue.push({c, g});
        }
      }
    };
    for (std::size_t v = 0; v < variants_.size(); ++v) {
      const Variant& var = variants_[v];
      bool ok = enabled(var, s);
      if (ok && banned != kNoAtom) {
        ok = std::find(var.add.begin(), var.add.end(), banned) == var.add.end();
      }
      remaining_[v] = ok ? static_cast<int>(var.pre.size()) : -1;
      if (remaining_[v] == 0) fire(static_cast<int>(v));
    }
    while (!queue.empty()) {
      auto [c, f] = queue.top();
      queue.pop();
      if (c > out.cost[f]) continue;
      for (int v : pre_of_[f]) {
        if (remaining_[v] <= 0) continue;
        sum_[v] += c;
        if (--remaining_[v] == 0) fire(v);
      }
    }
  }

  static bool is_free(const Term& t) { return t.pos.empty() && t.guard.empty(); }

  static Terms product(const Terms& a, const Terms& b) {
    Terms out;
    for (const auto& x : a) {
      for (const auto& y : b) {
        Term t = x;
        t.pos.insert(t.pos.end(), y.pos.begin(), y.pos.end());
        t.guard.insert(t.guard.end(), y.guard.begin(), y.guard.end());
        out.push_back(std::move(t));
        // Dropping b's constraints keeps the relaxation sound.
        if (out.size() > kMaxTerms) return a.size() <= kMaxTerms ? a : Terms{Term{}};
      }
    }
    return out;
  }

  static Terms unite(Terms a, const Terms& b) {
    a.insert(a.end(), b.begin(), b.end());
    for (const auto& t : a) {
      if (is_free(t)) return Terms{Term{}};
    }
    if (a.size() > kMaxTerms) return Terms{Term{}};
    return a;
  }

  // Relaxed disjunctive normal form of a condition under a polarity.
  Terms dnf(const Cond& c, bool positive) const {
    using K = Cond::Kind;
    switch (c.kind) {
      case K::kAtom:
        if (positive) return Terms{Term{{c.atom}, {}}};
        if (task_.deletable(c.atom)) return Terms{Term{}};
        return Terms{Term{{}, {c.atom}}};
      case K::kNot:
        return dnf(c.kids[0], !positive);
      case K::kAnd:
      case K::kOr: {
        bool conj = (c.kind == K::kAnd) == positive;
        Terms acc = conj ? Terms{Term{}} : Terms{};
        for (const auto& k : c.kids) {
          acc = conj ? product(acc, dnf(k, positive)) : unite(acc, dnf(k, positive));
        }
        return acc;
      }
      case K::kImply:
        if (positive) {
          return unite(dnf(c.kids[0], false), dnf(c.kids[1], true));
        }
        return product(dnf(c.kids[0], true), dnf(c.kids[1], false));
    }
    return Terms{Term{}};
  }

  void add_variant(Term t, int action, std::vector<AtomId> add, double cost) {
    std::sort(t.pos.begin(), t.pos.end());
    t.pos.erase(std::unique(t.pos.begin(), t.pos.end()), t.pos.end());
    std::vector<AtomId> late;
    for (AtomId q : t.guard) {
      for (std::size_t a = 0; a < task_.actions().size(); ++a) {
        if (static_cast<int>(a) == action) continue;
        const auto& adds = task_.actions()[a].add;
        if (std::find(adds.begin(), adds.end(), q) != adds.end()) {
          late.push_back(q);
          break;
        }
      }
    }
    variants_.push_back({std::move(t.pos), std::move(t.guard), std::move(add),
                         action, cost, std::move(late)});
  }

  static bool enabled(const Variant& v, const Bits& s) {
    for (AtomId g : v.guard) {
      if (s.test(g)) return false;
    }
    return true;
  }

  const Task& task_;
  std::size_t num_facts_ = 0;
  std::vector<Variant> variants_;
  std::vector<std::vector<int>> pre_of_;
  std::vector<AtomId> goal_facts_;
  std::vector<Table> tables_;
  std::vector<double> late_cost_;
  std::vector<std::size_t> late_table_;
  std::vector<int> remaining_;
  std::vector<double> sum_;
};

// h of s under the goal and actions of the problem.
inline double h_relaxed(PlanningProblem problem, const pddl::State& s) {
  problem.init = s;
  Task task(problem);
  RelaxedHeuristic h(task);
  return h(task.init());
}

}  // namespace palop::plan
