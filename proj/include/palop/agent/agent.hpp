#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "palop/error.hpp"
#include "palop/learn/extension.hpp"
#include "palop/pddl/semantics.hpp"
#include "palop/perception/anchor.hpp"
#include "palop/perception/classifier.hpp"
#include "palop/perception/dataset.hpp"
#include "palop/plan/search.hpp"
#include "palop/sim/simulator.hpp"

namespace palop::agent {

using pddl::Atom;
using pddl::State;

struct AgentConfig {
  int max_iterations = 2000;
  int views_per_observe = 8;
  int explore_step_cap = 50;      // low-level steps per Explore_for call
  int explore_budget = 2000;      // total exploration steps in a run
  double close_distance = 1.5;
  int max_navigation_failures = 3;
  learn::ExtensionOptions extension;
  perception::TrainOptions train;
  bool cold_start = false;
  plan::SearchOptions search;
  std::optional<perception::AnchorThresholds> anchor_thresholds;
};

enum class Termination { kGoalLearned, kExploredExhausted, kBudget, kNoPlan };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::kGoalLearned:
      return "goal-learned";
    case Termination::kExploredExhausted:
      return "explored-exhausted";
    case Termination::kBudget:
      return "budget";
    case Termination::kNoPlan:
      return "no-plan";
  }
  return "?";
}

struct TraceRecord {
  std::size_t step = 0;
  int iteration = 0;       // low-level iterations consumed before the action
  int cost = 0;            // low-level iterations the action consumed
  std::string action;
  std::size_t plan_length = 0;
  bool failed = false;
  std::string note;
  std::vector<std::string> added;    // observed state minus previous state
  std::vector<std::string> removed;
  std::map<std::string, std::size_t> datasets;
};

struct RunReport {
  Termination termination = Termination::kBudget;
  int iterations = 0;
  std::size_t replans = 0;
  std::vector<std::string> executed;
  std::vector<TraceRecord> trace;
  std::map<std::string, std::size_t> dataset_sizes;
  std::vector<std::string> learned;
  std::size_t failed_actions = 0;
};

inline std::string dataset_key(const std::string& t, const std::string& p) {
  return t + "/" + p;
}

inline nlohmann::json to_json(const TraceRecord& r) {
  return {{"step", r.step},
          {"iteration", r.iteration},
          {"cost", r.cost},
          {"action", r.action},
          {"plan_length", r.plan_length},
          {"failed", r.failed},
          {"note", r.note},
          {"added", r.added},
          {"removed", r.removed},
          {"datasets", r.datasets}};
}

// How a base operator maps onto low-level operations.
struct OperatorMapping {
  bool navigate = false;   // adds the closeness predicate
  bool depart = false;     // deletes it
  std::size_t target = 0;  // parameter index of the object acted upon
  std::vector<sim::Effect> effects;
};

inline std::map<std::string, OperatorMapping> operator_mappings(
    const pddl::Domain& base, const std::string& closeness) {
  std::map<std::string, OperatorMapping> out;
  for (const auto& s : base.schemas) {
    OperatorMapping m;
    auto param_index = [&](const std::string& term) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < s.params.size(); ++i) {
        if (s.params[i].name == term) return i;
      }
      return std::nullopt;
    };
    auto visit = [&](const Atom& a, bool value) {
      if (a.args.size() != 1) return;
      auto idx = param_index(a.args[0]);
      if (!idx) return;
      if (a.predicate == closeness) {
        (value ? m.navigate : m.depart) = true;
        m.target = *idx;
        return;
      }
      const pddl::Predicate* p = base.find_predicate(a.predicate);
      if (p && p->kind == pddl::PredicateKind::kProperty) {
        m.effects.push_back({a.predicate, value});
        m.target = *idx;
      }
    };
    for (const auto& a : s.add) visit(a, true);
    for (const auto& a : s.del) visit(a, false);
    out[s.name] = m;
  }
  return out;
}

inline sim::Manipulations manipulations(
    const std::map<std::string, OperatorMapping>& ops) {
  sim::Manipulations out;
  for (const auto& [name, m] : ops) {
    if (!m.effects.empty()) out[name] = m.effects;
  }
  return out;
}

// Extend, plan, then repeatedly execute the first action,
// rebuild the symbolic state from perception and bookkeeping, and replan.
class Agent {
 public:
  Agent(const pddl::Domain& base, std::vector<learn::TypePropertyPair> pairs,
        sim::World world, sim::DetectionMode mode, AgentConfig cfg = {})
      : cfg_(std::move(cfg)),
        pairs_(std::move(pairs)),
        ext_(learn::extend(base, pairs_, cfg_.extension)),
        goal_(learn::build_goal(pairs_)),
        ops_(operator_mappings(base, cfg_.extension.closeness_predicate)),
        sim_(std::move(world), mode, manipulations(ops_)),
        anchors_(cfg_.anchor_thresholds.value_or(perception::default_thresholds(
            sim_.world().config.view_noise,
            mode == sim::DetectionMode::kND
                ? sim_.world().config.detector.feature_jitter
                : 0.0))) {
    const auto& wc = sim_.world().config;
    seen_.assign(static_cast<std::size_t>(wc.width * wc.height), 0);
    blocked_.assign(seen_.size(), 0);
    for (const auto& p : pairs_) {
      perception::TrainOptions o = cfg_.train;
      models_.emplace(dataset_key(p.type_name(), p.prop_name()),
                      perception::ClassifierModel::fresh(
                          static_cast<std::size_t>(wc.feature_dim), o));
    }
    for (const auto& c : ext_.domain.constants) {
      if (c.type == pddl::kTypeMeta) {
        for (const auto& q : ext_.domain.constants) {
          if (q.type == pddl::kPropertyMeta) {
            datasets_[dataset_key(c.name, q.name)] =
                perception::TrainingSet{c.name, q.name, {}};
          }
        }
      }
    }
  }

  const pddl::Domain& domain() const { return ext_.domain; }
  const learn::ExtensionReport& extension_report() const { return ext_.report; }
  const pddl::Formula& goal() const { return goal_; }
  const State& state() const { return state_; }
  const sim::Simulator& simulator() const { return sim_; }
  const perception::AnchorStore& anchors() const { return anchors_; }
  const std::map<std::string, perception::TrainingSet>& datasets() const {
    return datasets_;
  }
  const std::map<std::string, perception::ClassifierModel>& models() const {
    return models_;
  }
  int iterations() const { return iterations_; }

  // Constants of the current planning problem: reified names plus every
  // anchored object that has not been given up on.
  std::vector<pddl::Constant> universe() const {
    std::vector<pddl::Constant> u = ext_.domain.constants;
    for (const auto& a : anchors_.anchors()) {
      if (!abandoned_.contains(a.constant)) u.push_back({a.constant, a.type});
    }
    return u;
  }

  plan::PlanningProblem problem() const {
    return {ext_.domain, universe(), state_, goal_};
  }

  RunReport run(std::ostream* trace = nullptr) {
    RunReport report;
    perceive(sim_.percept());
    state_ = observe_state(State{});
    std::size_t step = 0;
    for (;;) {
      if (iterations_ >= cfg_.max_iterations) {
        report.termination = Termination::kBudget;
        break;
      }
      plan::PlanResult pr = plan::plan(problem(), cfg_.search);
      ++report.replans;
      if (!pr.solved()) {
        report.termination = Termination::kNoPlan;
        break;
      }
      if (pr.plan.empty()) {
        report.termination = all_learned() ? Termination::kGoalLearned
                                           : Termination::kExploredExhausted;
        break;
      }
      const pddl::GroundAction& op = pr.plan.steps.front();
      if (auto failing = pddl::first_failing(state_, op.pre)) {
        throw std::logic_error("planned action " + op.name() +
                               " is not applicable: " + *failing);
      }
      TraceRecord rec;
      rec.step = step++;
      rec.iteration = iterations_;
      rec.action = op.name();
      rec.plan_length = pr.plan.size();
      State before = state_;
      State predicted = pddl::apply(state_, op);
      last_note_.clear();
      rec.failed = !execute(op, predicted);
      rec.note = last_note_;
      state_ = observe_state(predicted);
      rec.cost = iterations_ - rec.iteration;
      for (const auto& a : state_) {
        if (!before.contains(a)) rec.added.push_back(pddl::to_string(a));
      }
      for (const auto& a : before) {
        if (!state_.contains(a)) rec.removed.push_back(pddl::to_string(a));
      }
      rec.datasets = dataset_sizes();
      if (rec.failed) ++report.failed_actions;
      report.executed.push_back(rec.action);
      if (trace) *trace << to_json(rec).dump() << "\n";
      report.trace.push_back(std::move(rec));
    }
    report.iterations = iterations_;
    report.dataset_sizes = dataset_sizes();
    for (const auto& [t, p, q] : learned_) {
      report.learned.push_back(pddl::to_string(Atom{learn::names::kLearned, {t, p, q}}));
    }
    return report;
  }

  // Runs the low-level compilation of one ground action. `believed` is the
  // state predicted by the schema effects; labels are read from it.
  bool execute(const pddl::GroundAction& op, const State& believed) {
    const int start = iterations_;
    bool ok = dispatch(op, believed);
    if (iterations_ == start) ++iterations_;  // every action costs an iteration
    return ok;
  }

  // s from perception (types, closeness to the approached object, Knows), persisted bookkeeping and
  // beliefs from `believed`, and monitored atoms.
  State observe_state(const State& believed) const {
    State s;
    for (const auto& c : ext_.domain.constants) s.insert(Atom{c.type, {c.name}});
    const sim::Pose& pose = sim_.pose();
    for (const auto& a : anchors_.anchors()) {
      pddl::Constant c{a.constant, a.type};
      s.insert(Atom{a.type, {a.constant}});
      if (!abandoned_.contains(a.constant)) {
        for (auto& f : learn::object_facts(ext_.domain, c)) s.insert(std::move(f));
      }
      if (engaged_ == a.constant &&
          sim::distance(pose.cell, a.cell) <= cfg_.close_distance + 1e-9) {
        s.insert(Atom{cfg_.extension.closeness_predicate, {a.constant}});
      }
    }
    for (const auto& a : believed) {
      if (persisted(a.predicate)) s.insert(a);
    }
    for (const auto& [key, set] : datasets_) {
      if (static_cast<int>(set.size()) >= cfg_.extension.n_min) {
        s.insert(Atom{learn::names::kSufficientObs, {set.type_name, set.property_name}});
      }
    }
    for (const auto& t : exhausted_) {
      s.insert(Atom{learn::names::kExploredFor, {t}});
    }
    for (const auto& [t, p, q] : learned_) {
      s.insert(Atom{learn::names::kLearned, {t, p, q}});
    }
    return s;
  }

  std::map<std::string, std::size_t> dataset_sizes() const {
    std::map<std::string, std::size_t> out;
    for (const auto& [key, set] : datasets_) {
      if (!set.empty()) out[key] = set.size();
    }
    return out;
  }

 private:
  using Learned = std::tuple<std::string, std::string, std::string>;

  bool persisted(const std::string& predicate) const {
    namespace n = learn::names;
    if (predicate == n::kKnown || predicate == n::kViewed) return true;
    if (predicate == n::kKnows || predicate == n::kSufficientObs ||
        predicate == n::kExploredFor || predicate == n::kLearned) {
      return false;
    }
    if (predicate == cfg_.extension.closeness_predicate) return false;
    const pddl::Predicate* p = ext_.domain.find_predicate(predicate);
    return p != nullptr && p->kind != pddl::PredicateKind::kType;
  }

  bool all_learned() const {
    for (const auto& p : pairs_) {
      if (!learned_.contains({p.type_name(), p.prop_name(), p.neg_prop_name()})) {
        return false;
      }
    }
    return true;
  }

  bool budget_left() const { return iterations_ < cfg_.max_iterations; }

  std::size_t index(sim::Cell c) const {
    return static_cast<std::size_t>(c.y * sim_.world().config.width + c.x);
  }
  bool inside(sim::Cell c) const { return sim_.world().inside(c); }

  bool anchor_cell(sim::Cell c) const {
    for (const auto& a : anchors_.anchors()) {
      if (a.cell == c) return true;
    }
    return false;
  }

  bool passable(sim::Cell c) const {
    return inside(c) && !blocked_[index(c)] && !anchor_cell(c);
  }

  // The agent's own estimate of what a pose can see: cone and range, with
  // anchored objects as occluders.
  std::vector<sim::Cell> visible_cells(const sim::Pose& pose) const {
    std::vector<sim::Cell> out;
    const auto& wc = sim_.world().config;
    for (int y = 0; y < wc.height; ++y) {
      for (int x = 0; x < wc.width; ++x) {
        sim::Cell c{x, y};
        if (!sim::in_cone(pose, c, wc.view_range)) continue;
        bool occluded = false;
        for (sim::Cell b : sim::cells_between(pose.cell, c)) {
          if (anchor_cell(b) || blocked_[index(b)]) occluded = true;
        }
        if (!occluded) out.push_back(c);
      }
    }
    return out;
  }

  void perceive(const sim::Percept& p) {
    for (const auto& m : anchors_.process(p)) {
      if (m.created) new_anchors_.push_back(m.constant);
    }
    seen_[index(p.pose.cell)] = 1;
    for (sim::Cell c : visible_cells(p.pose)) seen_[index(c)] = 1;
  }

  bool step(const sim::LowLevelOp& op) {
    if (!budget_left()) return false;
    sim::StepResult r = sim_.step(op);
    ++iterations_;
    if (!r.ok && std::holds_alternative<sim::Move>(op)) {
      sim::Cell d = sim::heading_step(std::get<sim::Move>(op).direction);
      sim::Cell to{sim_.pose().cell.x + d.x, sim_.pose().cell.y + d.y};
      if (inside(to)) blocked_[index(to)] = 1;
    }
    perceive(r.percept);
    return r.ok;
  }

  bool face(sim::Cell target) {
    int want = sim::heading_towards(sim_.pose().cell, target);
    int turn = sim::normalize_heading(want - sim_.pose().heading);
    if (turn == 0) return true;
    return step(sim::Rotate{turn == 270 ? -90 : turn});
  }

  // Breadth-first path over passable cells to the nearest cell satisfying
  // `goal`; returns the first move direction, or nullopt if unreachable.
  // `at_goal` is set when the current cell already qualifies.
  template <class Goal>
  std::optional<int> first_move(Goal goal, bool& at_goal) const {
    const auto& wc = sim_.world().config;
    sim::Cell start = sim_.pose().cell;
    at_goal = goal(start);
    if (at_goal) return std::nullopt;
    std::vector<int> first(static_cast<std::size_t>(wc.width * wc.height), -1);
    std::vector<char> visited(first.size(), 0);
    std::deque<sim::Cell> queue{start};
    visited[index(start)] = 1;
    static constexpr int kDirs[] = {0, 90, 180, 270};
    while (!queue.empty()) {
      sim::Cell c = queue.front();
      queue.pop_front();
      for (int dir : kDirs) {
        sim::Cell d = sim::heading_step(dir);
        sim::Cell n{c.x + d.x, c.y + d.y};
        if (!passable(n) || visited[index(n)]) continue;
        visited[index(n)] = 1;
        first[index(n)] = c == start ? dir : first[index(c)];
        if (goal(n)) return first[index(n)];
        queue.push_back(n);
      }
    }
    return std::nullopt;
  }

  template <class Goal>
  bool walk_to(Goal goal) {
    const auto& wc = sim_.world().config;
    const int limit = 4 * wc.width * wc.height;
    for (int i = 0; i < limit; ++i) {
      bool at_goal = false;
      auto dir = first_move(goal, at_goal);
      if (at_goal) return true;
      if (!dir || !budget_left()) return false;
      step(sim::Move{*dir});
    }
    return false;
  }

  bool navigate_to(const perception::Anchor& a) {
    bool ok = walk_to([&](sim::Cell c) {
      return sim::distance(c, a.cell) <= cfg_.close_distance + 1e-9;
    });
    if (!ok) {
      if (++navigation_failures_[a.constant] >= cfg_.max_navigation_failures) {
        abandoned_.insert(a.constant);
      }
      last_note_ = "no path to " + a.constant;
      return false;
    }
    engaged_ = a.constant;
    return face(a.cell);
  }

  bool depart_from(const perception::Anchor& a) {
    engaged_.reset();
    return walk_to([&](sim::Cell c) {
      return sim::distance(c, a.cell) > cfg_.close_distance + 1e-9;
    });
  }

  // One frontier-exploration step; false when no unseen cell can be
  // brought into view from any reachable pose.
  bool explore_step() {
    auto gain = [&](sim::Cell c, int heading) {
      int n = 0;
      for (sim::Cell v : visible_cells({c, heading})) n += seen_[index(v)] ? 0 : 1;
      return n;
    };
    auto best_heading = [&](sim::Cell c) {
      int best = -1, best_gain = 0;
      for (int h : {0, 90, 180, 270}) {
        int g = gain(c, h);
        if (g > best_gain) {
          best_gain = g;
          best = h;
        }
      }
      return best;
    };
    bool at_goal = false;
    auto dir = first_move([&](sim::Cell c) { return best_heading(c) >= 0; }, at_goal);
    if (at_goal) {
      int h = best_heading(sim_.pose().cell);
      int turn = sim::normalize_heading(h - sim_.pose().heading);
      step(sim::Rotate{turn == 270 ? -90 : turn});
      return true;
    }
    if (!dir) return false;
    step(sim::Move{*dir});
    return true;
  }

  const perception::Anchor* anchor(const std::string& constant) {
    const perception::Anchor* a = anchors_.find(constant);
    if (a == nullptr) last_note_ = "unknown constant " + constant;
    return a;
  }

  bool dispatch(const pddl::GroundAction& op, const State& believed) {
    namespace n = learn::names;
    if (op.op == n::kObserve) return observe(op.args[0], op.args[1], op.args[2], believed);
    if (op.op == n::kExploreFor) return explore_for(op.args[0]);
    if (op.op == n::kTrain) return train(op.args[0], op.args[1], op.args[2]);
    auto it = ops_.find(op.op);
    if (it == ops_.end()) return true;
    const OperatorMapping& m = it->second;
    if (m.target >= op.args.size()) return true;
    const perception::Anchor* a = anchor(op.args[m.target]);
    if (a == nullptr) return false;
    const perception::Anchor target = *a;
    if (m.navigate && !navigate_to(target)) return false;
    if (!m.effects.empty()) {
      if (!face(target.cell)) return false;
      auto id = sim_.object_at(target.cell);
      if (!id) {
        last_note_ = "nothing to manipulate at the position of " + target.constant;
        return false;
      }
      if (!step(sim::Act{*id, op.op})) {
        last_note_ = op.op + " could not be performed";
        return false;
      }
    }
    if (m.depart && !depart_from(target)) return false;
    return true;
  }

  bool observe(const std::string& o, const std::string& t, const std::string& p,
               const State& believed) {
    const perception::Anchor* a = anchor(o);
    if (a == nullptr) return false;
    const sim::Cell cell = a->cell;
    if (!face(cell)) return false;
    auto id = sim_.object_at(cell);
    if (!id || !sim_.world().visible(cell)) {
      last_note_ = "no view of " + o;
      return false;
    }
    const std::string positive =
        p.starts_with(learn::names::kNegPrefix) ? p.substr(4) : p;
    bool label;
    if (believed.contains(Atom{learn::names::kKnown, {o, t, positive}})) {
      label = true;
    } else if (believed.contains(
                   Atom{learn::names::kKnown, {o, t, learn::negated(positive)}})) {
      label = false;
    } else {
      last_note_ = "no Known valuation for " + o;
      return false;
    }
    perception::TrainingSet& set = datasets_.at(dataset_key(t, p));
    for (int i = 0; i < cfg_.views_per_observe && budget_left(); ++i) {
      auto views = sim_.render_views(*id, 1);
      ++iterations_;
      perception::dataset_add(set, {std::move(views.front()), label, o,
                                    static_cast<std::size_t>(iterations_), t, p});
    }
    return true;
  }

  bool explore_for(const std::string& t) {
    new_anchors_.clear();
    auto found = [&] {
      for (const auto& c : new_anchors_) {
        const perception::Anchor* a = anchors_.find(c);
        if (a && learn::reified(a->type) == t) return true;
      }
      return false;
    };
    for (int i = 0; i < cfg_.explore_step_cap && budget_left(); ++i) {
      if (explore_steps_ >= cfg_.explore_budget) {
        exhausted_.insert(t);
        last_note_ = "exploration budget spent";
        return true;
      }
      if (!explore_step()) {
        exhausted_.insert(t);
        last_note_ = "no frontier left";
        return true;
      }
      ++explore_steps_;
      if (found()) {
        last_note_ = "found new " + t;
        return true;
      }
    }
    return true;
  }

  bool train(const std::string& t, const std::string& p, const std::string& q) {
    const auto& pos = datasets_.at(dataset_key(t, p));
    const auto& neg = datasets_.at(dataset_key(t, q));
    auto key = dataset_key(t, p);
    auto it = models_.find(key);
    if (it == models_.end()) {
      it = models_
               .emplace(key, perception::ClassifierModel::fresh(
                                 static_cast<std::size_t>(
                                     sim_.world().config.feature_dim),
                                 cfg_.train))
               .first;
    }
    try {
      it->second = perception::classifier_train(it->second, pos, neg, cfg_.cold_start);
    } catch (const ClassifierError& e) {
      last_note_ = e.what();
      return false;
    }
    learned_.insert({t, p, q});
    return true;
  }

  AgentConfig cfg_;
  std::vector<learn::TypePropertyPair> pairs_;
  learn::Extension ext_;
  pddl::Formula goal_;
  std::map<std::string, OperatorMapping> ops_;
  sim::Simulator sim_;
  perception::AnchorStore anchors_;
  State state_;
  int iterations_ = 0;
  int explore_steps_ = 0;
  std::vector<char> seen_;
  std::vector<char> blocked_;
  std::vector<std::string> new_anchors_;
  std::set<std::string> exhausted_;
  std::set<Learned> learned_;
  std::set<std::string> abandoned_;
  std::map<std::string, int> navigation_failures_;
  std::map<std::string, perception::TrainingSet> datasets_;
  std::map<std::string, perception::ClassifierModel> models_;
  std::optional<std::string> engaged_;  // object of the last approach
  std::string last_note_;
};

inline nlohmann::json to_json(const RunReport& r) {
  return {{"termination", to_string(r.termination)},
          {"iterations", r.iterations},
          {"replans", r.replans},
          {"executed", r.executed},
          {"dataset_sizes", r.dataset_sizes},
          {"learned", r.learned},
          {"failed_actions", r.failed_actions}};
}

}  // namespace palop::agent
