#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "palop/error.hpp"
#include "palop/pddl/domain.hpp"
#include "palop/pddl/printer.hpp"

namespace palop::learn {

using pddl::Atom;
using pddl::Formula;

// Names of everything the learning extension introduces.
namespace names {
inline constexpr const char* kKnown = "Known";
inline constexpr const char* kKnows = "Knows";
inline constexpr const char* kViewed = "Viewed";
inline constexpr const char* kSufficientObs = "Sufficient_Obs";
inline constexpr const char* kExploredFor = "Explored_for";
inline constexpr const char* kLearned = "Learned";
inline constexpr const char* kObserve = "Observe";
inline constexpr const char* kExploreFor = "Explore_for";
inline constexpr const char* kTrain = "Train";
inline constexpr const char* kNegPrefix = "not_";
}  // namespace names

// The constant that names a predicate of the base domain.
inline std::string reified(const std::string& predicate) {
  std::string out = predicate;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string negated(const std::string& prop_name) {
  return names::kNegPrefix + prop_name;
}

// A learnable (type, property) pair, identified by base-domain predicate names.
struct TypePropertyPair {
  std::string type_predicate;
  std::string property_predicate;

  std::string type_name() const { return reified(type_predicate); }
  std::string prop_name() const { return reified(property_predicate); }
  std::string neg_prop_name() const { return negated(prop_name()); }

  auto operator<=>(const TypePropertyPair&) const = default;
  bool operator==(const TypePropertyPair&) const = default;
};

struct ExtensionOptions {
  std::string closeness_predicate = "Close_To";
  int n_min = 50;
};

struct SchemaModification {
  std::vector<Atom> added_add;
  std::vector<Atom> added_del;

  bool operator==(const SchemaModification&) const = default;
};

struct ExtensionReport {
  std::vector<pddl::Constant> added_constants;
  std::vector<std::string> added_predicates;
  std::vector<std::string> added_schemas;
  std::map<std::string, SchemaModification> modified_schemas;
  std::vector<TypePropertyPair> pairs;
  std::string closeness_predicate;
  int n_min = 0;
};

namespace detail {

inline void declare(pddl::Domain& d, std::vector<std::string>* log,
                    const std::string& name, std::size_t arity,
                    pddl::PredicateKind kind = pddl::PredicateKind::kPlain) {
  if (d.find_predicate(name)) {
    throw ExtensionError("predicate " + name + " already declared");
  }
  d.predicates.push_back({name, arity, kind});
  if (log) log->push_back(name);
}

inline Atom atom(std::string pred, std::vector<std::string> args) {
  return Atom{std::move(pred), std::move(args)};
}

inline Formula lit(std::string pred, std::vector<std::string> args) {
  return Formula::make_atom(atom(std::move(pred), std::move(args)));
}

inline std::string type_of(const pddl::Domain& d, const pddl::ActionSchema& s,
                           const std::string& term) {
  if (pddl::is_variable(term)) {
    for (const auto& p : s.params) {
      if (p.name == term) return p.type;
    }
    return {};
  }
  const pddl::Constant* c = d.find_constant(term);
  return c ? c->type : std::string{};
}

inline bool is_extended(const pddl::Domain& d) {
  return d.find_predicate(pddl::kTypeMeta) ||
         d.find_predicate(pddl::kPropertyMeta) ||
         d.find_predicate(names::kKnown) || d.find_schema(names::kObserve) ||
         d.find_schema(names::kExploreFor) || d.find_schema(names::kTrain);
}

}  // namespace detail

// Adds a constant of meta-type Type per type predicate and two constants of
// meta-type Property per property predicate ("p" and "not_p").
inline pddl::Domain reify_names(pddl::Domain d, ExtensionReport* report = nullptr) {
  std::vector<pddl::Constant> added;
  for (const auto& p : d.predicates) {
    if (p.kind == pddl::PredicateKind::kType) {
      added.push_back({reified(p.name), pddl::kTypeMeta});
    } else if (p.kind == pddl::PredicateKind::kProperty) {
      added.push_back({reified(p.name), pddl::kPropertyMeta});
      added.push_back({negated(reified(p.name)), pddl::kPropertyMeta});
    }
  }
  detail::declare(d, report ? &report->added_predicates : nullptr,
                  pddl::kTypeMeta, 1, pddl::PredicateKind::kType);
  detail::declare(d, report ? &report->added_predicates : nullptr,
                  pddl::kPropertyMeta, 1, pddl::PredicateKind::kType);
  for (const auto& c : added) {
    if (d.find_constant(c.name)) {
      throw ExtensionError("reified name " + c.name +
                           " collides with an existing constant");
    }
    d.constants.push_back(c);
    if (report) report->added_constants.push_back(c);
  }
  d.canonicalize();
  return d;
}

// Known(x,"t","p") joins the effects of every action that makes p(x) true,
// Known(x,"t","not_p") those that make it false, each removed by the other.
inline pddl::Domain augment_known_effects(pddl::Domain d,
                                          ExtensionReport* report = nullptr) {
  if (!d.find_predicate(pddl::kPropertyMeta)) {
    throw ExtensionError("augment_known_effects requires reified names");
  }
  if (!d.find_predicate(names::kKnown)) {
    detail::declare(d, report ? &report->added_predicates : nullptr,
                    names::kKnown, 3);
  }
  for (auto& s : d.schemas) {
    SchemaModification mod;
    auto attribute = [&](const Atom& eff, bool made_true) {
      const pddl::Predicate* p = d.find_predicate(eff.predicate);
      if (p == nullptr || p->kind != pddl::PredicateKind::kProperty) return;
      const std::string& obj = eff.args[0];
      std::string type = detail::type_of(d, s, obj);
      if (type.empty()) {
        throw ExtensionError("cannot attribute effect on " + eff.predicate +
                             " in " + s.name + " to an object type: " + obj +
                             " is untyped");
      }
      std::string pos = reified(eff.predicate);
      std::string neg = negated(pos);
      Atom known_pos = detail::atom(names::kKnown, {obj, reified(type), pos});
      Atom known_neg = detail::atom(names::kKnown, {obj, reified(type), neg});
      if (made_true) {
        mod.added_add.push_back(known_pos);
        mod.added_del.push_back(known_neg);
      } else {
        mod.added_add.push_back(known_neg);
        mod.added_del.push_back(known_pos);
      }
    };
    for (const auto& a : s.add) attribute(a, true);
    for (const auto& a : s.del) attribute(a, false);
    if (mod.added_add.empty() && mod.added_del.empty()) continue;
    s.add.insert(s.add.end(), mod.added_add.begin(), mod.added_add.end());
    s.del.insert(s.del.end(), mod.added_del.begin(), mod.added_del.end());
    if (report) report->modified_schemas[s.name] = mod;
  }
  d.canonicalize();
  pddl::validate_domain(d);
  return d;
}

// Checks that the base domain can flip the property both ways for objects
// of the type.
inline void check_pair(const pddl::Domain& d, const TypePropertyPair& pair) {
  const pddl::Predicate* t = d.find_predicate(pair.type_predicate);
  if (t == nullptr || t->kind != pddl::PredicateKind::kType) {
    throw ExtensionError("unknown type predicate " + pair.type_predicate);
  }
  const pddl::Predicate* p = d.find_predicate(pair.property_predicate);
  if (p == nullptr || p->kind != pddl::PredicateKind::kProperty) {
    throw ExtensionError("unknown property predicate " + pair.property_predicate);
  }
  bool makes_true = false;
  bool makes_false = false;
  for (const auto& s : d.schemas) {
    for (const auto& a : s.add) {
      if (a.predicate == pair.property_predicate &&
          detail::type_of(d, s, a.args[0]) == pair.type_predicate) {
        makes_true = true;
      }
    }
    for (const auto& a : s.del) {
      if (a.predicate == pair.property_predicate &&
          detail::type_of(d, s, a.args[0]) == pair.type_predicate) {
        makes_false = true;
      }
    }
  }
  if (!makes_true || !makes_false) {
    throw ExtensionError("no operator makes " + pair.property_predicate +
                         (makes_true ? " false" : " true") + " for objects of type " +
                         pair.type_predicate);
  }
}

// Observe, Explore_for and Train with their predicates. The schemas do not
// depend on the pairs; the pairs are only validated here.
inline pddl::Domain add_learning_schemas(
    pddl::Domain d, const std::vector<TypePropertyPair>& pairs,
    const ExtensionOptions& opts = {}, ExtensionReport* report = nullptr) {
  if (opts.n_min <= 0) throw ExtensionError("n_min must be positive");
  const pddl::Predicate* close = d.find_predicate(opts.closeness_predicate);
  if (close == nullptr || close->arity != 1) {
    throw ExtensionError("base domain lacks the closeness predicate " +
                         opts.closeness_predicate);
  }
  if (!d.find_predicate(pddl::kTypeMeta)) {
    throw ExtensionError("add_learning_schemas requires reified names");
  }
  for (const auto& pair : pairs) check_pair(d, pair);
  auto* log = report ? &report->added_predicates : nullptr;
  if (!d.find_predicate(names::kKnown)) detail::declare(d, log, names::kKnown, 3);
  detail::declare(d, log, names::kKnows, 3);
  detail::declare(d, log, names::kViewed, 3);
  detail::declare(d, log, names::kSufficientObs, 2);
  detail::declare(d, log, names::kExploredFor, 1);
  detail::declare(d, log, names::kLearned, 3);

  using pddl::ActionSchema;
  using pddl::Parameter;
  const std::string type_meta = pddl::kTypeMeta;
  const std::string prop_meta = pddl::kPropertyMeta;

  ActionSchema observe;
  observe.name = names::kObserve;
  observe.params = {Parameter{"?o", ""}, Parameter{"?t", type_meta},
                    Parameter{"?p", prop_meta}};
  observe.pre = Formula::make_and(
      {Formula::make_not(detail::lit(names::kViewed, {"?o", "?t", "?p"})),
       detail::lit(opts.closeness_predicate, {"?o"}),
       detail::lit(names::kKnown, {"?o", "?t", "?p"})});
  observe.add = {detail::atom(names::kSufficientObs, {"?t", "?p"}),
                 detail::atom(names::kViewed, {"?o", "?t", "?p"})};

  ActionSchema explore;
  explore.name = names::kExploreFor;
  explore.params = {Parameter{"?t", type_meta}, Parameter{"?p", prop_meta}};
  explore.pre = Formula::make_and(
      {Formula::make_forall(
           {Parameter{"?x", ""}},
           Formula::make_imply(detail::lit(names::kKnows, {"?x", "?t", "?p"}),
                               detail::lit(names::kViewed, {"?x", "?t", "?p"}))),
       Formula::make_not(detail::lit(names::kSufficientObs, {"?t", "?p"}))});
  explore.add = {detail::atom(names::kExploredFor, {"?t"})};

  ActionSchema train;
  train.name = names::kTrain;
  train.params = {Parameter{"?t", type_meta}, Parameter{"?p", prop_meta},
                  Parameter{"?q", prop_meta}};
  train.pre = Formula::make_and(
      {detail::lit(names::kSufficientObs, {"?t", "?p"}),
       detail::lit(names::kSufficientObs, {"?t", "?q"})});
  train.add = {detail::atom(names::kLearned, {"?t", "?p", "?q"})};

  for (auto* s : {&observe, &explore, &train}) {
    if (d.find_schema(s->name)) {
      throw ExtensionError("operator " + s->name + " already exists");
    }
    d.schemas.push_back(*s);
    if (report) report->added_schemas.push_back(s->name);
  }
  d.canonicalize();
  pddl::validate_domain(d);
  return d;
}

// ⋀ over pairs of Learned("t","p","not_p") ∨ Explored_for("t"). A single
// pair yields the bare disjunction.
inline Formula build_goal(const std::vector<TypePropertyPair>& pairs) {
  if (pairs.empty()) throw ExtensionError("learning goal needs at least one pair");
  std::vector<Formula> parts;
  for (const auto& p : pairs) {
    parts.push_back(Formula::make_or(
        {detail::lit(names::kLearned,
                     {p.type_name(), p.prop_name(), p.neg_prop_name()}),
         detail::lit(names::kExploredFor, {p.type_name()})}));
  }
  if (parts.size() == 1) return parts.front();
  return Formula::make_and(std::move(parts));
}

struct Extension {
  pddl::Domain domain;
  ExtensionReport report;
};

inline Extension extend(const pddl::Domain& base,
                        const std::vector<TypePropertyPair>& pairs,
                        const ExtensionOptions& opts = {}) {
  if (detail::is_extended(base)) {
    throw ExtensionError("domain " + base.name + " is already extended");
  }
  Extension ext;
  ext.report.pairs = pairs;
  ext.report.closeness_predicate = opts.closeness_predicate;
  ext.report.n_min = opts.n_min;
  for (const auto& pair : pairs) check_pair(base, pair);
  pddl::Domain d = reify_names(base, &ext.report);
  d = augment_known_effects(std::move(d), &ext.report);
  ext.domain = add_learning_schemas(std::move(d), pairs, opts, &ext.report);
  return ext;
}

// Atoms the agent asserts for a discovered object: its type atom and
// Knows(o,"t",p) for every property name p.
inline std::vector<Atom> object_facts(const pddl::Domain& extended,
                                      const pddl::Constant& object) {
  std::vector<Atom> out;
  out.push_back(detail::atom(object.type, {object.name}));
  for (const auto& c : extended.constants) {
    if (c.type == pddl::kPropertyMeta) {
      out.push_back(detail::atom(names::kKnows,
                                 {object.name, reified(object.type), c.name}));
    }
  }
  return out;
}

// ---- serialization -------------------------------------------------------

inline nlohmann::json to_json(const ExtensionReport& r) {
  using nlohmann::json;
  json j;
  j["added_constants"] = json::array();
  for (const auto& c : r.added_constants) {
    j["added_constants"].push_back({{"name", c.name}, {"type", c.type}});
  }
  j["added_predicates"] = r.added_predicates;
  j["added_schemas"] = r.added_schemas;
  j["modified_schemas"] = json::object();
  for (const auto& [name, mod] : r.modified_schemas) {
    json m;
    m["added_add"] = json::array();
    m["added_del"] = json::array();
    for (const auto& a : mod.added_add) m["added_add"].push_back(pddl::to_string(a));
    for (const auto& a : mod.added_del) m["added_del"].push_back(pddl::to_string(a));
    j["modified_schemas"][name] = m;
  }
  j["pairs"] = json::array();
  for (const auto& p : r.pairs) {
    j["pairs"].push_back({{"type", p.type_predicate},
                          {"property", p.property_predicate},
                          {"type_name", p.type_name()},
                          {"prop_name", p.prop_name()},
                          {"neg_prop_name", p.neg_prop_name()}});
  }
  j["closeness_predicate"] = r.closeness_predicate;
  j["n_min"] = r.n_min;
  return j;
}

inline std::vector<TypePropertyPair> pairs_from_json(const nlohmann::json& j) {
  std::vector<TypePropertyPair> out;
  const auto& arr = j.is_array() ? j : j.at("pairs");
  for (const auto& p : arr) {
    out.push_back({p.at("type").get<std::string>(),
                   p.at("property").get<std::string>()});
  }
  return out;
}

inline ExtensionOptions options_from_json(const nlohmann::json& j) {
  ExtensionOptions o;
  if (j.is_object()) {
    o.n_min = j.value("n_min", o.n_min);
    o.closeness_predicate = j.value("closeness_predicate", o.closeness_predicate);
  }
  return o;
}

}  // namespace palop::learn
