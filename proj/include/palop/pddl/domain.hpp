#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "palop/error.hpp"
#include "palop/pddl/formula.hpp"

namespace palop::pddl {

// Meta-types for reified type and property names. Untyped parameters never
// range over constants of these types.
inline constexpr const char* kTypeMeta = "Type";
inline constexpr const char* kPropertyMeta = "Property";

inline bool is_meta_type(const std::string& type) {
  return type == kTypeMeta || type == kPropertyMeta;
}

enum class PredicateKind { kType, kProperty, kPlain };

struct Predicate {
  std::string name;
  std::size_t arity = 0;
  PredicateKind kind = PredicateKind::kPlain;

  bool operator==(const Predicate&) const = default;
};

struct Constant {
  std::string name;
  std::string type;

  bool operator==(const Constant&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<Parameter> params;
  Formula pre;
  std::vector<Atom> add;
  std::vector<Atom> del;

  bool operator==(const ActionSchema&) const = default;
};

// True when the constant may be bound to a parameter of the given type.
inline bool admits(const std::string& param_type, const Constant& c) {
  if (param_type.empty()) return !is_meta_type(c.type);
  return c.type == param_type;
}

struct Domain {
  std::string name;
  std::vector<std::string> requirements;
  std::vector<Predicate> predicates;
  std::vector<Constant> constants;
  std::vector<ActionSchema> schemas;

  bool operator==(const Domain&) const = default;

  const Predicate* find_predicate(const std::string& n) const {
    for (const auto& p : predicates) {
      if (p.name == n) return &p;
    }
    return nullptr;
  }
  const ActionSchema* find_schema(const std::string& n) const {
    for (const auto& s : schemas) {
      if (s.name == n) return &s;
    }
    return nullptr;
  }
  const Constant* find_constant(const std::string& n) const {
    for (const auto& c : constants) {
      if (c.name == n) return &c;
    }
    return nullptr;
  }

  std::vector<std::string> predicates_of_kind(PredicateKind kind) const {
    std::vector<std::string> out;
    for (const auto& p : predicates) {
      if (p.kind == kind) out.push_back(p.name);
    }
    return out;
  }

  // Sorts predicates, constants, schemas by name and effects as sets.
  void canonicalize() {
    auto by_name = [](const auto& a, const auto& b) { return a.name < b.name; };
    std::sort(predicates.begin(), predicates.end(), by_name);
    std::sort(constants.begin(), constants.end(), by_name);
    std::sort(schemas.begin(), schemas.end(), by_name);
    for (auto& s : schemas) {
      for (auto* effs : {&s.add, &s.del}) {
        std::sort(effs->begin(), effs->end());
        effs->erase(std::unique(effs->begin(), effs->end()), effs->end());
      }
    }
  }
};

struct Problem {
  std::string name;
  std::string domain_name;
  std::vector<Constant> objects;
  std::vector<Atom> init;
  Formula goal;

  bool operator==(const Problem&) const = default;
};

namespace detail {

inline void check_atom(const Domain& d, const Atom& a, const std::string& where,
                       const std::set<std::string>& bound) {
  const Predicate* p = d.find_predicate(a.predicate);
  if (p == nullptr) {
    throw DomainError(where + ": undeclared predicate " + a.predicate);
  }
  if (p->arity != a.args.size()) {
    throw DomainError(where + ": predicate " + a.predicate + " expects " +
                      std::to_string(p->arity) + " arguments, got " +
                      std::to_string(a.args.size()));
  }
  for (const auto& arg : a.args) {
    if (is_variable(arg)) {
      if (!bound.contains(arg)) {
        throw DomainError(where + ": unbound variable " + arg);
      }
    } else if (d.find_constant(arg) == nullptr) {
      throw DomainError(where + ": undeclared constant " + arg);
    }
  }
}

inline void check_formula(const Domain& d, const Formula& f,
                          const std::string& where,
                          std::set<std::string> bound) {
  switch (f.kind()) {
    case Formula::Kind::kAtom:
      check_atom(d, f.atom(), where, bound);
      return;
    case Formula::Kind::kForall:
      for (const auto& v : f.vars()) {
        if (!v.type.empty() && !d.find_predicate(v.type)) {
          throw DomainError(where + ": unknown type " + v.type);
        }
        bound.insert(v.name);
      }
      break;
    default:
      break;
  }
  for (const auto& c : f.children()) check_formula(d, c, where, bound);
}

inline std::string type_of_term(const Domain& d, const ActionSchema& s,
                                const std::string& term) {
  if (is_variable(term)) {
    for (const auto& p : s.params) {
      if (p.name == term) return p.type;
    }
    return {};
  }
  const Constant* c = d.find_constant(term);
  return c ? c->type : std::string{};
}

// Conservative test: can the two effect atoms denote the same ground atom
// under some type-compatible substitution?
inline bool may_unify(const Domain& d, const ActionSchema& s, const Atom& a,
                      const Atom& b) {
  if (a.predicate != b.predicate || a.args.size() != b.args.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    const std::string& x = a.args[i];
    const std::string& y = b.args[i];
    if (x == y) continue;
    if (!is_variable(x) && !is_variable(y)) return false;
    std::string tx = type_of_term(d, s, x);
    std::string ty = type_of_term(d, s, y);
    bool meta_x = is_meta_type(tx);
    bool meta_y = is_meta_type(ty);
    if (is_variable(x) && is_variable(y)) {
      if (!tx.empty() && !ty.empty() && tx != ty) return false;
      if ((tx.empty() && meta_y) || (ty.empty() && meta_x)) return false;
    } else {
      // One constant, one variable.
      const std::string& vt = is_variable(x) ? tx : ty;
      const std::string& ct = is_variable(x) ? ty : tx;
      if (vt.empty() ? is_meta_type(ct) : vt != ct) return false;
    }
  }
  return true;
}

}  // namespace detail

// Checks the structural invariants of a domain; throws DomainError.
inline void validate_domain(const Domain& d) {
  std::set<std::string> seen;
  for (const auto& p : d.predicates) {
    if (!seen.insert(p.name).second) {
      throw DomainError("duplicate predicate " + p.name);
    }
    if (p.kind != PredicateKind::kPlain && p.arity != 1) {
      throw DomainError("type/property predicate " + p.name +
                        " must have arity 1");
    }
  }
  seen.clear();
  for (const auto& c : d.constants) {
    if (!seen.insert(c.name).second) {
      throw DomainError("duplicate constant " + c.name);
    }
    const Predicate* t = d.find_predicate(c.type);
    if (t == nullptr || t->kind != PredicateKind::kType) {
      throw DomainError("constant " + c.name + " has unknown type " + c.type);
    }
  }
  seen.clear();
  for (const auto& s : d.schemas) {
    if (!seen.insert(s.name).second) {
      throw DomainError("duplicate operator " + s.name);
    }
    std::set<std::string> bound;
    for (const auto& p : s.params) {
      if (!is_variable(p.name)) {
        throw DomainError("parameter " + p.name + " of " + s.name +
                          " is not a variable");
      }
      if (!bound.insert(p.name).second) {
        throw DomainError("duplicate parameter " + p.name + " in " + s.name);
      }
      if (!p.type.empty()) {
        const Predicate* t = d.find_predicate(p.type);
        if (t == nullptr || t->kind != PredicateKind::kType) {
          throw DomainError("parameter " + p.name + " of " + s.name +
                            " has unknown type " + p.type);
        }
      }
    }
    detail::check_formula(d, s.pre, "precondition of " + s.name, bound);
    for (const auto& a : s.add) {
      detail::check_atom(d, a, "effect of " + s.name, bound);
    }
    for (const auto& a : s.del) {
      detail::check_atom(d, a, "effect of " + s.name, bound);
    }
    for (const auto& a : s.add) {
      for (const auto& b : s.del) {
        if (detail::may_unify(d, s, a, b)) {
          throw DomainError("conflicting add/delete effects on " +
                            a.predicate + " in " + s.name);
        }
      }
    }
  }
}

}  // namespace palop::pddl
