#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "palop/pddl/domain.hpp"

namespace palop::pddl {

inline std::string to_string(const Atom& a) {
  std::string out = "(" + a.predicate;
  for (const auto& arg : a.args) out += " " + arg;
  return out + ")";
}

inline std::string to_string(const Parameter& p) {
  return p.name + " - " + (p.type.empty() ? std::string("object") : p.type);
}

inline std::string to_string(const Formula& f) {
  using K = Formula::Kind;
  auto join = [](const char* head, const std::vector<Formula>& parts) {
    std::string out = std::string("(") + head;
    for (const auto& p : parts) out += " " + to_string(p);
    return out + ")";
  };
  switch (f.kind()) {
    case K::kAtom:
      return to_string(f.atom());
    case K::kNot:
      return "(not " + to_string(f.children()[0]) + ")";
    case K::kAnd:
      return join("and", f.children());
    case K::kOr:
      return join("or", f.children());
    case K::kImply:
      return "(imply " + to_string(f.children()[0]) + " " +
             to_string(f.children()[1]) + ")";
    case K::kForall: {
      std::string vars;
      for (const auto& v : f.vars()) {
        if (!vars.empty()) vars += " ";
        vars += to_string(v);
      }
      return "(forall (" + vars + ") " + to_string(f.children()[0]) + ")";
    }
  }
  return {};
}

namespace detail {

inline void print_typed(std::ostringstream& os, const char* section,
                        const std::vector<Constant>& cs) {
  if (cs.empty()) return;
  os << "  (" << section;
  for (const auto& c : cs) os << "\n    " << c.name << " - " << c.type;
  os << ")\n";
}

inline void print_names(std::ostringstream& os, const char* section,
                        const std::vector<std::string>& names) {
  if (names.empty()) return;
  os << "  (" << section;
  for (const auto& n : names) os << " " << n;
  os << ")\n";
}

}  // namespace detail

// Canonical text: sections in a fixed order, every list sorted by name.
// Parsing the output yields a structurally equal domain.
inline std::string print_domain(Domain d) {
  d.canonicalize();
  std::ostringstream os;
  os << "(define (domain " << d.name << ")\n";
  if (!d.requirements.empty()) {
    os << "  (:requirements";
    for (const auto& r : d.requirements) os << " " << r;
    os << ")\n";
  }
  detail::print_names(os, ":types", d.predicates_of_kind(PredicateKind::kType));
  detail::print_names(os, ":properties",
                      d.predicates_of_kind(PredicateKind::kProperty));
  bool any_plain = false;
  for (const auto& p : d.predicates) {
    if (p.kind != PredicateKind::kPlain) continue;
    os << (any_plain ? "\n    " : "  (:predicates\n    ") << "(" << p.name;
    for (std::size_t i = 0; i < p.arity; ++i) os << " ?x" << i;
    os << ")";
    any_plain = true;
  }
  if (any_plain) os << ")\n";
  detail::print_typed(os, ":constants", d.constants);
  for (const auto& s : d.schemas) {
    os << "  (:action " << s.name << "\n    :parameters (";
    for (std::size_t i = 0; i < s.params.size(); ++i) {
      os << (i ? " " : "") << to_string(s.params[i]);
    }
    os << ")\n    :precondition " << to_string(s.pre) << "\n    :effect (and";
    for (const auto& a : s.add) os << " " << to_string(a);
    for (const auto& a : s.del) os << " (not " << to_string(a) << ")";
    os << "))\n";
  }
  os << ")\n";
  return os.str();
}

inline std::string print_problem(const Problem& p) {
  std::ostringstream os;
  os << "(define (problem " << p.name << ")\n";
  os << "  (:domain " << p.domain_name << ")\n";
  detail::print_typed(os, ":objects", p.objects);
  if (!p.init.empty()) {
    os << "  (:init";
    for (const auto& a : p.init) os << "\n    " << to_string(a);
    os << ")\n";
  }
  os << "  (:goal " << to_string(p.goal) << "))\n";
  return os.str();
}

}  // namespace palop::pddl
