#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "palop/error.hpp"
#include "palop/pddl/domain.hpp"
#include "palop/pddl/sexpr.hpp"

namespace palop::pddl {

namespace detail {

struct Scope {
  const Domain* domain = nullptr;
  const std::vector<Constant>* extra_constants = nullptr;
  std::set<std::string> bound;

  bool has_constant(const std::string& n) const {
    if (domain->find_constant(n)) return true;
    if (extra_constants) {
      for (const auto& c : *extra_constants) {
        if (c.name == n) return true;
      }
    }
    return false;
  }
};

inline const std::string& expect_token(const SExpr& e, const char* what) {
  if (e.is_list) e.fail(std::string("expected ") + what);
  return e.token;
}

inline const SExpr& expect_list(const SExpr& e, const char* what) {
  if (!e.is_list) e.fail(std::string("expected ") + what);
  return e;
}

// Reads `a b - T c` style lists. Items without a trailing type get "".
inline std::vector<std::pair<std::string, std::string>> read_typed_list(
    const std::vector<SExpr>& items, std::size_t from,
    std::vector<const SExpr*>* positions = nullptr) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<const SExpr*> pending;
  for (std::size_t i = from; i < items.size(); ++i) {
    const SExpr& it = items[i];
    if (it.is_token("-")) {
      if (i + 1 >= items.size()) it.fail("missing type after '-'");
      std::string type = expect_token(items[i + 1], "type name");
      if (type == "object") type.clear();
      if (pending.empty()) it.fail("type without preceding names");
      for (const SExpr* p : pending) {
        out.emplace_back(p->token, type);
        if (positions) positions->push_back(p);
      }
      pending.clear();
      ++i;
      continue;
    }
    expect_token(it, "name");
    pending.push_back(&it);
  }
  for (const SExpr* p : pending) {
    out.emplace_back(p->token, std::string{});
    if (positions) positions->push_back(p);
  }
  return out;
}

inline Atom read_atom(const SExpr& e, const Scope& scope) {
  expect_list(e, "atom");
  if (e.items.empty()) e.fail("empty atom");
  Atom a;
  a.predicate = expect_token(e.items[0], "predicate name");
  const Predicate* p = scope.domain->find_predicate(a.predicate);
  if (p == nullptr) e.items[0].fail("undeclared predicate " + a.predicate);
  for (std::size_t i = 1; i < e.items.size(); ++i) {
    const std::string& arg = expect_token(e.items[i], "term");
    if (is_variable(arg)) {
      if (!scope.bound.contains(arg)) {
        e.items[i].fail("unbound variable " + arg);
      }
    } else if (!scope.has_constant(arg)) {
      e.items[i].fail("undeclared constant " + arg);
    }
    a.args.push_back(arg);
  }
  if (a.args.size() != p->arity) {
    e.fail("predicate " + a.predicate + " expects " +
           std::to_string(p->arity) + " arguments, got " +
           std::to_string(a.args.size()));
  }
  return a;
}

inline void check_type_name(const Domain& d, const SExpr& at,
                            const std::string& type) {
  if (type.empty()) return;
  const Predicate* t = d.find_predicate(type);
  if (t == nullptr || t->kind != PredicateKind::kType) {
    at.fail("unknown type " + type);
  }
}

inline Formula read_formula(const SExpr& e, Scope scope) {
  expect_list(e, "formula");
  if (e.items.empty()) e.fail("empty formula");
  const SExpr& head = e.items[0];
  if (head.is_token("and") || head.is_token("or")) {
    std::vector<Formula> parts;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      parts.push_back(read_formula(e.items[i], scope));
    }
    return head.is_token("and") ? Formula::make_and(std::move(parts))
                                : Formula::make_or(std::move(parts));
  }
  if (head.is_token("not")) {
    if (e.items.size() != 2) e.fail("'not' takes one argument");
    return Formula::make_not(read_formula(e.items[1], scope));
  }
  if (head.is_token("imply")) {
    if (e.items.size() != 3) e.fail("'imply' takes two arguments");
    return Formula::make_imply(read_formula(e.items[1], scope),
                               read_formula(e.items[2], scope));
  }
  if (head.is_token("forall")) {
    if (e.items.size() != 3) e.fail("'forall' takes a variable list and a body");
    const SExpr& vl = expect_list(e.items[1], "variable list");
    std::vector<const SExpr*> pos;
    auto typed = read_typed_list(vl.items, 0, &pos);
    std::vector<Parameter> vars;
    for (std::size_t i = 0; i < typed.size(); ++i) {
      if (!is_variable(typed[i].first)) pos[i]->fail("expected variable");
      check_type_name(*scope.domain, *pos[i], typed[i].second);
      vars.push_back({typed[i].first, typed[i].second});
      scope.bound.insert(typed[i].first);
    }
    return Formula::make_forall(std::move(vars),
                                read_formula(e.items[2], scope));
  }
  if (head.is_token("exists") || head.is_token("when") ||
      head.is_token("=")) {
    head.fail("unsupported construct " + head.token);
  }
  return Formula::make_atom(read_atom(e, scope));
}

inline void read_effect(const SExpr& e, const Scope& scope,
                        std::vector<Atom>& add, std::vector<Atom>& del) {
  expect_list(e, "effect");
  if (e.items.empty()) e.fail("empty effect");
  const SExpr& head = e.items[0];
  if (head.is_token("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      read_effect(e.items[i], scope, add, del);
    }
    return;
  }
  if (head.is_token("not")) {
    if (e.items.size() != 2) e.fail("'not' takes one argument");
    del.push_back(read_atom(e.items[1], scope));
    return;
  }
  if (head.is_token("forall") || head.is_token("when") ||
      head.is_token("increase")) {
    head.fail("unsupported effect " + head.token);
  }
  add.push_back(read_atom(e, scope));
}

inline Formula flatten_top_and(Formula f) {
  if (f.kind() != Formula::Kind::kAnd) return Formula::make_and({std::move(f)});
  std::vector<Formula> flat;
  for (auto& c : f.children()) {
    if (c.kind() == Formula::Kind::kAnd) {
      Formula inner = flatten_top_and(c);
      for (auto& g : inner.children()) flat.push_back(g);
    } else {
      flat.push_back(c);
    }
  }
  return Formula::make_and(std::move(flat));
}

inline ActionSchema read_action(const SExpr& e, const Domain& d) {
  if (e.items.size() < 2) e.fail("action without name");
  ActionSchema s;
  s.name = expect_token(e.items[1], "action name");
  s.pre = Formula::truth();
  Scope scope{&d, nullptr, {}};
  for (std::size_t i = 2; i < e.items.size(); i += 2) {
    const SExpr& key = e.items[i];
    const std::string& k = expect_token(key, "action keyword");
    if (i + 1 >= e.items.size()) key.fail("missing value for " + k);
    const SExpr& val = e.items[i + 1];
    if (k == ":parameters") {
      expect_list(val, "parameter list");
      std::vector<const SExpr*> pos;
      auto typed = read_typed_list(val.items, 0, &pos);
      for (std::size_t j = 0; j < typed.size(); ++j) {
        if (!is_variable(typed[j].first)) pos[j]->fail("expected variable");
        if (!scope.bound.insert(typed[j].first).second) {
          pos[j]->fail("duplicate parameter " + typed[j].first);
        }
        check_type_name(d, *pos[j], typed[j].second);
        s.params.push_back({typed[j].first, typed[j].second});
      }
    } else if (k == ":precondition") {
      if (val.is_list && val.items.empty()) {
        s.pre = Formula::truth();
      } else {
        s.pre = flatten_top_and(read_formula(val, scope));
      }
    } else if (k == ":effect") {
      if (!(val.is_list && val.items.empty())) {
        read_effect(val, scope, s.add, s.del);
      }
    } else {
      key.fail("unknown action keyword " + k);
    }
  }
  return s;
}

inline std::string read_define_header(const SExpr& root, const char* kind) {
  if (!root.is_list || root.items.size() < 2 ||
      !root.items[0].is_token("define")) {
    root.fail("expected (define ...)");
  }
  const SExpr& hdr = root.items[1];
  if (!hdr.is_list || hdr.items.size() != 2 || !hdr.items[0].is_token(kind)) {
    hdr.fail(std::string("expected (") + kind + " <name>)");
  }
  return expect_token(hdr.items[1], "name");
}

inline SExpr single_root(std::string_view text) {
  std::vector<SExpr> roots = SExprReader(text).read_all();
  if (roots.size() != 1) {
    if (roots.empty()) throw ParseError(1, 1, "empty input");
    roots[1].fail("trailing input after (define ...)");
  }
  return std::move(roots[0]);
}

}  // namespace detail

// Parses the supported PDDL subset: STRIPS with unary type and property
// predicates, negative preconditions and universally quantified
// implications. Throws ParseError carrying line/column.
inline Domain parse_domain(std::string_view text) {
  const SExpr root = detail::single_root(text);
  Domain d;
  d.name = detail::read_define_header(root, "domain");

  // Declarations first so that actions may appear anywhere.
  std::vector<const SExpr*> actions;
  std::vector<const SExpr*> constants;
  auto declare = [&](const SExpr& at, Predicate p) {
    if (d.find_predicate(p.name)) at.fail("duplicate predicate " + p.name);
    d.predicates.push_back(std::move(p));
  };
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const SExpr& sec = detail::expect_list(root.items[i], "domain section");
    if (sec.items.empty()) sec.fail("empty section");
    const std::string& key = detail::expect_token(sec.items[0], "section key");
    if (key == ":requirements") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        d.requirements.push_back(
            detail::expect_token(sec.items[j], "requirement"));
      }
    } else if (key == ":types" || key == ":properties") {
      PredicateKind kind =
          key == ":types" ? PredicateKind::kType : PredicateKind::kProperty;
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& t = sec.items[j];
        if (t.is_token("-")) t.fail("type hierarchies are not supported");
        declare(t, {detail::expect_token(t, "name"), 1, kind});
      }
    } else if (key == ":predicates") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& p = detail::expect_list(sec.items[j], "predicate");
        if (p.items.empty()) p.fail("empty predicate declaration");
        auto params = detail::read_typed_list(p.items, 1);
        for (const auto& [v, t] : params) {
          if (!is_variable(v)) p.fail("expected variable in predicate " +
                                      p.items[0].token);
        }
        declare(p, {detail::expect_token(p.items[0], "predicate name"),
                    params.size(), PredicateKind::kPlain});
      }
    } else if (key == ":constants") {
      constants.push_back(&sec);
    } else if (key == ":action") {
      actions.push_back(&sec);
    } else {
      sec.items[0].fail("unsupported section " + key);
    }
  }
  for (const SExpr* sec : constants) {
    std::vector<const SExpr*> pos;
    auto typed = detail::read_typed_list(sec->items, 1, &pos);
    for (std::size_t j = 0; j < typed.size(); ++j) {
      if (typed[j].second.empty()) {
        pos[j]->fail("constant " + typed[j].first + " has no type");
      }
      detail::check_type_name(d, *pos[j], typed[j].second);
      if (d.find_constant(typed[j].first)) {
        pos[j]->fail("duplicate constant " + typed[j].first);
      }
      d.constants.push_back({typed[j].first, typed[j].second});
    }
  }
  for (const SExpr* a : actions) {
    ActionSchema s = detail::read_action(*a, d);
    if (d.find_schema(s.name)) a->items[1].fail("duplicate operator " + s.name);
    d.schemas.push_back(std::move(s));
  }
  try {
    validate_domain(d);
  } catch (const DomainError& e) {
    root.fail(e.what());
  }
  d.canonicalize();
  return d;
}

inline Problem parse_problem(std::string_view text, const Domain& d) {
  const SExpr root = detail::single_root(text);
  Problem p;
  p.name = detail::read_define_header(root, "problem");
  p.goal = Formula::truth();
  const SExpr* init = nullptr;
  const SExpr* goal = nullptr;
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const SExpr& sec = detail::expect_list(root.items[i], "problem section");
    if (sec.items.empty()) sec.fail("empty section");
    const std::string& key = detail::expect_token(sec.items[0], "section key");
    if (key == ":domain") {
      if (sec.items.size() != 2) sec.fail("expected (:domain <name>)");
      p.domain_name = detail::expect_token(sec.items[1], "domain name");
      if (p.domain_name != d.name) {
        sec.items[1].fail("problem is for domain " + p.domain_name +
                          ", not " + d.name);
      }
    } else if (key == ":objects") {
      std::vector<const SExpr*> pos;
      auto typed = detail::read_typed_list(sec.items, 1, &pos);
      for (std::size_t j = 0; j < typed.size(); ++j) {
        if (typed[j].second.empty()) {
          pos[j]->fail("object " + typed[j].first + " has no type");
        }
        detail::check_type_name(d, *pos[j], typed[j].second);
        if (d.find_constant(typed[j].first)) {
          pos[j]->fail("object " + typed[j].first +
                       " duplicates a domain constant");
        }
        for (const auto& o : p.objects) {
          if (o.name == typed[j].first) {
            pos[j]->fail("duplicate object " + o.name);
          }
        }
        p.objects.push_back({typed[j].first, typed[j].second});
      }
    } else if (key == ":init") {
      init = &sec;
    } else if (key == ":goal") {
      if (sec.items.size() != 2) sec.fail("expected (:goal <formula>)");
      goal = &sec;
    } else {
      sec.items[0].fail("unsupported section " + key);
    }
  }
  detail::Scope scope{&d, &p.objects, {}};
  if (init) {
    for (std::size_t j = 1; j < init->items.size(); ++j) {
      Atom a = detail::read_atom(init->items[j], scope);
      p.init.push_back(std::move(a));
    }
    std::sort(p.init.begin(), p.init.end());
    p.init.erase(std::unique(p.init.begin(), p.init.end()), p.init.end());
  }
  if (goal) p.goal = detail::read_formula(goal->items[1], scope);
  return p;
}

}  // namespace palop::pddl
