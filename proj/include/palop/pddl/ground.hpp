#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "palop/error.hpp"
#include "palop/pddl/domain.hpp"
#include "palop/pddl/printer.hpp"

namespace palop::pddl {

struct GroundAction {
  std::string op;
  std::vector<std::string> args;
  Formula pre;  // ground, quantifiers expanded over the constants in scope
  std::vector<Atom> add;
  std::vector<Atom> del;

  bool operator==(const GroundAction&) const = default;

  std::string name() const {
    std::string out = "(" + op;
    for (const auto& a : args) out += " " + a;
    return out + ")";
  }
};

struct Plan {
  std::vector<GroundAction> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
};

// Calls fn(tuple) for every tuple of constants admitted by the parameters.
inline void for_each_binding(
    std::span<const Parameter> params, std::span<const Constant> universe,
    const std::function<void(const std::vector<std::string>&)>& fn) {
  std::vector<std::vector<const Constant*>> domains(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (const auto& c : universe) {
      if (admits(params[i].type, c)) domains[i].push_back(&c);
    }
    if (domains[i].empty()) return;
  }
  std::vector<std::size_t> idx(params.size(), 0);
  std::vector<std::string> tuple(params.size());
  for (;;) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      tuple[i] = domains[i][idx[i]]->name;
    }
    fn(tuple);
    std::size_t k = params.size();
    while (k > 0) {
      --k;
      if (++idx[k] < domains[k].size()) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    if (params.empty()) return;
  }
}

// Rewrites every universal quantifier into the finite conjunction over the
// admitted constants.
inline Formula expand_quantifiers(const Formula& f,
                                  std::span<const Constant> universe) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
      return f;
    case K::kForall: {
      std::vector<Formula> parts;
      const Formula& body = f.children()[0];
      for_each_binding(f.vars(), universe,
                       [&](const std::vector<std::string>& tuple) {
                         Substitution sub;
                         for (std::size_t i = 0; i < tuple.size(); ++i) {
                           sub[f.vars()[i].name] = tuple[i];
                         }
                         parts.push_back(
                             expand_quantifiers(body.substitute(sub), universe));
                       });
      return Formula::make_and(std::move(parts));
    }
    case K::kNot:
      return Formula::make_not(expand_quantifiers(f.children()[0], universe));
    case K::kImply:
      return Formula::make_imply(expand_quantifiers(f.children()[0], universe),
                                 expand_quantifiers(f.children()[1], universe));
    case K::kAnd:
    case K::kOr: {
      std::vector<Formula> parts;
      for (const auto& c : f.children()) {
        parts.push_back(expand_quantifiers(c, universe));
      }
      return f.kind() == K::kAnd ? Formula::make_and(std::move(parts))
                                 : Formula::make_or(std::move(parts));
    }
  }
  return f;
}

inline GroundAction instantiate(const ActionSchema& s,
                                const std::vector<std::string>& args,
                                std::span<const Constant> universe) {
  if (args.size() != s.params.size()) {
    throw DomainError(s.name + " expects " + std::to_string(s.params.size()) +
                      " arguments, got " + std::to_string(args.size()));
  }
  Substitution sub;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const Constant* c = nullptr;
    for (const auto& u : universe) {
      if (u.name == args[i]) c = &u;
    }
    if (c == nullptr) throw DomainError("unknown constant " + args[i]);
    if (!admits(s.params[i].type, *c)) {
      throw DomainError("constant " + args[i] + " is not admitted by " +
                        s.params[i].name + " of " + s.name);
    }
    sub[s.params[i].name] = args[i];
  }
  GroundAction g;
  g.op = s.name;
  g.args = args;
  g.pre = expand_quantifiers(s.pre.substitute(sub), universe);
  for (const auto& a : s.add) g.add.push_back(substitute(a, sub));
  for (const auto& a : s.del) g.del.push_back(substitute(a, sub));
  return g;
}

inline GroundAction instantiate(const Domain& d, const std::string& op,
                                const std::vector<std::string>& args,
                                std::span<const Constant> universe) {
  const ActionSchema* s = d.find_schema(op);
  if (s == nullptr) throw DomainError("unknown operator " + op);
  return instantiate(*s, args, universe);
}

// All type-compatible instantiations of every schema, in schema order and
// lexicographic constant order.
inline std::vector<GroundAction> ground(const Domain& d,
                                        std::span<const Constant> universe) {
  std::vector<GroundAction> out;
  for (const auto& s : d.schemas) {
    for_each_binding(s.params, universe,
                     [&](const std::vector<std::string>& tuple) {
                       out.push_back(instantiate(s, tuple, universe));
                     });
  }
  return out;
}

inline std::vector<GroundAction> ground(const Domain& d) {
  return ground(d, d.constants);
}

// Domain constants followed by problem objects.
inline std::vector<Constant> universe_of(const Domain& d, const Problem& p) {
  std::vector<Constant> u = d.constants;
  u.insert(u.end(), p.objects.begin(), p.objects.end());
  return u;
}

}  // namespace palop::pddl
