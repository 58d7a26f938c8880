#pragma once

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace palop::pddl {

// Variables are written with a leading '?', everything else is a constant.
inline bool is_variable(const std::string& term) {
  return !term.empty() && term.front() == '?';
}

struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;

  bool is_ground() const {
    for (const auto& a : args) {
      if (is_variable(a)) return false;
    }
    return true;
  }
};

// A typed variable or parameter. An empty type admits every non-meta constant.
struct Parameter {
  std::string name;
  std::string type;

  bool operator==(const Parameter&) const = default;
};

using Substitution = std::map<std::string, std::string>;

class Formula {
 public:
  enum class Kind { kAtom, kNot, kAnd, kOr, kImply, kForall };

  Formula() : kind_(Kind::kAnd) {}

  static Formula make_atom(Atom atom) {
    Formula f(Kind::kAtom);
    f.atom_ = std::move(atom);
    return f;
  }
  static Formula make_not(Formula inner) {
    Formula f(Kind::kNot);
    f.children_.push_back(std::move(inner));
    return f;
  }
  static Formula make_and(std::vector<Formula> parts) {
    Formula f(Kind::kAnd);
    f.children_ = std::move(parts);
    return f;
  }
  static Formula make_or(std::vector<Formula> parts) {
    Formula f(Kind::kOr);
    f.children_ = std::move(parts);
    return f;
  }
  static Formula make_imply(Formula lhs, Formula rhs) {
    Formula f(Kind::kImply);
    f.children_.push_back(std::move(lhs));
    f.children_.push_back(std::move(rhs));
    return f;
  }
  static Formula make_forall(std::vector<Parameter> vars, Formula body) {
    Formula f(Kind::kForall);
    f.vars_ = std::move(vars);
    f.children_.push_back(std::move(body));
    return f;
  }
  static Formula truth() { return make_and({}); }

  Kind kind() const { return kind_; }
  const Atom& atom() const { return atom_; }
  const std::vector<Formula>& children() const { return children_; }
  std::vector<Formula>& children() { return children_; }
  const std::vector<Parameter>& vars() const { return vars_; }

  bool is_literal() const {
    return kind_ == Kind::kAtom ||
           (kind_ == Kind::kNot && children_[0].kind_ == Kind::kAtom);
  }

  bool operator==(const Formula&) const = default;

  // Replaces free variables bound in `sub`. Quantified variables shadow.
  Formula substitute(const Substitution& sub) const {
    Formula out = *this;
    out.substitute_in_place(sub);
    return out;
  }

  template <typename Fn>
  void for_each_atom(Fn&& fn) const {
    if (kind_ == Kind::kAtom) {
      fn(atom_);
      return;
    }
    for (const auto& c : children_) c.for_each_atom(fn);
  }

 private:
  explicit Formula(Kind kind) : kind_(kind) {}

  void substitute_in_place(const Substitution& sub) {
    if (kind_ == Kind::kAtom) {
      for (auto& a : atom_.args) {
        if (auto it = sub.find(a); it != sub.end()) a = it->second;
      }
      return;
    }
    if (kind_ == Kind::kForall) {
      Substitution inner = sub;
      for (const auto& v : vars_) inner.erase(v.name);
      for (auto& c : children_) c.substitute_in_place(inner);
      return;
    }
    for (auto& c : children_) c.substitute_in_place(sub);
  }

  Kind kind_;
  Atom atom_;
  std::vector<Formula> children_;
  std::vector<Parameter> vars_;
};

inline Atom substitute(const Atom& atom, const Substitution& sub) {
  Atom out = atom;
  for (auto& a : out.args) {
    if (auto it = sub.find(a); it != sub.end()) a = it->second;
  }
  return out;
}

}  // namespace palop::pddl
