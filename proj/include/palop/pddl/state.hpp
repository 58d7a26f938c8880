#pragma once

#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include "palop/pddl/printer.hpp"

namespace palop::pddl {

// A set of ground atoms under the closed-world assumption.
class State {
 public:
  State() = default;
  State(std::initializer_list<Atom> atoms) : atoms_(atoms) {}
  template <typename It>
  State(It first, It last) : atoms_(first, last) {}

  bool contains(const Atom& a) const { return atoms_.contains(a); }
  void insert(const Atom& a) { atoms_.insert(a); }
  void erase(const Atom& a) { atoms_.erase(a); }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  const std::set<Atom>& atoms() const { return atoms_; }
  auto begin() const { return atoms_.begin(); }
  auto end() const { return atoms_.end(); }

  bool operator==(const State&) const = default;

 private:
  std::set<Atom> atoms_;
};

inline std::string to_string(const State& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& a : s) {
    out += (first ? "" : " ") + to_string(a);
    first = false;
  }
  return out + "}";
}

}  // namespace palop::pddl
