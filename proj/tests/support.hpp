#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "palop/learn/extension.hpp"
#include "palop/pddl/parser.hpp"
#include "palop/plan/task.hpp"

namespace palop::testing {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

inline std::filesystem::path data(const std::string& name) {
  return std::filesystem::path(PALOP_DATA_DIR) / name;
}

inline std::filesystem::path config(const std::string& name) {
  return std::filesystem::path(PALOP_CONFIG_DIR) / name;
}

inline pddl::Domain tv_base() { return pddl::parse_domain(slurp(data("tv_base.pddl"))); }

inline std::vector<learn::TypePropertyPair> tv_pairs() {
  return {{"Tv", "Is_Turned_On"}};
}

inline plan::PlanningProblem tv0_problem(const char* file = "tv0.problem.pddl") {
  pddl::Domain ext = learn::extend(tv_base(), tv_pairs()).domain;
  return plan::make_problem(ext, pddl::parse_problem(slurp(data(file)), ext));
}

// Small STRIPS problems over three constants of one type: three unary
// predicates and one binary, so at most 2^18 states.
struct RandomInstance {
  std::string domain;
  std::string problem;
};

inline RandomInstance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  auto chance = [&](double p) { return std::uniform_real_distribution<>(0, 1)(rng) < p; };
  const char* preds[] = {"P0", "P1", "P2", "R"};
  const char* objs[] = {"c0", "c1", "c2"};

  auto atom = [&](int pred, const std::vector<std::string>& terms) {
    std::string a = std::string("(") + preds[pred];
    int arity = pred == 3 ? 2 : 1;
    for (int k = 0; k < arity; ++k) a += " " + terms[static_cast<std::size_t>(pick(static_cast<int>(terms.size())))];
    return a + ")";
  };

  std::ostringstream d;
  d << "(define (domain rnd" << seed << ")\n"
    << "  (:requirements :strips :negative-preconditions)\n"
    << "  (:types Obj)\n"
    << "  (:predicates (P0 ?a) (P1 ?a) (P2 ?a) (R ?a ?b))\n";
  int schemas = 3 + pick(3);
  for (int i = 0; i < schemas; ++i) {
    std::vector<std::string> params = {"?x"};
    if (chance(0.5)) params.push_back("?y");
    d << "  (:action A" << i << "\n    :parameters (";
    for (const auto& p : params) d << p << " ";
    d << "- Obj)\n    :precondition (and";
    int npre = 1 + pick(3);
    for (int k = 0; k < npre; ++k) {
      std::string a = atom(pick(4), params);
      d << (chance(0.3) ? " (not " + a + ")" : " " + a);
    }
    d << ")\n    :effect (and";
    // Disjoint add and delete predicates rule out conflicts under any binding.
    int add_pred = pick(4);
    int second = chance(0.4) ? pick(4) : add_pred;
    d << " " << atom(add_pred, params);
    if (second != add_pred || chance(0.5)) d << " " << atom(second, params);
    if (chance(0.6)) {
      int del_pred = pick(4);
      if (del_pred != add_pred && del_pred != second) {
        d << " (not " << atom(del_pred, params) << ")";
      }
    }
    d << "))\n";
  }
  d << ")\n";

  std::vector<std::string> consts(std::begin(objs), std::end(objs));
  std::ostringstream p;
  p << "(define (problem rnd" << seed << ")\n  (:domain rnd" << seed << ")\n"
    << "  (:objects c0 c1 c2 - Obj)\n  (:init";
  for (int pred = 0; pred < 4; ++pred) {
    for (const auto& a : consts) {
      if (pred == 3) {
        for (const auto& b : consts) {
          if (chance(0.15)) p << " (R " << a << " " << b << ")";
        }
      } else if (chance(0.3)) {
        p << " (" << preds[pred] << " " << a << ")";
      }
    }
  }
  p << ")\n  (:goal ";
  auto conj = [&]() {
    std::string s = "(and";
    int n = 1 + pick(3);
    for (int k = 0; k < n; ++k) {
      std::string a = atom(pick(4), consts);
      s += chance(0.2) ? " (not " + a + ")" : " " + a;
    }
    return s + ")";
  };
  if (chance(0.25)) p << "(or " << conj() << " " << conj() << ")";
  else p << conj();
  p << "))\n";
  return {d.str(), p.str()};
}

}  // namespace palop::testing
