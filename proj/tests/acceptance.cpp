// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "palop/agent/agent.hpp"
#include "palop/cli/experiment.hpp"
#include "palop/eval/evalkit.hpp"
#include "palop/learn/extension.hpp"
#include "palop/pddl/ground.hpp"
#include "palop/pddl/parser.hpp"
#include "palop/pddl/semantics.hpp"
#include "palop/perception/classifier.hpp"
#include "palop/plan/oracle.hpp"
#include "palop/plan/search.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace palop;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    o.detail += " (over the " + std::to_string(static_cast<int>(limit_s)) + " s limit)";
  }
  std::printf("%s %2d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

plan::PlanningProblem parse(const std::string& domain, const std::string& problem) {
  pddl::Domain d = pddl::parse_domain(domain);
  return plan::make_problem(d, pddl::parse_problem(problem, d));
}

Outcome extension_golden() {
  auto ext = learn::extend(testing::tv_base(), testing::tv_pairs());
  pddl::Domain golden =
      pddl::parse_domain(testing::slurp(testing::data("tv_extended.golden.pddl")));
  std::set<std::string> modified;
  for (const auto& [name, _] : ext.report.modified_schemas) modified.insert(name);
  bool same = ext.domain == golden;
  bool augmented = modified == std::set<std::string>{"Turn_On", "Turn_Off"};
  return {same && augmented, std::string(same ? "domain equals golden" : "domain differs") +
                                 ", augmented " + std::to_string(modified.size()) + " schemas"};
}

Outcome worked_plan() {
  plan::PlanningProblem pp = testing::tv0_problem();
  auto r = plan::plan(pp);
  if (!r.solved()) return {false, "no plan"};
  std::vector<std::string> names;
  for (const auto& s : r.plan.steps) names.push_back(s.name());
  std::sort(names.begin(), names.end());
  std::vector<std::string> expected{"(Go_Close_To tv0)",
                                    "(Observe tv0 tv is_turned_on)",
                                    "(Observe tv0 tv not_is_turned_on)",
                                    "(Train tv is_turned_on not_is_turned_on)",
                                    "(Turn_Off tv0)",
                                    "(Turn_On tv0)"};
  bool valid = pddl::validate(r.plan, pp.domain, pp.init, pp.goal, pp.universe).valid;
  auto o = plan::bfs_oracle(pp);
  bool optimal = o && o->size() == 6;
  return {valid && names == expected && optimal,
          "length " + std::to_string(r.plan.size()) + (valid ? ", valid" : ", invalid") +
              (names == expected ? ", multiset matches" : ", multiset differs") +
              ", oracle length " + (o ? std::to_string(o->size()) : std::string("none"))};
}

Outcome planner_agreement() {
  int agree = 0, solvable = 0, valid = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto inst = testing::random_instance(seed);
    auto pp = parse(inst.domain, inst.problem);
    auto r = plan::plan(pp);
    auto o = plan::bfs_oracle(pp);
    if (r.solved() == o.has_value()) ++agree;
    if (r.solved()) {
      ++solvable;
      valid += pddl::validate(r.plan, pp.domain, pp.init, pp.goal, pp.universe).valid;
    }
  }
  return {agree == 100 && valid == solvable,
          std::to_string(agree) + "/100 agree, " + std::to_string(valid) + "/" +
              std::to_string(solvable) + " plans valid"};
}

Outcome transition_and_grounding() {
  std::mt19937_64 rng(2024);
  int ground_ok = 0, apply_ok = 0, applied = 0;
  const char* types[] = {"T0", "T1"};
  for (int inst = 0; inst < 1000; ++inst) {
    // grounding: typed enumeration against a brute-force count
    int n = static_cast<int>(rng() % 5);
    std::vector<pddl::Constant> cs;
    for (int i = 0; i < n; ++i) cs.push_back({"k" + std::to_string(i), types[rng() % 2]});
    std::ostringstream text;
    text << "(define (domain r) (:types T0 T1) (:predicates (Mark))\n";
    std::size_t expected = 0;
    int schemas = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < schemas; ++s) {
      int arity = static_cast<int>(rng() % 3);
      std::size_t count = 1;
      text << " (:action S" << s << " :parameters (";
      for (int k = 0; k < arity; ++k) {
        int t = static_cast<int>(rng() % 3);
        std::string ty = t == 2 ? "object" : types[t];
        text << "?v" << k << " - " << ty << " ";
        count *= static_cast<std::size_t>(std::count_if(
            cs.begin(), cs.end(), [&](const auto& c) { return ty == "object" || c.type == ty; }));
      }
      text << ") :precondition () :effect (Mark))\n";
      expected += count;
    }
    text << ")";
    ground_ok += pddl::ground(pddl::parse_domain(text.str()), cs).size() == expected;

    // transitions: apply equals (s ∪ add) \ del on every applicable ground action
    auto ri = testing::random_instance(static_cast<std::uint64_t>(inst) + 5000);
    auto pp = parse(ri.domain, ri.problem);
    bool ok = true;
    for (const auto& g : pddl::ground(pp.domain, pp.universe)) {
      if (!pddl::holds(pp.init, g.pre, pp.universe)) continue;
      ++applied;
      std::set<pddl::Atom> s(pp.init.begin(), pp.init.end()), u, want;
      std::set<pddl::Atom> add(g.add.begin(), g.add.end()), del(g.del.begin(), g.del.end());
      std::set_union(s.begin(), s.end(), add.begin(), add.end(), std::inserter(u, u.end()));
      std::set_difference(u.begin(), u.end(), del.begin(), del.end(),
                          std::inserter(want, want.end()));
      pddl::State next = pddl::apply(pp.init, g);
      if (std::set<pddl::Atom>(next.begin(), next.end()) != want) ok = false;
    }
    apply_ok += ok;
  }
  return {ground_ok == 1000 && apply_ok == 1000,
          "grounding " + std::to_string(ground_ok) + "/1000, transitions " +
              std::to_string(apply_ok) + "/1000 (" + std::to_string(applied) +
              " applications)"};
}

std::string observed_object(const std::string& action) {
  std::istringstream in(action.substr(9));
  std::string o;
  in >> o;
  return o;
}

Outcome replanning() {
  auto wc = sim::parse_world_config(
      nlohmann::json::parse(testing::slurp(testing::data("tv_world.json"))));
  agent::AgentConfig cfg;
  cfg.extension.n_min = 12;
  auto once = [&](std::string* trace) {
    agent::Agent a(testing::tv_base(), testing::tv_pairs(), sim::generate_world(wc),
                   sim::DetectionMode::kGTD, cfg);
    std::ostringstream out;
    auto r = a.run(&out);
    *trace = out.str();
    return r;
  };
  std::string t1, t2;
  auto r = once(&t1);
  once(&t2);
  std::string first;
  bool insufficient = false, replanned = false, second = false;
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto& rec = r.trace[i];
    if (rec.action.rfind("(Observe ", 0) != 0 || rec.failed) continue;
    std::string o = observed_object(rec.action);
    if (first.empty()) {
      first = o;
      insufficient = std::none_of(rec.added.begin(), rec.added.end(), [](const auto& a) {
        return a.rfind("(Sufficient_Obs", 0) == 0;
      });
      replanned = i + 1 < r.trace.size() && r.replans > i + 1;
    } else if (o != first) {
      second = true;
      break;
    }
  }
  bool deterministic = t1 == t2;
  return {insufficient && replanned && second && deterministic,
          "Observe(" + first + ")" + (insufficient ? ", Sufficient_Obs still false" : "") +
              (replanned ? ", replanned" : "") +
              (second ? ", then Observe on another tv" : ", no second tv observed") +
              (deterministic ? ", deterministic" : ", traces differ")};
}

struct HouseholdRuns {
  cli::ExperimentConfig config;
  fs::path root;
  std::map<std::pair<std::uint64_t, std::string>, std::vector<eval::MetricsRow>> rows;
  std::map<std::pair<std::uint64_t, std::string>, fs::path> dirs;
  int max_iterations = 0;
  bool all_terminated = true;
};

HouseholdRuns household(const std::vector<std::uint64_t>& seeds,
                        const std::vector<std::string>& modes, const std::string& tag) {
  HouseholdRuns h;
  h.config = cli::load_experiment(fs::path(PALOP_CONFIG_DIR) / "household.json");
  h.root = fs::path(PALOP_SCRATCH_DIR) / "acceptance" / tag;
  fs::remove_all(h.root);
  for (auto seed : seeds) {
    fs::path env = cli::generate_environment(h.config, seed, h.config.testset_size,
                                             h.root / ("env-s" + std::to_string(seed)));
    for (const auto& mode : modes) {
      auto o = cli::run_one(h.config, seed, mode, h.root);
      h.max_iterations = std::max(h.max_iterations, o.report.iterations);
      if (o.report.iterations > h.config.agent.max_iterations) h.all_terminated = false;
      h.rows[{seed, mode}] = cli::evaluate_run(o.dir, env);
      h.dirs[{seed, mode}] = o.dir;
    }
  }
  return h;
}

Outcome end_to_end(HouseholdRuns& h) {
  int trained = 0, good = 0;
  double worst_p = 1, worst_r = 1;
  for (const auto& [key, rows] : h.rows) {
    for (const auto& r : rows) {
      if (!r.precision) continue;
      ++trained;
      worst_p = std::min(worst_p, *r.precision);
      worst_r = std::min(worst_r, *r.recall);
      if (*r.precision >= 0.9 && *r.recall >= 0.9) ++good;
    }
  }
  return {trained > 0 && good == trained,
          std::to_string(good) + "/" + std::to_string(trained) +
              " classifiers at P,R >= 0.9; min P " + fmt("%.4f", worst_p) + ", min R " +
              fmt("%.4f", worst_r)};
}

Outcome nd_vs_gtd(HouseholdRuns& h) {
  std::map<std::string, double> sum;
  std::map<std::string, int> n;
  for (const auto& [key, rows] : h.rows) {
    // weighted precision over all pairs of the run
    double sp = 0, total = 0;
    for (const auto& r : rows) {
      if (!r.precision || r.g == 0) continue;
      sp += static_cast<double>(r.g) * *r.precision;
      total += static_cast<double>(r.g);
    }
    if (total > 0) {
      sum[key.second] += sp / total;
      ++n[key.second];
    }
  }
  double gtd = n["GTD"] ? sum["GTD"] / n["GTD"] : 0.0;
  double nd = n["ND"] ? sum["ND"] / n["ND"] : 0.0;
  return {n["GTD"] > 0 && n["ND"] > 0 && gtd >= nd - 0.02,
          "mean weighted precision GTD " + fmt("%.4f", gtd) + " vs ND " + fmt("%.4f", nd) +
              " over " + std::to_string(n["GTD"]) + "+" + std::to_string(n["ND"]) + " runs"};
}

Outcome numerics() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  double worst_grad = 0;
  for (int inst = 0; inst < 100; ++inst) {
    std::size_t d = 1 + rng() % 6, n = 1 + rng() % 10;
    std::vector<sim::Vec> X(n, sim::Vec(d));
    std::vector<int> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      for (auto& x : X[k]) x = normal(rng);
      y[k] = static_cast<int>(rng() % 2);
    }
    sim::Vec w(d + 1);
    for (auto& x : w) x = normal(rng);
    sim::Vec g = perception::logistic_gradient(w, X, y);
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i <= d; ++i) {
      sim::Vec up = w, down = w;
      up[i] += h;
      down[i] -= h;
      double fd = (perception::logistic_loss(up, X, y) - perception::logistic_loss(down, X, y)) /
                  (2 * h);
      diff += (fd - g[i]) * (fd - g[i]);
      norm += g[i] * g[i];
    }
    worst_grad = std::max(worst_grad, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-3));
  }
  using big = boost::multiprecision::cpp_bin_float_50;
  double worst_sigmoid = 0;
  std::uniform_real_distribution<double> z(-40.0, 40.0);
  for (int i = 0; i < 10000; ++i) {
    double v = z(rng);
    big ref = big(1) / (big(1) + exp(-big(v)));
    worst_sigmoid =
        std::max(worst_sigmoid, std::abs(perception::sigmoid(v) - ref.convert_to<double>()));
  }
  return {worst_grad <= 1e-5 && worst_sigmoid <= 1e-12,
          "gradient rel. error " + fmt("%.2e", worst_grad) + ", sigmoid error " +
              fmt("%.2e", worst_sigmoid)};
}

Outcome metrics_arithmetic() {
  struct Case {
    eval::Confusion c;
    double p, r;
  };
  const Case cases[] = {{{8, 2, 2, 0}, 0.8, 0.8},
                        {{0, 0, 7, 13}, 0.0, 0.0},
                        {{0, 0, 0, 20}, 0.0, 0.0},
                        {{5, 0, 0, 5}, 1.0, 1.0},
                        {{3, 1, 0, 0}, 0.75, 1.0},
                        {{1, 0, 3, 0}, 1.0, 0.25}};
  int ok = 0;
  for (const auto& k : cases) {
    auto m = eval::precision_recall(k.c);
    ok += m.precision == k.p && m.recall == k.r;
  }
  return {ok == static_cast<int>(std::size(cases)),
          std::to_string(ok) + "/" + std::to_string(std::size(cases)) + " confusion cases exact"};
}

std::string tree(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, dir).string() + "\n" + testing::slurp(f);
  return all;
}

Outcome termination_and_determinism(const HouseholdRuns& h, const HouseholdRuns& again) {
  int identical = 0;
  for (const auto& [key, dir] : again.dirs) {
    identical += tree(h.dirs.at(key)) == tree(dir);
  }
  bool bounded = h.all_terminated && again.all_terminated;
  return {bounded && identical == static_cast<int>(again.dirs.size()),
          "max iterations " + std::to_string(h.max_iterations) + " of " +
              std::to_string(h.config.agent.max_iterations) + ", " +
              std::to_string(identical) + "/" + std::to_string(again.dirs.size()) +
              " reruns byte-identical"};
}

}  // namespace

int main() {
  criterion(1, "domain extension golden", 1, extension_golden);
  criterion(2, "worked tv plan", 5, worked_plan);
  criterion(3, "planner/oracle agreement", 60, planner_agreement);
  criterion(4, "transition and grounding oracles", 10, transition_and_grounding);
  criterion(5, "replanning to a second tv", 0, replanning);

  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  HouseholdRuns gtd5;
  criterion(6, "end-to-end learning, GTD easy regime", 300, [&] {
    gtd5 = household({0, 1, 2, 3, 4}, {"GTD"}, "gtd");
    return end_to_end(gtd5);
  });
  HouseholdRuns both;
  criterion(7, "ND vs GTD precision trend", 900, [&] {
    both = household(seeds, {"GTD", "ND"}, "both");
    return nd_vs_gtd(both);
  });
  criterion(8, "numerical checks", 0, numerics);
  criterion(9, "metrics arithmetic", 0, metrics_arithmetic);
  criterion(10, "termination and determinism", 0, [&] {
    HouseholdRuns again = household(seeds, {"GTD", "ND"}, "rerun");
    return termination_and_determinism(both, again);
  });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
