// palop: extend, plan, run, eval and gen-env.
//
// Exit status: 0 ok, 1 unsolvable, 2 missing file or I/O failure,
// 3 domain transformation failed (e.g. already extended), 4 resource
// limit, 5 parse or configuration error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "palop/cli/experiment.hpp"
#include "palop/eval/evalkit.hpp"
#include "palop/learn/extension.hpp"
#include "palop/pddl/parser.hpp"
#include "palop/pddl/printer.hpp"
#include "palop/pddl/semantics.hpp"
#include "palop/plan/search.hpp"

namespace fs = std::filesystem;
using namespace palop;

namespace {

enum Exit : int {
  kOk = 0,
  kUnsolvable = 1,
  kIo = 2,
  kTransform = 3,
  kResource = 4,
  kInvalid = 5,
};

struct ExtendArgs {
  std::string domain, pairs, out, report;
  std::optional<int> n_min;
};

int cmd_extend(const ExtendArgs& a) {
  pddl::Domain base = pddl::parse_domain(cli::read_file(a.domain));
  nlohmann::json pj = cli::read_json(a.pairs);
  std::vector<learn::TypePropertyPair> pairs;
  learn::ExtensionOptions opts;
  try {
    pairs = learn::pairs_from_json(pj);
    if (pj.is_object()) opts = learn::options_from_json(pj);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(a.pairs + ": " + e.what());
  }
  if (a.n_min) opts.n_min = *a.n_min;
  learn::Extension ext = learn::extend(base, pairs, opts);
  cli::write_file(a.out, pddl::print_domain(ext.domain));
  std::string report = a.report.empty() ? a.out + ".report.json" : a.report;
  cli::write_file(report, learn::to_json(ext.report).dump(2) + "\n");
  std::cerr << "extended " << base.name << " with " << pairs.size()
            << " pair(s) -> " << a.out << "\n";
  return kOk;
}

struct PlanArgs {
  std::string domain, problem, out, stats;
  std::size_t node_budget = 2'000'000;
  std::optional<double> time_budget;
};

int cmd_plan(const PlanArgs& a) {
  pddl::Domain d = pddl::parse_domain(cli::read_file(a.domain));
  pddl::Problem p = pddl::parse_problem(cli::read_file(a.problem), d);
  plan::PlanningProblem problem = plan::make_problem(d, p);
  plan::SearchOptions opts;
  opts.node_budget = a.node_budget;
  opts.time_budget = a.time_budget;
  plan::PlanResult r = plan::plan(problem, opts);

  nlohmann::json stats{{"status", plan::to_string(r.status)},
                       {"length", r.plan.size()},
                       {"expanded", r.stats.expanded},
                       {"generated", r.stats.generated},
                       {"evaluations", r.stats.evaluations},
                       {"wall_time", r.stats.wall_time}};
  if (r.solved()) {
    auto check = pddl::validate(r.plan, d, problem.init, problem.goal, problem.universe);
    stats["valid"] = check.valid;
    if (!check.valid) throw Error("planner returned an invalid plan: " + check.message);
    std::string text;
    for (const auto& s : r.plan.steps) text += s.name() + "\n";
    if (a.out.empty()) std::cout << text;
    else cli::write_file(a.out, text);
  }
  if (a.stats.empty()) std::cerr << stats.dump() << "\n";
  else cli::write_file(a.stats, stats.dump(2) + "\n");
  switch (r.status) {
    case plan::PlanStatus::kSolved:
      return kOk;
    case plan::PlanStatus::kUnsolvable:
      std::cerr << "unsolvable\n";
      return kUnsolvable;
    case plan::PlanStatus::kResourceLimit:
      std::cerr << "resource limit reached\n";
      return kResource;
  }
  return kUnsolvable;
}

struct RunArgs {
  std::string config, out;
  std::vector<std::string> modes;
  std::vector<std::uint64_t> seeds;
};

int cmd_run(const RunArgs& a) {
  cli::ExperimentConfig c = cli::load_experiment(a.config);
  if (!a.modes.empty()) {
    c.modes.clear();
    for (const auto& m : a.modes) c.modes.push_back(cli::parse_modes(m).front());
  }
  if (!a.seeds.empty()) c.seeds = a.seeds;
  fs::path root = a.out.empty() ? c.output : fs::path(a.out);
  for (std::uint64_t seed : c.seeds) {
    for (const auto& mode : c.modes) {
      cli::RunOutcome o = cli::run_one(c, seed, mode, root);
      std::cout << o.dir.string() << " " << agent::to_string(o.report.termination)
                << " iterations=" << o.report.iterations << "\n";
    }
  }
  return kOk;
}

struct GenArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  std::optional<std::size_t> size;
};

int cmd_gen_env(const GenArgs& a) {
  cli::ExperimentConfig c = cli::load_experiment(a.config);
  std::size_t size = a.size.value_or(c.testset_size);
  if (size == 0) throw ConfigError("test set size must be at least 1");
  cli::generate_environment(c, a.seed, size, a.out);
  std::cout << a.out << "\n";
  return kOk;
}

struct EvalArgs {
  std::vector<std::string> runs;
  std::string env, out;
};

int cmd_eval(const EvalArgs& a) {
  if (!fs::exists(a.env)) throw cli::IoError("missing test set directory " + a.env);
  std::vector<eval::MetricsRow> rows;
  for (const auto& r : a.runs) {
    if (!fs::exists(r)) throw cli::IoError("missing run directory " + r);
    auto more = cli::evaluate_run(r, a.env);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  for (const auto& [property, rep] : eval::reports(rows)) {
    std::string csv = eval::to_csv(rep);
    cli::write_file(fs::path(a.out) / ("metrics_" + property + ".csv"), csv);
    cli::write_file(fs::path(a.out) / ("metrics_" + property + ".json"),
                    eval::to_json(rep).dump(2) + "\n");
    std::cout << "# " << property << "\n" << csv;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning to learn object properties: domain extension, planning, "
               "simulated runs and evaluation"};
  app.require_subcommand(1);

  ExtendArgs ea;
  auto* extend = app.add_subcommand("extend", "Extend a base domain with learning operators");
  extend->add_option("domain", ea.domain, "Base domain PDDL")->required();
  extend->add_option("pairs", ea.pairs, "JSON with learnable (type, property) pairs")->required();
  extend->add_option("-o,--out", ea.out, "Extended domain output")->required();
  extend->add_option("--report", ea.report, "Extension report JSON (default <out>.report.json)");
  extend->add_option("--n-min", ea.n_min, "Observations per label (default 50)");

  PlanArgs pa;
  auto* planc = app.add_subcommand("plan", "Plan for a problem");
  planc->add_option("domain", pa.domain, "Domain PDDL")->required();
  planc->add_option("problem", pa.problem, "Problem PDDL")->required();
  planc->add_option("-o,--out", pa.out, "Plan file, one action per line (default stdout)");
  planc->add_option("--stats", pa.stats, "Search statistics JSON (default stderr)");
  planc->add_option("--node-budget", pa.node_budget, "Generated-node budget")
      ->capture_default_str();
  planc->add_option("--time-budget", pa.time_budget, "Seconds");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run the agent for every seed of an experiment");
  run->add_option("config", ra.config, "Experiment JSON")->required();
  run->add_option("--out", ra.out, "Output root (default: the config's output)");
  run->add_option("--mode", ra.modes, "ND or GTD; repeatable, overrides the config");
  run->add_option("--seed", ra.seeds, "Seed; repeatable, overrides the config");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen-env", "Generate a world and its ground-truth test sets");
  gen->add_option("config", ga.config, "Experiment JSON")->required();
  gen->add_option("--seed", ga.seed, "World seed")->required();
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--size", ga.size, "Examples per pair (default: the config's testset_size)");

  EvalArgs va;
  auto* evalc = app.add_subcommand("eval", "Score trained models against test sets");
  evalc->add_option("runs", va.runs, "Run directories")->required();
  evalc->add_option("--env", va.env, "Directory written by gen-env")->required();
  evalc->add_option("--out", va.out, "Directory for metrics tables")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*extend) return cmd_extend(ea);
    if (*planc) return cmd_plan(pa);
    if (*run) return cmd_run(ra);
    if (*gen) return cmd_gen_env(ga);
    if (*evalc) return cmd_eval(va);
  } catch (const cli::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ExtensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTransform;
  } catch (const SearchLimitExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kResource;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
