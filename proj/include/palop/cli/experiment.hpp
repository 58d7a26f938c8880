#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "palop/agent/agent.hpp"
#include "palop/error.hpp"
#include "palop/eval/evalkit.hpp"
#include "palop/learn/extension.hpp"
#include "palop/pddl/parser.hpp"
#include "palop/pddl/printer.hpp"
#include "palop/sim/world.hpp"

namespace palop::cli {

namespace fs = std::filesystem;

// Missing or unreadable files; maps to its own exit status.
class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("failed writing " + p.string());
}

inline nlohmann::json read_json(const fs::path& p) {
  std::string text = read_file(p);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// File-name form of a dataset key: "tv/is_turned_on" -> "tv__is_turned_on".
inline std::string key_file(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '/') out += "__";
    else out += c;
  }
  return out;
}

struct ExperimentConfig {
  fs::path domain_path;
  fs::path world_path;
  std::vector<learn::TypePropertyPair> pairs;
  std::vector<std::string> modes{"GTD"};
  std::vector<std::uint64_t> seeds;
  agent::AgentConfig agent;
  std::size_t testset_size = 200;
  fs::path output = "runs";
  nlohmann::json raw;  // as read, for hashing
};

inline std::vector<std::string> parse_modes(const nlohmann::json& j) {
  std::vector<std::string> out;
  auto one = [&](const nlohmann::json& m) {
    std::string s = m.get<std::string>();
    sim::parse_mode(s);
    out.push_back(s);
  };
  if (j.is_array()) {
    for (const auto& m : j) one(m);
  } else {
    one(j);
  }
  if (out.empty()) throw ConfigError("mode list is empty");
  return out;
}

inline agent::AgentConfig agent_config(const nlohmann::json& j) {
  agent::AgentConfig a;
  a.extension.n_min = j.value("n_min", a.extension.n_min);
  a.extension.closeness_predicate =
      j.value("closeness_predicate", a.extension.closeness_predicate);
  if (j.contains("classifier")) {
    const auto& c = j.at("classifier");
    a.train.epochs = c.value("epochs", a.train.epochs);
    a.train.learning_rate = c.value("learning_rate", a.train.learning_rate);
    a.train.threshold = c.value("threshold", a.train.threshold);
    a.train.balance = c.value("balance", a.train.balance);
    a.cold_start = c.value("cold_start", a.cold_start);
  }
  if (j.contains("agent")) {
    const auto& g = j.at("agent");
    a.max_iterations = g.value("max_iterations", a.max_iterations);
    a.views_per_observe = g.value("views_per_observe", a.views_per_observe);
    a.explore_step_cap = g.value("explore_step_cap", a.explore_step_cap);
    a.explore_budget = g.value("explore_budget", a.explore_budget);
    a.max_navigation_failures =
        g.value("max_navigation_failures", a.max_navigation_failures);
    a.search.node_budget = g.value("node_budget", a.search.node_budget);
  }
  if (a.extension.n_min < 1) throw ConfigError("n_min must be at least 1");
  if (a.max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (a.views_per_observe < 1) throw ConfigError("views_per_observe must be at least 1");
  if (!(a.train.threshold > 0 && a.train.threshold < 1)) {
    throw ConfigError("classifier threshold must lie in (0,1)");
  }
  if (!(a.train.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  return a;
}

// Relative paths resolve against the config file's directory.
inline ExperimentConfig load_experiment(const fs::path& path) {
  nlohmann::json j = read_json(path);
  ExperimentConfig c;
  c.raw = j;
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  try {
    c.domain_path = resolve(j.at("domain").get<std::string>());
    c.world_path = resolve(j.at("world").get<std::string>());
    const auto& pairs = j.at("pairs");
    c.pairs = learn::pairs_from_json(
        pairs.is_string() ? read_json(resolve(pairs.get<std::string>())) : pairs);
    if (j.contains("mode")) c.modes = parse_modes(j.at("mode"));
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.agent = agent_config(j);
    c.testset_size = j.value("testset_size", c.testset_size);
    if (j.contains("output")) c.output = resolve(j.at("output").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (c.seeds.empty()) throw ConfigError(path.string() + ": seeds must be nonempty");
  if (c.pairs.empty()) throw ConfigError(path.string() + ": pairs must be nonempty");
  if (c.testset_size == 0) throw ConfigError("testset_size must be at least 1");
  for (const auto& p : {c.domain_path, c.world_path}) {
    if (!fs::exists(p)) throw IoError("missing file " + p.string());
  }
  return c;
}

// Identity of everything that shapes a run except seed and mode.
inline std::string config_hash(const ExperimentConfig& c) {
  nlohmann::json j = c.raw;
  j.erase("seeds");
  j.erase("mode");
  j.erase("output");
  j["domain"] = hex(fnv1a(read_file(c.domain_path)));
  j["world"] = hex(fnv1a(read_file(c.world_path)));
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : c.pairs) {
    pairs.push_back({{"type", p.type_predicate}, {"property", p.property_predicate}});
  }
  j["pairs"] = pairs;
  return hex(fnv1a(j.dump())).substr(0, 12);
}

inline sim::WorldConfig world_config(const ExperimentConfig& c, std::uint64_t seed) {
  sim::WorldConfig w = sim::parse_world_config(read_json(c.world_path));
  w.seed = seed;
  w.validate();
  return w;
}

inline std::string run_name(const std::string& hash, const std::string& mode,
                            std::uint64_t seed) {
  return hash + "-" + mode + "-s" + std::to_string(seed);
}

inline nlohmann::json pairs_json(const std::vector<learn::TypePropertyPair>& pairs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : pairs) {
    out.push_back({{"type", p.type_predicate}, {"property", p.property_predicate}});
  }
  return out;
}

struct RunOutcome {
  fs::path dir;
  agent::RunReport report;
};

// One seed in one mode. Everything written is a function of the inputs.
inline RunOutcome run_one(const ExperimentConfig& c, std::uint64_t seed,
                          const std::string& mode, const fs::path& out_root) {
  pddl::Domain base = pddl::parse_domain(read_file(c.domain_path));
  sim::World world = sim::generate_world(world_config(c, seed));
  agent::AgentConfig cfg = c.agent;
  cfg.train.seed = seed;
  fs::path dir = out_root / run_name(config_hash(c), mode, seed);
  fs::create_directories(dir);

  agent::Agent a(base, c.pairs, world, sim::parse_mode(mode), cfg);
  std::ostringstream trace;
  agent::RunReport r = a.run(&trace);
  write_file(dir / "trace.jsonl", trace.str());

  nlohmann::json report = agent::to_json(r);
  report["mode"] = mode;
  report["seed"] = seed;
  report["config_hash"] = config_hash(c);
  report["pairs"] = pairs_json(c.pairs);
  write_file(dir / "report.json", report.dump(2) + "\n");
  write_file(dir / "world.json", sim::to_json(world).dump(2) + "\n");
  write_file(dir / "domain.pddl", pddl::print_domain(a.domain()));
  for (const auto& [key, model] : a.models()) {
    write_file(dir / "models" / (key_file(key) + ".json"),
               perception::to_json(model).dump(2) + "\n");
  }
  for (const auto& [key, set] : a.datasets()) {
    if (set.empty()) continue;
    write_file(dir / "datasets" / (key_file(key) + ".csv"), perception::to_csv(set));
  }
  return {dir, std::move(r)};
}

// World and G_{t,p} for one seed.
inline fs::path generate_environment(const ExperimentConfig& c, std::uint64_t seed,
                                     std::size_t size, const fs::path& dir) {
  sim::World world = sim::generate_world(world_config(c, seed));
  eval::TestSets tests = eval::generate_testset(world, c.pairs, seed, size);
  write_file(dir / "world.json", sim::to_json(world).dump(2) + "\n");
  nlohmann::json sizes = nlohmann::json::object();
  for (const auto& [key, t] : tests) {
    sizes[key] = t.size();
    if (!t.empty()) write_file(dir / "testsets" / (key_file(key) + ".csv"), eval::to_csv(t));
  }
  nlohmann::json manifest{{"seed", seed}, {"size", size}, {"sizes", sizes},
                          {"pairs", pairs_json(c.pairs)}};
  write_file(dir / "testsets.json", manifest.dump(2) + "\n");
  return dir;
}

// Metrics rows for a finished run against a generated environment.
inline std::vector<eval::MetricsRow> evaluate_run(const fs::path& run_dir,
                                                  const fs::path& env_dir) {
  nlohmann::json report = read_json(run_dir / "report.json");
  nlohmann::json run_world = read_json(run_dir / "world.json");
  nlohmann::json env_world = read_json(env_dir / "world.json");
  if (run_world != env_world) {
    throw ConfigError("test sets in " + env_dir.string() +
                      " were generated for a different world than run " +
                      run_dir.string());
  }
  std::vector<learn::TypePropertyPair> pairs;
  std::map<std::string, std::size_t> sizes;
  std::string mode;
  try {
    pairs = learn::pairs_from_json(report.at("pairs"));
    sizes = report.at("dataset_sizes").get<std::map<std::string, std::size_t>>();
    mode = report.at("mode").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError((run_dir / "report.json").string() + ": " + e.what());
  }
  std::map<std::string, perception::ClassifierModel> models;
  eval::TestSets tests;
  for (const auto& p : pairs) {
    std::string key = agent::dataset_key(p.type_name(), p.prop_name());
    fs::path model = run_dir / "models" / (key_file(key) + ".json");
    if (!fs::exists(model)) throw IoError("missing model " + model.string());
    models.emplace(key, perception::model_from_json(read_json(model)));
    fs::path test = env_dir / "testsets" / (key_file(key) + ".csv");
    if (fs::exists(test)) {
      tests[key] = eval::testset_from_csv(read_file(test), p.type_name(), p.prop_name());
    }
  }
  return eval::evaluate(pairs, models, sizes, tests, mode);
}

}  // namespace palop::cli
