#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "palop/error.hpp"
#include "palop/sim/grid.hpp"

namespace palop::sim {

struct PropertySpec {
  std::string name;
  double prior = 0.5;
  double signal = 1.0;
};

struct TypeSpec {
  std::string name;
  int count = 0;
  std::vector<PropertySpec> properties;
};

struct DetectorConfig {
  double miss_rate = 0.0;
  double misclassification_rate = 0.0;
  double feature_jitter = 0.0;
  double spurious_rate = 0.0;
};

struct WorldConfig {
  std::uint64_t seed = 0;
  int width = 10;
  int height = 10;
  int feature_dim = 8;
  double view_noise = 0.1;        // σ of per-view Gaussian noise
  double type_scale = 1.0;        // spread of per-type mean appearance
  double object_spread = 0.1;     // per-object deviation from the type mean
  double view_range = 4.0;
  int interaction_range = 1;      // Chebyshev
  double action_failure_rate = 0.05;
  int max_steps = 2000;
  DetectorConfig detector;        // used in ND mode only
  std::vector<TypeSpec> types;

  const TypeSpec* find_type(const std::string& name) const {
    for (const auto& t : types) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  void validate() const {
    auto rate = [](double r, const char* what) {
      if (!(r >= 0.0 && r <= 1.0)) {
        throw ConfigError(std::string(what) + " must lie in [0,1]");
      }
    };
    if (width < 1 || height < 1) throw ConfigError("grid must be at least 1x1");
    if (feature_dim < 2) throw ConfigError("feature_dim must be >= 2");
    if (view_noise < 0 || type_scale < 0 || object_spread < 0) {
      throw ConfigError("noise and spread parameters must be non-negative");
    }
    if (view_range <= 0) throw ConfigError("view_range must be positive");
    if (interaction_range < 1) throw ConfigError("interaction_range must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be positive");
    rate(action_failure_rate, "action_failure_rate");
    rate(detector.miss_rate, "detector.miss_rate");
    rate(detector.misclassification_rate, "detector.misclassification_rate");
    rate(detector.spurious_rate, "detector.spurious_rate");
    if (detector.feature_jitter < 0) throw ConfigError("feature_jitter must be >= 0");
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (types[i].name.empty()) throw ConfigError("type without name");
      if (types[i].count < 0) throw ConfigError("negative count for " + types[i].name);
      for (std::size_t j = 0; j < i; ++j) {
        if (types[j].name == types[i].name) {
          throw ConfigError("duplicate type " + types[i].name);
        }
      }
      for (const auto& p : types[i].properties) {
        rate(p.prior, "property prior");
      }
    }
  }
};

inline void from_json(const nlohmann::json& j, PropertySpec& p) {
  p.name = j.at("name").get<std::string>();
  p.prior = j.value("prior", p.prior);
  p.signal = j.value("signal", p.signal);
}

inline void from_json(const nlohmann::json& j, TypeSpec& t) {
  t.name = j.at("name").get<std::string>();
  t.count = j.value("count", 0);
  if (j.contains("properties")) {
    t.properties = j.at("properties").get<std::vector<PropertySpec>>();
  }
}

inline void from_json(const nlohmann::json& j, DetectorConfig& d) {
  d.miss_rate = j.value("miss_rate", d.miss_rate);
  d.misclassification_rate = j.value("misclassification_rate", d.misclassification_rate);
  d.feature_jitter = j.value("feature_jitter", d.feature_jitter);
  d.spurious_rate = j.value("spurious_rate", d.spurious_rate);
}

inline void from_json(const nlohmann::json& j, WorldConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.view_noise = j.value("view_noise", c.view_noise);
  c.type_scale = j.value("type_scale", c.type_scale);
  c.object_spread = j.value("object_spread", c.object_spread);
  c.view_range = j.value("view_range", c.view_range);
  c.interaction_range = j.value("interaction_range", c.interaction_range);
  c.action_failure_rate = j.value("action_failure_rate", c.action_failure_rate);
  c.max_steps = j.value("max_steps", c.max_steps);
  if (j.contains("detector")) c.detector = j.at("detector").get<DetectorConfig>();
  if (j.contains("types")) c.types = j.at("types").get<std::vector<TypeSpec>>();
}

inline nlohmann::json to_json(const WorldConfig& c) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : c.types) {
    nlohmann::json props = nlohmann::json::array();
    for (const auto& p : t.properties) {
      props.push_back({{"name", p.name}, {"prior", p.prior}, {"signal", p.signal}});
    }
    types.push_back({{"name", t.name}, {"count", t.count}, {"properties", props}});
  }
  return {{"seed", c.seed},
          {"width", c.width},
          {"height", c.height},
          {"feature_dim", c.feature_dim},
          {"view_noise", c.view_noise},
          {"type_scale", c.type_scale},
          {"object_spread", c.object_spread},
          {"view_range", c.view_range},
          {"interaction_range", c.interaction_range},
          {"action_failure_rate", c.action_failure_rate},
          {"max_steps", c.max_steps},
          {"detector",
           {{"miss_rate", c.detector.miss_rate},
            {"misclassification_rate", c.detector.misclassification_rate},
            {"feature_jitter", c.detector.feature_jitter},
            {"spurious_rate", c.detector.spurious_rate}}},
          {"types", types}};
}

inline WorldConfig parse_world_config(const nlohmann::json& j) {
  WorldConfig c;
  try {
    c = j.get<WorldConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("world config: ") + e.what());
  }
  c.validate();
  return c;
}

// Independent deterministic stream per purpose.
enum class Stream : std::uint32_t {
  kWorld = 1,
  kAct = 2,
  kRender = 3,
  kDetect = 4,
  kTestset = 5,
  kTrain = 6,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream s,
                                std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s),
                    static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

using Vec = std::vector<double>;

struct WorldObject {
  int id = 0;
  std::string type;
  Cell cell;
  std::map<std::string, bool> properties;  // applicable properties only
  Vec prototype;
};

struct World {
  WorldConfig config;
  std::vector<WorldObject> objects;
  std::map<std::string, Vec> type_means;
  std::map<std::pair<std::string, std::string>, Vec> directions;  // unit vectors
  Pose agent;

  const WorldObject* object_at(Cell c) const {
    for (const auto& o : objects) {
      if (o.cell == c) return &o;
    }
    return nullptr;
  }
  WorldObject* find(int id) {
    for (auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }
  const WorldObject* find(int id) const {
    for (const auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }
  bool inside(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < config.width && c.y < config.height;
  }
  bool occupied(Cell c) const { return object_at(c) != nullptr; }

  // Line of sight within the view cone; other objects occlude.
  bool visible(Cell c) const {
    if (!in_cone(agent, c, config.view_range)) return false;
    for (Cell between : cells_between(agent.cell, c)) {
      if (occupied(between)) return false;
    }
    return true;
  }

  // prototype + Σ signal·direction over true properties.
  Vec mean_view(const WorldObject& o) const {
    Vec v = o.prototype;
    const TypeSpec* t = config.find_type(o.type);
    for (const auto& p : t->properties) {
      if (!o.properties.at(p.name)) continue;
      const Vec& d = directions.at({o.type, p.name});
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += p.signal * d[i];
    }
    return v;
  }
};

// Deterministic in (cfg, cfg.seed): placement, valuations, appearance.
inline World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World w;
  w.config = cfg;
  auto rng = make_rng(cfg.seed, Stream::kWorld);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto dim = static_cast<std::size_t>(cfg.feature_dim);

  std::size_t population = 0;
  for (const auto& t : cfg.types) population += static_cast<std::size_t>(t.count);
  const std::size_t cells = static_cast<std::size_t>(cfg.width) * cfg.height;
  if (population + 1 > cells) {
    throw ConfigError("population of " + std::to_string(population) +
                      " objects plus the agent does not fit " +
                      std::to_string(cells) + " cells");
  }

  for (const auto& t : cfg.types) {
    Vec mean(dim);
    for (auto& x : mean) x = cfg.type_scale * normal(rng);
    w.type_means[t.name] = mean;
    for (const auto& p : t.properties) {
      Vec d(dim);
      double norm = 0;
      for (auto& x : d) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (auto& x : d) x /= norm;
      w.directions[{t.name, p.name}] = d;
    }
  }

  std::vector<Cell> free;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) free.push_back({x, y});
  }
  std::shuffle(free.begin(), free.end(), rng);
  std::size_t next = 0;
  w.agent.cell = free[next++];
  w.agent.heading = 90 * static_cast<int>(rng() % 4);

  int id = 0;
  for (const auto& t : cfg.types) {
    for (int k = 0; k < t.count; ++k) {
      WorldObject o;
      o.id = id++;
      o.type = t.name;
      o.cell = free[next++];
      for (const auto& p : t.properties) {
        o.properties[p.name] = std::bernoulli_distribution(p.prior)(rng);
      }
      o.prototype = w.type_means[t.name];
      for (auto& x : o.prototype) x += cfg.object_spread * normal(rng);
      w.objects.push_back(std::move(o));
    }
  }
  return w;
}

inline nlohmann::json to_json(const World& w) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : w.objects) {
    objects.push_back({{"id", o.id},
                       {"type", o.type},
                       {"x", o.cell.x},
                       {"y", o.cell.y},
                       {"properties", o.properties},
                       {"prototype", o.prototype}});
  }
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& [key, d] : w.directions) {
    dirs.push_back({{"type", key.first}, {"property", key.second}, {"direction", d}});
  }
  nlohmann::json means = nlohmann::json::object();
  for (const auto& [t, m] : w.type_means) means[t] = m;
  return {{"config", to_json(w.config)},
          {"type_means", means},
          {"agent", {{"x", w.agent.cell.x}, {"y", w.agent.cell.y},
                     {"heading", w.agent.heading}}},
          {"objects", objects},
          {"directions", dirs}};
}

}  // namespace palop::sim
