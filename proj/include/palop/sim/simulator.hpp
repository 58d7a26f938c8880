#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "palop/error.hpp"
#include "palop/sim/world.hpp"

namespace palop::sim {

enum class DetectionMode { kND, kGTD };

inline const char* to_string(DetectionMode m) {
  return m == DetectionMode::kND ? "ND" : "GTD";
}

inline DetectionMode parse_mode(const std::string& s) {
  if (s == "ND" || s == "nd") return DetectionMode::kND;
  if (s == "GTD" || s == "gtd") return DetectionMode::kGTD;
  throw ConfigError("unknown detection mode " + s + " (expected ND or GTD)");
}

struct Detection {
  std::string type;
  Vec features;
  Cell cell;
  double confidence = 1.0;
};

struct Percept {
  Pose pose;
  std::vector<Detection> detections;
};

struct Move {
  int direction = 0;  // absolute heading of the translation
};
struct Rotate {
  int angle = 90;
};
struct Act {
  int object = 0;
  std::string op;
};
using LowLevelOp = std::variant<Move, Rotate, Act>;

// Property changes a base operator causes on its object.
struct Effect {
  std::string property;
  bool value = true;
};
using Manipulations = std::map<std::string, std::vector<Effect>>;

struct StepResult {
  bool ok = true;
  std::string error;
  Percept percept;
};

class Simulator {
 public:
  Simulator(World world, DetectionMode mode, Manipulations manipulations = {})
      : world_(std::move(world)),
        mode_(mode),
        manipulations_(std::move(manipulations)),
        act_rng_(make_rng(world_.config.seed, Stream::kAct)),
        render_rng_(make_rng(world_.config.seed, Stream::kRender)),
        detect_rng_(make_rng(world_.config.seed, Stream::kDetect)) {}

  const World& world() const { return world_; }
  DetectionMode mode() const { return mode_; }
  const Pose& pose() const { return world_.agent; }
  std::size_t silent_failures() const { return silent_failures_; }

  StepResult step(const LowLevelOp& op) {
    StepResult r;
    if (const auto* m = std::get_if<Move>(&op)) {
      if (normalize_heading(m->direction) % 90 != 0) {
        r.ok = false;
        r.error = "move direction must be a multiple of 90";
      } else {
        Cell d = heading_step(m->direction);
        Cell to{world_.agent.cell.x + d.x, world_.agent.cell.y + d.y};
        world_.agent.heading = normalize_heading(m->direction);
        if (!world_.inside(to)) {
          r.ok = false;
          r.error = "out of bounds";
        } else if (world_.occupied(to)) {
          r.ok = false;
          r.error = "cell occupied";
        } else {
          world_.agent.cell = to;
        }
      }
    } else if (const auto* rot = std::get_if<Rotate>(&op)) {
      if (rot->angle % 90 != 0) {
        r.ok = false;
        r.error = "rotation must be a multiple of 90";
      } else {
        world_.agent.heading = normalize_heading(world_.agent.heading + rot->angle);
      }
    } else {
      const auto& a = std::get<Act>(op);
      r.error = act(a);
      r.ok = r.error.empty();
    }
    r.percept = percept();
    return r;
  }

  // Detections from the current pose; consumes detector randomness in ND.
  Percept percept() {
    Percept p;
    p.pose = world_.agent;
    const auto& det = world_.config.detector;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& o : world_.objects) {
      if (!world_.visible(o.cell)) continue;
      Detection d{o.type, o.prototype, o.cell, 1.0};
      if (mode_ == DetectionMode::kND) {
        if (uni(detect_rng_) < det.miss_rate) continue;
        if (uni(detect_rng_) < det.misclassification_rate) {
          d.type = other_type(o.type);
        }
        for (auto& x : d.features) x += det.feature_jitter * normal(detect_rng_);
        d.confidence = 0.5 + 0.5 * uni(detect_rng_);
      }
      p.detections.push_back(std::move(d));
    }
    if (mode_ == DetectionMode::kND && !world_.config.types.empty() &&
        uni(detect_rng_) < det.spurious_rate) {
      std::vector<Cell> candidates;
      for (int y = 0; y < world_.config.height; ++y) {
        for (int x = 0; x < world_.config.width; ++x) {
          Cell c{x, y};
          if (!world_.occupied(c) && world_.visible(c)) candidates.push_back(c);
        }
      }
      if (!candidates.empty()) {
        Cell c = candidates[detect_rng_() % candidates.size()];
        const auto& t = world_.config.types[detect_rng_() % world_.config.types.size()];
        Vec f = world_.type_means.at(t.name);
        for (auto& x : f) {
          x += world_.config.object_spread * normal(detect_rng_) +
               det.feature_jitter * normal(detect_rng_);
        }
        p.detections.push_back({t.name, std::move(f), c, 0.5 + 0.5 * uni(detect_rng_)});
      }
    }
    return p;
  }

  // k noisy appearance vectors of a visible object.
  std::vector<Vec> render_views(int id, int k) {
    const WorldObject* o = world_.find(id);
    if (o == nullptr) throw SimulationError("no object " + std::to_string(id));
    if (!world_.visible(o->cell)) {
      throw SimulationError("object " + std::to_string(id) + " is not visible");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const Vec mean = world_.mean_view(*o);
    std::vector<Vec> out;
    for (int i = 0; i < k; ++i) {
      Vec v = mean;
      for (auto& x : v) x += world_.config.view_noise * normal(render_rng_);
      out.push_back(std::move(v));
    }
    return out;
  }

  std::optional<int> object_at(Cell c) const {
    if (const WorldObject* o = world_.object_at(c)) return o->id;
    return std::nullopt;
  }

 private:
  std::string act(const Act& a) {
    WorldObject* o = world_.find(a.object);
    if (o == nullptr) return "no object " + std::to_string(a.object);
    if (chebyshev(o->cell, world_.agent.cell) > world_.config.interaction_range) {
      return "object out of interaction range";
    }
    auto it = manipulations_.find(a.op);
    if (it == manipulations_.end()) return "unknown manipulation " + a.op;
    for (const auto& e : it->second) {
      if (!o->properties.contains(e.property)) {
        return e.property + " does not apply to " + o->type;
      }
    }
    std::bernoulli_distribution fails(world_.config.action_failure_rate);
    if (fails(act_rng_)) {
      ++silent_failures_;
      return {};
    }
    for (const auto& e : it->second) o->properties[e.property] = e.value;
    return {};
  }

  std::string other_type(const std::string& t) {
    const auto& types = world_.config.types;
    if (types.size() < 2) return t;
    std::size_t k = detect_rng_() % (types.size() - 1);
    for (const auto& s : types) {
      if (s.name == t) continue;
      if (k-- == 0) return s.name;
    }
    return t;
  }

  World world_;
  DetectionMode mode_;
  Manipulations manipulations_;
  std::mt19937_64 act_rng_;
  std::mt19937_64 render_rng_;
  std::mt19937_64 detect_rng_;
  std::size_t silent_failures_ = 0;
};

inline nlohmann::json to_json(const Percept& p) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : p.detections) {
    dets.push_back({{"type", d.type},
                    {"x", d.cell.x},
                    {"y", d.cell.y},
                    {"confidence", d.confidence},
                    {"features", d.features}});
  }
  return {{"pose", {{"x", p.pose.cell.x}, {"y", p.pose.cell.y},
                    {"heading", p.pose.heading}}},
          {"detections", dets}};
}

}  // namespace palop::sim
