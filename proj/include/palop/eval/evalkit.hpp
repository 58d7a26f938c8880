#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "palop/agent/agent.hpp"
#include "palop/error.hpp"
#include "palop/learn/extension.hpp"
#include "palop/perception/classifier.hpp"
#include "palop/perception/dataset.hpp"
#include "palop/sim/world.hpp"

namespace palop::eval {

using sim::Vec;

struct Example {
  Vec features;
  bool label = false;  // ground truth at the time of the view
  int object = 0;
  std::size_t step = 0;
};

// G_{t,p}, keyed like the agent's datasets ("tv/is_turned_on").
struct TestSet {
  std::string type_name;
  std::string property_name;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

using TestSets = std::map<std::string, TestSet>;

struct TestsetOptions {
  double resample_rate = 0.1;   // per object, property and step
  std::size_t max_steps = 0;    // 0: 100 per requested example, at least 10000
};

// Random walk through a private copy of the world. Every step each object
// re-draws its properties with probability resample_rate, then each visible
// object of a requested pair yields one view labeled by its true value.
inline TestSets generate_testset(const sim::World& world,
                                 const std::vector<learn::TypePropertyPair>& pairs,
                                 std::uint64_t seed, std::size_t size,
                                 const TestsetOptions& opts = {}) {
  if (size == 0) throw ConfigError("test set size must be at least 1");
  sim::World w = world;
  auto rng = sim::make_rng(seed, sim::Stream::kTestset);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  TestSets out;
  std::set<std::string> open;
  for (const auto& p : pairs) {
    std::string key = agent::dataset_key(p.type_name(), p.prop_name());
    out[key] = TestSet{p.type_name(), p.prop_name(), {}};
    for (const auto& o : w.objects) {
      if (o.type == p.type_predicate && o.properties.contains(p.property_predicate)) {
        open.insert(key);
      }
    }
  }
  const std::size_t limit =
      opts.max_steps > 0 ? opts.max_steps : std::max<std::size_t>(10000, 100 * size);
  for (std::size_t step = 0; step < limit && !open.empty(); ++step) {
    int choice = static_cast<int>(rng() % 6);
    if (choice < 4) {
      int dir = 90 * choice;
      sim::Cell d = sim::heading_step(dir);
      sim::Cell to{w.agent.cell.x + d.x, w.agent.cell.y + d.y};
      w.agent.heading = dir;
      if (w.inside(to) && !w.occupied(to)) w.agent.cell = to;
    } else {
      w.agent.heading = sim::normalize_heading(w.agent.heading + (choice == 4 ? 90 : -90));
    }
    for (auto& o : w.objects) {
      const sim::TypeSpec* t = w.config.find_type(o.type);
      for (const auto& p : t->properties) {
        if (uni(rng) < opts.resample_rate) {
          o.properties[p.name] = uni(rng) < p.prior;
        }
      }
    }
    for (const auto& p : pairs) {
      std::string key = agent::dataset_key(p.type_name(), p.prop_name());
      TestSet& set = out[key];
      for (const auto& o : w.objects) {
        if (set.size() >= size) break;
        if (o.type != p.type_predicate || !o.properties.contains(p.property_predicate)) {
          continue;
        }
        if (!w.visible(o.cell)) continue;
        Vec v = w.mean_view(o);
        for (auto& x : v) x += w.config.view_noise * normal(rng);
        set.examples.push_back({std::move(v), o.properties.at(p.property_predicate),
                                o.id, step});
      }
      if (set.size() >= size) open.erase(key);
    }
  }
  return out;
}

inline std::string to_csv(const TestSet& t) {
  std::ostringstream os;
  os << "step,object,label";
  std::size_t dim = t.empty() ? 0 : t.examples.front().features.size();
  for (std::size_t i = 0; i < dim; ++i) os << ",f" << i;
  os << "\n";
  for (const auto& e : t.examples) {
    os << e.step << "," << e.object << "," << (e.label ? 1 : 0);
    for (double x : e.features) os << "," << perception::format_double(x);
    os << "\n";
  }
  return os.str();
}

inline TestSet testset_from_csv(const std::string& text, const std::string& type_name,
                                const std::string& property_name) {
  perception::TrainingSet rows =
      perception::training_set_from_csv(text, type_name, property_name);
  TestSet t{type_name, property_name, {}};
  for (auto& s : rows.samples) {
    int object = 0;
    try {
      object = std::stoi(s.constant);
    } catch (const std::logic_error&) {
      throw Error("malformed object id in test set: " + s.constant);
    }
    t.examples.push_back({std::move(s.features), s.positive, object, s.step});
  }
  return t;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
};

// No positive predictions gives (0, 0), as does an empty positive class.
inline Metrics precision_recall(const Confusion& c) {
  Metrics m;
  if (c.tp + c.fp == 0) return m;
  m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0
                 ? 0.0
                 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return m;
}

inline Confusion confusion(const perception::ClassifierModel& model, const TestSet& t) {
  Confusion c;
  for (const auto& e : t.examples) {
    bool predicted = perception::classifier_predict(model, e.features).positive;
    if (predicted && e.label) ++c.tp;
    else if (predicted) ++c.fp;
    else if (e.label) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline std::optional<Metrics> precision_recall(const perception::ClassifierModel& model,
                                               const TestSet& t) {
  if (t.empty()) return std::nullopt;
  return precision_recall(confusion(model, t));
}

struct MetricsRow {
  std::string type;
  std::string property;
  std::size_t g = 0;  // |G_{t,p}|
  std::size_t t = 0;  // training examples behind ρ_{t,p}
  std::optional<double> precision;
  std::optional<double> recall;
  std::string mode;   // "ND" or "GTD"
};

// One row per pair. Rows without a test set or a trained model stay absent.
inline std::vector<MetricsRow> evaluate(
    const std::vector<learn::TypePropertyPair>& pairs,
    const std::map<std::string, perception::ClassifierModel>& models,
    const std::map<std::string, std::size_t>& training_sizes, const TestSets& tests,
    const std::string& mode) {
  std::vector<MetricsRow> rows;
  for (const auto& p : pairs) {
    MetricsRow r;
    r.type = p.type_name();
    r.property = p.prop_name();
    r.mode = mode;
    auto pos = training_sizes.find(agent::dataset_key(p.type_name(), p.prop_name()));
    auto neg = training_sizes.find(agent::dataset_key(p.type_name(), p.neg_prop_name()));
    if (pos != training_sizes.end()) r.t += pos->second;
    if (neg != training_sizes.end()) r.t += neg->second;
    auto test = tests.find(agent::dataset_key(p.type_name(), p.prop_name()));
    if (test != tests.end()) r.g = test->second.size();
    auto model = models.find(agent::dataset_key(p.type_name(), p.prop_name()));
    if (test != tests.end() && model != models.end() && model->second.trained()) {
      if (auto m = precision_recall(model->second, test->second)) {
        r.precision = m->precision;
        r.recall = m->recall;
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

struct Weighted {
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t g = 0;
  std::size_t t = 0;
};

// |G|-weighted mean over the rows of one mode that carry metrics.
inline Weighted weighted_average(const std::vector<MetricsRow>& rows,
                                 const std::string& mode) {
  Weighted w;
  double sp = 0, sr = 0, total = 0;
  for (const auto& r : rows) {
    if (r.mode != mode) continue;
    w.g += r.g;
    w.t += r.t;
    if (!r.precision || r.g == 0) continue;
    auto weight = static_cast<double>(r.g);
    sp += weight * *r.precision;
    sr += weight * *r.recall;
    total += weight;
  }
  if (total > 0) {
    w.precision = sp / total;
    w.recall = sr / total;
  }
  return w;
}

inline const std::vector<std::string>& modes() {
  static const std::vector<std::string> m{"ND", "GTD"};
  return m;
}

// Per-type rows with ND/GTD columns side by side and a weighted average.
struct Report {
  std::string property;
  std::vector<std::string> types;
  std::map<std::pair<std::string, std::string>, MetricsRow> cells;  // (type, mode)
  std::map<std::string, Weighted> average;                           // mode
};

inline Report report(const std::vector<MetricsRow>& rows) {
  Report r;
  if (!rows.empty()) r.property = rows.front().property;
  std::set<std::string> types;
  for (const auto& row : rows) {
    if (row.property != r.property) {
      throw Error("report rows mix properties " + r.property + " and " + row.property);
    }
    types.insert(row.type);
    r.cells[{row.type, row.mode}] = row;
  }
  r.types.assign(types.begin(), types.end());
  for (const auto& m : modes()) r.average[m] = weighted_average(rows, m);
  return r;
}

namespace detail {

inline std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

inline nlohmann::json value(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << "type,G_ND,G_GTD,T_ND,T_GTD,P_ND,P_GTD,R_ND,R_GTD\n";
  auto get = [&](const std::string& type, const std::string& mode) {
    auto it = r.cells.find({type, mode});
    return it == r.cells.end() ? std::optional<MetricsRow>{} : it->second;
  };
  for (const auto& type : r.types) {
    auto nd = get(type, "ND");
    auto gtd = get(type, "GTD");
    auto count = [](const std::optional<MetricsRow>& x, bool g) {
      return x ? std::to_string(g ? x->g : x->t) : std::string("-");
    };
    auto metric = [](const std::optional<MetricsRow>& x, bool p) {
      return x ? detail::cell(p ? x->precision : x->recall) : std::string("-");
    };
    os << type << "," << count(nd, true) << "," << count(gtd, true) << ","
       << count(nd, false) << "," << count(gtd, false) << "," << metric(nd, true)
       << "," << metric(gtd, true) << "," << metric(nd, false) << ","
       << metric(gtd, false) << "\n";
  }
  const Weighted& nd = r.average.at("ND");
  const Weighted& gtd = r.average.at("GTD");
  os << "weighted_avg," << nd.g << "," << gtd.g << "," << nd.t << "," << gtd.t << ","
     << detail::cell(nd.precision) << "," << detail::cell(gtd.precision) << ","
     << detail::cell(nd.recall) << "," << detail::cell(gtd.recall) << "\n";
  return os.str();
}

inline nlohmann::json to_json(const MetricsRow& row) {
  return {{"type", row.type},
          {"property", row.property},
          {"mode", row.mode},
          {"G", row.g},
          {"T", row.t},
          {"precision", detail::value(row.precision)},
          {"recall", detail::value(row.recall)}};
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& type : r.types) {
    for (const auto& m : modes()) {
      if (auto it = r.cells.find({type, m}); it != r.cells.end()) {
        rows.push_back(to_json(it->second));
      }
    }
  }
  nlohmann::json avg = nlohmann::json::object();
  for (const auto& [mode, w] : r.average) {
    avg[mode] = {{"G", w.g},
                 {"T", w.t},
                 {"precision", detail::value(w.precision)},
                 {"recall", detail::value(w.recall)}};
  }
  return {{"property", r.property}, {"rows", rows}, {"weighted_avg", avg}};
}

// Rows grouped by property, one report each.
inline std::map<std::string, Report> reports(const std::vector<MetricsRow>& rows) {
  std::map<std::string, std::vector<MetricsRow>> by;
  for (const auto& r : rows) by[r.property].push_back(r);
  std::map<std::string, Report> out;
  for (const auto& [p, rs] : by) out[p] = report(rs);
  return out;
}

}  // namespace palop::eval
