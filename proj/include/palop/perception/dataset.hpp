#pragma once

#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "palop/error.hpp"
#include "palop/sim/world.hpp"

namespace palop::perception {

using sim::Vec;

// One labeled view. `positive` is the label the agent believed when the
// view was taken, i.e. the valuation of its Known atoms.
struct Sample {
  Vec features;
  bool positive = true;
  std::string constant;
  std::size_t step = 0;
  std::string type_name;
  std::string property_name;
};

// T_{t,p}: append-only store for one type-name / property-name pair.
struct TrainingSet {
  std::string type_name;
  std::string property_name;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

inline void dataset_add(TrainingSet& t, Sample s) {
  if (s.type_name != t.type_name || s.property_name != t.property_name) {
    throw Error("sample for (" + s.type_name + "," + s.property_name +
                ") added to T(" + t.type_name + "," + t.property_name + ")");
  }
  if (!t.samples.empty() && t.samples.front().features.size() != s.features.size()) {
    throw Error("feature dimension mismatch in T(" + t.type_name + "," +
                t.property_name + ")");
  }
  t.samples.push_back(std::move(s));
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// step,constant,label,f0,...,f{D-1}; label is 1 for positive.
inline std::string to_csv(const TrainingSet& t) {
  std::ostringstream os;
  os << "step,constant,label";
  std::size_t dim = t.samples.empty() ? 0 : t.samples.front().features.size();
  for (std::size_t i = 0; i < dim; ++i) os << ",f" << i;
  os << "\n";
  for (const auto& s : t.samples) {
    os << s.step << "," << s.constant << "," << (s.positive ? 1 : 0);
    for (double x : s.features) os << "," << format_double(x);
    os << "\n";
  }
  return os.str();
}

inline TrainingSet training_set_from_csv(const std::string& text,
                                         const std::string& type_name,
                                         const std::string& property_name) {
  TrainingSet t{type_name, property_name, {}};
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (lineno++ == 0 || line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() < 3) {
      throw Error("malformed dataset row " + std::to_string(lineno));
    }
    Sample s;
    try {
      s.step = std::stoul(cells[0]);
      s.constant = cells[1];
      s.positive = cells[2] == "1";
      for (std::size_t i = 3; i < cells.size(); ++i) {
        s.features.push_back(std::stod(cells[i]));
      }
    } catch (const std::logic_error&) {
      throw Error("malformed dataset row " + std::to_string(lineno));
    }
    s.type_name = type_name;
    s.property_name = property_name;
    t.samples.push_back(std::move(s));
  }
  return t;
}

}  // namespace palop::perception
