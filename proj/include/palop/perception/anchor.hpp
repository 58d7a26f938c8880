#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "palop/sim/simulator.hpp"

namespace palop::perception {

using sim::Cell;
using sim::Vec;

struct Anchor {
  std::string constant;
  std::string type;      // type predicate, e.g. "Tv"
  Vec centroid;
  Cell cell;             // last seen position
  std::size_t count = 0;
};

struct AnchorThresholds {
  double position = 0.5;   // grid cells; detections report exact cells
  double features = 0.3;   // RMS per dimension
};

// Default feature gate: three noise standard deviations.
inline AnchorThresholds default_thresholds(double view_noise, double jitter) {
  return {0.5, std::max(3.0 * std::max(view_noise, jitter), 1e-9)};
}

inline double rms_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.empty()) return std::numeric_limits<double>::infinity();
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

inline std::string constant_prefix(const std::string& type) {
  std::string out;
  for (char c : type) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct MatchResult {
  std::string constant;
  bool created = false;
};

class AnchorStore {
 public:
  explicit AnchorStore(AnchorThresholds th = {}) : th_(th) {}

  const std::vector<Anchor>& anchors() const { return anchors_; }
  const AnchorThresholds& thresholds() const { return th_; }

  const Anchor* find(const std::string& constant) const {
    for (const auto& a : anchors_) {
      if (a.constant == constant) return &a;
    }
    return nullptr;
  }

  // Index of the best admissible anchor, or -1. `taken` excludes anchors
  // already claimed by another detection of the same percept.
  long best_match(const sim::Detection& d, const std::vector<char>& taken) const {
    long best = -1;
    double best_pos = 0, best_feat = 0;
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      const Anchor& a = anchors_[i];
      if (taken.size() > i && taken[i]) continue;
      if (a.type != d.type) continue;
      double dp = sim::distance(a.cell, d.cell);
      if (dp > th_.position + 1e-9) continue;
      double df = rms_distance(a.centroid, d.features);
      if (df > th_.features) continue;
      if (best < 0 || std::tie(dp, df) < std::tie(best_pos, best_feat)) {
        best = static_cast<long>(i);
        best_pos = dp;
        best_feat = df;
      }
    }
    return best;
  }

  MatchResult match(const sim::Detection& d) {
    std::vector<char> none;
    return match(d, none);
  }

  // Matches one percept one-to-one against the store.
  std::vector<MatchResult> process(const sim::Percept& p) {
    std::vector<char> taken(anchors_.size(), 0);
    std::vector<MatchResult> out;
    for (const auto& d : p.detections) out.push_back(match(d, taken));
    return out;
  }

 private:
  MatchResult match(const sim::Detection& d, std::vector<char>& taken) {
    long i = best_match(d, taken);
    if (i >= 0) {
      Anchor& a = anchors_[static_cast<std::size_t>(i)];
      ++a.count;
      for (std::size_t k = 0; k < a.centroid.size(); ++k) {
        a.centroid[k] += (d.features[k] - a.centroid[k]) / static_cast<double>(a.count);
      }
      a.cell = d.cell;
      if (taken.size() > static_cast<std::size_t>(i)) taken[i] = 1;
      return {a.constant, false};
    }
    std::string prefix = constant_prefix(d.type);
    Anchor a{prefix + std::to_string(counters_[prefix]++), d.type, d.features,
             d.cell, 1};
    anchors_.push_back(a);
    taken.push_back(1);
    return {a.constant, true};
  }

  AnchorThresholds th_;
  std::vector<Anchor> anchors_;
  std::map<std::string, std::size_t> counters_;
};

// Free-function form over an explicit store.
inline MatchResult anchor_match(const sim::Detection& d, AnchorStore& store) {
  return store.match(d);
}

}  // namespace palop::perception
