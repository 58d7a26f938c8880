#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

namespace palop::sim {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

// Heading in degrees: 0 = +x, 90 = +y, 180 = -x, 270 = -y.
struct Pose {
  Cell cell;
  int heading = 0;
  bool operator==(const Pose&) const = default;
};

inline int normalize_heading(int h) { return ((h % 360) + 360) % 360; }

inline Cell heading_step(int heading) {
  switch (normalize_heading(heading)) {
    case 0:
      return {1, 0};
    case 90:
      return {0, 1};
    case 180:
      return {-1, 0};
    default:
      return {0, -1};
  }
}

inline double distance(Cell a, Cell b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline int chebyshev(Cell a, Cell b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Inside the ±45° cone around the heading and within range.
inline bool in_cone(const Pose& p, Cell c, double range) {
  int dx = c.x - p.cell.x;
  int dy = c.y - p.cell.y;
  if (dx == 0 && dy == 0) return false;
  double d = std::hypot(dx, dy);
  if (d > range + 1e-9) return false;
  Cell h = heading_step(p.heading);
  double cosang = (dx * h.x + dy * h.y) / d;
  return cosang >= std::cos(M_PI / 4) - 1e-9;
}

// Cells strictly between a and b on the Bresenham line.
inline std::vector<Cell> cells_between(Cell a, Cell b) {
  std::vector<Cell> out;
  int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
  int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  Cell c = a;
  while (!(c.x == b.x && c.y == b.y)) {
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      c.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      c.y += sy;
    }
    if (!(c.x == b.x && c.y == b.y)) out.push_back(c);
  }
  return out;
}

// Heading (multiple of 90) that best faces `to` from `from`.
inline int heading_towards(Cell from, Cell to) {
  int dx = to.x - from.x;
  int dy = to.y - from.y;
  if (std::abs(dx) >= std::abs(dy)) return dx >= 0 ? 0 : 180;
  return dy >= 0 ? 90 : 270;
}

}  // namespace palop::sim
