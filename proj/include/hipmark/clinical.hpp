#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <set>

#include "hipmark/landmarks.hpp"
#include "hipmark/types.hpp"

namespace hipmark {

// Standard radiographic hip parameters computed from kept landmarks. All
// lengths are in millimetres (coordinates are scaled by the pixel spacing
// before any geometry), angles in degrees. A parameter is null when a
// landmark it depends on is missing or suppressed.
struct SideClinicalParams {
  std::optional<double> neck_shaft_angle_deg;
  std::optional<double> femoral_offset_mm;
  std::optional<double> acetabular_offset_mm;
  std::optional<double> center_edge_angle_deg;
  std::optional<double> acetabular_index_deg;
  std::optional<double> sharp_angle_deg;
  std::optional<double> skinner_offset_mm;
  std::optional<bool> kohler_crossing;
};

struct ClinicalParams {
  SideClinicalParams left;
  SideClinicalParams right;
};

namespace detail {

inline double angle_between_deg(const Point2& u, const Point2& v) {
  const double nu = std::hypot(u.x, u.y), nv = std::hypot(v.x, v.y);
  const double c = std::clamp((u.x * v.x + u.y * v.y) / (nu * nv), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

// Acute angle between two undirected lines.
inline double line_angle_deg(const Point2& u, const Point2& v) {
  const double a = angle_between_deg(u, v);
  return a > 90.0 ? 180.0 - a : a;
}

inline double perp_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len = std::hypot(vx, vy);
  return std::abs((p.x - a.x) * vy - (p.y - a.y) * vx) / len;
}

}  // namespace detail

// `positions` are the kept landmark coordinates (image px); `kept[gid]` says
// whether the landmark survived suppression and was GT-identifiable.
inline ClinicalParams clinical_parameters(const std::array<Point2, kNumLandmarks>& positions,
                                          const std::array<bool, kNumLandmarks>& kept,
                                          double spacing_x, double spacing_y) {
  auto mm = [&](int gid) {
    return Point2{positions[gid].x * spacing_x, positions[gid].y * spacing_y};
  };

  // inter-teardrop reference for the acetabular angles; horizontal fallback
  // when either teardrop is unavailable
  Point2 reference{1.0, 0.0};
  {
    const int l8 = global_id(8, Side::Left), r8 = global_id(8, Side::Right);
    if (kept[l8] && kept[r8]) {
      const Point2 a = mm(l8), b = mm(r8);
      if (a.x != b.x || a.y != b.y) reference = {b.x - a.x, b.y - a.y};
    }
  }

  ClinicalParams out;
  for (Side side : {Side::Left, Side::Right}) {
    SideClinicalParams& p = side == Side::Left ? out.left : out.right;
    auto have = [&](std::initializer_list<int> cats) {
      for (int c : cats)
        if (!kept[global_id(c, side)]) return false;
      return true;
    };
    auto at = [&](int cat) { return mm(global_id(cat, side)); };

    if (have({6, 10, 11, 12})) {
      const Point2 neck{at(6).x - at(10).x, at(6).y - at(10).y};
      const Point2 shaft{at(12).x - at(11).x, at(12).y - at(11).y};
      p.neck_shaft_angle_deg = detail::angle_between_deg(neck, shaft);
    }
    if (have({6, 11, 12}))
      p.femoral_offset_mm = detail::perp_distance(at(6), at(11), at(12));
    if (have({6, 8})) {
      const Point2 a = at(6), b = at(8);
      p.acetabular_offset_mm = std::hypot(a.x - b.x, a.y - b.y);
    }
    if (have({3, 6})) {
      const Point2 up{0.0, -1.0};
      const Point2 edge{at(3).x - at(6).x, at(3).y - at(6).y};
      p.center_edge_angle_deg = detail::angle_between_deg(up, edge);
    }
    if (have({2, 3, 4})) {
      const Point2 roof{at(3).x - at(2).x, at(3).y - at(2).y};
      p.acetabular_index_deg = detail::line_angle_deg(roof, reference);
    }
    if (have({3, 8})) {
      const Point2 v{at(3).x - at(8).x, at(3).y - at(8).y};
      p.sharp_angle_deg = detail::line_angle_deg(v, reference);
    }
    if (have({5, 7, 11, 12})) {
      // Skinner line: perpendicular to the shaft axis through the greater
      // trochanter tip; report the signed offset of the fovea, positive when
      // proximal to the line.
      Point2 shaft{at(12).x - at(11).x, at(12).y - at(11).y};
      const double len = std::hypot(shaft.x, shaft.y);
      shaft.x /= len;
      shaft.y /= len;
      const double along = (at(5).x - at(7).x) * shaft.x + (at(5).y - at(7).y) * shaft.y;
      p.skinner_offset_mm = -along;
    }
    if (have({1, 9, 6})) {
      // Kohler line through the ilium and ischium points; flag when the head
      // centre falls medial to it.
      const Point2 a = at(1), b = at(9), h = at(6);
      const double cross = (b.x - a.x) * (h.y - a.y) - (b.y - a.y) * (h.x - a.x);
      p.kohler_crossing = side == Side::Right ? cross > 0.0 : cross < 0.0;
    }
  }
  return out;
}

}  // namespace hipmark
