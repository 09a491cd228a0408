#pragma once

#include <array>
#include <string>
#include <vector>

#include "hipmark/types.hpp"

namespace hipmark {

inline constexpr int kNumCategories = 12;
inline constexpr int kNumLandmarks = 24;

enum class Side { Left = 0, Right = 1 };

inline Side other_side(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

// global id layout is fixed so channel order is stable everywhere:
// (category-1)*2 + (0 for Left, 1 for Right).
inline int global_id(int category, Side side) {
  return (category - 1) * 2 + (side == Side::Left ? 0 : 1);
}
inline int category_of(int gid) { return gid / 2 + 1; }
inline Side side_of(int gid) { return gid % 2 == 0 ? Side::Left : Side::Right; }
inline int mirrored_id(int gid) { return global_id(category_of(gid), other_side(side_of(gid))); }

struct LandmarkSpec {
  int category_index;  // 1..12
  Side side;
  std::string name;
  int gid;  // 0..23
};

// All 24 specs in global-id order.
const std::array<LandmarkSpec, kNumLandmarks>& landmark_table();
const std::string& category_name(int category);

struct SkeletonEdge {
  int a = 0;  // global id
  int b = 0;  // global id
  int index = 0;
  Side side = Side::Left;
};

struct SkeletonGraph {
  std::vector<SkeletonEdge> edges;

  int edge_count() const { return static_cast<int>(edges.size()); }

  std::vector<int> incident_edges(int gid) const {
    std::vector<int> out;
    for (const auto& e : edges)
      if (e.a == gid || e.b == gid) out.push_back(e.index);
    return out;
  }

  int degree(int gid) const { return static_cast<int>(incident_edges(gid).size()); }
};

// The per-side edge set induced by the clinical-parameter landmark groupings,
// mirrored onto both sides. 12 edges per side, 24 total.
SkeletonGraph build_default_skeleton();

struct Landmark {
  double x = -1.0;
  double y = -1.0;
  bool visible = false;
};

struct AnnotatedImage {
  MatrixXd pixels;  // h x w, values in [0,1]
  double spacing_x = 1.0;  // mm per px
  double spacing_y = 1.0;
  std::array<Landmark, kNumLandmarks> landmarks{};
  std::string id;
  bool structured = true;

  int height() const { return static_cast<int>(pixels.rows()); }
  int width() const { return static_cast<int>(pixels.cols()); }
};

// Horizontal flip: pixels mirrored, x -> width-1-x, Left/Right ids swapped
// within each category. Invisible landmarks keep their placeholder coords.
AnnotatedImage mirror_landmarks(const AnnotatedImage& a);

struct Violation {
  std::string invariant;
  int landmark = -1;  // global id, -1 when not landmark-specific
  std::string message;
};

// Reports every broken AnnotatedImage invariant; never throws.
std::vector<Violation> validate_annotation(const AnnotatedImage& a);

}  // namespace hipmark
