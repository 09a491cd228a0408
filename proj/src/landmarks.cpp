#include "hipmark/landmarks.hpp"

#include <cmath>

namespace hipmark {

namespace {

const std::array<std::string, kNumCategories> kCategoryNames = {
    "Innermost point of the ilium",
    "Center of the Y-shaped cartilage",
    "Upper edge of the acetabular surface",
    "Lower edge of the acetabular surface",
    "Fovea of the ligamentum teres",
    "Center of the femoral head",
    "Tip of the greater trochanter",
    "Lower edge of the teardrop",
    "Bottom of the ischium",
    "Distal midpoint of the femoral neck",
    "Proximal midpoint of the femoral shaft",
    "Distal midpoint of the femoral shaft",
};

// Category pairs for one side; segments a clinician would draw for the
// standard hip parameters (neck-shaft angle, offsets, acetabular angles,
// Skinner and Kohler lines).
constexpr int kSideEdges[][2] = {
    {6, 10}, {10, 11}, {11, 12}, {6, 11}, {6, 8}, {3, 6},
    {2, 3},  {3, 4},   {3, 8},   {5, 7},  {7, 11}, {1, 9},
};

std::array<LandmarkSpec, kNumLandmarks> make_table() {
  std::array<LandmarkSpec, kNumLandmarks> t{};
  for (int cat = 1; cat <= kNumCategories; ++cat) {
    for (Side side : {Side::Left, Side::Right}) {
      const int gid = global_id(cat, side);
      t[gid] = LandmarkSpec{cat, side, kCategoryNames[cat - 1], gid};
    }
  }
  return t;
}

}  // namespace

const std::array<LandmarkSpec, kNumLandmarks>& landmark_table() {
  static const auto table = make_table();
  return table;
}

const std::string& category_name(int category) {
  return kCategoryNames[category - 1];
}

SkeletonGraph build_default_skeleton() {
  SkeletonGraph g;
  int index = 0;
  for (Side side : {Side::Left, Side::Right}) {
    for (const auto& e : kSideEdges) {
      SkeletonEdge edge;
      edge.a = global_id(e[0], side);
      edge.b = global_id(e[1], side);
      edge.index = index++;
      edge.side = side;
      g.edges.push_back(edge);
    }
  }
  return g;
}

AnnotatedImage mirror_landmarks(const AnnotatedImage& a) {
  AnnotatedImage out = a;
  out.pixels = a.pixels.rowwise().reverse();
  const double w1 = static_cast<double>(a.width() - 1);
  for (int cat = 1; cat <= kNumCategories; ++cat) {
    const int gl = global_id(cat, Side::Left);
    const int gr = global_id(cat, Side::Right);
    Landmark l = a.landmarks[gl];
    Landmark r = a.landmarks[gr];
    if (l.visible) l.x = w1 - l.x;
    if (r.visible) r.x = w1 - r.x;
    out.landmarks[gl] = r;
    out.landmarks[gr] = l;
  }
  return out;
}

std::vector<Violation> validate_annotation(const AnnotatedImage& a) {
  std::vector<Violation> v;
  if (!(a.spacing_x > 0.0))
    v.push_back({"positive-spacing", -1, "spacing_x must be > 0"});
  if (!(a.spacing_y > 0.0))
    v.push_back({"positive-spacing", -1, "spacing_y must be > 0"});
  if (a.pixels.size() > 0) {
    const double lo = a.pixels.minCoeff();
    const double hi = a.pixels.maxCoeff();
    if (lo < 0.0 || hi > 1.0)
      v.push_back({"pixel-range", -1, "pixel values must lie in [0,1]"});
  } else {
    v.push_back({"nonempty-image", -1, "image has no pixels"});
  }
  const double w = static_cast<double>(a.width());
  const double h = static_cast<double>(a.height());
  bool any_invisible = false;
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    const Landmark& lm = a.landmarks[gid];
    if (!lm.visible) {
      any_invisible = true;
      continue;
    }
    if (lm.x < 0.0 || lm.x >= w || lm.y < 0.0 || lm.y >= h)
      v.push_back({"landmark-in-bounds", gid,
                   "visible landmark lies outside the image"});
    if (!std::isfinite(lm.x) || !std::isfinite(lm.y))
      v.push_back({"landmark-finite", gid, "landmark coordinate is not finite"});
  }
  if (a.structured == any_invisible)
    v.push_back({"structured-flag", -1,
                 "structured flag must be true iff all landmarks are visible"});
  return v;
}

}  // namespace hipmark
