#include <doctest.h>

#include <cmath>
#include <set>

#include "hipmark/encoding.hpp"
#include "hipmark/phantom.hpp"
#include "hipmark/rng.hpp"
#include "hipmark/uncertainty.hpp"

using namespace hipmark;

namespace {

std::array<Landmark, kNumLandmarks> empty_landmarks() {
  std::array<Landmark, kNumLandmarks> lms{};
  for (auto& lm : lms) {
    lm.visible = false;
    lm.x = -1.0;
    lm.y = -1.0;
  }
  return lms;
}

}  // namespace

TEST_CASE("heatmap: landmark on a grid cell gives peak 1 and exp(-1/8) next door") {
  auto lms = empty_landmarks();
  lms[0] = {40.0, 40.0, true};  // cell (10,10) at stride 4
  const auto hm = encode_heatmaps<double>(lms, 24, 24, 4, 2.0);
  CHECK(hm.at(0, 10, 10) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hm.at(0, 10, 11) == doctest::Approx(std::exp(-1.0 / 8.0)).epsilon(1e-12));
  CHECK(hm.at(0, 11, 10) == doctest::Approx(std::exp(-1.0 / 8.0)).epsilon(1e-12));
}

TEST_CASE("heatmap: invisible landmark channel is all zero") {
  auto lms = empty_landmarks();
  lms[3] = {40.0, 40.0, true};
  const auto hm = encode_heatmaps<double>(lms, 24, 24, 4, 2.0);
  for (int k = 0; k < kNumLandmarks; ++k) {
    if (k == 3) continue;
    CHECK(hm.data.row(k).maxCoeff() == 0.0);
  }
}

TEST_CASE("heatmap: channel sum approximates 2*pi*sigma^2 away from borders") {
  auto lms = empty_landmarks();
  lms[0] = {24.0 * 4, 24.0 * 4, true};  // centre cell of a 48x48 grid
  const double sigma = 2.0;
  const auto hm = encode_heatmaps<double>(lms, 48, 48, 4, sigma);
  const double expected = 2.0 * M_PI * sigma * sigma;
  CHECK(hm.data.row(0).sum() == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("heatmap: values stay in [0,1] for sub-cell landmark positions") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto lms = empty_landmarks();
    lms[0] = {rng.uniform(8.0, 88.0), rng.uniform(8.0, 88.0), true};
    const auto hm = encode_heatmaps<double>(lms, 24, 24, 4, 2.0);
    CHECK(hm.data.row(0).minCoeff() >= 0.0);
    CHECK(hm.data.row(0).maxCoeff() <= 1.0);
    CHECK(hm.data.row(0).maxCoeff() > 0.9);  // nearest cell is within half a cell
  }
}

TEST_CASE("paf: horizontal edge fills its band with (1,0)") {
  const SkeletonGraph skeleton = build_default_skeleton();
  const SkeletonEdge& e = skeleton.edges[0];
  auto lms = empty_landmarks();
  lms[e.a] = {2.0, 8.0, true};
  lms[e.b] = {12.0, 8.0, true};
  const auto paf = encode_paf<double>(lms, skeleton, 20, 20, 1, 1.0);
  for (int x = 2; x <= 12; ++x) {
    CHECK(paf.at(2 * e.index, 8, x) == doctest::Approx(1.0));
    CHECK(paf.at(2 * e.index + 1, 8, x) == doctest::Approx(0.0));
  }
  CHECK(paf.at(2 * e.index, 6, 7) == 0.0);   // two rows away
  CHECK(paf.at(2 * e.index, 10, 7) == 0.0);
}

TEST_CASE("paf: invisible endpoint zeroes the channel pair") {
  const SkeletonGraph skeleton = build_default_skeleton();
  const SkeletonEdge& e = skeleton.edges[0];
  auto lms = empty_landmarks();
  lms[e.a] = {2.0, 8.0, true};
  lms[e.b] = {-1.0, -1.0, false};
  const auto paf = encode_paf<double>(lms, skeleton, 20, 20, 1, 1.0);
  CHECK(paf.data.row(2 * e.index).cwiseAbs().maxCoeff() == 0.0);
  CHECK(paf.data.row(2 * e.index + 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("paf: diagonal edge holds unit vectors at 45 degrees") {
  const SkeletonGraph skeleton = build_default_skeleton();
  const SkeletonEdge& e = skeleton.edges[0];
  auto lms = empty_landmarks();
  lms[e.a] = {3.0, 3.0, true};
  lms[e.b] = {15.0, 15.0, true};
  const auto paf = encode_paf<double>(lms, skeleton, 20, 20, 1, 2.0);
  const double c = std::sqrt(2.0) / 2.0;
  int band_cells = 0;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const double vx = paf.at(2 * e.index, y, x);
      const double vy = paf.at(2 * e.index + 1, y, x);
      if (vx == 0.0 && vy == 0.0) continue;
      ++band_cells;
      CHECK(vx == doctest::Approx(c).epsilon(1e-9));
      CHECK(vy == doctest::Approx(c).epsilon(1e-9));
      CHECK(std::hypot(vx, vy) == doctest::Approx(1.0).epsilon(1e-6));
    }
  CHECK(band_cells > 10);
}

TEST_CASE("paf: degenerate edge reports a warning and stays zero") {
  const SkeletonGraph skeleton = build_default_skeleton();
  const SkeletonEdge& e = skeleton.edges[0];
  auto lms = empty_landmarks();
  lms[e.a] = {5.0, 5.0, true};
  lms[e.b] = {5.0, 5.0, true};
  std::vector<int> degenerate;
  const auto paf = encode_paf<double>(lms, skeleton, 20, 20, 1, 1.0, &degenerate);
  REQUIRE(degenerate.size() == 1);
  CHECK(degenerate[0] == e.index);
  CHECK(paf.data.row(2 * e.index).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("paf magnitude on phantom targets is 0 or 1") {
  PhantomConfig cfg;
  cfg.height = 96;
  cfg.width = 96;
  cfg.seed = 5;
  const AnnotatedImage a = generate_phantom(cfg, 0);
  const SkeletonGraph skeleton = build_default_skeleton();
  const auto paf = encode_paf<double>(a.landmarks, skeleton, 24, 24, 4, 3.0);
  for (int e = 0; e < skeleton.edge_count(); ++e)
    for (int p = 0; p < 24 * 24; ++p) {
      const double mag = std::hypot(paf.data(2 * e, p), paf.data(2 * e + 1, p));
      CHECK(mag <= 1.0 + 1e-12);
      CHECK((mag < 1e-12 || std::abs(mag - 1.0) < 1e-12));
    }
}

TEST_CASE("mask: all-zero heatmap channel gives an all-zero mask") {
  PlaneStack<double> hm(2, 16, 16);
  const auto mask = encode_mask(hm, 0.2, 1);
  CHECK(mask.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mask: threshold 0.2 at sigma 2 selects the cells inside radius sqrt(2 ln 5) sigma") {
  auto lms = empty_landmarks();
  lms[0] = {48.0, 48.0, true};  // cell (12,12), stride 4
  const double sigma = 2.0;
  const auto hm = encode_heatmaps<double>(lms, 24, 24, 4, sigma);
  const auto mask = encode_mask(hm, 0.2, 0);

  // geometric oracle: cells with squared distance below 2 sigma^2 ln(1/0.2)
  const double r2 = 2.0 * sigma * sigma * std::log(5.0);
  const double radius = std::sqrt(r2);
  CHECK(radius == doctest::Approx(3.588).epsilon(1e-3));
  std::set<std::pair<int, int>> oracle;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x)
      if ((x - 12.0) * (x - 12.0) + (y - 12.0) * (y - 12.0) < r2) oracle.insert({y, x});
  std::set<std::pair<int, int>> got;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x)
      if (mask.at(0, y, x) > 0.0) got.insert({y, x});
  CHECK(got == oracle);
  // lattice count tracks the analytic disc area within a perimeter term
  const double area = M_PI * r2;
  CHECK(std::abs(static_cast<double>(got.size()) - area) <= 2.0 * M_PI * radius);
}

TEST_CASE("mask: dilation is monotone") {
  auto lms = empty_landmarks();
  lms[0] = {48.0, 48.0, true};
  const auto hm = encode_heatmaps<double>(lms, 24, 24, 4, 2.0);
  const auto m0 = encode_mask(hm, 0.2, 0);
  const auto m2 = encode_mask(hm, 0.2, 2);
  for (int p = 0; p < 24 * 24; ++p)
    if (m0.data(0, p) > 0.0) CHECK(m2.data(0, p) > 0.0);
  CHECK(m2.data.row(0).sum() > m0.data.row(0).sum());
}

TEST_CASE("encode/decode round trip recovers landmarks within stride/2 + 0.5 px") {
  PhantomConfig cfg;
  cfg.height = 96;
  cfg.width = 96;
  cfg.seed = 21;
  const int stride = 4;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const AnnotatedImage a = generate_phantom(cfg, s);
    const auto hm = encode_heatmaps<double>(a.landmarks, 24, 24, stride, 2.0);
    const auto decoded = decode_landmarks(hm, stride);
    for (int gid = 0; gid < kNumLandmarks; ++gid) {
      const double err = std::hypot(decoded[gid].x - a.landmarks[gid].x,
                                    decoded[gid].y - a.landmarks[gid].y);
      CHECK(err <= stride / 2.0 + 0.5);
    }
  }
}

TEST_CASE("encoders are deterministic") {
  PhantomConfig cfg;
  cfg.height = 96;
  cfg.width = 96;
  cfg.seed = 9;
  const AnnotatedImage a = generate_phantom(cfg, 7);
  const SkeletonGraph skeleton = build_default_skeleton();
  EncodingConfig ec;
  const auto t1 = encode_targets<double>(a, skeleton, ec);
  const auto t2 = encode_targets<double>(a, skeleton, ec);
  CHECK((t1.heatmaps.data - t2.heatmaps.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t1.paf.data - t2.paf.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t1.mask.data - t2.mask.data).cwiseAbs().maxCoeff() == 0.0);
}
