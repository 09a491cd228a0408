#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "hipmark/phantom.hpp"
#include "hipmark/png_io.hpp"

using namespace hipmark;
namespace fs = std::filesystem;

namespace {

PhantomConfig small_cfg() {
  PhantomConfig cfg;
  cfg.height = 96;
  cfg.width = 96;
  cfg.seed = 11;
  return cfg;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("generate_phantom is deterministic for (cfg, seed)") {
  const PhantomConfig cfg = small_cfg();
  const AnnotatedImage a = generate_phantom(cfg, 42);
  const AnnotatedImage b = generate_phantom(cfg, 42);
  CHECK((a.pixels - b.pixels).cwiseAbs().maxCoeff() == 0.0);
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    CHECK(a.landmarks[gid].x == b.landmarks[gid].x);
    CHECK(a.landmarks[gid].y == b.landmarks[gid].y);
  }
  const AnnotatedImage c = generate_phantom(cfg, 43);
  CHECK((a.pixels - c.pixels).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generated phantoms pass annotation validation") {
  const PhantomConfig cfg = small_cfg();
  for (std::uint64_t s = 0; s < 25; ++s) {
    AnnotatedImage a = generate_phantom(cfg, s);
    CHECK(validate_annotation(a).empty());
    for (const auto& lm : a.landmarks) CHECK(lm.visible);
  }
}

TEST_CASE("zero jitter, zero noise: bilateral symmetry about the midline") {
  PhantomConfig cfg = small_cfg();
  cfg.tilt_deg = 0.0;
  cfg.head_radius_px = 0.0;
  cfg.neck_angle_deg = 0.0;
  cfg.limb_rotation_deg = 0.0;
  cfg.noise_sigma = 0.0;
  const AnnotatedImage a = generate_phantom(cfg, 5);
  const double mid = (cfg.width - 1) / 2.0;
  for (int cat = 1; cat <= kNumCategories; ++cat) {
    const Landmark& l = a.landmarks[global_id(cat, Side::Left)];
    const Landmark& r = a.landmarks[global_id(cat, Side::Right)];
    CHECK(std::abs((l.x + r.x) / 2.0 - mid) <= 0.5);
    CHECK(std::abs(l.y - r.y) <= 0.5);
  }
}

TEST_CASE("femoral head centre is brighter than the point 2r lateral of it") {
  PhantomConfig cfg = small_cfg();
  cfg.noise_sigma = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const AnnotatedImage a = generate_phantom(cfg, s);
    const double scale = std::min(cfg.height, cfg.width) / 256.0;
    const double r = 19.0 * scale;  // upper bound on the head radius
    for (Side side : {Side::Left, Side::Right}) {
      const Landmark& head = a.landmarks[global_id(6, side)];
      const int hx = static_cast<int>(std::lround(head.x));
      const int hy = static_cast<int>(std::lround(head.y));
      const int px = static_cast<int>(std::lround(head.x + 2.0 * r));
      if (px >= a.width()) continue;
      CHECK(a.pixels(hy, hx) >= a.pixels(hy, px));
    }
  }
}

TEST_CASE("inject_unstructured rejects an empty missing list") {
  const AnnotatedImage a = generate_phantom(small_cfg(), 1);
  CHECK_THROWS_AS(inject_unstructured(a, {}, DegradeMode::Occlude, small_cfg()),
                  std::invalid_argument);
}

TEST_CASE("occlusion marks only the listed landmark invisible") {
  const PhantomConfig cfg = small_cfg();
  const AnnotatedImage a = generate_phantom(cfg, 2);
  const int target = global_id(10, Side::Left);
  const AnnotatedImage u = inject_unstructured(a, {target}, DegradeMode::Occlude, cfg, 9);
  CHECK_FALSE(u.landmarks[target].visible);
  CHECK(u.landmarks[target].x == -1.0);
  CHECK_FALSE(u.structured);
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    if (gid == target) continue;
    CHECK(u.landmarks[gid].visible);
    CHECK(u.landmarks[gid].x == a.landmarks[gid].x);
    CHECK(u.landmarks[gid].y == a.landmarks[gid].y);
  }
  CHECK(validate_annotation(u).empty());
}

TEST_CASE("truncation removes the distal shaft landmarks, size unchanged") {
  const PhantomConfig cfg = small_cfg();
  const AnnotatedImage a = generate_phantom(cfg, 3);
  const std::vector<int> missing = {global_id(12, Side::Left), global_id(12, Side::Right)};
  REQUIRE(truncation_feasible(a, missing));
  const AnnotatedImage u = inject_unstructured(a, missing, DegradeMode::Truncate, cfg, 9);
  CHECK(u.height() == a.height());
  CHECK(u.width() == a.width());
  CHECK_FALSE(u.landmarks[missing[0]].visible);
  CHECK_FALSE(u.landmarks[missing[1]].visible);
  CHECK(validate_annotation(u).empty());
}

TEST_CASE("truncation errors when a landmark is not in the lower region") {
  const PhantomConfig cfg = small_cfg();
  const AnnotatedImage a = generate_phantom(cfg, 4);
  CHECK_THROWS_AS(
      inject_unstructured(a, {global_id(1, Side::Left)}, DegradeMode::Truncate, cfg),
      std::invalid_argument);
}

TEST_CASE("missing-set draw concentrates on categories 10 and 12") {
  Rng rng(123);
  std::map<int, int> category_counts;
  int total = 0;
  for (int i = 0; i < 1000; ++i)
    for (int gid : draw_missing_set(rng)) {
      category_counts[category_of(gid)] += 1;
      ++total;
    }
  const double frac =
      static_cast<double>(category_counts[10] + category_counts[12]) / total;
  CHECK(frac >= 0.70);
}

TEST_CASE("config validation rejects jitter that can leave the margin") {
  PhantomConfig cfg = small_cfg();
  cfg.tilt_deg = 45.0;  // rotates the shaft tips out of the margin
  CHECK_THROWS_AS(validate_phantom_config(cfg), std::invalid_argument);
  CHECK_THROWS_AS(generate_phantom(cfg, 0), std::invalid_argument);
}

TEST_CASE("build_dataset writes a deterministic tiny dataset with pngs") {
  const fs::path dir1 = fs::temp_directory_path() / "hipmark_ds_a";
  const fs::path dir2 = fs::temp_directory_path() / "hipmark_ds_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);

  PhantomConfig cfg = small_cfg();
  DatasetSpec spec;
  spec.train_total = 4;
  spec.val_total = 2;
  spec.train_unstructured = 1;
  spec.val_unstructured = 1;

  const DatasetManifest m1 = build_dataset(cfg, spec, dir1.string());
  const DatasetManifest m2 = build_dataset(cfg, spec, dir2.string());

  CHECK(m1.train.size() == 4);
  CHECK(m1.val.size() == 2);

  int unstructured = 0;
  for (const auto& [id, flags] : m1.samples)
    if (!flags.structured) ++unstructured;
  CHECK(unstructured == 2);

  // train/val ids disjoint
  for (const auto& t : m1.train)
    for (const auto& v : m1.val) CHECK(t != v);

  // byte-identical across builds
  for (const auto& id : m1.train) {
    CHECK(slurp(dir1 / "images" / (id + ".png")) == slurp(dir2 / "images" / (id + ".png")));
    CHECK(slurp(dir1 / "annotations" / (id + ".json")) ==
          slurp(dir2 / "annotations" / (id + ".json")));
  }
  CHECK(slurp(dir1 / "manifest.json") == slurp(dir2 / "manifest.json"));

  // png + sidecar round trip agrees with the in-memory sample
  std::string img_name;
  const AnnotatedImage ann = read_annotation_json(
      (dir1 / "annotations" / (m1.train[0] + ".json")).string(), &img_name);
  const MatrixXd img = read_gray8_png((dir1 / "images" / img_name).string());
  AnnotatedImage full = ann;
  full.pixels = img;
  CHECK(validate_annotation(full).empty());

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("png io round-trips 8-bit grayscale exactly") {
  Rng rng(3);
  MatrixXd img(17, 23);
  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 23; ++x)
      img(y, x) = std::round(rng.uniform() * 255.0) / 255.0;
  const auto bytes = encode_gray8_png(img);
  const MatrixXd back = decode_gray8_png(bytes);
  CHECK((img - back).cwiseAbs().maxCoeff() == 0.0);
}
