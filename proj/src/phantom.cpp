#include "hipmark/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hipmark/png_io.hpp"

namespace hipmark {

namespace {

constexpr double kRefSize = 256.0;  // geometry is designed at this scale

struct Vec2 {
  double x = 0.0, y = 0.0;
};

Vec2 rot(const Vec2& v, double deg) {
  const double a = deg * M_PI / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 add(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
Vec2 mul(const Vec2& v, double k) { return {v.x * k, v.y * k}; }

double quant64(double v) { return std::round(v * 64.0) / 64.0; }

struct Jitter {
  double tilt = 0.0;
  double head_radius[2] = {0.0, 0.0};
  double neck_deg[2] = {0.0, 0.0};
  double limb_deg[2] = {0.0, 0.0};
};

struct Anatomy {
  std::array<Vec2, kNumLandmarks> lm;  // px, before quantisation
  double head_radius[2] = {0.0, 0.0};  // px
  Vec2 shaft_end[2];                   // rendered shaft extends past landmark 12
};

// Landmark loci from a fixed reference layout plus the jitter draws; the
// whole-pelvis tilt is applied last about the image centre.
Anatomy layout_anatomy(const PhantomConfig& cfg, const Jitter& j) {
  const double s = std::min(cfg.height, cfg.width) / kRefSize;
  const double mx = (cfg.width - 1) / 2.0;
  const Vec2 centre{(cfg.width - 1) / 2.0, (cfg.height - 1) / 2.0};

  Anatomy an;
  for (Side side : {Side::Left, Side::Right}) {
    const int si = side == Side::Left ? 0 : 1;
    const double sg = side == Side::Left ? -1.0 : 1.0;
    auto at = [&](int cat) -> Vec2& { return an.lm[global_id(cat, side)]; };

    const Vec2 head{mx + sg * 52.0 * s, 108.0 * s};
    an.head_radius[si] = (17.0 + j.head_radius[si]) * s;

    at(6) = head;
    at(5) = add(head, {-sg * 5.0 * s, -4.0 * s});
    at(3) = add(head, {sg * 10.0 * s, -20.0 * s});
    at(4) = add(head, {-sg * 6.0 * s, 19.0 * s});
    at(2) = add(head, {-sg * 19.0 * s, -1.0 * s});
    at(7) = add(head, {sg * 26.0 * s, -2.0 * s});
    at(1) = Vec2{mx + sg * 26.0 * s, 86.0 * s};
    at(8) = Vec2{mx + sg * 24.0 * s, 122.0 * s};
    at(9) = Vec2{mx + sg * 30.0 * s, 156.0 * s};

    // Neck-shaft chain: 10 and 11 hang off the head along the neck axis, the
    // shaft continues from 11; jitters rotate the respective sub-chains.
    const Vec2 neck = rot(mul({sg * 28.0, 24.0}, s), j.neck_deg[si]);
    at(11) = add(head, neck);
    at(10) = add(head, mul(neck, 0.62));
    const Vec2 shaft = rot(rot(mul({sg * 5.0, 76.0}, s), j.neck_deg[si]), j.limb_deg[si]);
    at(12) = add(at(11), shaft);
    an.shaft_end[si] = add(at(11), mul(shaft, 1.28));
  }

  if (j.tilt != 0.0) {
    auto spin = [&](Vec2 p) {
      return add(centre, rot({p.x - centre.x, p.y - centre.y}, j.tilt));
    };
    for (auto& p : an.lm) p = spin(p);
    an.shaft_end[0] = spin(an.shaft_end[0]);
    an.shaft_end[1] = spin(an.shaft_end[1]);
  }
  return an;
}

Jitter draw_jitter(const PhantomConfig& cfg, Rng& rng) {
  Jitter j;
  j.tilt = rng.uniform(-cfg.tilt_deg, cfg.tilt_deg);
  for (int si = 0; si < 2; ++si) {
    j.head_radius[si] = rng.uniform(-cfg.head_radius_px, cfg.head_radius_px);
    j.neck_deg[si] = rng.uniform(-cfg.neck_angle_deg, cfg.neck_angle_deg);
    j.limb_deg[si] = rng.uniform(-cfg.limb_rotation_deg, cfg.limb_rotation_deg);
  }
  return j;
}

// Soft-edge coverage from a signed distance (negative inside), ~2 px ramp.
double cov(double d, double soft) { return std::clamp(0.5 - d / soft, 0.0, 1.0); }

double dist_point(double px, double py, const Vec2& c) {
  return std::hypot(px - c.x, py - c.y);
}

double dist_segment(double px, double py, const Vec2& a, const Vec2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

struct Renderer {
  const Anatomy& an;
  double s;
  double soft;

  double shade(double px, double py) const {
    double v = 0.06;  // background
    for (int si = 0; si < 2; ++si) {
      const Side side = si == 0 ? Side::Left : Side::Right;
      auto at = [&](int cat) { return an.lm[global_id(cat, side)]; };

      const Vec2 head = at(6);
      const double r6 = an.head_radius[si];

      // iliac wing: thick ring above the acetabulum
      const Vec2 ic = add(at(1), {(si == 0 ? 1.0 : -1.0) * -22.0 * s, -14.0 * s});
      v += 0.20 * cov(std::abs(dist_point(px, py, ic) - 24.0 * s) - 8.0 * s, soft);

      // acetabular roof: the arc from landmark 3 to landmark 4 that avoids
      // the neck direction, so it cups the head superiorly and medially
      {
        const double rArc = dist_point(at(3).x, at(3).y, head);
        const double a3 = std::atan2(at(3).y - head.y, at(3).x - head.x);
        const double a4 = std::atan2(at(4).y - head.y, at(4).x - head.x);
        const double aP = std::atan2(py - head.y, px - head.x);
        const double aNk = std::atan2(at(11).y - head.y, at(11).x - head.x);
        auto wrap = [](double a) {
          while (a < 0.0) a += 2.0 * M_PI;
          while (a >= 2.0 * M_PI) a -= 2.0 * M_PI;
          return a;
        };
        auto between_ccw = [&wrap](double x, double from, double to) {
          return wrap(x - from) <= wrap(to - from);
        };
        if (between_ccw(aP, a3, a4) != between_ccw(aNk, a3, a4))
          v += 0.26 * cov(std::abs(dist_point(px, py, head) - rArc) - 2.5 * s, soft);
      }

      v += 0.50 * cov(dist_point(px, py, head) - r6, soft);              // femoral head
      v -= 0.12 * cov(dist_point(px, py, at(5)) - 2.5 * s, soft);        // fovea notch
      v += 0.22 * cov(dist_segment(px, py, head, at(11)) - 9.0 * s, soft);  // neck
      v += 0.34 * cov(dist_segment(px, py, at(11), an.shaft_end[si]) - 7.5 * s, soft);
      const Vec2 troch = add(at(7), {0.0, 4.0 * s});
      v += 0.18 * cov(dist_point(px, py, troch) - 8.0 * s, soft);        // trochanter
      v += 0.20 * cov(dist_point(px, py, at(2)) - 3.5 * s, soft);        // Y cartilage
      const Vec2 tear = add(at(8), {0.0, -4.0 * s});
      v += 0.26 * cov(dist_point(px, py, tear) - 4.5 * s, soft);         // teardrop
      const Vec2 isch = add(at(9), {0.0, -7.0 * s});
      v += 0.28 * cov(dist_point(px, py, isch) - 9.0 * s, soft);         // ischium
    }
    return v;
  }
};

double quant_u8(double v) {
  return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ids.size(); ++i)
    os << (i ? "," : "") << ids[i];
  return os.str();
}

}  // namespace

void validate_phantom_config(const PhantomConfig& cfg) {
  if (cfg.height < 64 || cfg.width < 64)
    throw std::invalid_argument("phantom: image_size must be at least 64x64");
  if (!(cfg.spacing_mm > 0.0))
    throw std::invalid_argument("phantom: spacing must be positive");
  if (cfg.tilt_deg < 0 || cfg.head_radius_px < 0 || cfg.neck_angle_deg < 0 ||
      cfg.limb_rotation_deg < 0 || cfg.noise_sigma < 0)
    throw std::invalid_argument("phantom: jitter ranges must be non-negative");

  // Jitter-corner sweep: the extreme combinations bound the reachable layouts
  // closely enough to reject configurations that could leave the margin.
  std::set<int> bad;
  const double grid[3] = {-1.0, 0.0, 1.0};
  for (double t : grid)
    for (double hr : grid)
      for (double nk : grid)
        for (double lb : grid) {
          Jitter j;
          j.tilt = t * cfg.tilt_deg;
          for (int si = 0; si < 2; ++si) {
            j.head_radius[si] = hr * cfg.head_radius_px;
            j.neck_deg[si] = nk * cfg.neck_angle_deg;
            j.limb_deg[si] = lb * cfg.limb_rotation_deg;
          }
          const Anatomy an = layout_anatomy(cfg, j);
          const double m = cfg.landmark_margin_px;
          for (int gid = 0; gid < kNumLandmarks; ++gid) {
            const Vec2& p = an.lm[gid];
            if (p.x < m || p.x > cfg.width - 1 - m || p.y < m || p.y > cfg.height - 1 - m)
              bad.insert(gid);
          }
        }
  if (!bad.empty()) {
    std::vector<int> ids(bad.begin(), bad.end());
    throw std::invalid_argument(
        "phantom: jitter ranges can push landmarks within the border margin; "
        "landmark ids: " + join_ids(ids));
  }
}

AnnotatedImage generate_phantom(const PhantomConfig& cfg, std::uint64_t sample_seed) {
  validate_phantom_config(cfg);
  Rng rng(mix_seed(cfg.seed, sample_seed, 0xf00d));
  const Jitter j = draw_jitter(cfg, rng);
  const Anatomy an = layout_anatomy(cfg, j);

  const double s = std::min(cfg.height, cfg.width) / kRefSize;
  Renderer rend{an, s, std::max(2.0 * s, 1.0)};

  AnnotatedImage a;
  a.pixels.resize(cfg.height, cfg.width);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      double v = rend.shade(static_cast<double>(x), static_cast<double>(y));
      if (cfg.noise_sigma > 0.0) v += rng.normal(0.0, cfg.noise_sigma);
      a.pixels(y, x) = quant_u8(v);
    }

  a.spacing_x = cfg.spacing_mm;
  a.spacing_y = cfg.spacing_mm;
  a.structured = true;
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    a.landmarks[gid].x = quant64(an.lm[gid].x);
    a.landmarks[gid].y = quant64(an.lm[gid].y);
    a.landmarks[gid].visible = true;
  }
  return a;
}

bool truncation_feasible(const AnnotatedImage& a, const std::vector<int>& missing) {
  if (missing.empty()) return false;
  const double h = static_cast<double>(a.height());
  double min_y = h;
  for (int gid : missing) {
    if (gid < 0 || gid >= kNumLandmarks || !a.landmarks[gid].visible) return false;
    if (a.landmarks[gid].y < 0.58 * h) return false;  // not in the lower region
    min_y = std::min(min_y, a.landmarks[gid].y);
  }
  const double cut = min_y - 4.0;
  if (cut <= 0.0) return false;
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    if (std::find(missing.begin(), missing.end(), gid) != missing.end()) continue;
    if (a.landmarks[gid].visible && a.landmarks[gid].y >= cut) return false;
  }
  return true;
}

AnnotatedImage inject_unstructured(const AnnotatedImage& a, const std::vector<int>& missing,
                                   DegradeMode mode, const PhantomConfig& cfg,
                                   std::uint64_t seed) {
  if (missing.empty())
    throw std::invalid_argument("inject_unstructured: missing list is empty");
  for (int gid : missing) {
    if (gid < 0 || gid >= kNumLandmarks)
      throw std::invalid_argument("inject_unstructured: invalid landmark id " +
                                  std::to_string(gid));
    if (!a.landmarks[gid].visible)
      throw std::invalid_argument("inject_unstructured: landmark " + std::to_string(gid) +
                                  " is already invisible");
  }

  AnnotatedImage out = a;
  Rng rng(mix_seed(seed, 0xdeadbeef));
  const double tex_sigma = std::max(cfg.noise_sigma, 0.02);
  auto background = [&]() { return quant_u8(0.06 + rng.normal(0.0, tex_sigma)); };

  if (mode == DegradeMode::Occlude) {
    const double s = std::min(a.height(), a.width()) / kRefSize;
    const double r = cfg.occlusion_radius_px * s;
    for (int gid : missing) {
      const Landmark& lm = a.landmarks[gid];
      const int x0 = std::max(0, static_cast<int>(std::floor(lm.x - r)));
      const int x1 = std::min(a.width() - 1, static_cast<int>(std::ceil(lm.x + r)));
      const int y0 = std::max(0, static_cast<int>(std::floor(lm.y - r)));
      const int y1 = std::min(a.height() - 1, static_cast<int>(std::ceil(lm.y + r)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          if (std::hypot(x - lm.x, y - lm.y) <= r) out.pixels(y, x) = background();
    }
  } else {
    if (!truncation_feasible(a, missing)) {
      std::ostringstream os;
      os << "inject_unstructured: truncation cannot remove landmarks [" << join_ids(missing)
         << "] without touching others (not all in the lower region)";
      throw std::invalid_argument(os.str());
    }
    double min_y = static_cast<double>(a.height());
    for (int gid : missing) min_y = std::min(min_y, a.landmarks[gid].y);
    const int cut = static_cast<int>(std::floor(min_y - 4.0));
    for (int y = cut; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) out.pixels(y, x) = background();
  }

  for (int gid : missing) {
    out.landmarks[gid].visible = false;
    out.landmarks[gid].x = -1.0;
    out.landmarks[gid].y = -1.0;
  }
  out.structured = false;
  return out;
}

std::vector<int> draw_missing_set(Rng& rng) {
  const double u = rng.uniform();
  const int size = u < 0.5 ? 1 : (u < 0.85 ? 2 : 3);
  std::set<int> gids;
  int guard = 0;
  while (static_cast<int>(gids.size()) < size && ++guard < 64) {
    const double c = rng.uniform();
    int cat;
    if (c < 0.4) {
      cat = 10;
    } else if (c < 0.8) {
      cat = 12;
    } else {
      // uniform over the ten remaining categories
      static const int others[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 11};
      cat = others[rng.index(10)];
    }
    const Side side = rng.uniform() < 0.5 ? Side::Left : Side::Right;
    gids.insert(global_id(cat, side));
  }
  return {gids.begin(), gids.end()};
}

DatasetManifest build_dataset(const PhantomConfig& cfg, const DatasetSpec& spec,
                              const std::string& out_dir) {
  if (spec.train_total < 1 || spec.val_total < 1)
    throw std::invalid_argument("build_dataset: counts must be >= 1");
  if (spec.train_unstructured > spec.train_total || spec.val_unstructured > spec.val_total)
    throw std::invalid_argument("build_dataset: unstructured counts exceed totals");
  validate_phantom_config(cfg);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  fs::create_directories(fs::path(out_dir) / "annotations", ec);
  if (ec) throw std::runtime_error("build_dataset: cannot create " + out_dir);

  DatasetManifest manifest;
  std::uint64_t sample_counter = 0;

  auto build_split = [&](const std::string& prefix, int total, int unstructured,
                         std::vector<std::string>& ids) {
    // deterministic unstructured subset: shuffle indices with the cfg seed
    std::vector<int> order(total);
    for (int i = 0; i < total; ++i) order[i] = i;
    Rng shuffler(mix_seed(cfg.seed, prefix == "train" ? 1 : 2, 0x5eed));
    for (int i = total - 1; i > 0; --i)
      std::swap(order[i], order[shuffler.index(static_cast<std::uint64_t>(i) + 1)]);
    std::set<int> unstructured_idx(order.begin(), order.begin() + unstructured);

    for (int i = 0; i < total; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s_%04d", prefix.c_str(), i);
      const std::string id = buf;
      const std::uint64_t sseed = sample_counter++;
      AnnotatedImage img = generate_phantom(cfg, sseed);
      img.id = id;

      SampleFlags flags;
      if (unstructured_idx.count(i)) {
        Rng rng(mix_seed(cfg.seed, sseed, 0x315));
        const std::vector<int> missing = draw_missing_set(rng);
        DegradeMode mode = DegradeMode::Occlude;
        if (rng.uniform() < 0.3 && truncation_feasible(img, missing))
          mode = DegradeMode::Truncate;
        img = inject_unstructured(img, missing, mode, cfg, mix_seed(cfg.seed, sseed, 0x717));
        img.id = id;
        flags.structured = false;
        flags.missing = missing;
      }

      const std::string png_name = id + ".png";
      write_gray8_png((fs::path(out_dir) / "images" / png_name).string(), img.pixels);
      write_annotation_json((fs::path(out_dir) / "annotations" / (id + ".json")).string(),
                            img, png_name);
      ids.push_back(id);
      manifest.samples[id] = flags;
    }
  };

  build_split("train", spec.train_total, spec.train_unstructured, manifest.train);
  build_split("val", spec.val_total, spec.val_unstructured, manifest.val);
  write_manifest_json((fs::path(out_dir) / "manifest.json").string(), manifest);
  return manifest;
}

}  // namespace hipmark
