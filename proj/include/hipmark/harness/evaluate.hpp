#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>

#include <json.hpp>

#include "hipmark/clinical.hpp"
#include "hipmark/harness/dataset.hpp"
#include "hipmark/harness/run_config.hpp"
#include "hipmark/metrics.hpp"
#include "hipmark/net/checkpoint.hpp"
#include "hipmark/png_io.hpp"
#include "hipmark/uncertainty.hpp"

namespace hipmark::harness {

// A predictor maps an image to raw heatmap + PAF stacks; the network is one
// implementation, tests plug in oracle stubs.
struct RawPrediction {
  PlaneStack<double> heatmaps;
  PlaneStack<double> paf;
};
using Predictor = std::function<RawPrediction(const AnnotatedImage&)>;

inline Predictor predictor_from_net(net::LandmarkNetD& net) {
  return [&net](const AnnotatedImage& a) {
    const auto out = net.forward(a.pixels);
    return RawPrediction{out.heatmaps, out.paf};
  };
}

struct EvalOptions {
  bool ue_enabled = true;
  UncertaintyConfig ue;
  EncodingConfig encoding;  // stride comes from here
  std::string out_dir;      // empty: no files written
  bool dump_uncertainty = false;
};

struct ImageEvalDetail {
  std::string id;
  std::vector<DecodedLandmark> decoded;
  std::vector<UncertaintyVerdict> verdicts;
  std::vector<int> kept;
  ClinicalParams clinical;
};

struct EvalResult {
  MetricsReport report;
  std::vector<ImageEvalDetail> details;
};

namespace detail {

inline std::string opt_num(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(10) << *v;
  return os.str();
}

inline void write_report_csv(const std::string& path, const MetricsReport& r) {
  std::ofstream f(path);
  f << "subset,images,NME,MRE,SDR,PCC,ICC,T-Test,matched,missed,spurious\n";
  for (const SubsetMetrics* s : {&r.all, &r.structured, &r.unstructured}) {
    f << s->subset << ',' << s->images << ',' << opt_num(s->nme) << ',' << opt_num(s->mre_mm)
      << ',' << opt_num(s->sdr_2mm) << ',' << opt_num(s->pcc) << ',' << opt_num(s->icc)
      << ',' << opt_num(s->t_p) << ',' << s->matched << ',' << s->missed << ','
      << s->spurious << '\n';
  }
}

inline void write_clinical_csv(const std::string& path,
                               const std::vector<ImageEvalDetail>& details) {
  std::ofstream f(path);
  f << "image,side,neck_shaft_angle_deg,femoral_offset_mm,acetabular_offset_mm,"
       "center_edge_angle_deg,acetabular_index_deg,sharp_angle_deg,skinner_offset_mm,"
       "kohler_crossing\n";
  for (const auto& d : details) {
    for (Side side : {Side::Left, Side::Right}) {
      const SideClinicalParams& p =
          side == Side::Left ? d.clinical.left : d.clinical.right;
      f << d.id << ',' << (side == Side::Left ? 'L' : 'R') << ','
        << opt_num(p.neck_shaft_angle_deg) << ',' << opt_num(p.femoral_offset_mm) << ','
        << opt_num(p.acetabular_offset_mm) << ',' << opt_num(p.center_edge_angle_deg) << ','
        << opt_num(p.acetabular_index_deg) << ',' << opt_num(p.sharp_angle_deg) << ','
        << opt_num(p.skinner_offset_mm) << ','
        << (p.kohler_crossing ? (*p.kohler_crossing ? "1" : "0") : "") << '\n';
    }
  }
}

}  // namespace detail

// One-time suppression-threshold calibration on the synthetic validation
// split: picks the grid tau maximizing Youden's J between ground-truth
// visible landmarks (should be kept) and ground-truth invisible ones (their
// channels hold no real landmark and should be suppressed). The chosen value
// is recorded in the run config echo by the callers.
struct TauCalibration {
  double tau = 0.3;
  double visible_recall = 0.0;
  double invisible_suppression = 0.0;
};

inline TauCalibration calibrate_tau(const LoadedDataset& ds,
                                    const std::vector<std::string>& split_ids,
                                    const Predictor& predict, const EvalOptions& opts) {
  const SkeletonGraph skeleton = build_default_skeleton();
  std::vector<double> visible_w, invisible_w;
  for (const auto& id : split_ids) {
    const AnnotatedImage& gt = ds.at(id);
    const RawPrediction raw = predict(gt);
    const auto decoded = decode_landmarks(raw.heatmaps, opts.encoding.stride);
    const auto verdicts = aggregate_and_suppress(decoded, skeleton, raw.paf,
                                                 opts.encoding.stride, opts.ue);
    for (int gid = 0; gid < kNumLandmarks; ++gid)
      (gt.landmarks[gid].visible ? visible_w : invisible_w).push_back(verdicts[gid].w_hat);
  }
  TauCalibration best;
  double best_j = -2.0;
  for (double tau = 0.05; tau <= 0.601; tau += 0.025) {
    int kept_vis = 0, kept_inv = 0;
    for (double w : visible_w) kept_vis += w >= tau ? 1 : 0;
    for (double w : invisible_w) kept_inv += w >= tau ? 1 : 0;
    const double recall =
        visible_w.empty() ? 1.0 : static_cast<double>(kept_vis) / visible_w.size();
    const double suppression =
        invisible_w.empty() ? 1.0 : 1.0 - static_cast<double>(kept_inv) / invisible_w.size();
    const double j = recall + suppression - 1.0;
    if (j > best_j + 1e-12) {
      best_j = j;
      best.tau = tau;
      best.visible_recall = recall;
      best.invisible_suppression = suppression;
    }
  }
  return best;
}

// Runs the protocol over one split: decode, optionally suppress through the
// uncertainty module, score stratified metrics, and emit per-image artifacts.
inline EvalResult evaluate_split(const LoadedDataset& ds,
                                 const std::vector<std::string>& split_ids,
                                 const Predictor& predict, const EvalOptions& opts) {
  namespace fs = std::filesystem;
  const SkeletonGraph skeleton = build_default_skeleton();

  EvalResult result;
  std::vector<ImagePrediction> scored;
  std::ofstream ue_jsonl;
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    ue_jsonl.open(fs::path(opts.out_dir) / "ue_report.jsonl");
  }

  // Keep ground-truth images alive for the scoring pass.
  std::vector<const AnnotatedImage*> gts;
  for (const auto& id : split_ids) {
    const AnnotatedImage& gt = ds.at(id);
    gts.push_back(&gt);
    const RawPrediction raw = predict(gt);
    ImageEvalDetail detail;
    detail.id = id;
    detail.decoded = decode_landmarks(raw.heatmaps, opts.encoding.stride);
    detail.verdicts = aggregate_and_suppress(detail.decoded, skeleton, raw.paf,
                                             opts.encoding.stride, opts.ue);
    if (opts.ue_enabled) {
      detail.kept = kept_ids(detail.verdicts);
    } else {
      detail.kept.resize(kNumLandmarks);
      for (int gid = 0; gid < kNumLandmarks; ++gid) detail.kept[gid] = gid;
    }

    std::array<Point2, kNumLandmarks> pos{};
    std::array<bool, kNumLandmarks> kept_flags{};
    kept_flags.fill(false);
    for (int gid : detail.kept) kept_flags[gid] = true;
    for (int gid = 0; gid < kNumLandmarks; ++gid)
      pos[gid] = {detail.decoded[gid].x, detail.decoded[gid].y};
    detail.clinical = clinical_parameters(pos, kept_flags, gt.spacing_x, gt.spacing_y);

    ImagePrediction pred;
    pred.gt = &gt;
    pred.positions.assign(pos.begin(), pos.end());
    pred.kept = detail.kept;
    scored.push_back(std::move(pred));

    if (ue_jsonl.is_open()) {
      nlohmann::json lms = nlohmann::json::array();
      for (int gid = 0; gid < kNumLandmarks; ++gid) {
        const auto& v = detail.verdicts[gid];
        lms.push_back({{"id", gid},
                       {"x", detail.decoded[gid].x},
                       {"y", detail.decoded[gid].y},
                       {"w", v.w_hat},
                       {"u", v.u},
                       {"keep", opts.ue_enabled ? v.keep : true}});
      }
      ue_jsonl << nlohmann::json{{"image", id}, {"landmarks", lms}}.dump() << '\n';
    }
    if (opts.dump_uncertainty && !opts.out_dir.empty()) {
      const MatrixXd map =
          render_uncertainty_map(detail.decoded, detail.verdicts, gt.pixels, true);
      write_gray8_png((fs::path(opts.out_dir) / ("ue_" + id + ".png")).string(), map);
    }
    result.details.push_back(std::move(detail));
  }

  result.report = stratified_report(scored);
  if (!opts.out_dir.empty()) {
    detail::write_report_csv((fs::path(opts.out_dir) / "report.csv").string(), result.report);
    detail::write_clinical_csv((fs::path(opts.out_dir) / "clinical.csv").string(),
                               result.details);
  }
  return result;
}

}  // namespace hipmark::harness
