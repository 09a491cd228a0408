#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipmark/landmarks.hpp"
#include "hipmark/stats.hpp"
#include "hipmark/types.hpp"

namespace hipmark {

struct MatchedPair {
  int gid = -1;
  Point2 pred;
  Point2 gt;
};

struct MatchResult {
  std::vector<MatchedPair> matched;  // GT-visible and kept
  std::vector<int> missed;           // GT-visible and suppressed
  std::vector<int> spurious;         // GT-invisible and kept
};

// Matching is by global id: detection channels carry identity, so there is
// no assignment problem to solve.
inline MatchResult match_predictions(const AnnotatedImage& gt,
                                     const std::vector<Point2>& pred_positions,
                                     const std::vector<int>& kept) {
  if (pred_positions.size() != kNumLandmarks)
    throw std::invalid_argument("match_predictions: expected 24 predicted positions");
  const std::set<int> kept_set(kept.begin(), kept.end());
  MatchResult r;
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    const bool vis = gt.landmarks[gid].visible;
    const bool is_kept = kept_set.count(gid) > 0;
    if (vis && is_kept)
      r.matched.push_back({gid, pred_positions[gid],
                           Point2{gt.landmarks[gid].x, gt.landmarks[gid].y}});
    else if (vis)
      r.missed.push_back(gid);
    else if (is_kept)
      r.spurious.push_back(gid);
  }
  return r;
}

// Normalization distance for NME: ground-truth distance between the two
// femoral-head centres; falls back to the image diagonal when either head
// is invisible.
inline double nme_normalizer(const AnnotatedImage& gt) {
  const Landmark& l = gt.landmarks[global_id(6, Side::Left)];
  const Landmark& r = gt.landmarks[global_id(6, Side::Right)];
  if (l.visible && r.visible) {
    const double d = std::hypot(l.x - r.x, l.y - r.y);
    if (d > 0.0) return d;
  }
  return std::hypot(static_cast<double>(gt.width()), static_cast<double>(gt.height()));
}

inline double nme(const std::vector<MatchedPair>& matched, double d_norm) {
  if (matched.empty()) throw std::invalid_argument("nme: no matched pairs");
  if (!(d_norm > 0.0)) throw std::invalid_argument("nme: d_norm must be > 0");
  double acc = 0.0;
  for (const auto& m : matched) acc += norm2(m.pred, m.gt) / d_norm;
  return acc / static_cast<double>(matched.size());
}

// Mean radial error in millimetres.
inline double mre(const std::vector<MatchedPair>& matched, double spacing_x, double spacing_y) {
  if (matched.empty()) throw std::invalid_argument("mre: no matched pairs");
  double acc = 0.0;
  for (const auto& m : matched) {
    const double dx = (m.pred.x - m.gt.x) * spacing_x;
    const double dy = (m.pred.y - m.gt.y) * spacing_y;
    acc += std::sqrt(dx * dx + dy * dy);
  }
  return acc / static_cast<double>(matched.size());
}

// Success rate within threshold_mm; missed GT-visible landmarks count as
// failures, so the denominator is matched + missed.
inline double sdr(const std::vector<MatchedPair>& matched, int missed_count, double spacing_x,
                  double spacing_y, double threshold_mm = 2.0) {
  const int denom = static_cast<int>(matched.size()) + missed_count;
  if (denom == 0) throw std::invalid_argument("sdr: no ground-truth-visible landmarks");
  int hits = 0;
  for (const auto& m : matched) {
    const double dx = (m.pred.x - m.gt.x) * spacing_x;
    const double dy = (m.pred.y - m.gt.y) * spacing_y;
    if (std::sqrt(dx * dx + dy * dy) <= threshold_mm) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(denom);
}

struct ConsistencyStats {
  double pcc = 1.0;
  double icc = 1.0;
  double t = 0.0;
  double t_p = 1.0;
};

// Agreement over the pooled x- and y-coordinate sequences of the matched
// pairs: Pearson, ICC(2,1) with raters {pred, gt}, and a paired two-sided
// t-test.
inline ConsistencyStats consistency_stats(const std::vector<MatchedPair>& matched) {
  if (matched.size() < 3)
    throw std::invalid_argument("consistency_stats: need at least 3 matched pairs");
  std::vector<double> pred, gt;
  pred.reserve(2 * matched.size());
  gt.reserve(2 * matched.size());
  for (const auto& m : matched) {
    pred.push_back(m.pred.x);
    gt.push_back(m.gt.x);
  }
  for (const auto& m : matched) {
    pred.push_back(m.pred.y);
    gt.push_back(m.gt.y);
  }
  ConsistencyStats s;
  s.pcc = pearson(pred, gt);
  std::vector<std::vector<double>> table(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) table[i] = {pred[i], gt[i]};
  s.icc = icc21(table);
  const PairedTTest t = paired_t_test(pred, gt);
  s.t = t.t;
  s.t_p = t.p;
  return s;
}

struct SubsetMetrics {
  std::string subset;
  int images = 0;
  int matched = 0;
  int missed = 0;
  int spurious = 0;
  std::optional<double> nme;
  std::optional<double> mre_mm;
  std::optional<double> sdr_2mm;
  std::optional<double> pcc;
  std::optional<double> icc;
  std::optional<double> t_p;
};

struct MetricsReport {
  SubsetMetrics all;
  SubsetMetrics structured;
  SubsetMetrics unstructured;
};

struct ImagePrediction {
  const AnnotatedImage* gt = nullptr;
  std::vector<Point2> positions;  // 24 entries
  std::vector<int> kept;
};

// Stratified metric accumulation; NME is averaged per landmark with each
// image's own normalizer, consistency pools all matched coordinates.
inline SubsetMetrics compute_subset_metrics(const std::string& name,
                                            const std::vector<const ImagePrediction*>& preds,
                                            double threshold_mm = 2.0) {
  SubsetMetrics out;
  out.subset = name;
  out.images = static_cast<int>(preds.size());
  if (preds.empty()) return out;

  std::vector<MatchedPair> pooled;
  double nme_acc = 0.0, mre_acc = 0.0;
  int sdr_hits = 0;
  for (const ImagePrediction* p : preds) {
    const MatchResult m = match_predictions(*p->gt, p->positions, p->kept);
    out.matched += static_cast<int>(m.matched.size());
    out.missed += static_cast<int>(m.missed.size());
    out.spurious += static_cast<int>(m.spurious.size());
    const double d = nme_normalizer(*p->gt);
    for (const auto& pair : m.matched) {
      nme_acc += norm2(pair.pred, pair.gt) / d;
      const double dx = (pair.pred.x - pair.gt.x) * p->gt->spacing_x;
      const double dy = (pair.pred.y - pair.gt.y) * p->gt->spacing_y;
      const double err = std::sqrt(dx * dx + dy * dy);
      mre_acc += err;
      if (err <= threshold_mm) ++sdr_hits;
      pooled.push_back(pair);
    }
  }
  if (out.matched > 0) {
    out.nme = nme_acc / out.matched;
    out.mre_mm = mre_acc / out.matched;
  }
  if (out.matched + out.missed > 0)
    out.sdr_2mm = static_cast<double>(sdr_hits) / (out.matched + out.missed);
  if (pooled.size() >= 3) {
    const ConsistencyStats s = consistency_stats(pooled);
    out.pcc = s.pcc;
    out.icc = s.icc;
    out.t_p = s.t_p;
  }
  return out;
}

inline MetricsReport stratified_report(const std::vector<ImagePrediction>& preds,
                                       double threshold_mm = 2.0) {
  std::vector<const ImagePrediction*> all, structured, unstructured;
  for (const auto& p : preds) {
    all.push_back(&p);
    (p.gt->structured ? structured : unstructured).push_back(&p);
  }
  MetricsReport r;
  r.all = compute_subset_metrics("all", all, threshold_mm);
  r.structured = compute_subset_metrics("structured", structured, threshold_mm);
  r.unstructured = compute_subset_metrics("unstructured", unstructured, threshold_mm);
  return r;
}

}  // namespace hipmark
