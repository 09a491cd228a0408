#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hipmark/harness/dataset.hpp"
#include "hipmark/harness/run_config.hpp"
#include "hipmark/metrics.hpp"
#include "hipmark/net/adam.hpp"
#include "hipmark/net/checkpoint.hpp"
#include "hipmark/uncertainty.hpp"

namespace hipmark::harness {

// Raised when the training loss stops being finite; the CLI maps it to its
// own exit code.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LedgerRow {
  int epoch = 0;
  double train_heatmap = 0.0;
  double train_paf = 0.0;
  double train_total = 0.0;
  double val_heatmap = 0.0;
  double val_paf = 0.0;
  double val_total = 0.0;
  double val_mre = 0.0;
  double wall_s = 0.0;
};

struct TrainResult {
  std::vector<LedgerRow> ledger;
  std::string best_checkpoint;
  std::string last_checkpoint;
  double best_val_mre = 0.0;
  int best_epoch = -1;
};

namespace detail {

inline std::string csv_num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Per-step augmentation: horizontal flip plus additive Gaussian noise with a
// per-sample sigma drawn from [0, noise_max]; files are never rewritten.
inline AnnotatedImage augment(const AnnotatedImage& a, const RunConfig& cfg, Rng& rng) {
  AnnotatedImage out = rng.uniform() < cfg.flip_prob ? mirror_landmarks(a) : a;
  const double sigma = rng.uniform(0.0, cfg.noise_max_sigma);
  if (sigma > 0.0) {
    for (Eigen::Index i = 0; i < out.pixels.size(); ++i)
      out.pixels.data()[i] =
          std::clamp(out.pixels.data()[i] + rng.normal(0.0, sigma), 0.0, 1.0);
  }
  return out;
}

struct LossOnTargets {
  double heatmap = 0.0;
  double paf = 0.0;
  double total = 0.0;
};

// Heatmap term is the masked Adaptive Wing loss by default; the "mse" mode
// exists for the convergence comparison experiment.
inline LossOnTargets apply_loss(const RunConfig& cfg, const net::LandmarkNetD::Output& out,
                                const TargetBundle<double>& t, MatrixXd* grad_hm,
                                MatrixXd* grad_paf) {
  LossOnTargets v;
  if (cfg.heatmap_loss == "awing") {
    const auto hv = hybrid_loss<double>(out.heatmaps.data, t.heatmaps.data, t.mask.data,
                                        out.paf.data, t.paf.data, cfg.awing, cfg.weights,
                                        grad_hm, grad_paf);
    v.heatmap = hv.heatmap_term;
    v.paf = hv.paf_term;
    v.total = hv.total;
  } else {
    v.heatmap = heatmap_mse<double>(out.heatmaps.data, t.heatmaps.data, grad_hm);
    v.paf = paf_mse<double>(out.paf.data, t.paf.data, grad_paf);
    v.total = cfg.weights.w_heatmap * v.heatmap + cfg.weights.w_paf * v.paf;
    if (grad_hm) *grad_hm *= cfg.weights.w_heatmap;
    if (grad_paf) *grad_paf *= cfg.weights.w_paf;
  }
  return v;
}

// matched-landmark mean radial error with every decoded landmark kept
inline double validation_mre(const AnnotatedImage& gt,
                             const std::vector<DecodedLandmark>& decoded, double& err_sum,
                             int& count) {
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    if (!gt.landmarks[gid].visible) continue;
    const double dx = (decoded[gid].x - gt.landmarks[gid].x) * gt.spacing_x;
    const double dy = (decoded[gid].y - gt.landmarks[gid].y) * gt.spacing_y;
    err_sum += std::sqrt(dx * dx + dy * dy);
    ++count;
  }
  return count > 0 ? err_sum / count : 0.0;
}

}  // namespace detail

inline TrainResult train(const RunConfig& cfg, const LoadedDataset& ds) {
  namespace fs = std::filesystem;
  cfg.validate();
  if (ds.manifest.train.empty()) throw std::invalid_argument("train: empty training split");

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config.json");
    echo << run_config_to_json(cfg).dump(2) << '\n';
  }

  const SkeletonGraph skeleton = build_default_skeleton();
  net::NetworkConfig ncfg = cfg.network;
  ncfg.init_seed = cfg.seed;
  net::LandmarkNetD net(ncfg);
  net::Adam<double> opt(net.parameters(), cfg.learning_rate);

  std::ofstream steps_csv(fs::path(cfg.out_dir) / "steps.csv");
  steps_csv << "step,awing,paf_mse,total\n";
  std::ofstream ledger_csv(fs::path(cfg.out_dir) / "ledger.csv");
  ledger_csv << "epoch,train_heatmap,train_paf,train_total,val_heatmap,val_paf,val_total,"
                "val_mre,wall_s\n";

  TrainResult result;
  result.best_val_mre = std::numeric_limits<double>::max();
  const std::string best_path = (fs::path(cfg.out_dir) / "best.ckpt").string();
  const std::string last_path = (fs::path(cfg.out_dir) / "last.ckpt").string();

  long global_step = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.lr_schedule == "cosine")
      opt.set_learning_rate(cfg.learning_rate * 0.5 *
                            (1.0 + std::cos(M_PI * epoch / cfg.epochs)));
    // deterministic shuffle per (seed, epoch)
    std::vector<std::string> order = ds.manifest.train;
    Rng shuffle_rng(mix_seed(cfg.seed, 0xe90c, epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.index(i + 1)]);

    double ep_hm = 0.0, ep_paf = 0.0, ep_total = 0.0;
    long ep_samples = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      net.zero_grad();
      double b_hm = 0.0, b_paf = 0.0, b_total = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        Rng aug_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) * 100003 + i, 0xa06));
        const AnnotatedImage sample = detail::augment(ds.at(order[i]), cfg, aug_rng);
        const auto targets = encode_targets<double>(sample, skeleton, cfg.encoding);
        const auto out = net.forward(sample.pixels);
        MatrixXd ghm, gpaf;
        const auto v = detail::apply_loss(cfg, out, targets, &ghm, &gpaf);
        if (!std::isfinite(v.total))
          throw DivergenceError("training loss is not finite at epoch " +
                                std::to_string(epoch));
        net::Feature<double> dhm(out.heatmaps.channels, out.heatmaps.height,
                                 out.heatmaps.width);
        dhm.data = std::move(ghm);
        net::Feature<double> dpaf(out.paf.channels, out.paf.height, out.paf.width);
        dpaf.data = std::move(gpaf);
        net.backward(dhm, dpaf);
        b_hm += v.heatmap;
        b_paf += v.paf;
        b_total += v.total;
      }
      const double bs = static_cast<double>(end - start);
      opt.step(bs);
      steps_csv << global_step << ',' << detail::csv_num(b_hm / bs) << ','
                << detail::csv_num(b_paf / bs) << ',' << detail::csv_num(b_total / bs)
                << '\n';
      ++global_step;
      ep_hm += b_hm;
      ep_paf += b_paf;
      ep_total += b_total;
      ep_samples += static_cast<long>(end - start);
    }

    // validation pass: loss plus matched-landmark MRE with no suppression
    double v_hm = 0.0, v_paf = 0.0, v_total = 0.0;
    double err_sum = 0.0;
    int err_count = 0;
    for (const auto& id : ds.manifest.val) {
      const AnnotatedImage& sample = ds.at(id);
      const auto targets = encode_targets<double>(sample, skeleton, cfg.encoding);
      const auto out = net.forward(sample.pixels);
      const auto v = detail::apply_loss(cfg, out, targets, nullptr, nullptr);
      v_hm += v.heatmap;
      v_paf += v.paf;
      v_total += v.total;
      const auto decoded = decode_landmarks(out.heatmaps, cfg.encoding.stride);
      detail::validation_mre(sample, decoded, err_sum, err_count);
    }
    const double nval = std::max<std::size_t>(1, ds.manifest.val.size());

    LedgerRow row;
    row.epoch = epoch;
    row.train_heatmap = ep_hm / ep_samples;
    row.train_paf = ep_paf / ep_samples;
    row.train_total = ep_total / ep_samples;
    row.val_heatmap = v_hm / nval;
    row.val_paf = v_paf / nval;
    row.val_total = v_total / nval;
    row.val_mre = err_count > 0 ? err_sum / err_count : 0.0;
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.ledger.push_back(row);
    ledger_csv << row.epoch << ',' << detail::csv_num(row.train_heatmap) << ','
               << detail::csv_num(row.train_paf) << ',' << detail::csv_num(row.train_total)
               << ',' << detail::csv_num(row.val_heatmap) << ','
               << detail::csv_num(row.val_paf) << ',' << detail::csv_num(row.val_total)
               << ',' << detail::csv_num(row.val_mre) << ',' << detail::csv_num(row.wall_s)
               << '\n';
    ledger_csv.flush();

    if (!ds.manifest.val.empty() && row.val_mre < result.best_val_mre) {
      result.best_val_mre = row.val_mre;
      result.best_epoch = epoch;
      net::save_checkpoint(best_path, net);
    }
  }

  net::save_checkpoint(last_path, net);
  if (result.best_epoch < 0) {
    net::save_checkpoint(best_path, net);
    result.best_epoch = cfg.epochs - 1;
  }
  result.best_checkpoint = best_path;
  result.last_checkpoint = last_path;
  return result;
}

inline TrainResult train(const RunConfig& cfg) {
  const LoadedDataset ds = load_dataset(cfg.dataset_dir);
  return train(cfg, ds);
}

}  // namespace hipmark::harness
