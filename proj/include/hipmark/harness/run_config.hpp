#pragma once

#include <string>

#include <json.hpp>

#include "hipmark/encoding.hpp"
#include "hipmark/kv_config.hpp"
#include "hipmark/losses.hpp"
#include "hipmark/net/model.hpp"
#include "hipmark/uncertainty.hpp"

namespace hipmark::harness {

// Everything a training/evaluation run needs; serialized verbatim into the
// run directory so a run is reconstructible from its outputs alone.
struct RunConfig {
  std::string dataset_dir;
  std::string out_dir;

  net::NetworkConfig network;
  AwingParams awing;
  HybridWeights weights;
  EncodingConfig encoding;
  UncertaintyConfig ue;

  std::string heatmap_loss = "awing";  // "awing" (masked) or "mse"
  double learning_rate = 1e-3;
  std::string lr_schedule = "cosine";  // "cosine" decay to 0, or "constant"
  int epochs = 60;
  int batch_size = 8;
  double flip_prob = 0.5;
  double noise_max_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (dataset_dir.empty()) throw std::invalid_argument("run: dataset dir not set");
    if (heatmap_loss != "awing" && heatmap_loss != "mse")
      throw std::invalid_argument("run: heatmap_loss must be 'awing' or 'mse'");
    if (lr_schedule != "cosine" && lr_schedule != "constant")
      throw std::invalid_argument("run: lr_schedule must be 'cosine' or 'constant'");
    if (epochs < 1 || batch_size < 1)
      throw std::invalid_argument("run: epochs and batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("run: learning rate must be > 0");
    if (flip_prob < 0.0 || flip_prob > 1.0)
      throw std::invalid_argument("run: flip probability must lie in [0,1]");
    if (noise_max_sigma < 0.0)
      throw std::invalid_argument("run: noise sigma must be >= 0");
    if (network.output_stride() != encoding.stride)
      throw std::invalid_argument("run: network output stride must match encoding stride");
    network.validate();
    awing.validate();
    weights.validate();
  }
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["dataset_dir"] = c.dataset_dir;
  j["out_dir"] = c.out_dir;
  j["network"] = {{"stages", c.network.stages},
                  {"widths", c.network.widths},
                  {"blocks_per_stage", c.network.blocks_per_stage},
                  {"num_landmarks", c.network.num_landmarks},
                  {"num_edges", c.network.num_edges},
                  {"srf_enabled", c.network.srf_enabled},
                  {"srf_heatmap_feedback", c.network.srf_heatmap_feedback}};
  j["awing"] = {{"omega", c.awing.omega},
                {"theta", c.awing.theta},
                {"epsilon", c.awing.epsilon},
                {"alpha", c.awing.alpha}};
  j["weights"] = {{"w_heatmap", c.weights.w_heatmap},
                  {"w_paf", c.weights.w_paf},
                  {"w_mask", c.weights.w_mask}};
  j["encoding"] = {{"stride", c.encoding.stride},
                   {"sigma", c.encoding.sigma},
                   {"limb_width", c.encoding.limb_width},
                   {"mask_threshold", c.encoding.mask_threshold},
                   {"mask_dilation", c.encoding.mask_dilation}};
  j["ue"] = {{"tau", c.ue.tau}, {"eps", c.ue.eps}, {"n_samples", c.ue.n_samples}};
  j["heatmap_loss"] = c.heatmap_loss;
  j["learning_rate"] = c.learning_rate;
  j["lr_schedule"] = c.lr_schedule;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["flip_prob"] = c.flip_prob;
  j["noise_max_sigma"] = c.noise_max_sigma;
  j["seed"] = c.seed;
  j["optimizer"] = "adam";
  return j;
}

// Layered configuration: file values override the defaults, CLI overrides
// both (the CLI simply calls cfg.set before this).
inline RunConfig run_config_from_kv(const KvConfig& kv) {
  RunConfig c;
  c.dataset_dir = kv.get_string("data", c.dataset_dir);
  c.out_dir = kv.get_string("out", c.out_dir);
  c.network.stages = kv.get_int("net.stages", c.network.stages);
  if (kv.has("net.widths")) {
    c.network.widths.clear();
    std::string s = kv.get_string("net.widths", "");
    std::size_t pos = 0;
    while (pos < s.size()) {
      const std::size_t comma = s.find(',', pos);
      c.network.widths.push_back(std::stoi(s.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  c.network.blocks_per_stage = kv.get_int("net.blocks", c.network.blocks_per_stage);
  c.network.srf_enabled = kv.get_bool("net.srf", c.network.srf_enabled);
  c.network.srf_heatmap_feedback =
      kv.get_bool("net.srf_feedback", c.network.srf_heatmap_feedback);
  c.awing.omega = kv.get_double("awing.omega", c.awing.omega);
  c.awing.theta = kv.get_double("awing.theta", c.awing.theta);
  c.awing.epsilon = kv.get_double("awing.epsilon", c.awing.epsilon);
  c.awing.alpha = kv.get_double("awing.alpha", c.awing.alpha);
  c.weights.w_heatmap = kv.get_double("loss.w1", c.weights.w_heatmap);
  c.weights.w_paf = kv.get_double("loss.w2", c.weights.w_paf);
  c.weights.w_mask = kv.get_double("loss.w_mask", c.weights.w_mask);
  c.encoding.sigma = kv.get_double("encoding.sigma", c.encoding.sigma);
  c.encoding.limb_width = kv.get_double("encoding.limb_width", c.encoding.limb_width);
  c.encoding.mask_threshold =
      kv.get_double("encoding.mask_threshold", c.encoding.mask_threshold);
  c.encoding.mask_dilation = kv.get_int("encoding.mask_dilation", c.encoding.mask_dilation);
  c.ue.tau = kv.get_double("ue.tau", c.ue.tau);
  c.ue.eps = kv.get_double("ue.eps", c.ue.eps);
  c.ue.n_samples = kv.get_int("ue.n_samples", c.ue.n_samples);
  c.heatmap_loss = kv.get_string("heatmap_loss", c.heatmap_loss);
  c.learning_rate = kv.get_double("lr", c.learning_rate);
  c.lr_schedule = kv.get_string("lr_schedule", c.lr_schedule);
  c.epochs = kv.get_int("epochs", c.epochs);
  c.batch_size = kv.get_int("batch", c.batch_size);
  c.flip_prob = kv.get_double("flip_prob", c.flip_prob);
  c.noise_max_sigma = kv.get_double("noise_max_sigma", c.noise_max_sigma);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<int>(c.seed)));
  return c;
}

}  // namespace hipmark::harness
