#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hipmark/net/model.hpp"

namespace hipmark::net {

// Single-file checkpoint: magic, JSON config echo, then named double arrays.
// A plain-text manifest of layer names and shapes is written next to it.

inline constexpr char kCheckpointMagic[] = "HIPMARKCKPT1\n";

inline nlohmann::json config_to_json(const NetworkConfig& cfg) {
  nlohmann::json j;
  j["stages"] = cfg.stages;
  j["widths"] = cfg.widths;
  j["blocks_per_stage"] = cfg.blocks_per_stage;
  j["num_landmarks"] = cfg.num_landmarks;
  j["num_edges"] = cfg.num_edges;
  j["srf_enabled"] = cfg.srf_enabled;
  j["srf_heatmap_feedback"] = cfg.srf_heatmap_feedback;
  return j;
}

inline NetworkConfig config_from_json(const nlohmann::json& j) {
  NetworkConfig cfg;
  cfg.stages = j.at("stages").get<int>();
  cfg.widths = j.at("widths").get<std::vector<int>>();
  cfg.blocks_per_stage = j.at("blocks_per_stage").get<int>();
  cfg.num_landmarks = j.at("num_landmarks").get<int>();
  cfg.num_edges = j.at("num_edges").get<int>();
  cfg.srf_enabled = j.at("srf_enabled").get<bool>();
  cfg.srf_heatmap_feedback = j.at("srf_heatmap_feedback").get<bool>();
  return cfg;
}

template <typename S>
void save_checkpoint(const std::string& path, LandmarkNet<S>& net) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  f.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  const std::string cfg = config_to_json(net.config()).dump();
  const std::uint32_t cfg_len = static_cast<std::uint32_t>(cfg.size());
  f.write(reinterpret_cast<const char*>(&cfg_len), sizeof(cfg_len));
  f.write(cfg.data(), cfg.size());

  const auto& params = net.parameters();
  const std::uint32_t count = static_cast<std::uint32_t>(params.size());
  f.write(reinterpret_cast<const char*>(&count), sizeof(count));

  std::ofstream manifest(path + ".manifest.txt");
  for (const Param<S>* p : params) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(p->name.size());
    const std::uint32_t rows = static_cast<std::uint32_t>(p->value.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(p->value.cols());
    f.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    f.write(p->name.data(), p->name.size());
    f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double v = static_cast<double>(p->value.data()[i]);
      f.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    if (manifest) manifest << p->name << ' ' << rows << ' ' << cols << '\n';
  }
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

template <typename S>
LandmarkNet<S> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string magic(sizeof(kCheckpointMagic) - 1, '\0');
  f.read(magic.data(), magic.size());
  if (magic != kCheckpointMagic)
    throw std::runtime_error("checkpoint: bad magic in " + path);

  std::uint32_t cfg_len = 0;
  f.read(reinterpret_cast<char*>(&cfg_len), sizeof(cfg_len));
  std::string cfg_str(cfg_len, '\0');
  f.read(cfg_str.data(), cfg_len);
  LandmarkNet<S> net(config_from_json(nlohmann::json::parse(cfg_str)));

  std::uint32_t count = 0;
  f.read(reinterpret_cast<char*>(&count), sizeof(count));
  auto& params = net.parameters();
  if (count != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);

  for (Param<S>* p : params) {
    std::uint32_t name_len = 0, rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
      throw std::runtime_error("checkpoint: layout mismatch at '" + name +
                               "' (expected '" + p->name + "')");
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double v = 0.0;
      f.read(reinterpret_cast<char*>(&v), sizeof(v));
      p->value.data()[i] = static_cast<S>(v);
    }
  }
  if (!f) throw std::runtime_error("checkpoint: truncated file: " + path);
  return net;
}

}  // namespace hipmark::net
