#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipmark/net/blocks.hpp"

namespace hipmark::net {

struct NetworkConfig {
  int stages = 3;
  // branch 0 must comfortably span the K + 2E head channels; narrower
  // high-resolution branches bottleneck the 1x1 heads and stall training
  std::vector<int> widths = {32, 48, 64};
  int blocks_per_stage = 1;
  int num_landmarks = 24;  // heatmap channels K
  int num_edges = 24;      // PAF pairs E
  bool srf_enabled = true;
  bool srf_heatmap_feedback = true;  // final fusion block stacks an
                                     // intermediate heatmap prediction
  std::uint64_t init_seed = 0;

  int output_stride() const { return 4; }  // fixed by the two-stride stem
  int total_downsampling() const { return 4 << (stages - 1); }

  void validate() const {
    if (stages < 1) throw std::invalid_argument("network: stages must be >= 1");
    if (static_cast<int>(widths.size()) != stages)
      throw std::invalid_argument("network: widths must list one entry per stage");
    for (std::size_t i = 1; i < widths.size(); ++i)
      if (widths[i] <= widths[i - 1])
        throw std::invalid_argument("network: branch widths must strictly increase");
    for (int w : widths)
      if (w < 2) throw std::invalid_argument("network: widths must be >= 2");
    if (blocks_per_stage < 1)
      throw std::invalid_argument("network: blocks_per_stage must be >= 1");
    if (num_landmarks < 1 || num_edges < 1)
      throw std::invalid_argument("network: head channel counts must be positive");
  }
};

// Multi-resolution landmark network: a two-stride stem keeps a full-width
// high-resolution branch, lower-resolution branches are spawned per stage,
// information is exchanged by resize-and-sum fusion, and two 1x1 heads emit
// heatmaps and part-affinity fields at stride 4.
template <typename S>
class LandmarkNet {
 public:
  explicit LandmarkNet(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(mix_seed(cfg.init_seed, 0x1357));
    stem_conv1_.init("stem.conv1", 1, cfg_.widths[0], 3, 2, 1, rng);
    stem_gn1_.init("stem.gn1", cfg_.widths[0], rng);
    stem_conv2_.init("stem.conv2", cfg_.widths[0], cfg_.widths[0], 3, 2, 1, rng);
    stem_gn2_.init("stem.gn2", cfg_.widths[0], rng);

    stages_.resize(cfg_.stages);
    for (int t = 0; t < cfg_.stages; ++t) {
      Stage& st = stages_[t];
      const std::string sname = "stage" + std::to_string(t);
      if (t > 0) {
        st.transition.conv.init(sname + ".transition.conv", cfg_.widths[t - 1],
                                cfg_.widths[t], 3, 2, 1, rng);
        st.transition.gn.init(sname + ".transition.gn", cfg_.widths[t], rng);
      }
      if (cfg_.srf_enabled) {
        const bool final_stage = t == cfg_.stages - 1;
        const int feedback =
            final_stage && cfg_.srf_heatmap_feedback ? cfg_.num_landmarks : 0;
        st.srf = std::make_unique<SpatialFusionBlock<S>>();
        st.srf->init(sname + ".srf", cfg_.widths[0], feedback, rng);
      }
      st.branches.resize(t + 1);
      for (int i = 0; i <= t; ++i) {
        st.branches[i].resize(cfg_.blocks_per_stage);
        for (int bidx = 0; bidx < cfg_.blocks_per_stage; ++bidx)
          st.branches[i][bidx].init(
              sname + ".branch" + std::to_string(i) + ".block" + std::to_string(bidx),
              cfg_.widths[i], rng);
      }
      if (t > 0) {
        st.exchange.resize(t + 1);
        for (int i = 0; i <= t; ++i) {
          st.exchange[i].resize(t + 1);
          for (int j = 0; j <= t; ++j) {
            if (i == j) continue;
            st.exchange[i][j] = std::make_unique<Conv2d<S>>();
            st.exchange[i][j]->init(
                sname + ".fuse" + std::to_string(j) + "to" + std::to_string(i),
                cfg_.widths[j], cfg_.widths[i], 1, 1, 0, rng);
          }
        }
        st.relu.resize(t + 1);
        st.pool.resize(t + 1);
        st.up.resize(t + 1);
        for (int i = 0; i <= t; ++i) {
          st.pool[i].resize(t + 1);
          st.up[i].resize(t + 1);
        }
      }
    }

    head_heatmap_.init("head.heatmap", cfg_.widths[0], cfg_.num_landmarks, 1, 1, 0, rng);
    head_paf_.init("head.paf", cfg_.widths[0], 2 * cfg_.num_edges, 1, 1, 0, rng);

    collect_params();
  }

  const NetworkConfig& config() const { return cfg_; }

  const ParamRefs<S>& parameters() { return params_; }

  void zero_grad() {
    for (Param<S>* p : params_) p->zero_grad();
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const Param<S>* p : params_) n += p->size();
    return n;
  }

  struct Output {
    Feature<S> heatmaps;
    Feature<S> paf;
  };

  // image: h x w grayscale in [0,1]; h and w must be divisible by the total
  // downsampling factor.
  Output forward(const MatrixX<S>& image) {
    const int h = static_cast<int>(image.rows());
    const int w = static_cast<int>(image.cols());
    const int div = cfg_.total_downsampling();
    if (h % div != 0)
      throw std::invalid_argument("network: input height " + std::to_string(h) +
                                  " is not divisible by " + std::to_string(div));
    if (w % div != 0)
      throw std::invalid_argument("network: input width " + std::to_string(w) +
                                  " is not divisible by " + std::to_string(div));

    Feature<S> x(1, h, w);
    x.data.row(0) = Eigen::Map<const VectorX<S>>(image.data(), image.size()).transpose();

    Feature<S> b0 = stem_relu1_.forward(stem_gn1_.forward(stem_conv1_.forward(x)));
    b0 = stem_relu2_.forward(stem_gn2_.forward(stem_conv2_.forward(b0)));

    std::vector<Feature<S>> branches;
    branches.push_back(std::move(b0));

    for (int t = 0; t < cfg_.stages; ++t) {
      Stage& st = stages_[t];
      if (t > 0) {
        Feature<S> next = st.transition.relu.forward(
            st.transition.gn.forward(st.transition.conv.forward(branches.back())));
        branches.push_back(std::move(next));
      }
      if (st.srf) branches[0] = st.srf->forward(branches[0]);
      for (int i = 0; i <= t; ++i)
        for (auto& block : st.branches[i]) branches[i] = block.forward(branches[i]);
      if (t > 0) exchange_forward(st, branches);
    }

    final_shapes_.clear();
    for (const auto& b : branches) final_shapes_.push_back({b.channels, b.height, b.width});
    last_feature_ = branches[0];
    Output out;
    out.heatmaps = head_heatmap_.forward(branches[0]);
    out.paf = head_paf_.forward(branches[0]);
    return out;
  }

  // Accumulates parameter gradients; returns d(loss)/d(input image) implicitly
  // discarded (inputs are data, not parameters).
  void backward(const Feature<S>& dheatmaps, const Feature<S>& dpaf) {
    Feature<S> d0 = head_heatmap_.backward(dheatmaps);
    d0.data += head_paf_.backward(dpaf).data;

    // Only branch 0 feeds the heads; the other final-stage branches carry
    // zero output gradient.
    std::vector<Feature<S>> dbranches;
    dbranches.push_back(std::move(d0));
    for (std::size_t i = 1; i < final_shapes_.size(); ++i)
      dbranches.emplace_back(final_shapes_[i].c, final_shapes_[i].h, final_shapes_[i].w);

    for (int t = cfg_.stages - 1; t >= 0; --t) {
      Stage& st = stages_[t];
      if (t > 0) exchange_backward(st, dbranches);
      for (int i = t; i >= 0; --i)
        for (int bidx = cfg_.blocks_per_stage - 1; bidx >= 0; --bidx)
          dbranches[i] = st.branches[i][bidx].backward(dbranches[i]);
      if (st.srf) dbranches[0] = st.srf->backward(dbranches[0]);
      if (t > 0) {
        Feature<S> dtrans = st.transition.conv.backward(
            st.transition.gn.backward(st.transition.relu.backward(dbranches.back())));
        dbranches.pop_back();
        dbranches.back().data += dtrans.data;
      }
    }

    Feature<S> dstem = stem_conv2_.backward(
        stem_gn2_.backward(stem_relu2_.backward(dbranches[0])));
    stem_conv1_.backward(stem_gn1_.backward(stem_relu1_.backward(dstem)));
  }

  const Feature<S>& last_feature() const { return last_feature_; }

 private:
  struct Transition {
    Conv2d<S> conv;
    GroupNorm<S> gn;
    Relu<S> relu;
  };

  struct Stage {
    Transition transition;  // unused for stage 0
    std::unique_ptr<SpatialFusionBlock<S>> srf;
    std::vector<std::vector<BasicBlock<S>>> branches;
    // exchange[i][j]: 1x1 projection feeding branch j's map into branch i
    std::vector<std::vector<std::unique_ptr<Conv2d<S>>>> exchange;
    std::vector<Relu<S>> relu;
    std::vector<std::vector<AvgPool<S>>> pool;
    std::vector<std::vector<NearestUpsample<S>>> up;
    std::vector<Feature<S>> fused_inputs_;  // cache of pre-exchange branches
  };

  void exchange_forward(Stage& st, std::vector<Feature<S>>& branches) {
    const int n = static_cast<int>(branches.size());
    st.fused_inputs_ = branches;
    std::vector<Feature<S>> fused(n);
    for (int i = 0; i < n; ++i) {
      Feature<S> acc = branches[i];
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        Feature<S> t;
        if (j < i) {
          // higher resolution -> pool down, then project
          st.pool[i][j].factor = 1 << (i - j);
          t = st.exchange[i][j]->forward(st.pool[i][j].forward(branches[j]));
        } else {
          // lower resolution -> project, then upsample
          st.up[i][j].factor = 1 << (j - i);
          t = st.up[i][j].forward(st.exchange[i][j]->forward(branches[j]));
        }
        acc.data += t.data;
      }
      fused[i] = st.relu[i].forward(acc);
    }
    branches = std::move(fused);
  }

  void exchange_backward(Stage& st, std::vector<Feature<S>>& dbranches) {
    const int n = static_cast<int>(dbranches.size());
    std::vector<Feature<S>> dins(n);
    for (int i = 0; i < n; ++i) {
      const Feature<S>& src = st.fused_inputs_[i];
      dins[i] = Feature<S>(src.channels, src.height, src.width);
    }
    for (int i = 0; i < n; ++i) {
      const Feature<S> dacc = st.relu[i].backward(dbranches[i]);
      dins[i].data += dacc.data;  // identity route
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (j < i)
          dins[j].data += st.pool[i][j].backward(st.exchange[i][j]->backward(dacc)).data;
        else
          dins[j].data += st.exchange[i][j]->backward(st.up[i][j].backward(dacc)).data;
      }
    }
    dbranches = std::move(dins);
  }

  void collect_params() {
    params_.clear();
    stem_conv1_.collect(params_);
    stem_gn1_.collect(params_);
    stem_conv2_.collect(params_);
    stem_gn2_.collect(params_);
    for (Stage& st : stages_) {
      if (!st.branches.empty() && st.branches.size() > 1) {
        st.transition.conv.collect(params_);
        st.transition.gn.collect(params_);
      }
      if (st.srf) st.srf->collect(params_);
      for (auto& branch : st.branches)
        for (auto& block : branch) block.collect(params_);
      for (auto& row : st.exchange)
        for (auto& conv : row)
          if (conv) conv->collect(params_);
    }
    head_heatmap_.collect(params_);
    head_paf_.collect(params_);
  }

  struct Shape {
    int c = 0, h = 0, w = 0;
  };

  NetworkConfig cfg_;
  Conv2d<S> stem_conv1_, stem_conv2_;
  GroupNorm<S> stem_gn1_, stem_gn2_;
  Relu<S> stem_relu1_, stem_relu2_;
  std::vector<Stage> stages_;
  Conv2d<S> head_heatmap_, head_paf_;
  Feature<S> last_feature_;
  std::vector<Shape> final_shapes_;
  ParamRefs<S> params_;
};

using LandmarkNetD = LandmarkNet<double>;

}  // namespace hipmark::net
