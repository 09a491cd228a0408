#pragma once

#include <filesystem>
#include <fstream>

#include "hipmark/harness/evaluate.hpp"
#include "hipmark/harness/plot.hpp"
#include "hipmark/harness/train.hpp"

namespace hipmark::harness {

// ---------------------------------------------------------------------------
// Convergence comparison: identical runs differing only in the heatmap loss.

struct LossComparisonSeed {
  std::uint64_t seed = 0;
  std::vector<LedgerRow> awing_ledger;
  std::vector<LedgerRow> mse_ledger;
  int awing_epochs_to_threshold = -1;  // -1: never reached
  int mse_epochs_to_threshold = -1;
  double awing_final_val_mre = 0.0;
  double mse_final_val_mre = 0.0;
  bool awing_no_slower = false;
  bool awing_lower_final = false;
};

struct LossComparisonResult {
  std::vector<LossComparisonSeed> seeds;
  double threshold_px = 4.0;
  int majority_wins = 0;  // seeds where both verdicts hold
};

inline int epochs_to_threshold(const std::vector<LedgerRow>& ledger, double thr) {
  for (const auto& row : ledger)
    if (row.val_mre <= thr) return row.epoch + 1;
  return -1;
}

inline LossComparisonResult loss_comparison(const RunConfig& base, const LoadedDataset& ds,
                                            const std::vector<std::uint64_t>& seeds,
                                            double threshold_px = 4.0) {
  namespace fs = std::filesystem;
  LossComparisonResult result;
  result.threshold_px = threshold_px;
  fs::create_directories(base.out_dir);

  for (std::uint64_t seed : seeds) {
    LossComparisonSeed sc;
    sc.seed = seed;
    for (const std::string& mode : {std::string("awing"), std::string("mse")}) {
      RunConfig cfg = base;
      cfg.seed = seed;
      cfg.heatmap_loss = mode;
      cfg.out_dir =
          (fs::path(base.out_dir) / (mode + "_seed" + std::to_string(seed))).string();
      const TrainResult tr = train(cfg, ds);
      (mode == "awing" ? sc.awing_ledger : sc.mse_ledger) = tr.ledger;
    }
    sc.awing_epochs_to_threshold = epochs_to_threshold(sc.awing_ledger, threshold_px);
    sc.mse_epochs_to_threshold = epochs_to_threshold(sc.mse_ledger, threshold_px);
    sc.awing_final_val_mre = sc.awing_ledger.back().val_mre;
    sc.mse_final_val_mre = sc.mse_ledger.back().val_mre;
    sc.awing_no_slower =
        sc.awing_epochs_to_threshold > 0 &&
        (sc.mse_epochs_to_threshold < 0 ||
         sc.awing_epochs_to_threshold <= sc.mse_epochs_to_threshold);
    sc.awing_lower_final = sc.awing_final_val_mre < sc.mse_final_val_mre;
    if (sc.awing_no_slower && sc.awing_lower_final) ++result.majority_wins;

    // curves: per epoch, heatmap loss and validation MRE for both runs
    std::ofstream curves(fs::path(base.out_dir) /
                         ("curves_seed" + std::to_string(seed) + ".csv"));
    curves << "epoch,awing_heatmap_loss,awing_val_mre,mse_heatmap_loss,mse_val_mre\n";
    for (std::size_t e = 0; e < sc.awing_ledger.size(); ++e)
      curves << e << ',' << detail::csv_num(sc.awing_ledger[e].train_heatmap) << ','
             << detail::csv_num(sc.awing_ledger[e].val_mre) << ','
             << detail::csv_num(sc.mse_ledger[e].train_heatmap) << ','
             << detail::csv_num(sc.mse_ledger[e].val_mre) << '\n';

    std::vector<double> a_curve, m_curve;
    for (const auto& row : sc.awing_ledger) a_curve.push_back(row.val_mre);
    for (const auto& row : sc.mse_ledger) m_curve.push_back(row.val_mre);
    write_gray8_png(
        (fs::path(base.out_dir) / ("plot_seed" + std::to_string(seed) + ".png")).string(),
        render_line_plot({a_curve, m_curve}));
    result.seeds.push_back(std::move(sc));
  }

  std::ofstream summary(fs::path(base.out_dir) / "summary.json");
  nlohmann::json j;
  j["threshold_px"] = threshold_px;
  j["majority_wins"] = result.majority_wins;
  for (const auto& sc : result.seeds)
    j["seeds"].push_back({{"seed", sc.seed},
                          {"awing_epochs_to_threshold", sc.awing_epochs_to_threshold},
                          {"mse_epochs_to_threshold", sc.mse_epochs_to_threshold},
                          {"awing_final_val_mre", sc.awing_final_val_mre},
                          {"mse_final_val_mre", sc.mse_final_val_mre},
                          {"awing_no_slower", sc.awing_no_slower},
                          {"awing_lower_final", sc.awing_lower_final}});
  summary << j.dump(2) << '\n';
  return result;
}

// ---------------------------------------------------------------------------
// Ablation grid: {SRF on/off} x {UE on/off at evaluation}.

struct AblationCell {
  bool srf = false;
  bool ue = false;
  MetricsReport report;
};

struct AblationResult {
  std::vector<AblationCell> cells;  // 4 rows
  std::string srf_on_checkpoint;
  std::string srf_off_checkpoint;
};

namespace detail {

inline std::string md_num(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

}  // namespace detail

inline AblationResult ablation(const RunConfig& base, const LoadedDataset& ds,
                               std::uint64_t seed) {
  namespace fs = std::filesystem;
  AblationResult result;
  fs::create_directories(base.out_dir);

  std::map<bool, std::string> ckpt;
  for (bool srf : {true, false}) {
    RunConfig cfg = base;
    cfg.seed = seed;
    cfg.network.srf_enabled = srf;
    cfg.out_dir =
        (fs::path(base.out_dir) / (std::string(srf ? "srf_on" : "srf_off") + "_seed" +
                                   std::to_string(seed)))
            .string();
    const TrainResult tr = train(cfg, ds);
    ckpt[srf] = tr.best_checkpoint;
  }
  result.srf_on_checkpoint = ckpt[true];
  result.srf_off_checkpoint = ckpt[false];

  for (bool srf : {true, false}) {
    auto net = net::load_checkpoint<double>(ckpt[srf]);
    for (bool ue : {false, true}) {
      EvalOptions opts;
      opts.ue_enabled = ue;
      opts.ue = base.ue;
      opts.encoding = base.encoding;
      opts.out_dir = (fs::path(base.out_dir) /
                      (std::string("eval_") + (srf ? "srf_on" : "srf_off") + "_" +
                       (ue ? "ue_on" : "ue_off")))
                         .string();
      AblationCell cell;
      cell.srf = srf;
      cell.ue = ue;
      cell.report =
          evaluate_split(ds, ds.manifest.val, predictor_from_net(net), opts).report;
      result.cells.push_back(std::move(cell));
    }
  }

  // Markdown + CSV tables mirroring the report layout per subset
  std::ofstream md(fs::path(base.out_dir) / "table.md");
  std::ofstream csv(fs::path(base.out_dir) / "table.csv");
  md << "| model | subset | NME | MRE | SDR | PCC | ICC | T-Test |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  csv << "model,subset,NME,MRE,SDR,PCC,ICC,T-Test,matched,missed,spurious\n";
  for (const auto& cell : result.cells) {
    const std::string model = std::string(cell.srf ? "srf+" : "base") +
                              (cell.ue ? " ue-on" : " ue-off");
    for (const SubsetMetrics* s :
         {&cell.report.all, &cell.report.structured, &cell.report.unstructured}) {
      md << "| " << model << " | " << s->subset << " | " << detail::md_num(s->nme) << " | "
         << detail::md_num(s->mre_mm) << " | " << detail::md_num(s->sdr_2mm) << " | "
         << detail::md_num(s->pcc) << " | " << detail::md_num(s->icc) << " | "
         << detail::md_num(s->t_p) << " |\n";
      csv << model << ',' << s->subset << ',' << detail::opt_num(s->nme) << ','
          << detail::opt_num(s->mre_mm) << ',' << detail::opt_num(s->sdr_2mm) << ','
          << detail::opt_num(s->pcc) << ',' << detail::opt_num(s->icc) << ','
          << detail::opt_num(s->t_p) << ',' << s->matched << ',' << s->missed << ','
          << s->spurious << '\n';
    }
  }
  return result;
}

}  // namespace hipmark::harness
