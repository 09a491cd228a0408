// Command-line front end: dataset synthesis, training, evaluation, single-image
// inference, the loss-convergence comparison and the ablation grid.
//
// Exit codes: 0 success, 2 configuration error, 3 training divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "hipmark/harness/experiments.hpp"
#include "hipmark/phantom.hpp"

namespace fs = std::filesystem;
using namespace hipmark;

namespace {

harness::RunConfig build_run_config(const std::string& config_file,
                                    const std::vector<std::string>& sets) {
  KvConfig kv;
  if (!config_file.empty()) kv = KvConfig::from_file(config_file);
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + s);
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  return harness::run_config_from_kv(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hip radiograph landmark toolkit"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic pelvis dataset");
  std::string synth_out = "dataset";
  int synth_train = 257, synth_val = 53, synth_size = 256;
  double synth_frac = -1.0;
  double synth_spacing = 1.0;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--train", synth_train, "training images");
  synth->add_option("--val", synth_val, "validation images");
  synth->add_option("--unstructured-frac", synth_frac,
                    "unstructured fraction per split (default: paper counts 32/257, 18/53)");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--size", synth_size, "square image size in px");
  synth->add_option("--spacing", synth_spacing, "pixel spacing in mm");

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  std::string train_config;
  std::vector<std::string> train_sets;
  train_cmd->add_option("--config", train_config, "key = value config file");
  train_cmd->add_option("--set", train_sets, "override, e.g. --set epochs=10");

  // --- eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  std::string eval_ckpt, eval_data, eval_out = "eval_out", eval_split = "val";
  bool eval_ue = true, eval_dump = false;
  double eval_tau = 0.3;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "output directory");
  eval_cmd->add_option("--split", eval_split, "train or val");
  eval_cmd->add_flag("--ue,!--no-ue", eval_ue, "apply uncertainty suppression");
  eval_cmd->add_option("--tau", eval_tau, "suppression threshold");
  eval_cmd->add_flag("--dump-uncertainty", eval_dump, "write uncertainty map PNGs");

  // --- infer ---------------------------------------------------------------
  auto* infer_cmd = app.add_subcommand("infer", "run one image through a checkpoint");
  std::string infer_ckpt, infer_image, infer_out = "infer_out";
  double infer_spacing = 1.0, infer_tau = 0.3;
  bool infer_dump = true;
  infer_cmd->add_option("--checkpoint", infer_ckpt, "checkpoint file")->required();
  infer_cmd->add_option("--image", infer_image, "8-bit grayscale PNG")->required();
  infer_cmd->add_option("--out", infer_out, "output directory");
  infer_cmd->add_option("--spacing", infer_spacing, "pixel spacing in mm");
  infer_cmd->add_option("--tau", infer_tau, "suppression threshold");
  infer_cmd->add_flag("--dump-uncertainty,!--no-dump-uncertainty", infer_dump,
                      "write the uncertainty map PNG");

  // --- loss-compare ----------------------------------------------------------
  auto* lc_cmd = app.add_subcommand(
      "loss-compare", "train adaptive-wing vs mse heatmap losses and compare");
  std::string lc_config;
  std::vector<std::string> lc_sets;
  std::vector<std::uint64_t> lc_seeds = {1, 2, 3};
  double lc_threshold = 4.0;
  lc_cmd->add_option("--config", lc_config, "key = value config file");
  lc_cmd->add_option("--set", lc_sets, "override, e.g. --set epochs=10");
  lc_cmd->add_option("--seeds", lc_seeds, "seeds to run");
  lc_cmd->add_option("--threshold", lc_threshold, "val-MRE threshold in px");

  // --- ablation --------------------------------------------------------------
  auto* ab_cmd = app.add_subcommand("ablation",
                                    "train/evaluate the {SRF on/off} x {UE on/off} grid");
  std::string ab_config;
  std::vector<std::string> ab_sets;
  std::uint64_t ab_seed = 1;
  ab_cmd->add_option("--config", ab_config, "key = value config file");
  ab_cmd->add_option("--set", ab_sets, "override, e.g. --set epochs=10");
  ab_cmd->add_option("--seed", ab_seed, "run seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      PhantomConfig cfg;
      cfg.height = synth_size;
      cfg.width = synth_size;
      cfg.spacing_mm = synth_spacing;
      cfg.seed = synth_seed;
      DatasetSpec spec;
      spec.train_total = synth_train;
      spec.val_total = synth_val;
      if (synth_frac >= 0.0) {
        spec.train_unstructured = static_cast<int>(std::lround(synth_train * synth_frac));
        spec.val_unstructured = static_cast<int>(std::lround(synth_val * synth_frac));
      } else {
        // default split mirrors the reference counts, scaled to the request
        spec.train_unstructured =
            static_cast<int>(std::lround(synth_train * (32.0 / 257.0)));
        spec.val_unstructured = static_cast<int>(std::lround(synth_val * (18.0 / 53.0)));
      }
      const DatasetManifest m = build_dataset(cfg, spec, synth_out);
      std::cout << "wrote " << m.train.size() << " train + " << m.val.size()
                << " val samples to " << synth_out << "\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      harness::RunConfig cfg = build_run_config(train_config, train_sets);
      if (cfg.out_dir.empty()) cfg.out_dir = "run_out";
      const harness::TrainResult r = harness::train(cfg);
      std::cout << "best val MRE " << r.best_val_mre << " at epoch " << r.best_epoch
                << "; checkpoint: " << r.best_checkpoint << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      auto net = net::load_checkpoint<double>(eval_ckpt);
      const harness::LoadedDataset ds = harness::load_dataset(eval_data);
      harness::EvalOptions opts;
      opts.ue_enabled = eval_ue;
      opts.ue.tau = eval_tau;
      opts.out_dir = eval_out;
      opts.dump_uncertainty = eval_dump;
      if (eval_split != "train" && eval_split != "val")
        throw std::invalid_argument("eval: --split must be train or val");
      const auto& ids = eval_split == "train" ? ds.manifest.train : ds.manifest.val;
      const auto res =
          harness::evaluate_split(ds, ids, harness::predictor_from_net(net), opts);
      const auto& r = res.report;
      auto line = [](const SubsetMetrics& s) {
        std::ostringstream os;
        os << s.subset << ": images=" << s.images;
        if (s.mre_mm) os << " MRE=" << *s.mre_mm;
        if (s.sdr_2mm) os << " SDR=" << *s.sdr_2mm;
        os << " matched=" << s.matched << " missed=" << s.missed
           << " spurious=" << s.spurious;
        return os.str();
      };
      std::cout << line(r.all) << "\n" << line(r.structured) << "\n"
                << line(r.unstructured) << "\n";
      std::cout << "report written to " << eval_out << "/report.csv\n";
      return 0;
    }

    if (infer_cmd->parsed()) {
      auto net = net::load_checkpoint<double>(infer_ckpt);
      AnnotatedImage img;
      img.pixels = read_gray8_png(infer_image);
      img.spacing_x = infer_spacing;
      img.spacing_y = infer_spacing;
      const auto out = net.forward(img.pixels);
      const SkeletonGraph skeleton = build_default_skeleton();
      UncertaintyConfig ucfg;
      ucfg.tau = infer_tau;
      const int stride = net.config().output_stride();
      const auto decoded = decode_landmarks(out.heatmaps, stride);
      const auto verdicts =
          aggregate_and_suppress(decoded, skeleton, out.paf, stride, ucfg);

      fs::create_directories(infer_out);
      nlohmann::json lms = nlohmann::json::array();
      for (int gid = 0; gid < kNumLandmarks; ++gid)
        lms.push_back({{"id", gid},
                       {"category", category_of(gid)},
                       {"side", side_of(gid) == Side::Left ? "L" : "R"},
                       {"x", decoded[gid].x},
                       {"y", decoded[gid].y},
                       {"w", verdicts[gid].w_hat},
                       {"u", verdicts[gid].u},
                       {"keep", verdicts[gid].keep}});
      std::ofstream jf(fs::path(infer_out) / "landmarks.json");
      jf << nlohmann::json{{"image", infer_image}, {"landmarks", lms}}.dump(2) << '\n';
      if (infer_dump) {
        const MatrixXd map = render_uncertainty_map(decoded, verdicts, img.pixels, true);
        write_gray8_png((fs::path(infer_out) / "uncertainty_map.png").string(), map);
      }
      int kept = 0;
      for (const auto& v : verdicts) kept += v.keep ? 1 : 0;
      std::cout << "kept " << kept << "/24 landmarks; outputs in " << infer_out << "\n";
      return 0;
    }

    if (lc_cmd->parsed()) {
      harness::RunConfig cfg = build_run_config(lc_config, lc_sets);
      if (cfg.out_dir.empty()) cfg.out_dir = "loss_compare_out";
      const harness::LoadedDataset ds = harness::load_dataset(cfg.dataset_dir);
      const auto res = harness::loss_comparison(cfg, ds, lc_seeds, lc_threshold);
      std::cout << "adaptive-wing wins on " << res.majority_wins << "/" << res.seeds.size()
                << " seeds (summary in " << cfg.out_dir << "/summary.json)\n";
      return 0;
    }

    if (ab_cmd->parsed()) {
      harness::RunConfig cfg = build_run_config(ab_config, ab_sets);
      if (cfg.out_dir.empty()) cfg.out_dir = "ablation_out";
      const harness::LoadedDataset ds = harness::load_dataset(cfg.dataset_dir);
      harness::ablation(cfg, ds, ab_seed);
      std::cout << "ablation table written to " << cfg.out_dir << "/table.md\n";
      return 0;
    }
  } catch (const harness::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
