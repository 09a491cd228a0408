#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hipmark/encoding.hpp"
#include "hipmark/harness/evaluate.hpp"
#include "hipmark/harness/experiments.hpp"
#include "hipmark/harness/train.hpp"
#include "hipmark/phantom.hpp"

using namespace hipmark;
using namespace hipmark::harness;
namespace fs = std::filesystem;

namespace {

std::string make_dataset(const std::string& name, int train_n, int val_n, int unstructured,
                         std::uint64_t seed = 5) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  PhantomConfig cfg;
  cfg.height = 96;
  cfg.width = 96;
  cfg.seed = seed;
  DatasetSpec spec;
  spec.train_total = train_n;
  spec.val_total = val_n;
  spec.train_unstructured = std::min(train_n, unstructured);
  spec.val_unstructured = std::min(val_n, unstructured);
  build_dataset(cfg, spec, dir.string());
  return dir.string();
}

RunConfig smoke_config(const std::string& data_dir, const std::string& run_name) {
  RunConfig cfg;
  cfg.dataset_dir = data_dir;
  cfg.out_dir = (fs::temp_directory_path() / run_name).string();
  fs::remove_all(cfg.out_dir);
  cfg.network.stages = 1;
  cfg.network.widths = {4};
  cfg.network.blocks_per_stage = 1;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 3;
  return cfg;
}

// oracle predictor: returns the encoded ground-truth targets
Predictor oracle_predictor(const SkeletonGraph& skeleton, const EncodingConfig& ec) {
  return [&skeleton, ec](const AnnotatedImage& a) {
    const auto t = encode_targets<double>(a, skeleton, ec);
    return RawPrediction{t.heatmaps, t.paf};
  };
}

}  // namespace

TEST_CASE("smoke train: ledger rows, checkpoints and artifacts exist") {
  const std::string data = make_dataset("hm_smoke_ds", 4, 2, 1);
  const RunConfig cfg = smoke_config(data, "hm_smoke_run");
  const LoadedDataset ds = load_dataset(data);
  const TrainResult r = train(cfg, ds);
  CHECK(r.ledger.size() == 2);
  CHECK(fs::exists(r.best_checkpoint));
  CHECK(fs::exists(r.last_checkpoint));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "config.json"));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "ledger.csv"));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "steps.csv"));
  CHECK(fs::exists(r.best_checkpoint + ".manifest.txt"));
  for (const auto& row : r.ledger) {
    CHECK(std::isfinite(row.train_total));
    CHECK(std::isfinite(row.val_mre));
  }
}

TEST_CASE("determinism: identical config and seed give identical ledger columns") {
  const std::string data = make_dataset("hm_det_ds", 4, 2, 1);
  const LoadedDataset ds = load_dataset(data);
  RunConfig cfg = smoke_config(data, "hm_det_run_a");
  const TrainResult a = train(cfg, ds);
  cfg.out_dir = (fs::temp_directory_path() / "hm_det_run_b").string();
  const TrainResult b = train(cfg, ds);
  REQUIRE(a.ledger.size() == b.ledger.size());
  for (std::size_t i = 0; i < a.ledger.size(); ++i) {
    CHECK(a.ledger[i].train_heatmap == b.ledger[i].train_heatmap);
    CHECK(a.ledger[i].train_paf == b.ledger[i].train_paf);
    CHECK(a.ledger[i].train_total == b.ledger[i].train_total);
    CHECK(a.ledger[i].val_total == b.ledger[i].val_total);
    CHECK(a.ledger[i].val_mre == b.ledger[i].val_mre);
  }
}

TEST_CASE("augmentation: flipped phantoms remain valid annotations") {
  PhantomConfig cfg;
  cfg.height = 96;
  cfg.width = 96;
  cfg.seed = 8;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const AnnotatedImage a = generate_phantom(cfg, s);
    const AnnotatedImage flipped = mirror_landmarks(a);
    CHECK(validate_annotation(flipped).empty());
  }
}

TEST_CASE("divergence guard aborts with a divergence error") {
  const std::string data = make_dataset("hm_div_ds", 4, 2, 0);
  const LoadedDataset ds = load_dataset(data);
  RunConfig cfg = smoke_config(data, "hm_div_run");
  cfg.learning_rate = 1e200;  // guaranteed overflow
  cfg.epochs = 3;
  CHECK_THROWS_AS(train(cfg, ds), DivergenceError);
}

TEST_CASE("evaluate: oracle predictor scores perfectly on the structured subset") {
  const std::string data = make_dataset("hm_eval_ds", 3, 4, 2);
  const LoadedDataset ds = load_dataset(data);
  const SkeletonGraph skeleton = build_default_skeleton();
  EncodingConfig ec;

  EvalOptions opts;
  opts.ue_enabled = true;
  const EvalResult res =
      evaluate_split(ds, ds.manifest.val, oracle_predictor(skeleton, ec), opts);
  REQUIRE(res.report.structured.images > 0);
  CHECK(*res.report.structured.sdr_2mm == 1.0);
  CHECK(*res.report.structured.mre_mm <= 1.5);  // decode quantisation only
  CHECK(res.report.structured.missed == 0);
  CHECK(res.report.structured.spurious == 0);
}

TEST_CASE("evaluate: ue toggle is a no-op when nothing is suppressed") {
  const std::string data = make_dataset("hm_noop_ds", 2, 3, 0);
  const LoadedDataset ds = load_dataset(data);
  const SkeletonGraph skeleton = build_default_skeleton();
  EncodingConfig ec;

  EvalOptions on;
  on.ue_enabled = true;
  EvalOptions off;
  off.ue_enabled = false;
  const auto r_on = evaluate_split(ds, ds.manifest.val, oracle_predictor(skeleton, ec), on);
  const auto r_off =
      evaluate_split(ds, ds.manifest.val, oracle_predictor(skeleton, ec), off);
  // structured oracle predictions are fully supported: no suppression occurs
  CHECK(r_on.report.all.matched == r_off.report.all.matched);
  CHECK(*r_on.report.all.mre_mm == *r_off.report.all.mre_mm);
  CHECK(*r_on.report.all.sdr_2mm == *r_off.report.all.sdr_2mm);
}

TEST_CASE("evaluate: fixed-24 mode reports spurious landmarks on unstructured data") {
  const std::string data = make_dataset("hm_spur_ds", 2, 6, 4);
  const LoadedDataset ds = load_dataset(data);
  const SkeletonGraph skeleton = build_default_skeleton();
  EncodingConfig ec;
  EvalOptions off;
  off.ue_enabled = false;  // keep all 24 decoded landmarks
  const auto res = evaluate_split(ds, ds.manifest.val, oracle_predictor(skeleton, ec), off);
  REQUIRE(res.report.unstructured.images > 0);
  CHECK(res.report.unstructured.spurious > 0);
}

TEST_CASE("evaluate: artifacts are written when an output dir is set") {
  const std::string data = make_dataset("hm_art_ds", 2, 2, 1);
  const LoadedDataset ds = load_dataset(data);
  const SkeletonGraph skeleton = build_default_skeleton();
  EncodingConfig ec;
  EvalOptions opts;
  opts.out_dir = (fs::temp_directory_path() / "hm_art_out").string();
  fs::remove_all(opts.out_dir);
  opts.dump_uncertainty = true;
  evaluate_split(ds, ds.manifest.val, oracle_predictor(skeleton, ec), opts);
  CHECK(fs::exists(fs::path(opts.out_dir) / "report.csv"));
  CHECK(fs::exists(fs::path(opts.out_dir) / "clinical.csv"));
  CHECK(fs::exists(fs::path(opts.out_dir) / "ue_report.jsonl"));
  int pngs = 0;
  for (const auto& e : fs::directory_iterator(opts.out_dir))
    if (e.path().extension() == ".png") ++pngs;
  CHECK(pngs == 2);

  // one JSONL row per image, 24 landmark entries each
  std::ifstream jf(fs::path(opts.out_dir) / "ue_report.jsonl");
  int rows = 0;
  std::string line;
  while (std::getline(jf, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("landmarks").size() == 24);
    ++rows;
  }
  CHECK(rows == 2);
}

TEST_CASE("overfit sanity: a small net drives train MRE below 2 px") {
  const std::string data = make_dataset("hm_overfit_ds", 8, 2, 0, 11);
  const LoadedDataset ds = load_dataset(data);
  RunConfig cfg;
  cfg.dataset_dir = data;
  cfg.out_dir = (fs::temp_directory_path() / "hm_overfit_run").string();
  fs::remove_all(cfg.out_dir);
  cfg.network.stages = 2;
  cfg.network.widths = {32, 48};
  cfg.network.blocks_per_stage = 1;
  cfg.epochs = 200;
  cfg.batch_size = 1;  // one adam step per image
  cfg.learning_rate = 1.5e-3;
  cfg.flip_prob = 0.0;  // plain memorization run
  cfg.noise_max_sigma = 0.0;
  cfg.seed = 4;
  const TrainResult r = train(cfg, ds);

  auto net = net::load_checkpoint<double>(r.last_checkpoint);
  EvalOptions opts;
  opts.ue_enabled = false;
  const auto res =
      evaluate_split(ds, ds.manifest.train, predictor_from_net(net), opts);
  REQUIRE(res.report.all.mre_mm.has_value());
  CHECK(*res.report.all.mre_mm < 2.0);
}

TEST_CASE("cli: synth, train, eval and error exit codes") {
  const fs::path work = fs::temp_directory_path() / "hm_cli";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string cli = HIPMARK_CLI_PATH;
  auto run = [&](const std::string& args) {
    return std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
  };

  CHECK(run("synth --out " + (work / "ds").string() +
            " --train 3 --val 2 --size 96 --seed 7") == 0);
  CHECK(fs::exists(work / "ds" / "manifest.json"));

  const std::string train_args =
      "train --set data=" + (work / "ds").string() + " --set out=" +
      (work / "run").string() +
      " --set net.stages=1 --set net.widths=4 --set net.blocks=1 --set epochs=1 "
      "--set batch=2";
  CHECK(run(train_args) == 0);
  CHECK(fs::exists(work / "run" / "best.ckpt"));

  CHECK(run("eval --checkpoint " + (work / "run" / "best.ckpt").string() + " --data " +
            (work / "ds").string() + " --out " + (work / "eval").string()) == 0);
  CHECK(fs::exists(work / "eval" / "report.csv"));

  CHECK(run("infer --checkpoint " + (work / "run" / "best.ckpt").string() + " --image " +
            (work / "ds" / "images" / "val_0000.png").string() + " --out " +
            (work / "infer").string()) == 0);
  CHECK(fs::exists(work / "infer" / "landmarks.json"));
  CHECK(fs::exists(work / "infer" / "uncertainty_map.png"));

  // configuration error -> exit code 2
  const int bad = run("train --set data=" + (work / "ds").string() +
                      " --set heatmap_loss=bogus");
  CHECK(WEXITSTATUS(bad) == 2);
}
