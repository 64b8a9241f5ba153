#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "dsf/checkpoint.hpp"
#include "dsf/config.hpp"
#include "dsf/dataset.hpp"
#include "dsf/errors.hpp"
#include "dsf/fusion.hpp"
#include "dsf/gradcheck_suite.hpp"
#include "dsf/image_io.hpp"
#include "dsf/trainer.hpp"

namespace dsf::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

bool non_empty_dir(const fs::path& dir) { return fs::is_directory(dir) && !fs::is_empty(dir); }

void prepare_out_dir(const fs::path& dir, bool force, const std::vector<std::string>& owned) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
  if (non_empty_dir(dir)) {
    if (!force) throw ConfigError(dir.string() + " is not empty; pass --force to overwrite");
    for (const std::string& name : owned) fs::remove_all(dir / name);
  }
  fs::create_directories(dir);
}

struct SynthArgs {
  std::string out;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::size_t size = 64;
  std::string config;
  bool force = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.count == 0) throw ConfigError("synth: --count must be >= 1");
  GlobalConfig cfg = a.config.empty() ? GlobalConfig{} : load_config(a.config);
  cfg.data.scene.size = a.size;
  cfg.data.scene.seed = a.seed;
  cfg.data.scene.validate();
  prepare_out_dir(a.out, a.force, {"images", "masks", "manifest.json", "resolved_config.json"});
  const DatasetManifest m = write_synthetic_dataset(a.out, a.count, cfg.data.scene, cfg.data.split_ratio);
  write_json(fs::path(a.out) / "resolved_config.json", to_json(cfg));
  out << "wrote " << a.count << " scenes to " << a.out << " (" << m.count(Split::kTrain) << " train, "
      << m.count(Split::kTest) << " test)\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  bool force = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  GlobalConfig cfg = a.config.empty() ? GlobalConfig{} : load_config(a.config);
  if (!a.data.empty()) cfg.data.root = a.data;
  if (cfg.data.root.empty()) throw ConfigError("train: no dataset given (--data or data.root)");
  cfg.validate();

  const fs::path root = cfg.data.root;
  const DatasetManifest manifest = DatasetManifest::load(root / "manifest.json");
  const std::vector<Sample> train_set = load_split(root, manifest, Split::kTrain, cfg.data.tile_size);
  const std::vector<Sample> val_set = load_split(root, manifest, Split::kTest, cfg.data.tile_size);

  const fs::path dir = a.out;
  prepare_out_dir(dir, a.force, {"manifest.json", "weights.bin", "train_log.csv", "resolved_config.json"});
  const nlohmann::json resolved = to_json(cfg);
  write_json(dir / "resolved_config.json", resolved);

  const SegFusionModel model(cfg.model);
  TrainOptions opt;
  opt.checkpoint_dir = dir;
  opt.config = resolved;
  opt.on_epoch = [&](const EpochLog& e) {
    out << "epoch " << e.epoch << " lr " << fmt(e.lr) << " loss " << fmt(e.train_loss) << " val_iou "
        << fmt(e.val_iou) << '\n';
  };
  const TrainResult r = train(model, cfg.loss, cfg.train, cfg.data.augmentation, train_set, val_set, opt);

  std::ofstream log(dir / "train_log.csv", std::ios::binary);
  write_train_log(log, r.log);
  if (!log) throw DataError("cannot write " + (dir / "train_log.csv").string());
  out << "best epoch " << r.best_epoch << " val_iou " << fmt(r.best_val_iou) << '\n';
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  double threshold = 0.5;
  std::string metrics_out;
  std::string roc_out;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const GlobalConfig cfg = parse_config(ck.config);
  const fs::path root = a.data;
  const DatasetManifest manifest = DatasetManifest::load(root / "manifest.json");
  const std::vector<Sample> samples = a.split == "all"
                                          ? load_all(root, manifest, cfg.data.tile_size)
                                          : load_split(root, manifest, parse_split(a.split), cfg.data.tile_size);
  if (samples.empty()) throw DataError("evaluate: split '" + a.split + "' is empty");

  const SegFusionModel model(cfg.model);
  const EvalResult r = evaluate_samples(model, ck.params, samples, a.threshold, true);

  const fs::path metrics_path = a.metrics_out.empty() ? fs::path(a.checkpoint) / ("metrics_" + a.split + ".csv")
                                                      : fs::path(a.metrics_out);
  const fs::path roc_path =
      a.roc_out.empty() ? fs::path(a.checkpoint) / ("roc_" + a.split + ".csv") : fs::path(a.roc_out);
  {
    std::ofstream os(metrics_path, std::ios::binary);
    write_metrics_csv(os, r.report);
    if (!os) throw DataError("cannot write " + metrics_path.string());
  }
  {
    std::ofstream os(roc_path, std::ios::binary);
    write_roc_csv(os, r.roc);
    if (!os) throw DataError("cannot write " + roc_path.string());
  }
  out << "accuracy " << fmt(r.report.accuracy) << "\nprecision " << fmt(r.report.precision) << "\nrecall "
      << fmt(r.report.recall) << "\nf1 " << fmt(r.report.f1) << "\niou " << fmt(r.report.iou) << "\nroc_auc "
      << (r.report.roc_auc ? fmt(*r.report.roc_auc) : std::string("undefined")) << '\n';
  return kOk;
}

struct PredictArgs {
  std::string checkpoint;
  std::string image;
  std::string out;
  std::string prob_out;
  double threshold = -1.0;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const GlobalConfig cfg = parse_config(ck.config);
  const SegFusionModel model(cfg.model);
  const Tensor x = load_tile(a.image);
  const std::size_t m = cfg.model.spatial_multiple();
  if (x.h() % m != 0 || x.w() % m != 0) {
    throw DataError(a.image + ": image is " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                    ", both sides must be multiples of " + std::to_string(m));
  }
  const Tensor prob = model.forward(x, ck.params);
  const double threshold = a.threshold >= 0.0 ? a.threshold : cfg.model.fusion.threshold;
  const Tensor mask = binarize(prob, threshold);
  save_mask(a.out, mask);
  if (!a.prob_out.empty()) save_tile(a.prob_out, prob);
  std::size_t positive = 0;
  for (double v : mask.span()) positive += v > 0.5 ? 1 : 0;
  out << "wrote " << a.out << " (" << positive << " of " << mask.shape().numel() << " pixels flagged)\n";
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t seeds, std::ostream& out) {
  bool all = true;
  for (const GradCheckOutcome& o : run_gradcheck_suite(seed, seeds)) {
    all = all && o.passed;
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s %s  max_rel_error %.3e  tol %.0e  seeds %zu", o.name.c_str(),
                  o.passed ? "PASS" : "FAIL", o.max_rel_error, o.tolerance, o.seeds);
    out << line;
    if (!o.passed && !o.worst.empty()) out << "  worst " << o.worst;
    out << '\n';
  }
  out << (all ? "all operators passed\n" : "gradient check FAILED\n");
  return all ? kOk : kNumeric;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DeepSegFusion: SAR oil-spill segmentation (SegNet + DeepLabV3+ fusion)", "deepsegfusion"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "Generate a synthetic SAR dataset with ground-truth masks");
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--count", synth.count, "Number of scenes")->required();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  s->add_option("--size", synth.size, "Scene side length in pixels")->capture_default_str();
  s->add_option("--config", synth.config, "Optional JSON config; data.scene and data.split_ratio are used");
  s->add_flag("--force", synth.force, "Overwrite a non-empty output directory");

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "Train the fusion model and keep the best-validation-IoU checkpoint");
  t->add_option("--config", tr.config, "JSON config; omitted keys take their defaults");
  t->add_option("--data", tr.data, "Dataset directory (overrides data.root)");
  t->add_option("--out", tr.out, "Checkpoint/log output directory")->required();
  t->add_flag("--force", tr.force, "Overwrite a non-empty output directory");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("evaluate", "Compute metrics and the ROC curve of a checkpoint on a split");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--split", ev.split, "train, test or all")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "test", "all"}));
  e->add_option("--threshold", ev.threshold, "Probability threshold for the binary mask")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  e->add_option("--metrics-out", ev.metrics_out, "Metrics CSV path (default <checkpoint>/metrics_<split>.csv)");
  e->add_option("--roc-out", ev.roc_out, "ROC CSV path (default <checkpoint>/roc_<split>.csv)");

  PredictArgs pr;
  CLI::App* p = app.add_subcommand("predict", "Segment one image");
  p->add_option("--checkpoint", pr.checkpoint, "Checkpoint directory")->required();
  p->add_option("--image", pr.image, "Input 8-bit grayscale PNG or PGM")->required();
  p->add_option("--out", pr.out, "Output mask (0/255)")->required();
  p->add_option("--prob-out", pr.prob_out, "Optional probability map, round(255 p)");
  p->add_option("--threshold", pr.threshold, "Probability threshold (default: fusion.threshold of the checkpoint)")
      ->check(CLI::Range(0.0, 1.0));

  std::uint64_t gc_seed = 0;
  std::size_t gc_seeds = 10;
  CLI::App* g = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  g->add_option("--seed", gc_seed, "Base random seed")->capture_default_str();
  g->add_option("--seeds", gc_seeds, "Random points per operator")->capture_default_str()->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_evaluate(ev, out);
    if (p->parsed()) return cmd_predict(pr, out);
    return cmd_gradcheck(gc_seed, gc_seeds, out);
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const NumericError& ex) {
    err << "numeric failure: " << ex.what() << '\n';
    return kNumeric;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kData;
  }
}

}  // namespace dsf::cli
