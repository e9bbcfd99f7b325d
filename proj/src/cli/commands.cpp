#include "cellstream/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "cellstream/cli/report.hpp"
#include "cellstream/curriculum.hpp"
#include "cellstream/synthcells.hpp"
#include "cellstream/trainer/data.hpp"
#include "cellstream/trainer/train.hpp"
#include "json.hpp"

namespace cellstream::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ostream& out_stream(const CommandContext& ctx) {
  return ctx.out ? *ctx.out : std::cout;
}

synthcells::GenConfig gen_config_from(const AppConfig& cfg) {
  synthcells::GenConfig g;
  g.n_videos = cfg.get_int("gen.n_videos");
  g.n_frames = cfg.get_int("gen.n_frames");
  g.height = g.width = cfg.get_int("gen.frame_size");
  g.population.rbc_mean = cfg.get_double("gen.rbc_mean");
  g.population.rbc_std = cfg.get_double("gen.rbc_std");
  g.population.wbc_mean = cfg.get_double("gen.wbc_mean");
  g.population.wbc_std = cfg.get_double("gen.wbc_std");
  g.motion_scale = cfg.get_double("gen.motion_scale");
  g.degradation.sigma_min = cfg.get_double("gen.sigma_min");
  g.degradation.sigma_max = cfg.get_double("gen.sigma_max");
  g.degradation.probs = {cfg.get_double("gen.prob_clear"),
                         cfg.get_double("gen.prob_blurred"),
                         cfg.get_double("gen.prob_noisy"),
                         cfg.get_double("gen.prob_blurred_noisy")};
  g.train_frac = cfg.get_double("gen.train_frac");
  g.val_frac = cfg.get_double("gen.val_frac");
  g.seed = cfg.get_u64("gen.seed");
  g.export_png_videos = cfg.get_int("gen.export_png");
  g.validate();
  return g;
}

fs::path dataset_dir_from(const AppConfig& cfg) {
  std::string dir = cfg.get_str("data.dir");
  if (dir.empty())
    throw std::invalid_argument("data.dir must point at a generated dataset");
  fs::path p(dir);
  if (!fs::exists(p / "manifest.json"))
    throw std::invalid_argument("no manifest.json in data.dir '" + dir +
                                "' - run generate first");
  return p;
}

augment::ClipSpec clip_spec_from(const AppConfig& cfg) {
  augment::ClipSpec clip;
  clip.clip_len = cfg.get_int("train.clip_len");
  clip.validate();
  return clip;
}

augment::CropSpec crop_spec_from(const AppConfig& cfg) {
  augment::CropSpec crop;
  crop.scale_min = cfg.get_double("train.crop_min");
  crop.scale_max = cfg.get_double("train.crop_max");
  crop.aspect_min = cfg.get_double("train.aspect_min");
  crop.aspect_max = cfg.get_double("train.aspect_max");
  crop.out_size = cfg.get_int("train.out_size");
  crop.validate();
  return crop;
}

trainer::TrainConfig train_config_from(const AppConfig& cfg,
                                       const synthcells::DatasetManifest& m) {
  trainer::TrainConfig t;
  t.task = synthcells::task_from_string(cfg.get_str("train.task"));
  t.epochs = cfg.get_int("train.epochs");
  t.batch_size = cfg.get_int("train.batch_size");
  t.lr0 = cfg.get_double("train.lr0");
  t.schedule = trainer::schedule_from_string(cfg.get_str("train.schedule"));
  t.label_smoothing = cfg.get_double("train.label_smoothing");
  t.weight_decay = cfg.get_double("train.weight_decay");
  int clip_len = cfg.get_int("train.clip_len");
  int out_size = cfg.get_int("train.out_size");
  t.arch.in_channels = 3 * clip_len;
  t.arch.in_h = t.arch.in_w = out_size;
  t.arch.num_classes = 2;
  if (cfg.get_bool("train.curriculum")) {
    curriculum::CurriculumParams p;
    p.alpha = cfg.get_double("curriculum.alpha");
    p.beta = cfg.get_double("curriculum.beta");
    p.c0 = cfg.get_double("curriculum.c0");
    int T = cfg.get_int("curriculum.T");
    p.total_epochs = T > 0 ? T : t.epochs;
    p.exponent = cfg.get_double("curriculum.p");
    double scale = cfg.get_double("curriculum.l_norm_scale");
    p.l_norm_scale = scale > 0.0
                         ? scale
                         : curriculum::default_l_norm_scale(m.config.population,
                                                            t.task);
    p.validate();
    t.curriculum = p;
  }
  t.validate();
  return t;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed JSON " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

int cmd_generate(const CommandContext& ctx) {
  synthcells::GenConfig g = gen_config_from(ctx.config);
  fs::create_directories(ctx.out_dir);
  synthcells::DatasetManifest manifest =
      synthcells::generate_dataset(g, ctx.out_dir);
  write_json(ctx.out_dir / "config.json", ctx.config.snapshot());

  std::uint64_t checksum = synthcells::dataset_checksum(ctx.out_dir, manifest);
  std::size_t wbc_high = 0, rbc_high = 0;
  for (const auto& e : manifest.entries) {
    wbc_high += static_cast<std::size_t>(e.wbc_high);
    rbc_high += static_cast<std::size_t>(e.rbc_high);
  }
  double n = static_cast<double>(manifest.entries.size());

  std::ostream& os = out_stream(ctx);
  std::ostringstream checksum_hex;
  checksum_hex << std::hex << std::setw(16) << std::setfill('0') << checksum;
  if (ctx.json_output) {
    json j{{"command", "generate"},
           {"n_videos", manifest.entries.size()},
           {"checksum", checksum_hex.str()},
           {"wbc_high_fraction", static_cast<double>(wbc_high) / n},
           {"rbc_high_fraction", static_cast<double>(rbc_high) / n},
           {"splits",
            {{"train", manifest.split_count(synthcells::Split::Train)},
             {"val", manifest.split_count(synthcells::Split::Val)},
             {"test", manifest.split_count(synthcells::Split::Test)}}},
           {"manifest", (ctx.out_dir / "manifest.json").string()}};
    os << j.dump(2) << '\n';
  } else {
    os << "generated " << manifest.entries.size() << " videos into "
       << ctx.out_dir.string() << "\n"
       << "checksum " << checksum_hex.str() << "\n"
       << "wbc-high fraction " << static_cast<double>(wbc_high) / n
       << ", rbc-high fraction " << static_cast<double>(rbc_high) / n << "\n"
       << "splits train/val/test = "
       << manifest.split_count(synthcells::Split::Train) << "/"
       << manifest.split_count(synthcells::Split::Val) << "/"
       << manifest.split_count(synthcells::Split::Test) << "\n";
  }
  return 0;
}

int cmd_train(const CommandContext& ctx) {
  fs::path data_dir = dataset_dir_from(ctx.config);
  synthcells::DatasetManifest manifest =
      synthcells::load_manifest(data_dir / "manifest.json");
  trainer::TrainConfig base = train_config_from(ctx.config, manifest);
  augment::ClipSpec clip = clip_spec_from(ctx.config);
  augment::CropSpec crop = crop_spec_from(ctx.config);

  trainer::VideoViewSource train_src(data_dir, manifest,
                                     synthcells::Split::Train, base.task, clip,
                                     crop);
  trainer::VideoViewSource val_src(data_dir, manifest, synthcells::Split::Val,
                                   base.task, clip, crop);

  std::vector<std::uint64_t> seeds = ctx.config.get_u64_list("train.seeds");
  if (seeds.empty()) throw std::invalid_argument("train.seeds is empty");
  fs::create_directories(ctx.out_dir);

  std::ostream& os = out_stream(ctx);
  json summary{{"command", "train"}, {"runs", json::array()}};
  for (std::uint64_t seed : seeds) {
    trainer::TrainConfig cfg = base;
    cfg.seed = seed;
    trainer::TrainResult result = trainer::train(cfg, train_src, val_src);

    fs::path run_dir = ctx.out_dir / ("run_seed" + std::to_string(seed));
    fs::create_directories(run_dir);
    trainer::save_checkpoint(run_dir / "checkpoint.bin", result.model);
    trainer::write_metrics_csv(run_dir / "metrics.csv", result.metrics);

    json epochs = json::array();
    for (const auto& e : result.metrics.epochs)
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss},
                        {"val_acc", e.val_acc},
                        {"lr", e.lr},
                        {"eligible", e.eligible}});
    json sidecar{{"seed", seed},
                 {"config", ctx.config.snapshot()},
                 {"metrics",
                  {{"best_val_loss", result.metrics.best_val_loss},
                   {"best_epoch", result.metrics.best_epoch},
                   {"epochs", epochs}}}};
    write_json(run_dir / "checkpoint.json", sidecar);

    if (!ctx.json_output)
      os << "seed " << seed << ": best val loss "
         << result.metrics.best_val_loss << " at epoch "
         << result.metrics.best_epoch << " -> " << run_dir.string() << "\n";
    summary["runs"].push_back({{"seed", seed},
                               {"dir", run_dir.string()},
                               {"best_val_loss", result.metrics.best_val_loss},
                               {"best_epoch", result.metrics.best_epoch}});
  }
  if (ctx.json_output) os << summary.dump(2) << '\n';
  return 0;
}

namespace {

struct RunCheckpoint {
  std::uint64_t seed;
  fs::path dir;
};

std::vector<RunCheckpoint> find_runs(const fs::path& run_root) {
  if (!fs::is_directory(run_root))
    throw std::invalid_argument("run directory '" + run_root.string() +
                                "' does not exist");
  std::vector<RunCheckpoint> runs;
  for (const auto& entry : fs::directory_iterator(run_root)) {
    if (!entry.is_directory()) continue;
    std::string name = entry.path().filename().string();
    constexpr const char* kPrefix = "run_seed";
    if (name.rfind(kPrefix, 0) != 0) continue;
    std::istringstream ss(name.substr(std::string(kPrefix).size()));
    std::uint64_t seed = 0;
    ss >> seed;
    if (ss.fail() || !ss.eof()) continue;
    runs.push_back({seed, entry.path()});
  }
  std::sort(runs.begin(), runs.end(),
            [](const RunCheckpoint& a, const RunCheckpoint& b) {
              return a.seed < b.seed;
            });
  if (runs.empty())
    throw std::invalid_argument("no run_seed* directories in '" +
                                run_root.string() + "'");
  return runs;
}

// The checkpoint was trained under a specific input contract; evaluating it
// under a different one is a configuration error, caught before any compute.
void check_eval_compatibility(const json& sidecar, const AppConfig& cfg,
                              const fs::path& where) {
  const json& values = sidecar.at("config").at("values");
  for (const char* key :
       {"train.task", "train.clip_len", "train.out_size"}) {
    std::string trained = values.at(key).get<std::string>();
    std::string requested = cfg.get_str(key);
    if (trained != requested)
      throw std::invalid_argument("checkpoint/config mismatch at " +
                                  where.string() + ": trained with " + key +
                                  "=" + trained + ", config requests " +
                                  requested);
  }
}

}  // namespace

int cmd_eval(const CommandContext& ctx) {
  fs::path data_dir = dataset_dir_from(ctx.config);
  std::string run_root_str = ctx.config.get_str("eval.run_dir");
  if (run_root_str.empty())
    throw std::invalid_argument("eval.run_dir must point at a train output");
  std::vector<RunCheckpoint> runs = find_runs(run_root_str);

  synthcells::DatasetManifest manifest =
      synthcells::load_manifest(data_dir / "manifest.json");
  synthcells::Task task =
      synthcells::task_from_string(ctx.config.get_str("train.task"));
  trainer::VideoViewSource test_src(data_dir, manifest, synthcells::Split::Test,
                                    task, clip_spec_from(ctx.config),
                                    crop_spec_from(ctx.config));

  trainer::EvalConfig eval_cfg;
  eval_cfg.views = ctx.config.get_int("eval.views");
  eval_cfg.seed = ctx.config.get_u64("eval.seed");
  bool trace = ctx.config.get_bool("eval.trace");

  fs::create_directories(ctx.out_dir);
  std::vector<double> base_accs, mvm_accs, mvw_accs;
  json per_seed = json::array();
  for (const RunCheckpoint& run : runs) {
    check_eval_compatibility(load_json(run.dir / "checkpoint.json"), ctx.config,
                             run.dir);
    trainer::Classifier<float> net =
        trainer::load_checkpoint(run.dir / "checkpoint.bin");
    trainer::EvalConfig cfg_k = eval_cfg;
    if (trace)
      cfg_k.trace_path =
          ctx.out_dir / ("trace_seed" + std::to_string(run.seed) + ".jsonl");
    trainer::EvalResult r = trainer::evaluate(net, test_src, cfg_k);
    base_accs.push_back(r.baseline_acc);
    mvm_accs.push_back(r.mvm_acc);
    mvw_accs.push_back(r.mvwcos_acc);
    per_seed.push_back({{"seed", run.seed},
                        {"baseline", r.baseline_acc},
                        {"mvm", r.mvm_acc},
                        {"mvwcos", r.mvwcos_acc},
                        {"n_samples", r.n_samples}});
  }

  trainer::MeanStd base_ms = trainer::mean_std(base_accs);
  trainer::MeanStd mvm_ms = trainer::mean_std(mvm_accs);
  trainer::MeanStd mvw_ms = trainer::mean_std(mvw_accs);

  json results{{"command", "eval"},
               {"views", eval_cfg.views},
               {"per_seed", per_seed},
               {"summary",
                {{"baseline", {{"mean", base_ms.mean}, {"std", base_ms.std_dev}}},
                 {"mvm", {{"mean", mvm_ms.mean}, {"std", mvm_ms.std_dev}}},
                 {"mvwcos", {{"mean", mvw_ms.mean}, {"std", mvw_ms.std_dev}}}}}};
  write_json(ctx.out_dir / "results.json", results);

  {
    std::ofstream csv(ctx.out_dir / "results.csv");
    if (!csv) throw std::runtime_error("cannot write results.csv");
    csv << "method,seed,accuracy\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      csv << "baseline," << runs[i].seed << ',' << base_accs[i] << '\n';
      csv << "mvm," << runs[i].seed << ',' << mvm_accs[i] << '\n';
      csv << "mvwcos," << runs[i].seed << ',' << mvw_accs[i] << '\n';
    }
  }

  std::ostream& os = out_stream(ctx);
  if (ctx.json_output) {
    os << results.dump(2) << '\n';
  } else {
    os << "accuracy over " << runs.size() << " seeds (m=" << eval_cfg.views
       << " views):\n";
    auto row = [&os](const char* name, const trainer::MeanStd& ms) {
      os << "  " << std::left << std::setw(10) << name << std::right
         << std::fixed << std::setprecision(2) << std::setw(7) << ms.mean
         << " +- " << std::setprecision(2) << ms.std_dev << "\n";
    };
    row("baseline", base_ms);
    row("mvm", mvm_ms);
    row("mvwcos", mvw_ms);
  }
  return 0;
}

int cmd_report(const CommandContext& ctx) {
  std::vector<std::string> run_roots = ctx.config.get_str_list("report.runs");
  if (run_roots.empty())
    throw std::invalid_argument("report.runs must list at least one run directory");

  // Collect and validate everything before the first write so a bad input
  // leaves no partial output.
  struct PendingRun {
    std::string name;
    std::uint64_t seed;
    std::vector<trainer::EpochMetrics> epochs;
  };
  std::vector<PendingRun> pending;
  for (const std::string& root : run_roots) {
    std::vector<RunCheckpoint> runs = find_runs(root);
    for (const RunCheckpoint& run : runs) {
      PendingRun p;
      p.name = fs::path(root).filename().string();
      if (p.name.empty()) p.name = "run";
      p.seed = run.seed;
      p.epochs = parse_metrics_csv(run.dir / "metrics.csv");
      pending.push_back(std::move(p));
    }
  }

  curriculum::CurriculumParams comp;
  comp.c0 = ctx.config.get_double("report.c0");
  comp.total_epochs = ctx.config.get_int("report.T");
  comp.exponent = ctx.config.get_double("report.p");
  comp.l_norm_scale = 1.0;
  comp.validate();

  fs::create_directories(ctx.out_dir);
  json files = json::array();
  std::ofstream summary(ctx.out_dir / "summary.csv");
  if (!summary) throw std::runtime_error("cannot write summary.csv");
  summary << "run,seed,epochs,best_epoch,best_val_loss,final_val_acc\n";
  for (const PendingRun& p : pending) {
    std::string stem = p.name + "_seed" + std::to_string(p.seed);
    fs::path loss_path = ctx.out_dir / (stem + "_loss.svg");
    fs::path acc_path = ctx.out_dir / (stem + "_acc.svg");
    write_run_figure(loss_path, acc_path, stem, p.epochs);
    files.push_back(loss_path.string());
    files.push_back(acc_path.string());

    auto best = std::min_element(p.epochs.begin(), p.epochs.end(),
                                 [](const auto& a, const auto& b) {
                                   return a.val_loss < b.val_loss;
                                 });
    summary << p.name << ',' << p.seed << ',' << p.epochs.size() << ','
            << best->epoch << ',' << best->val_loss << ','
            << p.epochs.back().val_acc << '\n';
  }

  write_competence_figure(ctx.out_dir / "competence.svg", comp,
                          comp.total_epochs);
  curriculum::write_competence_csv(ctx.out_dir / "competence.csv", comp,
                                   comp.total_epochs);
  files.push_back((ctx.out_dir / "competence.svg").string());
  files.push_back((ctx.out_dir / "competence.csv").string());

  std::ostream& os = out_stream(ctx);
  if (ctx.json_output) {
    json j{{"command", "report"},
           {"figures", files},
           {"summary", (ctx.out_dir / "summary.csv").string()}};
    os << j.dump(2) << '\n';
  } else {
    os << "wrote " << files.size() << " figures and summary.csv to "
       << ctx.out_dir.string() << "\n";
  }
  return 0;
}

}  // namespace cellstream::cli
