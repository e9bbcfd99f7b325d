#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellstream/curriculum.hpp"
#include "cellstream/rng.hpp"
#include "cellstream/trainer/data.hpp"
#include "cellstream/trainer/net.hpp"

namespace cellstream::trainer {

enum class LrSchedule { Cosine, Constant };

LrSchedule schedule_from_string(const std::string& s);
std::string to_string(LrSchedule s);

struct TrainConfig {
  double lr0 = 0.001;
  int epochs = 1;
  int batch_size = 32;
  LrSchedule schedule = LrSchedule::Cosine;
  double label_smoothing = 0.0;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<curriculum::CurriculumParams> curriculum;
  synthcells::Task task = synthcells::Task::WBC;
  std::uint64_t seed = 42;
  ClassifierArch arch;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;  // percent
  double lr = 0.0;
  std::size_t eligible = 0;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  double best_val_loss = 0.0;
  int best_epoch = -1;
};

struct TrainResult {
  Classifier<float> model;
  RunMetrics metrics;
};

// -Σ_k q_k log h_k with q = (1-ratio) one-hot + ratio/K, over an already
// normalized probability vector.
double cross_entropy_ls(std::span<const double> h, int target, double ratio);

// 0.5 * lr0 * (1 + cos(pi t / T)).
double cosine_lr(int t, int t_total, double lr0);

// Runs the configured number of epochs and returns the parameters from the
// epoch with the lowest validation loss. Bit-reproducible given (config,
// sources). Curriculum filtering requires train_src.entries().
TrainResult train(const TrainConfig& config, const ViewSource& train_src,
                  const ViewSource& val_src);

// One forward pass per example; rejects shape mismatches naming the
// expected and actual dims.
std::vector<std::vector<double>> forward_batch(const Classifier<float>& net,
                                               const std::vector<Example>& batch);

struct EvalConfig {
  int views = 10;              // m
  std::uint64_t seed = 1234;   // evaluation stream, independent of training
  std::filesystem::path trace_path;  // per-sample JSONL when non-empty
};

// Accuracies (percent) of one model over one source. The baseline is view 0
// of each sample, so m=1 multi-view equals the baseline exactly.
struct EvalResult {
  double baseline_acc = 0.0;
  double mvm_acc = 0.0;
  double mvwcos_acc = 0.0;
  std::size_t n_samples = 0;
};

EvalResult evaluate(const Classifier<float>& net, const ViewSource& src,
                    const EvalConfig& config);

// Mean and sample standard deviation (n-1) over per-seed values.
struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;
};
MeanStd mean_std(std::span<const double> values);

// Central-difference check of loss_grad on `n_checks` randomly sampled
// parameters; returns the maximum relative error.
double gradient_check(Classifier<double>& net, std::span<const double> input,
                      int target, double ls_ratio, double eps, int n_checks,
                      Rng& rng);

// Versioned binary checkpoint: magic, arch, named little-endian f32 tensors.
void save_checkpoint(const std::filesystem::path& path,
                     const Classifier<float>& net);
Classifier<float> load_checkpoint(const std::filesystem::path& path);

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& m);

}  // namespace cellstream::trainer
