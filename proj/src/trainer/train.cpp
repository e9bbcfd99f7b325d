#include "cellstream/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cellstream/multiview.hpp"
#include "json.hpp"

namespace cellstream::trainer {

namespace {

// Stream keys, disjoint by construction: the epoch index occupies the low
// bits under a distinct tag per purpose.
constexpr std::uint64_t kInitStream = 0x01ull << 56;
constexpr std::uint64_t kShuffleStream = 0x02ull << 56;
constexpr std::uint64_t kAugStream = 0x03ull << 56;
constexpr std::uint64_t kValStream = 0x04ull << 56;

}  // namespace

LrSchedule schedule_from_string(const std::string& s) {
  if (s == "cosine") return LrSchedule::Cosine;
  if (s == "constant") return LrSchedule::Constant;
  throw std::invalid_argument("unknown lr schedule '" + s +
                              "' (expected cosine or constant)");
}

std::string to_string(LrSchedule s) {
  return s == LrSchedule::Cosine ? "cosine" : "constant";
}

void TrainConfig::validate() const {
  // lr0 = 0 is allowed as the degenerate no-op run.
  if (lr0 < 0.0) throw std::invalid_argument("lr0 must be >= 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0)
    throw std::invalid_argument("label smoothing ratio must be in [0,1)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("adam betas must be in [0,1)");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam eps must be > 0");
  if (curriculum) curriculum->validate();
  arch.validate();
}

double cross_entropy_ls(std::span<const double> h, int target, double ratio) {
  if (ratio < 0.0 || ratio >= 1.0)
    throw std::invalid_argument("label smoothing ratio must be in [0,1)");
  if (target < 0 || static_cast<std::size_t>(target) >= h.size())
    throw std::invalid_argument("target class out of range");
  double k = static_cast<double>(h.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0))
      throw std::invalid_argument("probabilities must be positive");
    double q = ratio / k + (static_cast<int>(i) == target ? 1.0 - ratio : 0.0);
    loss -= q * std::log(h[i]);
  }
  return loss;
}

double cosine_lr(int t, int t_total, double lr0) {
  if (t_total < 1) throw std::invalid_argument("t_total must be >= 1");
  if (t < 0 || t > t_total)
    throw std::invalid_argument("t must be in [0, t_total]");
  return 0.5 * lr0 * (1.0 + std::cos(M_PI * static_cast<double>(t) / t_total));
}

namespace {

struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  std::int64_t step = 0;
};

void adam_update(std::vector<float>& params, std::span<const float> grad,
                 AdamState& state, const TrainConfig& cfg, double lr) {
  state.step += 1;
  double b1 = cfg.beta1;
  double b2 = cfg.beta2;
  double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    // L2 weight decay enters the gradient before the moment updates.
    double g = grad[i] + cfg.weight_decay * params[i];
    double m = b1 * state.m[i] + (1.0 - b1) * g;
    double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    double mhat = m / bc1;
    double vhat = v / bc2;
    params[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg.adam_eps));
  }
}

void check_example_shape(const Example& ex, const ClassifierArch& arch) {
  if (ex.channels != arch.in_channels || ex.height != arch.in_h ||
      ex.width != arch.in_w)
    throw std::invalid_argument(
        "example shape [" + std::to_string(ex.channels) + "," +
        std::to_string(ex.height) + "," + std::to_string(ex.width) +
        "] does not match network input [" + std::to_string(arch.in_channels) +
        "," + std::to_string(arch.in_h) + "," + std::to_string(arch.in_w) + "]");
}

// Eligible training indices for epoch t; falls back to the easiest 1% when
// the competence gate admits nothing.
std::vector<std::size_t> epoch_indices(const TrainConfig& cfg,
                                       const ViewSource& train_src, int t) {
  if (!cfg.curriculum) {
    std::vector<std::size_t> all(train_src.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  const auto* entries = train_src.entries();
  if (!entries)
    throw std::invalid_argument(
        "curriculum training needs a manifest-backed source with difficulty "
        "features");
  std::vector<std::size_t> eligible = curriculum::eligible_set(
      std::span<const synthcells::ManifestEntry>(entries->data(), entries->size()),
      t, *cfg.curriculum, cfg.task);
  if (!eligible.empty()) return eligible;

  std::cerr << "warning: curriculum admitted no samples at epoch " << t
            << "; falling back to the easiest 1%\n";
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(entries->size());
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const auto& e = (*entries)[i];
    scored.emplace_back(
        curriculum::difficulty(e.degradation.blur_radius, e.l(cfg.task),
                               *cfg.curriculum)
            .d,
        i);
  }
  std::sort(scored.begin(), scored.end());
  std::size_t keep =
      std::max<std::size_t>(1, (scored.size() + 99) / 100);
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(scored[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const ViewSource& train_src,
                  const ViewSource& val_src) {
  config.validate();
  if (train_src.size() == 0) throw std::invalid_argument("empty training source");
  if (val_src.size() == 0) throw std::invalid_argument("empty validation source");
  if (train_src.num_classes() != config.arch.num_classes)
    throw std::invalid_argument("source classes (" +
                                std::to_string(train_src.num_classes()) +
                                ") do not match arch num_classes (" +
                                std::to_string(config.arch.num_classes) + ")");

  Classifier<float> net(config.arch);
  Rng init_rng = make_stream(config.seed, kInitStream);
  net.init_params(init_rng);

  AdamState adam;
  adam.m.assign(net.n_params(), 0.0f);
  adam.v.assign(net.n_params(), 0.0f);

  Classifier<float>::Workspace ws;
  std::vector<float> grad(net.n_params());

  TrainResult result{net, {}};
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<float> best_params = net.params();
  int best_epoch = -1;

  for (int t = 0; t < config.epochs; ++t) {
    double lr = config.schedule == LrSchedule::Cosine
                    ? cosine_lr(t, config.epochs, config.lr0)
                    : config.lr0;

    std::vector<std::size_t> indices = epoch_indices(config, train_src, t);
    std::size_t eligible_count = indices.size();
    Rng shuffle_rng = make_stream(config.seed, kShuffleStream + static_cast<std::uint64_t>(t));
    std::shuffle(indices.begin(), indices.end(), shuffle_rng);

    Rng aug_rng = make_stream(config.seed, kAugStream + static_cast<std::uint64_t>(t));
    double epoch_loss = 0.0;
    for (std::size_t pos = 0; pos < indices.size(); pos += config.batch_size) {
      std::size_t count =
          std::min<std::size_t>(config.batch_size, indices.size() - pos);
      std::fill(grad.begin(), grad.end(), 0.0f);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        std::size_t i = indices[pos + b];
        Example ex = train_src.view(i, aug_rng);
        check_example_shape(ex, config.arch);
        batch_loss += net.loss_grad(ex.pixels, ex.label, config.label_smoothing,
                                    grad, ws);
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("non-finite training loss at epoch " +
                                 std::to_string(t));
      float inv = 1.0f / static_cast<float>(count);
      for (auto& g : grad) g *= inv;
      adam_update(net.params(), grad, adam, config, lr);
      epoch_loss += batch_loss;
    }
    epoch_loss /= static_cast<double>(indices.size());

    // Validation: one view per sample, plain cross-entropy.
    Rng val_rng = make_stream(config.seed, kValStream + static_cast<std::uint64_t>(t));
    double val_loss = 0.0;
    std::size_t val_correct = 0;
    for (std::size_t i = 0; i < val_src.size(); ++i) {
      Example ex = val_src.view(i, val_rng);
      check_example_shape(ex, config.arch);
      std::vector<double> probs = net.forward(ex.pixels, ws);
      val_loss += cross_entropy_ls(probs, ex.label, 0.0);
      auto pred = static_cast<int>(
          std::max_element(probs.begin(), probs.end()) - probs.begin());
      if (pred == ex.label) ++val_correct;
    }
    val_loss /= static_cast<double>(val_src.size());
    double val_acc = 100.0 * static_cast<double>(val_correct) /
                     static_cast<double>(val_src.size());

    result.metrics.epochs.push_back(
        {t, epoch_loss, val_loss, val_acc, lr, eligible_count});
    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = net.params();
      best_epoch = t;
    }
  }

  result.model.params() = best_params;
  result.metrics.best_val_loss = best_val;
  result.metrics.best_epoch = best_epoch;
  return result;
}

std::vector<std::vector<double>> forward_batch(const Classifier<float>& net,
                                               const std::vector<Example>& batch) {
  Classifier<float>::Workspace ws;
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const Example& ex : batch) {
    check_example_shape(ex, net.arch());
    out.push_back(net.forward(ex.pixels, ws));
  }
  return out;
}

EvalResult evaluate(const Classifier<float>& net, const ViewSource& src,
                    const EvalConfig& config) {
  if (config.views < 1) throw std::invalid_argument("view count must be >= 1");
  if (src.size() == 0) throw std::invalid_argument("empty evaluation source");

  std::ofstream trace;
  if (!config.trace_path.empty()) {
    trace.open(config.trace_path);
    if (!trace)
      throw std::runtime_error("cannot open trace file: " +
                               config.trace_path.string());
  }

  Classifier<float>::Workspace ws;
  EvalResult result;
  result.n_samples = src.size();
  std::size_t base_ok = 0, mvm_ok = 0, mvwcos_ok = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::uint64_t sample_seed = derive_seed(config.seed, i);
    std::vector<multiview::ViewPrediction> views;
    views.reserve(static_cast<std::size_t>(config.views));
    for (int j = 0; j < config.views; ++j) {
      Rng view_rng(derive_seed(sample_seed, static_cast<std::uint64_t>(j)));
      Example ex = src.view(i, view_rng);
      check_example_shape(ex, net.arch());
      multiview::PredictionVector h{net.forward(ex.pixels, ws)};
      views.push_back(multiview::view_prediction(h));
    }
    int label = src.label(i);
    multiview::AggregateResult mvm = multiview::aggregate_mvm(views);
    multiview::AggregateResult mvw = multiview::aggregate_mvwcos(views);
    if (views.front().class_id == label) ++base_ok;
    if (mvm.final_class == label) ++mvm_ok;
    if (mvw.final_class == label) ++mvwcos_ok;
    if (trace.is_open()) {
      nlohmann::json rec{{"sample", i},
                         {"label", label},
                         {"baseline", views.front().class_id},
                         {"mvm", mvm.final_class},
                         {"mvwcos", mvw.final_class},
                         {"z", mvw.per_class_weight}};
      trace << rec.dump() << '\n';
    }
  }
  double n = static_cast<double>(src.size());
  result.baseline_acc = 100.0 * static_cast<double>(base_ok) / n;
  result.mvm_acc = 100.0 * static_cast<double>(mvm_ok) / n;
  result.mvwcos_acc = 100.0 * static_cast<double>(mvwcos_ok) / n;
  return result;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std of empty range");
  MeanStd out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

double gradient_check(Classifier<double>& net, std::span<const double> input,
                      int target, double ls_ratio, double eps, int n_checks,
                      Rng& rng) {
  if (eps < 1e-5 || eps > 1e-2)
    throw std::invalid_argument("eps must be in [1e-5, 1e-2]");
  if (n_checks < 1) throw std::invalid_argument("n_checks must be >= 1");

  Classifier<double>::Workspace ws;
  std::vector<double> grad(net.n_params(), 0.0);
  net.loss_grad(input, target, ls_ratio, grad, ws);

  std::uniform_int_distribution<std::size_t> pick(0, net.n_params() - 1);
  double max_rel = 0.0;
  for (int k = 0; k < n_checks; ++k) {
    std::size_t i = pick(rng);
    double saved = net.params()[i];
    net.params()[i] = saved + eps;
    double up = cross_entropy_ls(net.forward(input, ws), target, ls_ratio);
    net.params()[i] = saved - eps;
    double down = cross_entropy_ls(net.forward(input, ws), target, ls_ratio);
    net.params()[i] = saved;
    double fd = (up - down) / (2.0 * eps);
    double rel = std::abs(grad[i] - fd) /
                 std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'S', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw std::runtime_error("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Classifier<float>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(kCheckpointMagic, 4);
  write_pod(out, kCheckpointVersion);
  const ClassifierArch& a = net.arch();
  write_pod(out, static_cast<std::int32_t>(a.in_channels));
  write_pod(out, static_cast<std::int32_t>(a.in_h));
  write_pod(out, static_cast<std::int32_t>(a.in_w));
  write_pod(out, static_cast<std::int32_t>(a.num_classes));
  write_pod(out, static_cast<std::int32_t>(a.conv_channels.size()));
  for (int c : a.conv_channels) write_pod(out, static_cast<std::int32_t>(c));
  write_pod(out, a.lrelu_slope);

  std::vector<TensorRef> tensors = net.tensors();
  write_pod(out, static_cast<std::uint32_t>(tensors.size()));
  for (const TensorRef& tr : tensors) {
    std::uint32_t name_len = static_cast<std::uint32_t>(std::strlen(tr.name));
    write_pod(out, name_len);
    out.write(tr.name, name_len);
    write_pod(out, static_cast<std::uint64_t>(tr.count));
    out.write(reinterpret_cast<const char*>(net.params().data() + tr.offset),
              static_cast<std::streamsize>(tr.count * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Classifier<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  auto version = read_pod<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  ClassifierArch a;
  a.in_channels = read_pod<std::int32_t>(in, path);
  a.in_h = read_pod<std::int32_t>(in, path);
  a.in_w = read_pod<std::int32_t>(in, path);
  a.num_classes = read_pod<std::int32_t>(in, path);
  auto n_conv = read_pod<std::int32_t>(in, path);
  if (n_conv != static_cast<std::int32_t>(a.conv_channels.size()))
    throw std::runtime_error("unexpected conv stage count in " + path.string());
  for (auto& c : a.conv_channels) c = read_pod<std::int32_t>(in, path);
  a.lrelu_slope = read_pod<double>(in, path);

  Classifier<float> net(a);
  auto n_tensors = read_pod<std::uint32_t>(in, path);
  std::vector<TensorRef> tensors = net.tensors();
  if (n_tensors != tensors.size())
    throw std::runtime_error("unexpected tensor count in " + path.string());
  for (const TensorRef& tr : tensors) {
    auto name_len = read_pod<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw std::runtime_error("truncated checkpoint: " + path.string());
    if (name != tr.name)
      throw std::runtime_error("tensor order mismatch in " + path.string() +
                               ": expected " + tr.name + ", found " + name);
    auto count = read_pod<std::uint64_t>(in, path);
    if (count != tr.count)
      throw std::runtime_error("tensor " + name + " in " + path.string() +
                               " has " + std::to_string(count) +
                               " values, expected " + std::to_string(tr.count));
    if (!in.read(reinterpret_cast<char*>(net.params().data() + tr.offset),
                 static_cast<std::streamsize>(tr.count * sizeof(float))))
      throw std::runtime_error("truncated checkpoint: " + path.string());
  }
  return net;
}

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "epoch,train_loss,val_loss,val_acc,lr,eligible\n";
  for (const EpochMetrics& e : m.epochs)
    out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_acc
        << ',' << e.lr << ',' << e.eligible << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace cellstream::trainer
