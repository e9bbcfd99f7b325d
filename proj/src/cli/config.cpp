#include "cellstream/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cellstream::cli {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> kDefaults{
      // dataset generation
      {"gen.n_videos", "1150"},
      {"gen.n_frames", "100"},
      {"gen.frame_size", "128"},
      {"gen.rbc_mean", "5000"},
      {"gen.rbc_std", "97.9"},
      {"gen.wbc_mean", "202"},
      {"gen.wbc_std", "95.5"},
      {"gen.motion_scale", "8"},
      {"gen.sigma_min", "5"},
      {"gen.sigma_max", "25"},
      {"gen.prob_clear", "0.130"},
      {"gen.prob_blurred", "0.304"},
      {"gen.prob_noisy", "0.217"},
      {"gen.prob_blurred_noisy", "0.349"},
      {"gen.train_frac", "0.6"},
      {"gen.val_frac", "0.2"},
      {"gen.seed", "42"},
      {"gen.export_png", "0"},
      // dataset location (train/eval input)
      {"data.dir", ""},
      // training
      {"train.task", "wbc"},
      {"train.epochs", "60"},
      {"train.batch_size", "32"},
      {"train.lr0", "0.001"},
      {"train.schedule", "cosine"},
      {"train.label_smoothing", "0"},
      {"train.weight_decay", "0"},
      {"train.seeds", "42,0,17,9,3"},
      {"train.clip_len", "1"},
      {"train.out_size", "32"},
      {"train.crop_min", "0.10"},
      {"train.crop_max", "0.20"},
      {"train.aspect_min", "0.75"},
      {"train.aspect_max", "1.3333333333"},
      {"train.curriculum", "off"},
      // curriculum schedule (used when train.curriculum = on)
      {"curriculum.alpha", "0.5"},
      {"curriculum.beta", "0.5"},
      {"curriculum.c0", "0.05"},
      {"curriculum.T", "0"},  // 0: use train.epochs
      {"curriculum.p", "2"},
      {"curriculum.l_norm_scale", "0"},  // 0: 3 * count std of the task
      // evaluation
      {"eval.views", "10"},
      {"eval.seed", "1234"},
      {"eval.run_dir", ""},
      {"eval.trace", "off"},
      // reporting
      {"report.runs", ""},
      {"report.c0", "0.05"},
      {"report.T", "1000"},
      {"report.p", "2"},
  };
  return kDefaults;
}

// Defaults that are workable conventions rather than reported protocol
// values; flagged in the emitted snapshot.
const std::set<std::string>& convention_keys() {
  static const std::set<std::string> kConventions{
      "gen.motion_scale",        "train.batch_size",
      "train.out_size",          "train.aspect_min",
      "train.aspect_max",        "train.weight_decay",
      "curriculum.alpha",        "curriculum.beta",
      "curriculum.T",            "curriculum.l_norm_scale",
      "eval.seed",
  };
  return kConventions;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

AppConfig AppConfig::load(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides) {
  AppConfig cfg;
  cfg.values_ = defaults();

  auto apply = [&cfg](const std::string& key, const std::string& value,
                      const std::string& where) {
    auto it = cfg.values_.find(key);
    if (it == cfg.values_.end())
      throw std::invalid_argument("unknown config key '" + key + "' (" + where +
                                  ")");
    it->second = value;
  };

  if (file) {
    std::ifstream in(*file);
    if (!in)
      throw std::runtime_error("cannot open config file: " + file->string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(file->string() + ":" +
                                    std::to_string(lineno) +
                                    ": expected 'key = value'");
      apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
            file->string() + ":" + std::to_string(lineno));
    }
  }

  for (const std::string& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + ov + "'");
    apply(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), "--set");
  }
  return cfg;
}

const std::string& AppConfig::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("unknown config key '" + key + "'");
  return it->second;
}

std::string AppConfig::get_str(const std::string& key) const { return raw(key); }

bool AppConfig::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': cannot parse '" + v +
                              "' as on/off");
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream ss(v);
  T out{};
  ss >> out;
  if (ss.fail() || !ss.eof())
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + v +
                                "' as a number");
  return out;
}

}  // namespace

int AppConfig::get_int(const std::string& key) const {
  return parse_number<int>(key, raw(key));
}

double AppConfig::get_double(const std::string& key) const {
  return parse_number<double>(key, raw(key));
}

std::uint64_t AppConfig::get_u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, raw(key));
}

std::vector<std::string> AppConfig::get_str_list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream ss(raw(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> AppConfig::get_u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const std::string& item : get_str_list(key))
    out.push_back(parse_number<std::uint64_t>(key, item));
  return out;
}

nlohmann::json AppConfig::snapshot() const {
  nlohmann::json values(values_);
  nlohmann::json conventions = nlohmann::json::array();
  for (const std::string& key : convention_keys()) conventions.push_back(key);
  return nlohmann::json{{"values", values}, {"conventions", conventions}};
}

}  // namespace cellstream::cli
