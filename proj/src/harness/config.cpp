#include "schoenbat/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "schoenbat/error.hpp"

namespace schoenbat::harness {

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kErrorSweep: return "error_sweep";
    case Experiment::kSpeedSweep: return "speed_sweep";
    case Experiment::kUnbiasedness: return "unbiasedness";
    case Experiment::kTailBound: return "tail_bound";
    case Experiment::kDemo: return "demo";
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');
  for (Experiment e : {Experiment::kErrorSweep, Experiment::kSpeedSweep, Experiment::kUnbiasedness,
                       Experiment::kTailBound, Experiment::kDemo}) {
    if (experiment_name(e) == key) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (kernels.empty()) throw ConfigError("at least one kernel is required");
  if (n_values.empty() || d_values.empty() || feature_counts.empty())
    throw ConfigError("n, d and D must be non-empty");
  auto positive = [](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::size_t x) { return x > 0; });
  };
  if (!positive(n_values) || !positive(d_values) || !positive(feature_counts))
    throw ConfigError("n, d and D entries must be >= 1");
  if (trials == 0) throw ConfigError("trials must be >= 1");
  if (!(base > 1.0) || !std::isfinite(base)) throw ConfigError("p must be > 1");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(value_bound > 0.0)) throw ConfigError("S must be positive");
  if ((experiment == Experiment::kUnbiasedness || experiment == Experiment::kTailBound) &&
      samples == 0)
    throw ConfigError("samples must be >= 1");
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.kernels.assign(kAllKernels.begin(), kAllKernels.end());
  switch (e) {
    case Experiment::kErrorSweep:
      c.n_values = {100};
      c.d_values = {10, 50, 100, 200};
      c.feature_counts = {10, 20, 30, 40, 50};
      break;
    case Experiment::kSpeedSweep:
      c.n_values = {1000, 2000, 3000, 4000, 5000};
      c.d_values = {50};
      c.feature_counts = {2, 16, 32, 64, 120};
      c.trials = 10;
      break;
    case Experiment::kUnbiasedness:
      c.n_values = {8};
      c.d_values = {10};
      c.feature_counts = {1};
      c.trials = 1;
      c.samples = 20000;
      break;
    case Experiment::kTailBound:
      c.kernels = {KernelId::kExp};
      c.n_values = {8};
      c.d_values = {4};
      c.feature_counts = {4, 16};
      c.samples = 10000;
      break;
    case Experiment::kDemo:
      c.kernels = {KernelId::kExp};
      c.n_values = {16};
      c.d_values = {8};
      c.feature_counts = {64};
      c.trials = 1;
      break;
  }
  return c;
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

std::vector<std::size_t> size_list(const nlohmann::json& v, const std::string& key) {
  std::vector<std::size_t> out;
  auto one = [&](const nlohmann::json& x) {
    if (!x.is_number_unsigned()) throw ConfigError("'" + key + "' entries must be positive integers");
    out.push_back(x.get<std::size_t>());
  };
  if (v.is_array()) {
    for (const auto& x : v) one(x);
  } else {
    one(v);
  }
  return out;
}

double number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text, std::optional<Experiment> expected) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what(), line_of(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", 1);

  Experiment experiment = expected.value_or(Experiment::kErrorSweep);
  if (auto it = doc.find("experiment"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("'experiment' must be a string");
    const Experiment named = parse_experiment(it->get<std::string>());
    if (expected && named != *expected) {
      throw ConfigError("config is for experiment '" + std::string(experiment_name(named)) +
                        "' but '" + std::string(experiment_name(*expected)) + "' was requested");
    }
    experiment = named;
  }

  ExperimentConfig c = default_config(experiment);
  static const std::set<std::string> kKeys = {"experiment", "kernels", "n", "d", "D", "p",
                                              "trials", "seed", "epsilon", "samples", "S",
                                              "sbn_norm", "out", "json"};
  try {
    for (const auto& [key, v] : doc.items()) {
      if (!kKeys.contains(key)) throw ConfigError("unknown key '" + key + "'");
      if (key == "kernels") {
        c.kernels.clear();
        const auto names = v.is_array() ? v : nlohmann::json::array({v});
        for (const auto& name : names) {
          if (!name.is_string()) throw ConfigError("'kernels' entries must be strings");
          c.kernels.push_back(parse_kernel(name.get<std::string>()));
        }
      } else if (key == "n") {
        c.n_values = size_list(v, key);
      } else if (key == "d") {
        c.d_values = size_list(v, key);
      } else if (key == "D") {
        c.feature_counts = size_list(v, key);
      } else if (key == "p") {
        c.base = number(v, key);
      } else if (key == "trials") {
        if (!v.is_number_unsigned()) throw ConfigError("'trials' must be a positive integer");
        c.trials = v.get<std::size_t>();
      } else if (key == "seed") {
        if (!v.is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
        c.seed = v.get<std::uint64_t>();
      } else if (key == "epsilon") {
        c.epsilon = number(v, key);
      } else if (key == "samples") {
        if (!v.is_number_unsigned()) throw ConfigError("'samples' must be a positive integer");
        c.samples = v.get<std::size_t>();
      } else if (key == "S") {
        c.value_bound = number(v, key);
      } else if (key == "sbn_norm") {
        const auto s = v.is_string() ? v.get<std::string>() : std::string();
        if (s == "spectral") c.sbn_norm = SbnNorm::kSpectral;
        else if (s == "frobenius") c.sbn_norm = SbnNorm::kFrobenius;
        else throw ConfigError("'sbn_norm' must be \"spectral\" or \"frobenius\"");
      } else if (key == "out") {
        if (!v.is_string()) throw ConfigError("'out' must be a string");
        c.output_path = v.get<std::string>();
      } else if (key == "json") {
        if (!v.is_boolean()) throw ConfigError("'json' must be true or false");
        c.json = v.get<bool>();
      }
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path, std::optional<Experiment> expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), expected);
}

}  // namespace schoenbat::harness
