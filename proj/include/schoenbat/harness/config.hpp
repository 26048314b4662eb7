#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "schoenbat/kernels.hpp"
#include "schoenbat/ppsbn.hpp"

namespace schoenbat::harness {

enum class Experiment { kErrorSweep, kSpeedSweep, kUnbiasedness, kTailBound, kDemo };

// "error_sweep", "speed_sweep", "unbiasedness", "tail_bound", "demo".
std::string_view experiment_name(Experiment e);
// Accepts the names above and their dashed CLI spellings.
Experiment parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::kErrorSweep;
  std::vector<KernelId> kernels;
  std::vector<std::size_t> n_values;
  std::vector<std::size_t> d_values;
  std::vector<std::size_t> feature_counts;  // D
  double base = 2.0;                        // p
  std::size_t trials = 100;
  std::uint64_t seed = 1234;
  double epsilon = kDefaultSbnEpsilon;
  std::size_t samples = 0;   // independent feature maps per case (M)
  double value_bound = 1.0;  // S, |V_ij| <= S in the tail-bound experiment
  SbnNorm sbn_norm = SbnNorm::kSpectral;
  std::string output_path;   // empty: standard output
  bool json = false;

  // Throws ConfigError on empty lists, zero sizes, trials == 0, p <= 1,
  // epsilon <= 0 or S <= 0.
  void validate() const;
};

// Defaults for one experiment: n = 100, d in 10..200, D in 10..50 for the
// error sweep; n in 1000..5000, d = 50, D in 2..120 and 10 timed repetitions
// for the speed sweep; 100 trials elsewhere.
ExperimentConfig default_config(Experiment e);

// Parses a flat JSON object. Keys: experiment, kernels, n, d, D, p, trials,
// seed, epsilon, samples, S, sbn_norm, out, json. Dimension keys take a number
// or an array of numbers. Missing keys keep the experiment's defaults; unknown
// keys are rejected. If `expected` is set, an "experiment" key must agree.
ExperimentConfig parse_config_text(std::string_view text,
                                   std::optional<Experiment> expected = std::nullopt);
ExperimentConfig parse_config(const std::filesystem::path& path,
                              std::optional<Experiment> expected = std::nullopt);

}  // namespace schoenbat::harness
