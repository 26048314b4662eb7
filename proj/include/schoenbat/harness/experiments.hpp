#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "schoenbat/harness/config.hpp"
#include "schoenbat/harness/records.hpp"

namespace schoenbat::harness {

// Relative error tolerance grid of the tail-bound experiment.
inline constexpr double kTailEpsilonGrid[] = {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0,
                                              2.0,  3.0,  4.0,  5.0, 6.0, 8.0, 10.0};

// Number of unit-ball pairs per (kernel, d, D) in the unbiasedness check.
inline constexpr std::size_t kUnbiasednessPairs = 20;

// Per (kernel, n, d, D, trial): Gaussian Q, K, V; Q and K pre-normalized;
// mean absolute difference between exact kernelized attention and RMFA.
// Inputs depend only on (n, d, trial) so rows are paired across D and kernels.
std::vector<ResultRecord> run_error_sweep(const ExperimentConfig& cfg);

// Per (kernel, n, d, D): median wall time of exact attention on normalized
// inputs and of the full pre-SBN + RMFA path, plus analytic flop counts (the
// fast path's count includes both pre-SBN calls).
// Rows: exact_time and schoenbat_time carry flops in `value` and median
// seconds in `wall_time_s`; speedup carries the flop ratio in `value` and the
// measured ratio in `wall_time_s`.
std::vector<ResultRecord> run_speed_sweep(const ExperimentConfig& cfg);

// Monte Carlo mean of kernel_estimate over `samples` maps against the closed
// form for unit-ball pairs, the x = y = 0 case, SE scaling, and the mean of
// the RMFA numerator and normalizer against their exact counterparts.
std::vector<ResultRecord> run_unbiasedness(const ExperimentConfig& cfg);

// Empirical P(max |RMFA - exact| > eps) over `samples` maps next to
// 2D exp(-D eps^2 / (2 S^2 d^2)), with V clipped to [-S, S].
std::vector<ResultRecord> run_tail_bound(const ExperimentConfig& cfg);

// End-to-end pipeline on one input: approximation error, fitted post-SBN
// parameters and, for exp, the ideal restoration diagnostics. The first
// sampled map is written to `map_out` when given.
std::vector<ResultRecord> run_demo(const ExperimentConfig& cfg,
                                   const std::optional<std::filesystem::path>& map_out = std::nullopt);

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg,
                                         const std::optional<std::filesystem::path>& map_out = std::nullopt);

// '#' comment lines for the CSV: configuration and protocol notes.
std::vector<std::string> metadata_lines(const ExperimentConfig& cfg);

// Tail bound 2D exp(-D eps^2 / (2 S^2 d^2)).
double tail_bound(double eps, double features, double value_bound, double d);

}  // namespace schoenbat::harness
