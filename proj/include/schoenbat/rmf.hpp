#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schoenbat/kernels.hpp"
#include "schoenbat/matrix.hpp"
#include "schoenbat/rng.hpp"

namespace schoenbat {

struct RmfParams {
  std::size_t features = 1;   // D
  std::size_t input_dim = 1;  // d
  double base = 2.0;          // p > 1
  KernelId kernel = KernelId::kExp;
  std::uint64_t seed = 0;

  // Throws InvalidArgument on D == 0, d == 0 or p <= 1.
  void validate() const;

  friend bool operator==(const RmfParams&, const RmfParams&) = default;
};

// Probability of sampling degree n: (1 - 1/p) p^-n, which is 1/p^(n+1) at p = 2.
double degree_probability(double base, std::size_t n);

// A frozen random Maclaurin feature map
//
//   Phi(x) = sqrt(1/D) [phi_1(x), ..., phi_D(x)],
//   phi_t(x) = sqrt(a_{N_t} / P[N_t]) * prod_{j < N_t} <omega_{t,j}, x>,
//
// with i.i.d. geometric degrees N_t and fresh Rademacher vectors omega_{t,j}.
// E[Phi(x) . Phi(y)] = sum_n a_n <x,y>^n for every D.
class RmfFeatureMap {
 public:
  // Rebuilds a map from its sampled parts (used by deserialization). Sign
  // rows are stored feature-major: feature t owns rows
  // [offset(t), offset(t) + degrees[t]).
  RmfFeatureMap(RmfParams params, std::vector<std::size_t> degrees, Matrix omegas,
                std::size_t resampled_degrees = 0);

  const RmfParams& params() const { return params_; }
  std::size_t features() const { return params_.features; }
  std::size_t input_dim() const { return params_.input_dim; }

  std::span<const std::size_t> degrees() const { return degrees_; }
  std::size_t degree(std::size_t t) const { return degrees_[t]; }
  std::size_t offset(std::size_t t) const { return offsets_[t]; }
  // Rademacher vector j of feature t.
  std::span<const double> omega(std::size_t t, std::size_t j) const {
    return omegas_.row(offsets_[t] + j);
  }
  const Matrix& omegas() const { return omegas_; }
  std::size_t total_omegas() const { return omegas_.rows(); }
  double mean_degree() const;

  // sqrt(a_{N_t} / P[N_t]) per feature.
  std::span<const double> scale_coeffs() const { return scale_; }

  // Degrees above kMaxDegree that were redrawn while sampling.
  std::size_t resampled_degrees() const { return resampled_; }

  friend bool operator==(const RmfFeatureMap&, const RmfFeatureMap&) = default;

 private:
  RmfParams params_;
  std::vector<std::size_t> degrees_;
  std::vector<std::size_t> offsets_;
  Matrix omegas_;
  std::vector<double> scale_;
  std::size_t resampled_ = 0;
};

RmfFeatureMap sample_feature_map(const RmfParams& params, RngStream& rng);
// Uses RngStream(params.seed).
RmfFeatureMap sample_feature_map(const RmfParams& params);

// Row-wise feature map: (n x d) -> (n x D).
Matrix apply_feature_map(const RmfFeatureMap& map, const Matrix& x);
std::vector<double> apply_feature_map(const RmfFeatureMap& map, std::span<const double> x);

// Phi(x) . Phi(y), an unbiased estimate of K(<x,y>). For kernels with a
// finite radius the inputs should lie in the unit ball; if either does not,
// `outside_unit_ball` (when given) is incremented.
double kernel_estimate(const RmfFeatureMap& map, std::span<const double> x,
                       std::span<const double> y, std::size_t* outside_unit_ball = nullptr);

// JSON document with the parameters, the degrees and the Rademacher signs
// packed one bit per entry (1 = -1), LSB first, hex encoded.
std::string feature_map_to_json(const RmfFeatureMap& map);
RmfFeatureMap feature_map_from_json(std::string_view text);

}  // namespace schoenbat
