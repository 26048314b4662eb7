#pragma once

#include <cstddef>
#include <vector>

#include "schoenbat/attention.hpp"
#include "schoenbat/kernels.hpp"
#include "schoenbat/matrix.hpp"
#include "schoenbat/rmf.hpp"

namespace schoenbat {

inline constexpr double kDefaultSbnEpsilon = 1e-13;

// Scalar norm used to push the standardized matrix into the unit ball.
enum class SbnNorm {
  kSpectral,   // largest singular value
  kFrobenius,  // sqrt of the sum of squares
};

// Column statistics of one pre-SBN call.
struct SbnStats {
  std::vector<double> mean;      // per column
  std::vector<double> variance;  // per column, population convention
  double scalar_norm = 0.0;      // norm of the standardized matrix
  double epsilon = kDefaultSbnEpsilon;
};

struct PreSbnResult {
  Matrix normalized;
  SbnStats stats;
};

// X' = (X - mean) / sqrt(variance + eps) column-wise, then
// X_sbn = X' / max(||X'||, eps). Every row of X_sbn has l2 norm <= 1.
PreSbnResult pre_sbn(const Matrix& x, double epsilon = kDefaultSbnEpsilon,
                     SbnNorm norm = SbnNorm::kSpectral);

// Analytic operation count of one pre_sbn call on an n x d matrix: column
// statistics, standardization, row norms and the scalar norm (the Gram
// product and its eigenvalues for the spectral norm).
double pre_sbn_flops(double n, double d, SbnNorm norm = SbnNorm::kSpectral);

struct PostSbnParams {
  double gamma = 1.0;
  double beta = 1.0;

  // Throws InvalidArgument unless both are positive and finite.
  void validate() const;
};

// sign(x) |x|^b
double signed_pow(double x, double b);

// Entrywise gamma * sign(x) |x|^beta.
Matrix post_sbn(const Matrix& att, const PostSbnParams& params);

// Least-squares fit of log|y| = log gamma + beta log|x| over entries with
// |x| > 1e-6 and y != 0. Throws FitError with fewer than two usable entries,
// no spread in log|x|, or a non-positive slope.
PostSbnParams fit_post_params(const Matrix& att_sbn, const Matrix& att_target);

// Restoration parameters relating softmax attention on pre-SBN inputs to
// softmax attention on the raw inputs.
struct RestorationParams {
  // ||Q'|| ||K'|| mean_c sqrt((var_Q,c + eps)(var_K,c + eps)), floored at eps.
  double r = 1.0;
  // ||Q'|| ||K'|| sqrt((var_Q,c + eps)(var_K,c + eps)) for each column c.
  std::vector<double> r_columns;
  // (||E||_{1/r} / ||E||_1) * sign(V)|V|^{r-1}, E = exp(QK^T / sqrt d) with
  // entrywise p-norms (n x d).
  Matrix s;
  // t(a, b) = sum_i exp((<q_a,k_i> - <mu_Q,k_i>) / (r sqrt d))
  //         / sum_i exp((<q_a,k_i> - <mu_Q,k_b>) / (r sqrt d))   (n x n)
  Matrix t;
  SbnStats q_stats;
  SbnStats k_stats;
};

// Scalar r from the two pre-SBN records.
double restoration_scale(const SbnStats& q, const SbnStats& k);

// Throws NumericalError if exp(QK^T/sqrt d) overflows; pre-normalize the
// inputs into the unit ball in that case.
RestorationParams ideal_restoration_params(const AttentionInput& in,
                                           double epsilon = kDefaultSbnEpsilon,
                                           SbnNorm norm = SbnNorm::kSpectral);

struct RestorationResidual {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  bool finite = true;
};

// Compares softmax(Q_sbn, K_sbn, V) with (1/t) [ (1/s) . softmax(Q, K, V) ]^{1/r},
// t reduced to one factor per query row by averaging over its columns.
// `per_column` uses r_columns[c] for output column c instead of the scalar r.
RestorationResidual restoration_residual(const AttentionInput& in, const RestorationParams& params,
                                         bool per_column = false,
                                         SbnNorm norm = SbnNorm::kSpectral);

struct SchoenbatResult {
  Matrix output;
  std::size_t degenerate_rows = 0;
};

// post_sbn(rmfa(pre_sbn(Q), pre_sbn(K), V)). The map's kernel must be `kernel`.
SchoenbatResult schoenbat(KernelId kernel, const AttentionInput& in, const RmfFeatureMap& map,
                          const PostSbnParams& post = {}, double epsilon = kDefaultSbnEpsilon,
                          const DenomPolicy& policy = {}, SbnNorm norm = SbnNorm::kSpectral);

}  // namespace schoenbat
