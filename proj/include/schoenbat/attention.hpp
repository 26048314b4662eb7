#pragma once

#include <cstddef>
#include <vector>

#include "schoenbat/kernels.hpp"
#include "schoenbat/matrix.hpp"
#include "schoenbat/rmf.hpp"

namespace schoenbat {

// Query, key and value matrices, all n x d.
struct AttentionInput {
  Matrix q;
  Matrix k;
  Matrix v;

  std::size_t length() const { return q.rows(); }
  std::size_t dim() const { return q.cols(); }
  // Throws ShapeError unless all three are n x d with n, d >= 1, and
  // InvalidArgument on non-finite entries.
  void validate() const;
};

// What rmfa does with a row whose estimated normalizer is below `guard` in
// magnitude. RMF features are signed, so the estimate can be tiny or negative.
struct DenomPolicy {
  enum class OnDegenerate { kClamp, kError };
  double guard = 1e-8;
  // kClamp replaces the normalizer by sign * guard and counts the row;
  // kError throws DegenerateError.
  OnDegenerate on_degenerate = OnDegenerate::kClamp;
};

struct RmfaResult {
  Matrix output;
  std::size_t degenerate_rows = 0;
};

// Unnormalized attention: numerator (n x d) and per-row normalizer (n).
struct AttentionParts {
  Matrix numerator;
  std::vector<double> denominator;
};

// Row-normalized weights w_ij = K(<q_i,k_j>/sqrt d) / sum_j' K(<q_i,k_j'>/sqrt d).
// Throws DomainError (with the offending (i, j)) when a logit leaves the
// kernel's domain and DegenerateError when a row's normalizer is zero.
Matrix attention_weights(KernelId kernel, const AttentionInput& in);

AttentionParts exact_parts(KernelId kernel, const AttentionInput& in);

// Exact kernelized attention, Theta(n^2 d).
Matrix exact_kernelized_attention(KernelId kernel, const AttentionInput& in);

// Exact attention with K = exp, evaluated with row-max subtraction.
Matrix softmax_attention(const AttentionInput& in);

// Feature-space numerator Phi_Q (sum_i Phi_K[i]^T (x) V_i) and normalizer
// Phi_Q . sum_j Phi_K[j], with Q and K scaled by d^{-1/4} internally.
AttentionParts rmfa_parts(const RmfFeatureMap& map, const AttentionInput& in);

// Random Maclaurin feature attention, Theta(n d D) plus the feature cost.
RmfaResult rmfa(const RmfFeatureMap& map, const AttentionInput& in, const DenomPolicy& policy = {});

struct FlopCounts {
  double exact = 0.0;
  double rmfa = 0.0;
};

// Analytic multiply-add counts of the two attention paths. `avg_degree` is
// the mean number of Rademacher projections per feature (1 at p = 2).
FlopCounts count_flops(double n, double d, double features, double avg_degree);

}  // namespace schoenbat
