#include "schoenbat/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "schoenbat/error.hpp"

namespace schoenbat {

void AttentionInput::validate() const {
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  if (n == 0 || d == 0) throw ShapeError("attention input must be non-empty");
  if (k.rows() != n || k.cols() != d || v.rows() != n || v.cols() != d) {
    throw ShapeError("attention input: Q, K and V must all be " + std::to_string(n) + "x" +
                     std::to_string(d));
  }
  if (!q.all_finite() || !k.all_finite() || !v.all_finite())
    throw InvalidArgument("attention input contains non-finite entries");
}

namespace {

// Kernel values K(<q_i, k_j>/sqrt d) for one query row.
void kernel_row(KernelId kernel, const AttentionInput& in, std::size_t i, double inv_sqrt_d,
                std::span<double> out) {
  const auto qi = in.q.row(i);
  const DomainRadius radius = domain_radius(kernel);
  for (std::size_t j = 0; j < in.length(); ++j) {
    const double z = dot(qi, in.k.row(j)) * inv_sqrt_d;
    if (!in_domain(kernel, z)) {
      throw DomainError("attention logit " + std::to_string(z) + " at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") is outside the domain of kernel " +
                            std::string(kernel_name(kernel)),
                        radius.value_or(std::numeric_limits<double>::infinity()),
                        std::make_pair(i, j));
    }
    out[j] = evaluate_closed_form(kernel, z);
    if (!std::isfinite(out[j])) {
      throw NumericalError("kernel value overflow at (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")");
    }
  }
}

}  // namespace

AttentionParts exact_parts(KernelId kernel, const AttentionInput& in) {
  in.validate();
  const std::size_t n = in.length();
  const std::size_t d = in.dim();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  AttentionParts parts{Matrix(n, d), std::vector<double>(n, 0.0)};
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel_row(kernel, in, i, inv_sqrt_d, w);
    auto num = parts.numerator.row(i);
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      den += w[j];
      const auto vj = in.v.row(j);
      for (std::size_t c = 0; c < d; ++c) num[c] += w[j] * vj[c];
    }
    parts.denominator[i] = den;
  }
  return parts;
}

Matrix attention_weights(KernelId kernel, const AttentionInput& in) {
  in.validate();
  const std::size_t n = in.length();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(in.dim()));
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = w.row(i);
    kernel_row(kernel, in, i, inv_sqrt_d, row);
    double den = 0.0;
    for (double x : row) den += x;
    if (den == 0.0) throw DegenerateError("attention row " + std::to_string(i) + " has zero weight", i);
    for (double& x : row) x /= den;
  }
  return w;
}

Matrix exact_kernelized_attention(KernelId kernel, const AttentionInput& in) {
  AttentionParts parts = exact_parts(kernel, in);
  for (std::size_t i = 0; i < in.length(); ++i) {
    const double den = parts.denominator[i];
    if (den == 0.0) throw DegenerateError("attention row " + std::to_string(i) + " has zero weight", i);
    for (double& x : parts.numerator.row(i)) x /= den;
  }
  return std::move(parts.numerator);
}

Matrix softmax_attention(const AttentionInput& in) {
  in.validate();
  const std::size_t n = in.length();
  const std::size_t d = in.dim();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix out(n, d);
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = in.q.row(i);
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = dot(qi, in.k.row(j)) * inv_sqrt_d;
      row_max = std::max(row_max, logits[j]);
    }
    auto o = out.row(i);
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = std::exp(logits[j] - row_max);
      den += w;
      const auto vj = in.v.row(j);
      for (std::size_t c = 0; c < d; ++c) o[c] += w * vj[c];
    }
    for (double& x : o) x /= den;
  }
  return out;
}

AttentionParts rmfa_parts(const RmfFeatureMap& map, const AttentionInput& in) {
  in.validate();
  if (map.input_dim() != in.dim()) {
    throw ShapeError("rmfa: feature map expects d = " + std::to_string(map.input_dim()) +
                     ", input has d = " + std::to_string(in.dim()));
  }
  const std::size_t n = in.length();
  const std::size_t d = in.dim();
  const std::size_t features = map.features();
  const double scale = std::pow(static_cast<double>(d), -0.25);

  const Matrix phi_q = apply_feature_map(map, scaled(in.q, scale));
  const Matrix phi_k = apply_feature_map(map, scaled(in.k, scale));

  // kv = sum_i Phi_K[i]^T (x) V_i  (D x d),  z = sum_j Phi_K[j]  (D)
  Matrix kv(features, d);
  std::vector<double> z(features, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fk = phi_k.row(i);
    outer_accumulate(fk, in.v.row(i), kv);
    for (std::size_t t = 0; t < features; ++t) z[t] += fk[t];
  }

  AttentionParts parts{matmul(phi_q, kv), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) parts.denominator[i] = dot(phi_q.row(i), z);
  return parts;
}

RmfaResult rmfa(const RmfFeatureMap& map, const AttentionInput& in, const DenomPolicy& policy) {
  if (!(policy.guard > 0.0)) throw InvalidArgument("denominator guard must be positive");
  AttentionParts parts = rmfa_parts(map, in);
  RmfaResult result{std::move(parts.numerator), 0};
  for (std::size_t i = 0; i < in.length(); ++i) {
    double den = parts.denominator[i];
    if (!(std::abs(den) >= policy.guard)) {
      if (policy.on_degenerate == DenomPolicy::OnDegenerate::kError) {
        throw DegenerateError("rmfa: normalizer of row " + std::to_string(i) + " is " +
                                  std::to_string(den) + ", below the guard",
                              i);
      }
      den = std::signbit(den) ? -policy.guard : policy.guard;
      ++result.degenerate_rows;
    }
    for (double& x : result.output.row(i)) x /= den;
  }
  return result;
}

FlopCounts count_flops(double n, double d, double features, double avg_degree) {
  if (!(n > 0.0 && d > 0.0 && features > 0.0 && avg_degree >= 0.0))
    throw InvalidArgument("count_flops: arguments must be positive");
  FlopCounts c;
  // logits, kernel evaluation, weighted sum of V, row sums, division
  c.exact = n * n * 2.0 * d + n * n + n * n * 2.0 * d + n * n + n * d;
  const double projections = features * avg_degree;
  // projections and products for Q and K, K^T (x) V accumulation, key sum,
  // numerator, normalizer, division
  c.rmfa = 2.0 * (n * projections * 2.0 * d + n * std::max(projections, features)) +
           n * features * 2.0 * d + n * features + n * features * 2.0 * d +
           n * features * 2.0 + n * d;
  return c;
}

}  // namespace schoenbat
