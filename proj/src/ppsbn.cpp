#include "schoenbat/ppsbn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "schoenbat/error.hpp"

namespace schoenbat {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double spectral_norm(const Matrix& x) {
  if (x.empty()) return 0.0;
  const Eigen::Map<const RowMajor> a(x.values().data(), static_cast<Eigen::Index>(x.rows()),
                                     static_cast<Eigen::Index>(x.cols()));
  // Eigenvalues of the smaller Gram matrix.
  const Eigen::MatrixXd gram = x.cols() <= x.rows() ? Eigen::MatrixXd(a.transpose() * a)
                                                    : Eigen::MatrixXd(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(solver.eigenvalues().maxCoeff(), 0.0));
}

double frobenius_norm(const Matrix& x) { return l2_norm(x.values()); }

double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

PreSbnResult pre_sbn(const Matrix& x, double epsilon, SbnNorm norm) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("pre_sbn: input must be non-empty");
  if (!(epsilon > 0.0)) throw InvalidArgument("pre_sbn: epsilon must be positive");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();

  SbnStats stats;
  stats.epsilon = epsilon;
  stats.mean.assign(d, 0.0);
  stats.variance.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) stats.mean[c] += x(i, c);
  for (double& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = x(i, c) - stats.mean[c];
      stats.variance[c] += dev * dev;
    }
  }
  for (double& v : stats.variance) v /= static_cast<double>(n);

  Matrix standardized(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      standardized(i, c) = (x(i, c) - stats.mean[c]) / std::sqrt(stats.variance[c] + epsilon);

  double max_row = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_row = std::max(max_row, l2_norm(standardized.row(i)));
  const double matrix_norm =
      norm == SbnNorm::kSpectral ? spectral_norm(standardized) : frobenius_norm(standardized);
  // Both norms dominate every row norm; the max only absorbs rounding.
  stats.scalar_norm = std::max(matrix_norm, max_row);

  const double divisor = std::max(stats.scalar_norm, epsilon);
  for (double& v : standardized.values()) v /= divisor;
  return {std::move(standardized), std::move(stats)};
}

double pre_sbn_flops(double n, double d, SbnNorm norm) {
  if (!(n > 0.0 && d > 0.0)) throw InvalidArgument("pre_sbn_flops: arguments must be positive");
  // mean, variance, standardization, row norms, final division
  const double base = n * d + 3.0 * n * d + 2.0 * n * d + 2.0 * n * d + n * d;
  if (norm == SbnNorm::kFrobenius) return base + 2.0 * n * d;
  const double small = std::min(n, d);
  const double large = std::max(n, d);
  return base + 2.0 * large * small * small + 4.0 * small * small * small;
}

void PostSbnParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma) || !(beta > 0.0) || !std::isfinite(beta))
    throw InvalidArgument("post-SBN parameters must be positive and finite");
}

double signed_pow(double x, double b) {
  if (x == 0.0) return b > 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), x);
  return std::copysign(std::pow(std::abs(x), b), x);
}

Matrix post_sbn(const Matrix& att, const PostSbnParams& params) {
  params.validate();
  Matrix out = att;
  for (double& x : out.values()) x = params.gamma * signed_pow(x, params.beta);
  return out;
}

PostSbnParams fit_post_params(const Matrix& att_sbn, const Matrix& att_target) {
  if (att_sbn.rows() != att_target.rows() || att_sbn.cols() != att_target.cols())
    throw ShapeError("fit_post_params: shape mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < att_sbn.size(); ++i) {
    const double x = att_sbn.values()[i];
    const double y = att_target.values()[i];
    if (std::abs(x) > 1e-6 && y != 0.0 && std::isfinite(x) && std::isfinite(y)) {
      lx.push_back(std::log(std::abs(x)));
      ly.push_back(std::log(std::abs(y)));
    }
  }
  if (lx.size() < 2) throw FitError("fit_post_params: fewer than two usable entries");
  const double m = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("fit_post_params: all usable entries share one magnitude");
  PostSbnParams p;
  p.beta = sxy / sxx;
  p.gamma = std::exp(my - p.beta * mx);
  if (!(p.beta > 0.0) || !std::isfinite(p.beta) || !(p.gamma > 0.0) || !std::isfinite(p.gamma))
    throw FitError("fit_post_params: fitted parameters are not positive and finite");
  return p;
}

double restoration_scale(const SbnStats& q, const SbnStats& k) {
  if (q.variance.size() != k.variance.size() || q.variance.empty())
    throw ShapeError("restoration_scale: statistics have different widths");
  double sum = 0.0;
  for (std::size_t c = 0; c < q.variance.size(); ++c)
    sum += std::sqrt((q.variance[c] + q.epsilon) * (k.variance[c] + k.epsilon));
  const double r = q.scalar_norm * k.scalar_norm * sum / static_cast<double>(q.variance.size());
  return std::max(r, q.epsilon);
}

RestorationParams ideal_restoration_params(const AttentionInput& in, double epsilon, SbnNorm norm) {
  in.validate();
  const std::size_t n = in.length();
  const std::size_t d = in.dim();
  const double sqrt_d = std::sqrt(static_cast<double>(d));

  RestorationParams p;
  p.q_stats = pre_sbn(in.q, epsilon, norm).stats;
  p.k_stats = pre_sbn(in.k, epsilon, norm).stats;
  p.r = restoration_scale(p.q_stats, p.k_stats);
  p.r_columns.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    p.r_columns[c] = std::max(p.q_stats.scalar_norm * p.k_stats.scalar_norm *
                                  std::sqrt((p.q_stats.variance[c] + epsilon) *
                                            (p.k_stats.variance[c] + epsilon)),
                              epsilon);
  }

  // Raw logits <q_a, k_i>.
  Matrix qk(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t i = 0; i < n; ++i) qk(a, i) = dot(in.q.row(a), in.k.row(i));

  static const double kMaxLog = std::log(std::numeric_limits<double>::max());
  std::vector<double> logits(n * n);
  for (std::size_t e = 0; e < n * n; ++e) {
    logits[e] = qk.values()[e] / sqrt_d;
    if (logits[e] > kMaxLog) {
      throw NumericalError(
          "ideal_restoration_params: exp(QK^T/sqrt d) overflows; normalize the inputs into the "
          "unit ball first");
    }
  }

  // ||E||_1 and ||E||_{1/r} in log space: log ||E||_p = LSE(p log E) / p.
  const double log_l1 = log_sum_exp(logits);
  std::vector<double> tempered(logits);
  for (double& x : tempered) x /= p.r;
  const double log_lr = p.r * log_sum_exp(tempered);
  const double ratio = std::exp(log_lr - log_l1);

  p.s = Matrix(n, d);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t c = 0; c < d; ++c) p.s(a, c) = ratio * signed_pow(in.v(a, c), p.r - 1.0);

  std::vector<double> mu_k(n);
  for (std::size_t i = 0; i < n; ++i) mu_k[i] = dot(p.q_stats.mean, in.k.row(i));

  const double denom_scale = p.r * sqrt_d;
  p.t = Matrix(n, n);
  std::vector<double> num_terms(n);
  std::vector<double> den_terms(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < n; ++i) num_terms[i] = (qk(a, i) - mu_k[i]) / denom_scale;
    const double log_num = log_sum_exp(num_terms);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t i = 0; i < n; ++i) den_terms[i] = (qk(a, i) - mu_k[b]) / denom_scale;
      p.t(a, b) = std::exp(log_num - log_sum_exp(den_terms));
    }
  }

  if (!p.s.all_finite() || !p.t.all_finite() || !std::isfinite(p.r))
    throw NumericalError("ideal_restoration_params: non-finite restoration parameters");
  return p;
}

RestorationResidual restoration_residual(const AttentionInput& in, const RestorationParams& params,
                                         bool per_column, SbnNorm norm) {
  in.validate();
  const std::size_t n = in.length();
  const std::size_t d = in.dim();
  if (params.s.rows() != n || params.s.cols() != d || params.t.rows() != n || params.t.cols() != n)
    throw ShapeError("restoration_residual: parameters do not match the input");

  const double eps = params.q_stats.epsilon;
  const AttentionInput normalized{pre_sbn(in.q, eps, norm).normalized,
                                  pre_sbn(in.k, eps, norm).normalized, in.v};
  const Matrix lhs = softmax_attention(normalized);
  const Matrix raw = softmax_attention(in);

  RestorationResidual res;
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double t_row = 0.0;
    for (std::size_t b = 0; b < n; ++b) t_row += params.t(a, b);
    t_row /= static_cast<double>(n);
    for (std::size_t c = 0; c < d; ++c) {
      const double r = per_column ? params.r_columns[c] : params.r;
      const double rhs = signed_pow(raw(a, c) / params.s(a, c), 1.0 / r) / t_row;
      const double diff = std::abs(lhs(a, c) - rhs);
      if (!std::isfinite(diff)) {
        res.finite = false;
        continue;
      }
      res.max_abs = std::max(res.max_abs, diff);
      sum += diff;
    }
  }
  res.mean_abs = sum / static_cast<double>(n * d);
  if (!res.finite) {
    res.max_abs = std::numeric_limits<double>::quiet_NaN();
    res.mean_abs = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

SchoenbatResult schoenbat(KernelId kernel, const AttentionInput& in, const RmfFeatureMap& map,
                          const PostSbnParams& post, double epsilon, const DenomPolicy& policy,
                          SbnNorm norm) {
  if (map.params().kernel != kernel) {
    throw InvalidArgument("schoenbat: feature map was sampled for kernel " +
                          std::string(kernel_name(map.params().kernel)) + ", not " +
                          std::string(kernel_name(kernel)));
  }
  post.validate();
  in.validate();
  const AttentionInput normalized{pre_sbn(in.q, epsilon, norm).normalized,
                                  pre_sbn(in.k, epsilon, norm).normalized, in.v};
  RmfaResult att = rmfa(map, normalized, policy);
  return {post_sbn(att.output, post), att.degenerate_rows};
}

}  // namespace schoenbat
