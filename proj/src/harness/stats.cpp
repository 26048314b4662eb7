#include "schoenbat/harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "schoenbat/error.hpp"

namespace schoenbat::harness {

namespace {

void require_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("paired samples differ in length");
  if (a.size() < 2) throw InvalidArgument("paired test needs at least two pairs");
}

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

Summary summarize(std::span<const double> xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

TestResult paired_t_one_sided(std::span<const double> a, std::span<const double> b) {
  require_paired(a, b);
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const Summary s = summarize(diff);
  TestResult r;
  if (s.se == 0.0) {
    r.statistic = s.mean > 0 ? INFINITY : (s.mean < 0 ? -INFINITY : 0.0);
    r.p_value = s.mean > 0 ? 0.0 : 1.0;
    return r;
  }
  r.statistic = s.mean / s.se;
  boost::math::students_t dist(static_cast<double>(s.count - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

TestResult wilcoxon_signed_rank_one_sided(std::span<const double> a, std::span<const double> b) {
  require_paired(a, b);
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) diff.push_back(a[i] - b[i]);
  TestResult r;
  if (diff.empty()) return r;
  std::vector<double> mag(diff.size());
  std::transform(diff.begin(), diff.end(), mag.begin(), [](double x) { return std::fabs(x); });
  const std::vector<double> rk = ranks(mag);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i)
    if (diff[i] > 0) w_plus += rk[i];
  const double n = static_cast<double>(diff.size());
  const double mean = n * (n + 1) / 4.0;
  double var = n * (n + 1) * (2 * n + 1) / 24.0;
  // Tie correction.
  std::vector<double> sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (var <= 0.0) return r;
  // Continuity correction toward the null.
  r.statistic = (w_plus - mean - 0.5) / std::sqrt(var);
  boost::math::normal dist;
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman needs paired samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const Summary sx = summarize(rx);
  const Summary sy = summarize(ry);
  double cov = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - sx.mean) * (ry[i] - sy.mean);
  cov /= static_cast<double>(rx.size() - 1);
  if (sx.sd == 0.0 || sy.sd == 0.0) return 0.0;
  return cov / (sx.sd * sy.sd);
}

TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw InvalidArgument("chi-square needs at least two matching cells");
  TestResult r;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw InvalidArgument("chi-square expected count must be positive");
    const double diff = observed[i] - expected[i];
    r.statistic += diff * diff / expected[i];
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

}  // namespace schoenbat::harness
