#include "schoenbat/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "schoenbat/error.hpp"

namespace schoenbat {

std::string_view kernel_name(KernelId k) {
  switch (k) {
    case KernelId::kExp: return "exp";
    case KernelId::kInv: return "inv";
    case KernelId::kLogi: return "logi";
    case KernelId::kTrigh: return "trigh";
    case KernelId::kSqrt: return "sqrt";
  }
  return "unknown";
}

KernelId parse_kernel(std::string_view name) {
  for (KernelId k : kAllKernels)
    if (kernel_name(k) == name) return k;
  throw InvalidArgument("unknown kernel '" + std::string(name) +
                        "' (expected exp, inv, logi, trigh or sqrt)");
}

double coefficient(KernelId k, std::size_t n) {
  switch (k) {
    case KernelId::kExp:
    case KernelId::kTrigh: {
      double a = 1.0;
      for (std::size_t m = 1; m <= n && a > 0.0; ++m) a /= static_cast<double>(m);
      return a;
    }
    case KernelId::kInv:
      return 1.0;
    case KernelId::kLogi:
      return n == 0 ? 1.0 : 1.0 / static_cast<double>(n);
    case KernelId::kSqrt: {
      if (n == 0) return 1.0;
      // a_1 = 1/2, a_{m+1} = a_m (2m-1) / (2(m+1))
      double a = 0.5;
      for (std::size_t m = 1; m < n; ++m)
        a *= static_cast<double>(2 * m - 1) / static_cast<double>(2 * (m + 1));
      return a;
    }
  }
  return 0.0;
}

DomainRadius domain_radius(KernelId k) {
  switch (k) {
    case KernelId::kExp:
    case KernelId::kTrigh:
      return std::nullopt;
    case KernelId::kInv:
    case KernelId::kLogi:
    case KernelId::kSqrt:
      return 1.0;
  }
  return std::nullopt;
}

bool in_domain(KernelId k, double z) {
  const DomainRadius r = domain_radius(k);
  return std::isfinite(z) && (!r || std::abs(z) < *r);
}

namespace {

[[noreturn]] void throw_domain(KernelId k, double z) {
  const DomainRadius r = domain_radius(k);
  throw DomainError("kernel " + std::string(kernel_name(k)) + ": argument " + std::to_string(z) +
                        " outside domain |z| < " + (r ? std::to_string(*r) : std::string("inf")),
                    r.value_or(std::numeric_limits<double>::infinity()));
}

}  // namespace

double evaluate_closed_form(KernelId k, double z) {
  if (!in_domain(k, z)) throw_domain(k, z);
  switch (k) {
    case KernelId::kExp: return std::exp(z);
    case KernelId::kInv: return 1.0 / (1.0 - z);
    case KernelId::kLogi: return 1.0 - std::log1p(-z);
    case KernelId::kTrigh: return std::sinh(z) + std::cosh(z);
    case KernelId::kSqrt: return 2.0 - std::sqrt(1.0 - z);
  }
  return 0.0;
}

double evaluate_series(KernelId k, double z, double tol, std::size_t max_terms) {
  if (!in_domain(k, z)) throw_domain(k, z);
  if (!(tol > 0.0)) throw InvalidArgument("evaluate_series: tol must be positive");
  if (max_terms == 0) throw InvalidArgument("evaluate_series: max_terms must be >= 1");

  const MaclaurinKernel& kern = kernel(k);
  const DomainRadius radius = domain_radius(k);
  const double az = std::abs(z);
  double sum = 0.0;
  double power = 1.0;  // z^n
  double a = kern.coefficient(0);
  for (std::size_t n = 0; n < max_terms; ++n) {
    const double term = a * power;
    sum += term;
    const double a_next = kern.coefficient(n + 1);
    // Geometric tail estimate: |term| * rho / (1 - rho), with rho the larger
    // of |z|/radius and the observed coefficient ratio.
    double rho = radius ? az / *radius : 0.0;
    if (a > 0.0) rho = std::max(rho, a_next / a * az);
    const double tail = rho < 1.0 ? std::abs(term) * rho / (1.0 - rho)
                                   : std::numeric_limits<double>::infinity();
    if (tail < tol) return sum;
    power *= z;
    a = a_next;
  }
  throw TruncationError("series for " + std::string(kernel_name(k)) + " did not converge in " +
                            std::to_string(max_terms) + " terms",
                        sum, max_terms);
}

MaclaurinKernel::MaclaurinKernel(KernelId id) : id_(id), table_(kMaxDegree + 1) {
  for (std::size_t n = 0; n <= kMaxDegree; ++n) table_[n] = schoenbat::coefficient(id, n);
}

double MaclaurinKernel::coefficient(std::size_t n) const {
  return n < table_.size() ? table_[n] : schoenbat::coefficient(id_, n);
}

const MaclaurinKernel& kernel(KernelId k) {
  static const std::array<MaclaurinKernel, 5> registry = {
      MaclaurinKernel(KernelId::kExp), MaclaurinKernel(KernelId::kInv),
      MaclaurinKernel(KernelId::kLogi), MaclaurinKernel(KernelId::kTrigh),
      MaclaurinKernel(KernelId::kSqrt)};
  return registry[static_cast<std::size_t>(k)];
}

}  // namespace schoenbat
