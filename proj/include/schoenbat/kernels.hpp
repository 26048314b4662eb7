#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace schoenbat {

// The dot-product kernels K(<x,y>) = f(<x,y>) with non-negative Maclaurin
// coefficients:
//   exp    exp(z)                  a_n = 1/n!
//   inv    1/(1-z)                 a_n = 1
//   logi   1 - log(1-z)            a_0 = 1, a_n = 1/n
//   trigh  sinh(z) + cosh(z)       a_n = 1/n!
//   sqrt   2 - sqrt(1-z)           a_0 = 1, a_n = (2n-3)!!/(2^n n!)
enum class KernelId { kExp, kInv, kLogi, kTrigh, kSqrt };

inline constexpr std::array<KernelId, 5> kAllKernels = {
    KernelId::kExp, KernelId::kInv, KernelId::kLogi, KernelId::kTrigh, KernelId::kSqrt};

// Radius of convergence; std::nullopt means unbounded.
using DomainRadius = std::optional<double>;

// Largest degree a feature map may sample; coefficients are tabulated up to it.
inline constexpr std::size_t kMaxDegree = 200;

std::string_view kernel_name(KernelId k);
// Lowercase names: exp, inv, logi, trigh, sqrt. Throws InvalidArgument.
KernelId parse_kernel(std::string_view name);

// n-th Maclaurin coefficient a_n >= 0.
double coefficient(KernelId k, std::size_t n);

DomainRadius domain_radius(KernelId k);
bool in_domain(KernelId k, double z);

// f(z) in closed form; throws DomainError when |z| >= radius.
double evaluate_closed_form(KernelId k, double z);

// Truncated sum of a_n z^n. Stops once a geometric bound on the remaining
// tail drops below `tol`; throws TruncationError (carrying the partial sum)
// if that has not happened after `max_terms` terms.
double evaluate_series(KernelId k, double z, double tol = 1e-12, std::size_t max_terms = 1000);

// Immutable view of one kernel with its coefficient table a_0..a_kMaxDegree.
class MaclaurinKernel {
 public:
  explicit MaclaurinKernel(KernelId id);

  KernelId id() const { return id_; }
  std::string_view name() const { return kernel_name(id_); }
  DomainRadius radius() const { return domain_radius(id_); }
  double coefficient(std::size_t n) const;
  double evaluate(double z) const { return evaluate_closed_form(id_, z); }

 private:
  KernelId id_;
  std::vector<double> table_;
};

// Registry lookup; the returned reference lives for the program's lifetime.
const MaclaurinKernel& kernel(KernelId k);

}  // namespace schoenbat
