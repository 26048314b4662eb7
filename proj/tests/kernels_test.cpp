#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "schoenbat/error.hpp"
#include "schoenbat/kernels.hpp"
#include "schoenbat/rng.hpp"
#include "support/taylor_oracle.hpp"

using namespace schoenbat;

using schoenbat::testing::Big;
using schoenbat::testing::big_closed_form;
using schoenbat::testing::taylor_coefficient;

TEST(Coefficient, TableValues) {
  EXPECT_DOUBLE_EQ(coefficient(KernelId::kExp, 3), 1.0 / 6.0);
  EXPECT_EQ(coefficient(KernelId::kInv, 7), 1.0);
  EXPECT_EQ(coefficient(KernelId::kExp, 0), 1.0);
  EXPECT_DOUBLE_EQ(coefficient(KernelId::kSqrt, 4), 5.0 / 128.0);
  EXPECT_EQ(coefficient(KernelId::kLogi, 0), 1.0);
  EXPECT_DOUBLE_EQ(coefficient(KernelId::kLogi, 4), 0.25);
  EXPECT_EQ(coefficient(KernelId::kSqrt, 0), 1.0);
  EXPECT_EQ(coefficient(KernelId::kSqrt, 1), 0.5);
}

TEST(Coefficient, MatchesFiniteDifferenceTaylor) {
  for (KernelId k : kAllKernels) {
    for (unsigned n = 0; n <= 8; ++n) {
      const double fd = taylor_coefficient(k, n);
      const double a = coefficient(k, n);
      EXPECT_LE(std::abs(a - fd), 1e-6 * std::abs(fd)) << kernel_name(k) << " n=" << n;
    }
  }
}

TEST(Coefficient, TrighEqualsExp) {
  for (std::size_t n = 0; n <= 100; ++n)
    ASSERT_EQ(coefficient(KernelId::kTrigh, n), coefficient(KernelId::kExp, n)) << n;
}

TEST(Coefficient, NonNegativeAndFinite) {
  for (KernelId k : kAllKernels) {
    for (std::size_t n = 0; n <= kMaxDegree; ++n) {
      const double a = coefficient(k, n);
      ASSERT_GE(a, 0.0);
      ASSERT_TRUE(std::isfinite(a));
      ASSERT_EQ(a, kernel(k).coefficient(n));
    }
  }
  // 1/n! underflows to zero rather than overflowing.
  EXPECT_EQ(coefficient(KernelId::kExp, 1000), 0.0);
}

TEST(ClosedForm, Values) {
  EXPECT_EQ(evaluate_closed_form(KernelId::kExp, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(evaluate_closed_form(KernelId::kInv, 0.5), 2.0);
  EXPECT_EQ(evaluate_closed_form(KernelId::kSqrt, 0.0), 1.0);
}

TEST(ClosedForm, AgreesWithExtendedPrecision) {
  for (KernelId k : kAllKernels) {
    for (double z : {-0.9, -0.3, 0.0, 0.25, 0.7, 0.95}) {
      const double want = static_cast<double>(big_closed_form(k, Big(z)));
      EXPECT_NEAR(evaluate_closed_form(k, z), want, 1e-14 * std::abs(want)) << kernel_name(k) << z;
    }
  }
}

TEST(ClosedForm, DomainError) {
  EXPECT_THROW(evaluate_closed_form(KernelId::kInv, 1.0), DomainError);
  try {
    evaluate_closed_form(KernelId::kSqrt, -1.5);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.radius(), 1.0);
  }
  EXPECT_NO_THROW(evaluate_closed_form(KernelId::kExp, 30.0));
}

TEST(Domain, Radius) {
  EXPECT_FALSE(domain_radius(KernelId::kExp).has_value());
  EXPECT_FALSE(domain_radius(KernelId::kTrigh).has_value());
  EXPECT_EQ(domain_radius(KernelId::kInv), 1.0);
  EXPECT_EQ(domain_radius(KernelId::kLogi), 1.0);
  EXPECT_EQ(domain_radius(KernelId::kSqrt), 1.0);
  EXPECT_TRUE(in_domain(KernelId::kInv, -0.999));
  EXPECT_FALSE(in_domain(KernelId::kInv, 1.0));
  EXPECT_TRUE(in_domain(KernelId::kExp, 1e6));
}

TEST(Series, ZeroGivesConstantTerm) {
  for (KernelId k : kAllKernels) EXPECT_EQ(evaluate_series(k, 0.0), coefficient(k, 0));
}

TEST(Series, Examples) {
  EXPECT_NEAR(evaluate_series(KernelId::kExp, 0.5, 1e-12, 100), 1.6487212707, 1e-10);
  EXPECT_NEAR(evaluate_series(KernelId::kInv, 0.5, 1e-12, 200), 2.0, 1e-10);
}

TEST(Series, TruncationCarriesPartialSum) {
  try {
    evaluate_series(KernelId::kInv, 0.99, 1e-12, 10);
    FAIL();
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.terms(), 10u);
    EXPECT_NEAR(e.partial_value(), (1 - std::pow(0.99, 10)) / 0.01, 1e-9);
  }
  EXPECT_THROW(evaluate_series(KernelId::kLogi, 1.0), DomainError);
}

TEST(Series, AgreesWithClosedForm) {
  RngStream rng(2024);
  for (KernelId k : kAllKernels) {
    for (int i = 0; i < 1000; ++i) {
      const double z = -0.9 + 1.8 * rng.uniform();
      ASSERT_NEAR(evaluate_series(k, z), evaluate_closed_form(k, z), 1e-8) << kernel_name(k) << z;
    }
  }
  for (KernelId k : {KernelId::kExp, KernelId::kTrigh}) {
    for (int i = 0; i < 1000; ++i) {
      const double z = -5.0 + 10.0 * rng.uniform();
      ASSERT_NEAR(evaluate_series(k, z), evaluate_closed_form(k, z), 1e-8) << kernel_name(k) << z;
    }
  }
}

TEST(Names, RoundTrip) {
  for (KernelId k : kAllKernels) EXPECT_EQ(parse_kernel(kernel_name(k)), k);
  EXPECT_THROW(parse_kernel("gauss"), InvalidArgument);
}
