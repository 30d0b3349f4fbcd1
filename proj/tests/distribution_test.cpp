#include "bamc/distribution.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

using bamc::Distribution;
using bamc::kNegInf;
using bamc::Value;

namespace {

double density(const Distribution& d, double x) { return std::exp(d.log_density(Value{x})); }

double integrate_real_line(const Distribution& d) {
  // Split at the mean so both halves are smooth and decaying.
  const double m = d.parameters()[0];
  boost::math::quadrature::exp_sinh<double> tail;
  return tail.integrate([&](double t) { return density(d, m + t); }) +
         tail.integrate([&](double t) { return density(d, m - t); });
}

}  // namespace

TEST(LogDensity, ClosedFormValues) {
  EXPECT_NEAR(Distribution::normal(0.0, 1.0).log_density(0.0), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(Distribution::categorical({0.5, 0.5}).log_density(std::int64_t{0}), std::log(0.5), 1e-15);
  EXPECT_DOUBLE_EQ(Distribution::poisson(1.0).log_density(std::int64_t{0}), -1.0);
  EXPECT_NEAR(Distribution::uniform_discrete(-2, 2).log_density(std::int64_t{1}), -std::log(5.0), 1e-15);
  EXPECT_NEAR(Distribution::uniform_continuous(0.0, 4.0).log_density(1.0), -std::log(4.0), 1e-15);
  // Gamma(shape 1, rate 2) is Exponential(2).
  EXPECT_NEAR(Distribution::gamma(1.0, 2.0).log_density(0.5), std::log(2.0) - 1.0, 1e-14);
  // Beta(1, 1) is uniform.
  EXPECT_NEAR(Distribution::beta(1.0, 1.0).log_density(0.3), 0.0, 1e-14);
  // Dirichlet(1, 1, 1) is uniform on the simplex with density 2.
  EXPECT_NEAR(Distribution::dirichlet({1, 1, 1}).log_density(std::vector<double>{0.2, 0.3, 0.5}), std::log(2.0),
              1e-14);
}

TEST(LogDensity, OutsideSupportIsNegativeInfinity) {
  EXPECT_EQ(Distribution::categorical({0.5, 0.5}).log_density(std::int64_t{2}), kNegInf);
  EXPECT_EQ(Distribution::categorical({1.0, 0.0}).log_density(std::int64_t{1}), kNegInf);
  EXPECT_EQ(Distribution::uniform_discrete(0, 3).log_density(std::int64_t{4}), kNegInf);
  EXPECT_EQ(Distribution::poisson(2.0).log_density(std::int64_t{-1}), kNegInf);
  EXPECT_EQ(Distribution::uniform_continuous(0, 1).log_density(1.5), kNegInf);
  EXPECT_EQ(Distribution::gamma(2, 1).log_density(-0.1), kNegInf);
  EXPECT_EQ(Distribution::beta(2, 2).log_density(1.0), kNegInf);
  EXPECT_EQ(Distribution::dirichlet({1, 1}).log_density(std::vector<double>{0.7, 0.7}), kNegInf);
  EXPECT_EQ(Distribution::dirichlet({1, 1}).log_density(std::vector<double>{0.5, 0.25, 0.25}), kNegInf);
  EXPECT_EQ(Distribution::normal(0, 1).log_density(std::numeric_limits<double>::infinity()), kNegInf);
}

TEST(LogDensity, TypeMismatchThrows) {
  EXPECT_THROW(Distribution::categorical({0.5, 0.5}).log_density(0.0), bamc::ValueTypeError);
  EXPECT_THROW(Distribution::poisson(1.0).log_density(std::vector<double>{1.0}), bamc::ValueTypeError);
  EXPECT_THROW(Distribution::normal(0, 1).log_density(std::int64_t{0}), bamc::ValueTypeError);
  EXPECT_THROW(Distribution::dirichlet({1, 1}).log_density(0.5), bamc::ValueTypeError);
}

TEST(Distribution, InvalidParametersThrow) {
  using bamc::ParameterError;
  EXPECT_THROW(Distribution::categorical({}), ParameterError);
  EXPECT_THROW(Distribution::categorical({0.5, 0.6}), ParameterError);
  EXPECT_THROW(Distribution::categorical({1.5, -0.5}), ParameterError);
  EXPECT_THROW(Distribution::uniform_discrete(3, 2), ParameterError);
  EXPECT_THROW(Distribution::poisson(0.0), ParameterError);
  EXPECT_THROW(Distribution::normal(0.0, 0.0), ParameterError);
  EXPECT_THROW(Distribution::normal(std::nan(""), 1.0), ParameterError);
  EXPECT_THROW(Distribution::uniform_continuous(1.0, 1.0), ParameterError);
  EXPECT_THROW(Distribution::gamma(-1.0, 1.0), ParameterError);
  EXPECT_THROW(Distribution::gamma(1.0, 0.0), ParameterError);
  EXPECT_THROW(Distribution::beta(0.0, 1.0), ParameterError);
  EXPECT_THROW(Distribution::dirichlet({1.0}), ParameterError);
  EXPECT_THROW(Distribution::dirichlet({1.0, 0.0}), ParameterError);
  // Within the 1e-12 tolerance.
  EXPECT_NO_THROW(Distribution::categorical({0.1, 0.2, 0.7}));
}

TEST(Normalization, DiscreteKindsSumToOne) {
  auto sum = [](const Distribution& d, std::int64_t lo, std::int64_t hi) {
    double s = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k) s += std::exp(d.log_density(k));
    return s;
  };
  EXPECT_NEAR(sum(Distribution::categorical({0.1, 0.2, 0.3, 0.4}), 0, 3), 1.0, 1e-12);
  EXPECT_NEAR(sum(Distribution::uniform_discrete(-3, 7), -3, 7), 1.0, 1e-12);
  EXPECT_NEAR(sum(Distribution::poisson(3.7), 0, 200), 1.0, 1e-12);
  EXPECT_NEAR(sum(Distribution::poisson(0.05), 0, 200), 1.0, 1e-12);
}

TEST(Normalization, ContinuousScalarKindsIntegrateToOne) {
  boost::math::quadrature::tanh_sinh<double> unit;
  boost::math::quadrature::exp_sinh<double> half_line;

  EXPECT_NEAR(integrate_real_line(Distribution::normal(1.5, 0.3)), 1.0, 1e-6);
  EXPECT_NEAR(integrate_real_line(Distribution::normal(-20.0, 7.0)), 1.0, 1e-6);

  const auto u = Distribution::uniform_continuous(-1.0, 3.0);
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  EXPECT_NEAR(GK::integrate([&](double x) { return density(u, x); }, -1.0, 3.0), 1.0, 1e-6);

  for (auto [shape, rate] : {std::pair{2.5, 1.5}, std::pair{0.7, 2.0}, std::pair{30.0, 0.5}}) {
    const auto g = Distribution::gamma(shape, rate);
    EXPECT_NEAR(half_line.integrate([&](double x) { return density(g, x); }), 1.0, 1e-6) << shape << ' ' << rate;
  }
  for (auto [a, b] : {std::pair{2.0, 3.0}, std::pair{0.5, 0.5}, std::pair{8.0, 1.2}}) {
    const auto bd = Distribution::beta(a, b);
    EXPECT_NEAR(unit.integrate([&](double x) { return density(bd, x); }, 0.0, 1.0), 1.0, 1e-6) << a << ' ' << b;
  }
}

TEST(Normalization, DirichletIntegratesToOneOverSimplex) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  for (const auto& alpha : {std::vector<double>{2.0, 3.0, 1.5}, std::vector<double>{1.0, 1.0, 1.0},
                            std::vector<double>{4.0, 1.0, 2.0}}) {
    const auto d = Distribution::dirichlet(alpha);
    const double total = GK::integrate(
        [&](double x) {
          return GK::integrate(
              [&](double y) {
                const double z = 1.0 - x - y;
                if (!(z > 0.0)) return 0.0;
                return std::exp(d.log_density(std::vector<double>{x, y, z}));
              },
              0.0, 1.0 - x, 8, 1e-12);
        },
        0.0, 1.0, 8, 1e-12);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Sampling, DrawsLandInSupport) {
  bamc::Rng rng(7);
  const std::vector<Distribution> dists = {
      Distribution::categorical({0.0, 0.3, 0.0, 0.7}), Distribution::uniform_discrete(-2, 2),
      Distribution::poisson(4.0),         Distribution::normal(3.0, 0.1),
      Distribution::uniform_continuous(2, 3), Distribution::gamma(0.8, 3.0),
      Distribution::beta(0.9, 2.0),       Distribution::dirichlet(std::vector<double>(16, 1.0)),
  };
  for (const auto& d : dists) {
    for (int i = 0; i < 2000; ++i) {
      const Value v = d.sample(rng);
      ASSERT_TRUE(std::isfinite(d.log_density(v))) << d.describe() << " drew " << bamc::to_string(v);
    }
  }
}

TEST(Sampling, CategoricalFrequenciesFollowProbabilities) {
  bamc::Rng rng(11);
  const auto d = Distribution::categorical({0.2, 0.5, 0.3});
  std::array<int, 3> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(bamc::as_integer(d.sample(rng)))];
  EXPECT_NEAR(counts[0] / double(n), 0.2, 0.01);
  EXPECT_NEAR(counts[1] / double(n), 0.5, 0.01);
  EXPECT_NEAR(counts[2] / double(n), 0.3, 0.01);
}
