#include <cmath>
#include <complex>
#include <memory>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "kfspec/mu_calculus.hpp"
#include "oracles.hpp"

using namespace kfspec;

namespace {

std::shared_ptr<const DiscreteMeasure> shared(const MeasureSpec& spec, std::size_t res,
                                              DiscretizeOptions o = {}) {
  return std::make_shared<const DiscreteMeasure>(discretize(spec, res, o));
}

}  // namespace

TEST(MuPrimitive, UnitDensityIsTheCdf) {
  const auto spec = measures::cantor3();
  const auto dm = shared(spec, 12);
  const auto f = MuPrimitive::from_density(dm, 0.0, [](double) { return 1.0; });
  const auto g = cdf(spec, 60);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng);
    EXPECT_NEAR(eval_primitive(f, x), g(x), g.error_bound() + std::pow(0.5, 12));
  }
}

TEST(MuPrimitive, ZeroDensityIsConstant) {
  const auto f = MuPrimitive::from_density(shared(measures::cantor3(), 8), 2.5, [](double) { return 0.0; });
  for (double x : {0.0, 0.3, 0.5, 1.0}) EXPECT_EQ(f(x), 2.5);
}

TEST(MuPrimitive, LebesgueSquare) {
  const auto f = MuPrimitive::from_density(shared(measures::lebesgue(), 1000), 0.0,
                                           [](double x) { return 2.0 * x; });
  for (double x : {0.1, 0.25, 0.5, 0.77, 1.0}) EXPECT_NEAR(f(x), x * x, 1e-3);
  // At grid points the midpoint sums are exact up to the half-cell offset.
  EXPECT_NEAR(f(0.5), 0.25, 1e-4);
  EXPECT_NEAR(f(1.0), 1.0, 1e-12);
}

TEST(MuPrimitive, Errors) {
  const auto dm = shared(measures::lebesgue(), 4);
  EXPECT_THROW(MuPrimitive(dm, 0.0, {1.0, 2.0}), DimensionMismatch);
  const MuPrimitive f(dm, 0.0, {1.0, 1.0, 1.0, 1.0});
  EXPECT_THROW(f(-0.1), InvalidArgument);
  EXPECT_THROW(f(1.5), InvalidArgument);
}

TEST(NablaMu, DividedDifferences) {
  const auto leb = cdf(measures::lebesgue(), 1);
  EXPECT_NEAR(nabla_mu_divided_difference([](double x) { return x * x; }, leb, 0.5, 0.5 + 1e-6), 1.0, 1e-5);

  const auto g = cdf(measures::cantor3(), 60);
  auto fg = [&](double x) { return g(x); };
  for (auto [a, b] : {std::pair{0.0, 0.2}, {0.1, 0.9}, {0.7, 0.71}, {0.3, 1.0}})
    EXPECT_EQ(nabla_mu_divided_difference(fg, g, a, b), 1.0);

  auto id = [](double x) { return x; };
  EXPECT_THROW(nabla_mu_divided_difference(id, g, 0.4, 0.6), NullBracket);
  EXPECT_EQ(nabla_mu_or_zero(id, g, 0.4, 0.6), 0.0);
  try {
    nabla_mu_divided_difference(id, g, 0.4, 0.6);
  } catch (const NullBracket& e) {
    EXPECT_EQ(e.lo, 0.4);
    EXPECT_EQ(e.hi, 0.6);
  }
}

TEST(ProductRule, Constants) {
  const auto dm = shared(measures::cantor3(), 10);
  const auto f = MuPrimitive::from_density(dm, 3.0, [](double) { return 0.0; });
  const auto r = product_rule_check(f, f);
  EXPECT_EQ(r.pointwise, 0.0);
  EXPECT_EQ(r.boundary, 0.0);
}

TEST(ProductRule, LebesgueIdentity) {
  const auto dm = shared(measures::lebesgue(), 1000);
  const auto f = MuPrimitive::from_density(dm, 0.0, [](double) { return 1.0; });
  const auto r = product_rule_check(f, f);
  EXPECT_LE(r.boundary, 1e-3);
  EXPECT_NEAR(r.inner_df_g, 0.5, 1e-3);
  EXPECT_NEAR(r.inner_f_dg, 0.5, 1e-3);
  // Node-value quotient deviates by O(max weight).
  EXPECT_LE(r.pointwise, 2.0 * dm->max_weight() + 1e-12);
}

TEST(ProductRule, CantorCdf) {
  const auto dm = shared(measures::cantor3(), 12);
  const auto f = MuPrimitive::from_density(dm, 0.0, [](double) { return 1.0; });
  const auto r = product_rule_check(f, f);
  EXPECT_LE(r.boundary, 1e-3);
  EXPECT_NEAR(r.inner_df_g, 0.5, 1e-3);
  EXPECT_NEAR(r.inner_f_dg, 0.5, 1e-3);
}

TEST(ProductRule, GeneralPairConvergesPointwise) {
  auto pointwise = [](std::size_t depth) {
    const auto dm = shared(measures::biased_dyadic(), depth);
    const auto f = MuPrimitive::from_density(dm, 1.0, [](double x) { return std::cos(3 * x); });
    const auto g = MuPrimitive::from_density(dm, -0.5, [](double x) { return x * x; });
    const auto r = product_rule_check(f, g);
    EXPECT_LE(r.boundary, 1e-12);
    return r.pointwise;
  };
  EXPECT_LT(pointwise(12), pointwise(8));
}

TEST(ProductRule, MeasureMismatch) {
  const auto f = MuPrimitive::from_density(shared(measures::cantor3(), 4), 0.0, [](double) { return 1.0; });
  const auto g = MuPrimitive::from_density(shared(measures::cantor3(), 5), 0.0, [](double) { return 1.0; });
  EXPECT_THROW(product_rule_check(f, g), DimensionMismatch);
}

TEST(FirstOrder, LebesgueEigenvalues) {
  const auto spec = measures::lebesgue();
  const auto es = first_order_eigensystem(shared(spec, 256), cdf(spec, 1), 0.0, 8);
  for (int n = -8; n <= 8; ++n) EXPECT_DOUBLE_EQ(es.lambda(n), 2.0 * n * oracle::pi);
  const auto phi = es.phi(3);
  const auto x = es.measure().nodes();
  for (std::size_t j = 0; j < x.size(); j += 17) {
    EXPECT_NEAR(phi[j].real(), std::cos(6 * oracle::pi * x[j]), 1e-13);
    EXPECT_NEAR(phi[j].imag(), std::sin(6 * oracle::pi * x[j]), 1e-13);
  }
}

TEST(FirstOrder, ThetaShift) {
  const auto spec = measures::cantor3();
  const auto es = first_order_eigensystem(shared(spec, 6), cdf(spec, 40), oracle::pi, 4);
  EXPECT_DOUBLE_EQ(es.lambda(0), oracle::pi);
  for (int n = -4; n < 4; ++n) EXPECT_NEAR(es.lambda(n + 1) - es.lambda(n), 2.0 * oracle::pi, 1e-14);
}

TEST(FirstOrder, DensitySpacingUsesMass) {
  const auto spec = MeasureSpec::density({1.0, 3.0});
  const CdfTable g(spec, 1, {});
  const auto es = first_order_eigensystem(shared(spec, 64), g, 0.5, 3);
  EXPECT_DOUBLE_EQ(es.mass(), 2.0);
  for (int n = -3; n < 3; ++n) EXPECT_NEAR(es.lambda(n + 1) - es.lambda(n), oracle::pi, 1e-14);
}

TEST(FirstOrder, GramOrthonormalEqualWeights) {
  for (const auto& spec : {measures::cantor3(), measures::cantor4(), measures::dyadic_lebesgue()}) {
    const auto es = first_order_eigensystem(shared(spec, 12), CdfTable(spec, 60, {}), 0.0, 8);
    EXPECT_LE(es.gram_deviation(4), 1e-6);
    EXPECT_LE(es.gram_deviation(8), 1e-5);
  }
  const auto leb = measures::lebesgue();
  const auto es = first_order_eigensystem(shared(leb, 1024), cdf(leb, 1), 0.0, 8);
  EXPECT_LE(es.gram_deviation(8), 1e-5);
}

TEST(FirstOrder, GramBiasedWeightsConvergesWithDepth) {
  const auto spec = measures::biased_dyadic();
  const CdfTable g(spec, 90, {});
  double prev = 1e9;
  for (std::size_t depth : {8u, 12u, 16u}) {
    const auto dev = first_order_eigensystem(shared(spec, depth), g, 0.0, 8).gram_deviation(8);
    EXPECT_LT(dev, prev);
    prev = dev;
  }
  // Left-Riemann error in g of order |n| * max weight.
  EXPECT_LE(prev, 16.0 * oracle::pi * std::pow(2.0 / 3.0, 16));
}

TEST(FirstOrder, EigenIdentityResidual) {
  for (const auto& spec : {measures::cantor3(), measures::biased_dyadic()}) {
    const auto dm = shared(spec, 12);
    const auto es = first_order_eigensystem(dm, CdfTable(spec, 90, {}), 0.3, 8);
    for (int n = -8; n <= 8; ++n)
      EXPECT_LE(es.eigen_identity_residual(n), 10.0 * std::abs(es.lambda(n)) * dm->max_weight() + 1e-12);
  }
}

TEST(TimeChange, Pullbacks) {
  const auto leb = measures::lebesgue();
  const auto dm = discretize(leb, 64);
  const auto g = cdf(leb, 1);
  const auto v = time_change_pullback([](double u) { return u; }, g, dm);
  for (std::size_t j = 0; j < v.size(); ++j) EXPECT_EQ(v[j], dm.nodes()[j]);

  const auto c3 = measures::cantor3();
  const auto dm3 = discretize(c3, 12);
  const CdfTable g3(c3, 60, {});
  const auto one = time_change_isometry([](double) { return 1.0; }, g3, dm3);
  EXPECT_NEAR(one.norm_mu, 1.0, 1e-12);
  EXPECT_NEAR(one.norm_lebesgue, 1.0, 1e-12);
  const auto e = time_change_isometry(
      [](double u) { return std::exp(std::complex<double>(0.0, 2.0 * oracle::pi * u)); }, g3, dm3);
  EXPECT_NEAR(e.norm_mu, 1.0, 1e-6);
}

TEST(TimeChange, IsometryTrigonometric) {
  for (const auto& spec : {measures::cantor3(), measures::cantor4()}) {
    const auto dm = discretize(spec, 12);
    const CdfTable g(spec, 60, {});
    for (int k = 1; k <= 8; ++k) {
      const auto r = time_change_isometry(
          [k](double u) { return std::cos(2.0 * oracle::pi * k * u) + 0.5 * std::sin(oracle::pi * k * u); }, g, dm);
      EXPECT_LE(std::abs(r.norm_mu - r.norm_lebesgue), 1e-4) << k;
    }
  }
}

TEST(TimeChange, RequiresUnitMass) {
  const auto spec = MeasureSpec::density({2.0, 2.0});
  const auto dm = discretize(spec, 8);
  const CdfTable g(spec, 1, {});
  EXPECT_THROW(time_change_pullback([](double u) { return u; }, g, dm), UnsupportedSpec);
}

TEST(Rkhs, Norms) {
  const auto c3 = shared(measures::cantor3(), 10);
  EXPECT_NEAR(rkhs_norm(MuPrimitive::from_density(c3, 0.0, [](double) { return 1.0; })), 1.0, 1e-12);
  EXPECT_EQ(rkhs_norm(MuPrimitive::from_density(c3, 4.0, [](double) { return 0.0; })), 0.0);
  const auto leb = shared(measures::lebesgue(), 1000);
  EXPECT_NEAR(rkhs_norm(MuPrimitive::from_density(leb, 0.0, [](double x) { return 2.0 * x; })),
              std::sqrt(4.0 / 3.0), 1e-4);
}

TEST(Rkhs, ReproducingProperty) {
  const auto dm = shared(measures::biased_dyadic(), 12);
  const auto f = MuPrimitive::from_density(dm, 0.7, [](double x) { return std::sin(5 * x) - x; });
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng);
    EXPECT_NEAR(rkhs_inner(f, kernel_section(dm, x)), f(x) - f.f0(), 1e-12);
  }
}

TEST(ClassNorm, SqrtDivergence) {
  std::vector<Interval> comps;
  for (int n = 1; n <= 20; ++n) comps.push_back({std::ldexp(1.0, -(n + 1)), std::ldexp(1.0, -n)});
  const auto r = class_norm_partial([](double x) { return 0.5 / std::sqrt(x); }, comps);
  ASSERT_EQ(r.terms.size(), comps.size());
  for (double t : r.terms) EXPECT_NEAR(t, std::log(2.0) / 4.0, 1e-6);
  EXPECT_NEAR(r.sum, 20 * std::log(2.0) / 4.0, 20e-6);
}

TEST(ClassNorm, SimpleCases) {
  const std::vector<Interval> halves{{0.0, 0.5}, {0.5, 1.0}};
  const auto c = class_norm_partial([](double) { return 0.0; }, halves);
  EXPECT_EQ(c.sum, 0.0);
  const auto lin = class_norm_partial([](double) { return 1.0; }, halves);
  EXPECT_NEAR(lin.terms[0], 0.5, 1e-12);
  EXPECT_NEAR(lin.terms[1], 0.5, 1e-12);
  EXPECT_NEAR(lin.sum, 1.0, 1e-12);
  const std::vector<Interval> overlap{{0.0, 0.6}, {0.5, 1.0}};
  EXPECT_THROW(class_norm_partial([](double) { return 1.0; }, overlap), InvalidArgument);
}
