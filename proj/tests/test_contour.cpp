#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hypinv/contour.hpp"
#include "oracles.hpp"

using namespace hypinv;
using std::numbers::pi;

TEST(Circle, ContainsAndDistance) {
  const Contour g = circle(Complex(1.0, -1.0), 2.0);
  EXPECT_TRUE(contains(g, Complex(1.0, -1.0)));
  EXPECT_TRUE(contains(g, Complex(2.9, -1.0)));
  EXPECT_FALSE(contains(g, Complex(3.1, -1.0)));
  EXPECT_EQ(winding_number(g, Complex(10.0, 0.0)), 0);
  EXPECT_NEAR(distance_to(g, Complex(4.0, 3.0)), 5.0 - 2.0, 1e-14);
  EXPECT_NEAR(distance_to(g, Complex(1.5, -1.0)), 1.5, 1e-14);
  EXPECT_TRUE(g.counterclockwise());
  EXPECT_NEAR(g.length(), 4.0 * pi, 1e-14);
  EXPECT_NEAR(g.signed_area(), 4.0 * pi, 1e-12);
}

TEST(Circle, PointOnCurveRaises) {
  const Contour g = circle(0.0, 1.0);
  EXPECT_THROW(contains(g, std::polar(1.0, 0.3)), OnCurve);
  EXPECT_THROW(circle(0.0, 0.0), InvalidArgument);
}

TEST(Rectangle, LayoutAndOrientation) {
  const Contour g = rectangle_contour(0.5, 2.0);
  ASSERT_EQ(g.segments().size(), 4u);
  const auto& s0 = std::get<LineSegment>(g.segments()[0]);
  EXPECT_EQ(s0.start, Complex(0.5, -3.0));
  EXPECT_EQ(s0.end, Complex(0.5, 3.0));
  EXPECT_TRUE(g.counterclockwise());
  EXPECT_NEAR(g.signed_area(), 18.0, 1e-12);
  EXPECT_TRUE(contains(g, Complex(-1.0, 0.0)));
  EXPECT_FALSE(contains(g, Complex(1.0, 0.0)));
  EXPECT_NEAR(distance_to(g, Complex(1.0, 0.0)), 0.5, 1e-14);
  EXPECT_NEAR(distance_to(g, Complex(1.5, 4.0)), std::hypot(1.0, 1.0), 1e-14);
}

TEST(Polygon, WindingAgreesWithRayCrossing) {
  const std::vector<Complex> v{{0, 0}, {3, 0}, {3, 2}, {1.5, 0.8}, {0, 2}};
  const Contour g = polygon(v);
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> ux(-1.0, 4.0), uy(-1.0, 3.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const Complex w(ux(gen), uy(gen));
    if (distance_to(g, w) < 1e-9) continue;
    EXPECT_EQ(contains(g, w), oracle::ray_inside(v, w)) << w;
    ++checked;
  }
  EXPECT_GT(checked, 1900);
}

TEST(Polygon, ClockwiseHasWindingMinusOne) {
  const Contour g = polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_FALSE(g.counterclockwise());
  EXPECT_EQ(winding_number(g, Complex(0.5, 0.5)), -1);
  EXPECT_FALSE(contains(g, Complex(0.5, 0.5)));
}

TEST(Contour, RejectsBrokenChain) {
  EXPECT_THROW(Contour({LineSegment{0.0, 1.0}, LineSegment{Complex(1, 1), 0.0}}), InvalidArgument);
}

TEST(Arc, PartialArcsChainIntoAClosedCurve) {
  // Half disk: upper semicircle plus the diameter.
  const Contour g({CircleArc{0.0, 1.0, 0.0, pi}, LineSegment{-1.0, 1.0}});
  EXPECT_TRUE(contains(g, Complex(0.0, 0.5)));
  EXPECT_FALSE(contains(g, Complex(0.0, -0.5)));
  EXPECT_NEAR(g.signed_area(), pi / 2.0, 1e-12);
  // \oint dz / (z - w) = 2 pi i for w inside; trapezoid on an open arc is
  // second order.
  const Complex w(0.1, 0.4);
  const auto err = [&](std::size_t n) {
    const Complex v = quadrature(g, n).integrate([&](Complex z) { return 1.0 / (z - w); });
    return std::abs(v - Complex(0.0, 2.0 * pi));
  };
  const double e64 = err(64), e128 = err(128);
  EXPECT_LT(e128, 1e-3);
  EXPECT_GT(e64 / e128, 3.5);
}

TEST(GaussLegendre, ThreePointRuleByHand) {
  const GaussLegendre r = gauss_legendre(3);
  EXPECT_NEAR(r.nodes[0], -std::sqrt(0.6), 1e-15);
  EXPECT_NEAR(r.nodes[1], 0.0, 1e-15);
  EXPECT_NEAR(r.nodes[2], std::sqrt(0.6), 1e-15);
  EXPECT_NEAR(r.weights[0], 5.0 / 9.0, 1e-15);
  EXPECT_NEAR(r.weights[1], 8.0 / 9.0, 1e-15);
}

TEST(GaussLegendre, ExactForPolynomialsOfDegreeBelow2n) {
  for (std::size_t n : {1u, 4u, 9u, 32u, 128u}) {
    const GaussLegendre r = gauss_legendre(n);
    for (std::size_t d = 0; d < 2 * n && d < 40; ++d) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += r.weights[j] * std::pow(r.nodes[j], static_cast<double>(d));
      const double exact = d % 2 ? 0.0 : 2.0 / static_cast<double>(d + 1);
      EXPECT_NEAR(acc, exact, 1e-13) << "n=" << n << " d=" << d;
    }
  }
}

TEST(Quadrature, CircleFirstNodeAndCauchyIntegrals) {
  const Contour g = circle(Complex(0.5, 0.0), 1.0);
  const QuadratureRule rule = quadrature(g, 32);
  ASSERT_EQ(rule.size(), 32u);
  EXPECT_NEAR(std::abs(rule.nodes[0] - Complex(1.5, 0.0)), 0.0, 1e-15);
  // Trapezoid aliasing: with q = |c| / r the N-point sum of 1/z is 2 pi i / (1 - q^N).
  const Complex one = rule.integrate([](Complex z) { return 1.0 / z; });
  EXPECT_NEAR(std::abs(one - Complex(0.0, 2.0 * pi / (1.0 - std::pow(0.5, 32)))), 0.0, 1e-13);
  for (int k = 0; k < 10; ++k) {
    const Complex zk = rule.integrate([&](Complex z) { return std::pow(z, k); });
    EXPECT_NEAR(std::abs(zk), 0.0, 1e-13);
  }
  double len = 0.0;
  for (const Complex& w : rule.weights) len += std::abs(w);
  EXPECT_NEAR(len, 2.0 * pi, 1e-13);
}

TEST(Quadrature, RectangleCauchyIntegralConverges) {
  const Contour g = rectangle_contour(1.0, 1.0);
  const Complex w(0.0, 0.3);
  const auto err = [&](std::size_t n) {
    const QuadratureRule rule = quadrature(g, n);
    EXPECT_EQ(rule.size(), 4 * n);
    return std::abs(rule.integrate([&](Complex z) { return 1.0 / (z - w); }) - Complex(0.0, 2.0 * pi));
  };
  const double e8 = err(8), e32 = err(32), e64 = err(64);
  EXPECT_GT(e8, 100.0 * e32);
  EXPECT_LT(e64, 1e-12);
  double len = 0.0;
  for (const Complex& x : quadrature(g, 16).weights) len += std::abs(x);
  EXPECT_NEAR(len, g.length(), 1e-12);
}
