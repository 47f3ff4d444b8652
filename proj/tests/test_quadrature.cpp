#include <catch2/catch_amalgamated.hpp>

#include "ordfem/quadrature.hpp"

using namespace ordfem;

namespace {

// exact integral of lambda^a over the reference tetrahedron (volume 1/6):
// a! b! c! d! / (a+b+c+d+3)!
double exact_monomial(int a, int b, int c, int d) {
  auto fact = [](int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  return fact(a) * fact(b) * fact(c) * fact(d) / fact(a + b + c + d + 3);
}

double quad_monomial(const QuadratureRule& rule, int a, int b, int c, int d) {
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& l = rule.points[q];
    acc += rule.weights[q] * std::pow(l[0], a) * std::pow(l[1], b) * std::pow(l[2], c) *
           std::pow(l[3], d);
  }
  return acc;
}

}  // namespace

TEST_CASE("quadrature basics") {
  SECTION("degree 1 is the barycentre rule") {
    QuadratureRule r = quadrature_rule(1);
    REQUIRE(r.points.size() == 1);
    for (double l : r.points[0]) CHECK(l == Catch::Approx(0.25).epsilon(1e-15));
    CHECK(r.weights[0] == Catch::Approx(1.0 / 6.0).epsilon(1e-15));
  }

  SECTION("weights sum to the reference volume at every degree") {
    for (int d = 1; d <= 12; ++d) {
      QuadratureRule r = quadrature_rule(d);
      double s = 0.0;
      for (double w : r.weights) s += w;
      REQUIRE(s == Catch::Approx(1.0 / 6.0).epsilon(1e-13));
    }
  }

  SECTION("degree bounds are enforced") {
    CHECK_THROWS_AS(quadrature_rule(0), std::invalid_argument);
    CHECK_THROWS_AS(quadrature_rule(13), std::invalid_argument);
  }
}

TEST_CASE("quadrature integrates barycentric monomials exactly") {
  // spot values from the factorial formula
  CHECK(exact_monomial(1, 0, 0, 0) == Catch::Approx(1.0 / 24.0).epsilon(1e-15));
  CHECK(exact_monomial(1, 1, 0, 0) == Catch::Approx(1.0 / 120.0).epsilon(1e-15));
  CHECK(exact_monomial(1, 1, 1, 1) == Catch::Approx(1.0 / (6.0 * 840.0)).epsilon(1e-15));
  CHECK(exact_monomial(0, 0, 0, 0) == Catch::Approx(1.0 / 6.0).epsilon(1e-15));

  for (int deg = 1; deg <= 12; ++deg) {
    QuadratureRule r = quadrature_rule(deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b)
        for (int c = 0; a + b + c <= deg; ++c)
          for (int d = 0; a + b + c + d <= deg; ++d) {
            const double want = exact_monomial(a, b, c, d);
            const double got = quad_monomial(r, a, b, c, d);
            REQUIRE_THAT(got, Catch::Matchers::WithinRel(want, 1e-12) ||
                                  Catch::Matchers::WithinAbs(want, 1e-16));
          }
  }
}
