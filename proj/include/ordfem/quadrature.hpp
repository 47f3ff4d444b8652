#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ordfem/core.hpp"

namespace ordfem {

inline double factorial_as_double(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

// Exact integral of lambda1^a lambda2^b lambda3^c lambda4^d over a tetrahedron
// of the given volume: 6V * a!b!c!d! / (a+b+c+d+3)!.
inline double integrate_barycentric_monomial(int a, int b, int c, int d, double volume) {
  if (a < 0 || b < 0 || c < 0 || d < 0)
    throw std::invalid_argument("integrate_barycentric_monomial: negative exponent");
  double num = factorial_as_double(a) * factorial_as_double(b) * factorial_as_double(c) *
               factorial_as_double(d);
  return 6.0 * volume * num / factorial_as_double(a + b + c + d + 3);
}

// Triangle analogue: 2A * a!b!c! / (a+b+c+2)!.
inline double integrate_triangle_barycentric_monomial(int a, int b, int c, double area) {
  if (a < 0 || b < 0 || c < 0)
    throw std::invalid_argument("integrate_triangle_barycentric_monomial: negative exponent");
  double num = factorial_as_double(a) * factorial_as_double(b) * factorial_as_double(c);
  return 2.0 * area * num / factorial_as_double(a + b + c + 2);
}

struct Gauss1D {
  std::vector<double> points;   // in (0,1)
  std::vector<double> weights;  // for the weight function (1-t)^alpha on [0,1]
};

// Gauss rule on [0,1] with weight (1-t)^alpha, alpha a nonnegative integer,
// computed by Golub-Welsch on the monic Jacobi recurrence.
inline Gauss1D gauss_jacobi_01(int m, int alpha) {
  if (m < 1 || alpha < 0) throw std::invalid_argument("gauss_jacobi_01: bad arguments");
  const double a = alpha, b = 0.0;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    double ak;
    if (k == 0)
      ak = (b - a) / (a + b + 2.0);
    else
      ak = (b * b - a * a) / ((2 * k + a + b) * (2 * k + a + b + 2.0));
    J(k, k) = ak;
    if (k + 1 < m) {
      double bk;
      if (k == 0)
        bk = 4.0 * (1 + a) * (1 + b) / ((2 + a + b) * (2 + a + b) * (3 + a + b));
      else {
        double s = 2.0 * (k + 1) + a + b;
        bk = 4.0 * (k + 1) * (k + 1 + a) * (k + 1 + b) * (k + 1 + a + b) /
             (s * s * (s + 1.0) * (s - 1.0));
      }
      J(k, k + 1) = J(k + 1, k) = std::sqrt(bk);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) /
                     std::tgamma(a + b + 2.0);
  Gauss1D g;
  g.points.resize(m);
  g.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double x = es.eigenvalues()[i];  // node on [-1,1]
    double w = mu0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    g.points[i] = 0.5 * (1.0 + x);
    g.weights[i] = w / std::pow(2.0, a + 1.0);
  }
  return g;
}

inline Gauss1D gauss_legendre_01(int m) { return gauss_jacobi_01(m, 0); }

// Two-point Gauss rule on [0,1], exact for cubics; used for edge moments.
inline Gauss1D edge_moment_rule() {
  Gauss1D g;
  const double s = 0.5 / std::sqrt(3.0);
  g.points = {0.5 - s, 0.5 + s};
  g.weights = {0.5, 0.5};
  return g;
}

struct TriangleRule {
  std::vector<std::array<double, 3>> points;  // barycentric
  std::vector<double> weights;                // sum to 1; scale by area
};

// Four-point symmetric rule, exact for cubics; used for face moments.
inline TriangleRule triangle_moment_rule() {
  TriangleRule r;
  r.points = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
              {0.6, 0.2, 0.2},
              {0.2, 0.6, 0.2},
              {0.2, 0.2, 0.6}};
  r.weights = {-27.0 / 48, 25.0 / 48, 25.0 / 48, 25.0 / 48};
  return r;
}

struct QuadratureRule {
  std::vector<std::array<double, 4>> points;  // barycentric on the reference tet
  std::vector<double> weights;                // sum to 1/6 (reference volume)
  int degree = 0;
};

namespace detail {

inline void validate_rule(const QuadratureRule& rule) {
  const double vref = 1.0 / 6.0;
  for (int a = 0; a + 0 <= rule.degree; ++a)
    for (int b = 0; a + b <= rule.degree; ++b)
      for (int c = 0; a + b + c <= rule.degree; ++c)
        for (int d = 0; a + b + c + d <= rule.degree; ++d) {
          double num = 0.0;
          for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& p = rule.points[q];
            num += rule.weights[q] * std::pow(p[0], a) * std::pow(p[1], b) *
                   std::pow(p[2], c) * std::pow(p[3], d);
          }
          double ex = integrate_barycentric_monomial(a, b, c, d, vref);
          if (std::abs(num - ex) > 1e-13 * std::max(1.0, std::abs(ex)))
            throw std::logic_error("quadrature_rule: monomial validation failed");
        }
}

}  // namespace detail

inline QuadratureRule quadrature_rule(int degree) {
  if (degree < 1 || degree > 12)
    throw std::invalid_argument("quadrature_rule: degree must be in [1,12]");
  QuadratureRule rule;
  rule.degree = degree;
  if (degree == 1) {
    rule.points = {{0.25, 0.25, 0.25, 0.25}};
    rule.weights = {1.0 / 6.0};
  } else if (degree == 2) {
    const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
    const double b = (5.0 - std::sqrt(5.0)) / 20.0;
    rule.points = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
    rule.weights = {1.0 / 24, 1.0 / 24, 1.0 / 24, 1.0 / 24};
  } else {
    // conical product: x = xi, y = eta(1-xi), z = zeta(1-xi)(1-eta),
    // Jacobian (1-xi)^2 (1-eta) absorbed into Jacobi weights
    const int m = (degree + 2) / 2;
    Gauss1D gx = gauss_jacobi_01(m, 2);
    Gauss1D gy = gauss_jacobi_01(m, 1);
    Gauss1D gz = gauss_legendre_01(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          double xi = gx.points[i], eta = gy.points[j], zeta = gz.points[k];
          double x = xi, y = eta * (1 - xi), z = zeta * (1 - xi) * (1 - eta);
          rule.points.push_back({1.0 - x - y - z, x, y, z});
          rule.weights.push_back(gx.weights[i] * gy.weights[j] * gz.weights[k]);
        }
  }
  detail::validate_rule(rule);
  return rule;
}

}  // namespace ordfem
