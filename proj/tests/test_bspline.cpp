#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stgarch/bspline.hpp"

using namespace stgarch;

TEST_CASE("basis functions are nonnegative and sum to one") {
  BSplineBasis basis(3, make_clamped_knots(6, 3));
  for (double x : {0.0, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0}) {
    const Eigen::VectorXd v = basis.evaluate(x);
    REQUIRE(v.size() == 6);
    CHECK(v.minCoeff() >= 0.0);
    CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("constant coefficient grid gives a constant surface") {
  const TensorSurface surf = TensorSurface::uniform(Eigen::MatrixXd::Constant(4, 4, 0.37));
  for (double x : {0.0, 0.25, 0.6, 1.0}) {
    for (double y : {0.0, 0.4, 0.9, 1.0}) {
      CHECK(surf(x, y) == doctest::Approx(0.37).epsilon(1e-12));
    }
  }
}

TEST_CASE("surface values stay inside the coefficient convex hull") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.2, 0.8);
  Eigen::MatrixXd coefs(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) coefs(i, j) = unif(rng);
  }
  const TensorSurface surf = TensorSurface::uniform(coefs);
  std::uniform_real_distribution<double> loc(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double v = surf(loc(rng), loc(rng));
    CHECK(v >= coefs.minCoeff() - 1e-12);
    CHECK(v <= coefs.maxCoeff() + 1e-12);
  }
}

TEST_CASE("surface interpolates corner coefficients under clamped knots") {
  Eigen::MatrixXd coefs = Eigen::MatrixXd::Zero(4, 4);
  coefs(0, 0) = 1.0;
  coefs(3, 3) = 2.0;
  const TensorSurface surf = TensorSurface::uniform(coefs);
  CHECK(surf(0.0, 0.0) == doctest::Approx(1.0));
  CHECK(surf(1.0, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("dense-grid continuity: no jump beyond a Lipschitz bound") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd coefs(6, 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) coefs(i, j) = unif(rng);
  }
  const TensorSurface surf = TensorSurface::uniform(coefs);
  const int n = 400;
  const double h = 1.0 / n;
  // cubic spline derivative is bounded by degree * coefficient spread / knot gap
  const double lipschitz = 3.0 * (coefs.maxCoeff() - coefs.minCoeff()) / (1.0 / 3.0);
  double prev = surf(0.0, 0.5);
  for (int i = 1; i <= n; ++i) {
    const double v = surf(i * h, 0.5);
    CHECK(std::abs(v - prev) <= lipschitz * h * 1.5);
    prev = v;
  }
}

TEST_CASE("parameter surface evaluation assembles a full point") {
  ParameterSurface surface;
  surface.order = {1, 1};
  surface.omega = TensorSurface::uniform(Eigen::MatrixXd::Constant(4, 4, 0.1));
  surface.alpha = {TensorSurface::uniform(Eigen::MatrixXd::Constant(4, 4, 0.2))};
  surface.beta = {TensorSurface::uniform(Eigen::MatrixXd::Constant(4, 4, 0.5))};
  const ParameterPoint p = surface.at({0.3, 0.7});
  CHECK(p.omega == doctest::Approx(0.1));
  REQUIRE(p.alpha.size() == 1);
  REQUIRE(p.beta.size() == 1);
  CHECK(p.alpha[0] == doctest::Approx(0.2));
  CHECK(p.beta[0] == doctest::Approx(0.5));
}
