#ifndef STGARCH_BSPLINE_HPP
#define STGARCH_BSPLINE_HPP

#include <vector>

#include <Eigen/Dense>

#include "stgarch/core.hpp"

namespace stgarch {

/// Clamped knot vector on [a, b] for n_coef basis functions of the given degree.
std::vector<double> make_clamped_knots(int n_coef, int degree, double a = 0.0, double b = 1.0);

/// Univariate B-spline basis over a clamped knot vector.
/// Basis functions are nonnegative and sum to one inside [knots.front(), knots.back()],
/// so spline values stay inside the convex hull of their coefficients.
class BSplineBasis {
 public:
  BSplineBasis(int degree, std::vector<double> knots);

  int degree() const { return degree_; }
  int size() const { return n_; }  // number of basis functions

  /// Values of all basis functions at x (dense; only degree+1 are nonzero).
  Eigen::VectorXd evaluate(double x) const;

 private:
  int find_span(double x) const;

  int degree_;
  int n_;
  std::vector<double> knots_;
};

/// Tensor-product spline surface on [0,1]^2 with a coefficient grid.
struct TensorSurface {
  int degree = 3;
  std::vector<double> knots_x;
  std::vector<double> knots_y;
  Eigen::MatrixXd coefficients;  // nx x ny

  double operator()(double x, double y) const;
  double operator()(const Location& s) const { return (*this)(s.x, s.y); }

  /// Uniform clamped surface with the given coefficient grid.
  static TensorSurface uniform(const Eigen::MatrixXd& coefficients, int degree = 3);
};

/// Smooth map location -> ParameterPoint: one coefficient grid per GARCH parameter.
struct ParameterSurface {
  GarchOrder order;
  TensorSurface omega;
  std::vector<TensorSurface> alpha;  // size q
  std::vector<TensorSurface> beta;   // size p

  ParameterPoint at(const Location& s) const;
};

}  // namespace stgarch

#endif
