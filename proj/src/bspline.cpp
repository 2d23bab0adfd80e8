#include "stgarch/bspline.hpp"

#include <algorithm>
#include <stdexcept>

namespace stgarch {

std::vector<double> make_clamped_knots(int n_coef, int degree, double a, double b) {
  if (n_coef < degree + 1) throw std::invalid_argument("make_clamped_knots: too few coefficients");
  const int n_knots = n_coef + degree + 1;
  const int n_interior = n_coef - degree - 1;
  std::vector<double> knots(static_cast<std::size_t>(n_knots));
  for (int i = 0; i <= degree; ++i) {
    knots[static_cast<std::size_t>(i)] = a;
    knots[static_cast<std::size_t>(n_knots - 1 - i)] = b;
  }
  for (int i = 1; i <= n_interior; ++i) {
    knots[static_cast<std::size_t>(degree + i)] =
        a + (b - a) * static_cast<double>(i) / static_cast<double>(n_interior + 1);
  }
  return knots;
}

BSplineBasis::BSplineBasis(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  n_ = static_cast<int>(knots_.size()) - degree_ - 1;
  if (degree_ < 0 || n_ < degree_ + 1) throw std::invalid_argument("BSplineBasis: bad knot vector");
}

int BSplineBasis::find_span(double x) const {
  const int lo = degree_;
  const int hi = n_;  // last valid span is [knots_[n_-1], knots_[n_])
  if (x >= knots_[static_cast<std::size_t>(hi)]) return n_ - 1;
  if (x <= knots_[static_cast<std::size_t>(lo)]) return degree_;
  auto it = std::upper_bound(knots_.begin() + lo, knots_.begin() + hi, x);
  return static_cast<int>(it - knots_.begin()) - 1;
}

Eigen::VectorXd BSplineBasis::evaluate(double x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  const int span = find_span(x);

  // Cox-de Boor triangle for the degree+1 active functions.
  std::vector<double> N(static_cast<std::size_t>(degree_ + 1), 0.0);
  std::vector<double> left(static_cast<std::size_t>(degree_ + 1), 0.0);
  std::vector<double> right(static_cast<std::size_t>(degree_ + 1), 0.0);
  N[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = denom != 0.0 ? N[static_cast<std::size_t>(r)] / denom : 0.0;
      N[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    N[static_cast<std::size_t>(j)] = saved;
  }
  for (int j = 0; j <= degree_; ++j) {
    out[span - degree_ + j] = N[static_cast<std::size_t>(j)];
  }
  return out;
}

double TensorSurface::operator()(double x, double y) const {
  BSplineBasis bx(degree, knots_x);
  BSplineBasis by(degree, knots_y);
  if (bx.size() != coefficients.rows() || by.size() != coefficients.cols()) {
    throw std::invalid_argument("TensorSurface: coefficient grid does not match knots");
  }
  const Eigen::VectorXd vx = bx.evaluate(x);
  const Eigen::VectorXd vy = by.evaluate(y);
  return vx.dot(coefficients * vy);
}

TensorSurface TensorSurface::uniform(const Eigen::MatrixXd& coefficients, int degree) {
  TensorSurface s;
  s.degree = degree;
  s.knots_x = make_clamped_knots(static_cast<int>(coefficients.rows()), degree);
  s.knots_y = make_clamped_knots(static_cast<int>(coefficients.cols()), degree);
  s.coefficients = coefficients;
  return s;
}

ParameterPoint ParameterSurface::at(const Location& s) const {
  ParameterPoint point;
  point.omega = omega(s);
  point.alpha.reserve(alpha.size());
  for (const auto& a : alpha) point.alpha.push_back(a(s));
  point.beta.reserve(beta.size());
  for (const auto& b : beta) point.beta.push_back(b(s));
  return point;
}

}  // namespace stgarch
