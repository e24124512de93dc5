#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace flreg {

// Gauss-Legendre nodes and weights on [-1,1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int nodes);

// B-spline basis over a fully padded (clamped) knot vector.
// order = degree + 1; basis count = knots.size() - order.
class BSplineBasis {
 public:
  BSplineBasis(std::vector<double> knots, int order);

  int order() const { return order_; }
  int size() const { return static_cast<int>(knots_.size()) - order_; }
  const std::vector<double>& knots() const { return knots_; }

  // Index of the knot span containing t (clamped to the valid range).
  int find_span(double t) const;

  // Values and derivatives up to order `nders` of the `order()` basis
  // functions that may be nonzero at t. Row d holds the d-th derivative;
  // column j corresponds to basis index `first + j`.
  void eval(double t, int nders, Eigen::MatrixXd& ders, int& first) const;

  double value(const Eigen::VectorXd& coefs, double t) const;
  double derivative(const Eigen::VectorXd& coefs, double t, int der) const;

  // sites.size() x size() matrix of der-th derivatives of all basis functions.
  Eigen::MatrixXd collocation(const Eigen::VectorXd& sites, int der = 0) const;

  // Gram matrix of der-th derivatives over the knot span, assembled per
  // interval with a Gauss rule exact for the piecewise-polynomial integrand.
  Eigen::MatrixXd gram(int der) const;

 private:
  std::vector<double> knots_;
  int order_;
};

}  // namespace flreg
