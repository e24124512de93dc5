#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/Cholesky>
#include <memory>
#include <vector>

#include "flreg/bspline.hpp"
#include "flreg/grid.hpp"

namespace flreg {

// A natural spline of order 2m on [0,1], stored in the padded B-spline basis.
class SplineFunction {
 public:
  SplineFunction() = default;
  SplineFunction(std::shared_ptr<const BSplineBasis> basis, Eigen::VectorXd coefs)
      : basis_(std::move(basis)), coefs_(std::move(coefs)) {}

  double operator()(double t) const { return basis_->value(coefs_, t); }
  double derivative(double t, int der) const {
    return basis_->derivative(coefs_, t, der);
  }
  Eigen::VectorXd operator()(const Eigen::VectorXd& ts) const {
    Eigen::VectorXd out(ts.size());
    for (Eigen::Index i = 0; i < ts.size(); ++i) out[i] = (*this)(ts[i]);
    return out;
  }
  int order() const { return basis_->order(); }
  bool valid() const { return basis_ != nullptr; }

 private:
  std::shared_ptr<const BSplineBasis> basis_;
  Eigen::VectorXd coefs_;
};

// Basis of the p-dimensional natural spline space NS^m(t_1,...,t_p) on [0,1],
// built by recombining an order-2m B-spline basis against the 2m boundary
// derivative constraints. Valid for arbitrary strictly increasing sites in
// (0,1), not just the equidistant grid.
class NaturalSplineBasis {
 public:
  NaturalSplineBasis(Eigen::VectorXd sites, int m);

  int m() const { return m_; }
  int size() const { return static_cast<int>(sites_.size()); }
  const Eigen::VectorXd& sites() const { return sites_; }

  // p x p collocation matrix B with B(j,i) = b_i(t_j).
  const Eigen::MatrixXd& collocation() const { return bmat_; }
  // Condition estimate of B'B used by the refusal guard.
  double btb_condition() const { return cond_btb_; }

  // Natural spline interpolant through (t_j, w_j).
  SplineFunction interpolate(const Eigen::VectorXd& w) const;

 private:
  int m_;
  Eigen::VectorXd sites_;
  std::shared_ptr<const BSplineBasis> bspline_;
  Eigen::MatrixXd recomb_;  // columns span the null space of the constraints
  Eigen::MatrixXd bmat_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> bqr_;
  double cond_btb_ = 0.0;
};

// Per-(grid, m) penalty bundle from the discretized criterion.
//
// The energy matrix A_m* (w' A_m* w = integral of s_w^{(m)} squared) is
// assembled in its factored form p A_m* = F'F with F = p^{m+1/2} L^{-1} D,
// where D is the integer m-th difference stencil and L the Cholesky factor of
// the order-m B-spline Gram matrix on the same knots. The integer stencil
// keeps the polynomial null space exact in floating point, which the dense
// G-conjugation form of the same matrix does not.
struct PenaltyOperator {
  Grid grid;
  int m = 0;
  std::shared_ptr<const NaturalSplineBasis> basis;
  Eigen::MatrixXd proj_poly;     // P_m: projector onto discretized polynomials
  Eigen::MatrixXd star_factor;   // F, (p-m) x p, with p A_m* = F'F
  Eigen::MatrixXd penalty_star;  // A_m*
  Eigen::MatrixXd penalty;       // A_m = P_m + p A_m*
  Eigen::LLT<Eigen::MatrixXd> penalty_llt;
};

inline constexpr int kMaxOrder = 3;

PenaltyOperator build_penalty(const Grid& grid, int m);

// Natural spline interpolant through the grid values w.
SplineFunction interpolate(const PenaltyOperator& op, const Eigen::VectorXd& w);

// (1/p) w' A_m w: the roughness penalty of the discretized criterion.
double penalty_quadratic(const PenaltyOperator& op, const Eigen::VectorXd& w);

}  // namespace flreg
