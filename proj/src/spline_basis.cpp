#include "flreg/spline_basis.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "flreg/errors.hpp"

namespace flreg {

namespace {

std::vector<double> padded_knots(const Eigen::VectorXd& sites, int order) {
  std::vector<double> knots;
  knots.reserve(sites.size() + 2 * order);
  for (int i = 0; i < order; ++i) knots.push_back(0.0);
  for (Eigen::Index i = 0; i < sites.size(); ++i) knots.push_back(sites[i]);
  for (int i = 0; i < order; ++i) knots.push_back(1.0);
  return knots;
}

}  // namespace

NaturalSplineBasis::NaturalSplineBasis(Eigen::VectorXd sites, int m)
    : m_(m), sites_(std::move(sites)) {
  if (m_ < 1 || m_ > kMaxOrder)
    throw UnsupportedOrder("spline smoothness order must be in 1.." +
                           std::to_string(kMaxOrder) + ", got " + std::to_string(m_));
  const int p = static_cast<int>(sites_.size());
  if (p < 1) throw InvalidArgument("natural spline needs at least one site");
  for (int j = 0; j < p; ++j) {
    if (!(sites_[j] > 0.0 && sites_[j] < 1.0))
      throw InvalidArgument("spline sites must lie in (0,1)");
    if (j > 0 && !(sites_[j] > sites_[j - 1]))
      throw InvalidInput("spline sites must be strictly increasing");
  }

  const int order = 2 * m_;
  bspline_ = std::make_shared<BSplineBasis>(padded_knots(sites_, order), order);
  const int nb = bspline_->size();  // p + 2m

  // Natural boundary constraints: derivatives of order m..2m-1 vanish at both
  // ends, forcing polynomial pieces of degree < m outside [t_1, t_p].
  Eigen::MatrixXd constraints(2 * m_, nb);
  Eigen::VectorXd ends(2);
  ends << 0.0, 1.0;
  int row = 0;
  for (int der = m_; der < order; ++der) {
    Eigen::MatrixXd c = bspline_->collocation(ends, der);
    constraints.row(row++) = c.row(0);
    constraints.row(row++) = c.row(1);
  }
  for (int r = 0; r < constraints.rows(); ++r) {
    const double norm = constraints.row(r).norm();
    if (norm > 0) constraints.row(r) /= norm;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
  if (svd.rank() != 2 * m_)
    throw ConditioningError("boundary constraint matrix is rank deficient",
                            svd.singularValues().minCoeff());
  recomb_ = svd.matrixV().rightCols(nb - 2 * m_);  // nb - 2m = p columns

  bmat_ = bspline_->collocation(sites_) * recomb_;
  bqr_.compute(bmat_);
  const Eigen::VectorXd rdiag = bqr_.matrixR().diagonal().cwiseAbs();
  const double rmin = rdiag.minCoeff();
  const double cond_b = rmin > 0 ? rdiag.maxCoeff() / rmin
                                 : std::numeric_limits<double>::infinity();
  cond_btb_ = cond_b * cond_b;
  if (!(cond_btb_ < 1e12))
    throw ConditioningError("interpolation system B'B too ill-conditioned", cond_btb_);
}

SplineFunction NaturalSplineBasis::interpolate(const Eigen::VectorXd& w) const {
  if (w.size() != size())
    throw InvalidArgument("value vector length " + std::to_string(w.size()) +
                          " does not match " + std::to_string(size()) + " sites");
  Eigen::VectorXd coefs = recomb_ * bqr_.solve(w);
  return SplineFunction(bspline_, std::move(coefs));
}

namespace {

// p A_m* in factored form F'F. The interpolant's m-th derivative expands in
// the order-m B-splines M_i (normalized to unit integral) supported inside
// [t_1, t_p]; the Peano identity [t_i..t_{i+m}]w = (1/m!) int M_i s_w^{(m)}
// turns the energy into h^{-2m} (D w)' R^{-1} (D w) with R_ij = int M_i M_j
// and D the integer m-th difference stencil.
Eigen::MatrixXd penalty_star_factor(const Grid& grid, int m) {
  const int p = grid.p;
  BSplineBasis low_order(padded_knots(grid.points, m), m);
  Eigen::MatrixXd gram_full = low_order.gram(0);

  Eigen::MatrixXd r(p - m, p - m);
  Eigen::VectorXd scale(p - m);
  const auto& knots = low_order.knots();
  for (int i = 0; i < p - m; ++i)
    scale[i] = m / (knots[m + i + m] - knots[m + i]);  // unit-integral normalization
  for (int i = 0; i < p - m; ++i)
    for (int j = 0; j < p - m; ++j)
      r(i, j) = scale[i] * scale[j] * gram_full(m + i, m + j);
  r = 0.5 * (r + r.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("order-m B-spline Gram matrix is not positive definite",
                            r.diagonal().minCoeff());

  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(p - m, p);
  double binom = 1.0;
  std::vector<double> stencil(m + 1);
  for (int k = 0; k <= m; ++k) {
    stencil[k] = ((m - k) % 2 == 0 ? binom : -binom);
    binom = binom * (m - k) / (k + 1);
  }
  for (int i = 0; i < p - m; ++i)
    for (int k = 0; k <= m; ++k) diff(i, i + k) = stencil[k];

  // F = p^{m + 1/2} L^{-1} D, using the exact spacing h = 1/p.
  return std::pow(static_cast<double>(p), m + 0.5) *
         llt.matrixL().solve(diff);
}

}  // namespace

PenaltyOperator build_penalty(const Grid& grid, int m) {
  if (m < 1 || m > kMaxOrder)
    throw UnsupportedOrder("penalty order must be in 1.." + std::to_string(kMaxOrder) +
                           ", got " + std::to_string(m));
  if (grid.p < 2 * m)
    throw UnderdeterminedBasis("need p >= 2m grid points for order-" +
                               std::to_string(2 * m) + " natural splines, got p=" +
                               std::to_string(grid.p));

  PenaltyOperator op;
  op.grid = grid;
  op.m = m;
  op.basis = std::make_shared<NaturalSplineBasis>(grid.points, m);
  op.star_factor = penalty_star_factor(grid, m);
  op.penalty_star = op.star_factor.transpose() * op.star_factor / grid.p;
  op.penalty_star = 0.5 * (op.penalty_star + op.penalty_star.transpose()).eval();

  // P_m from a QR of the Vandermonde matrix in the shifted variable t - 1/2.
  const int p = grid.p;
  Eigen::MatrixXd vander(p, m);
  for (int j = 0; j < p; ++j) {
    double v = 1.0;
    for (int l = 0; l < m; ++l) {
      vander(j, l) = v;
      v *= grid.points[j] - 0.5;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(vander);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, m);
  op.proj_poly = q * q.transpose();
  op.proj_poly = 0.5 * (op.proj_poly + op.proj_poly.transpose()).eval();

  op.penalty = op.proj_poly + static_cast<double>(p) * op.penalty_star;
  op.penalty = 0.5 * (op.penalty + op.penalty.transpose()).eval();
  op.penalty_llt.compute(op.penalty);
  if (op.penalty_llt.info() != Eigen::Success)
    throw ConditioningError("penalty matrix A_m is not positive definite",
                            op.penalty.diagonal().minCoeff());
  return op;
}

SplineFunction interpolate(const PenaltyOperator& op, const Eigen::VectorXd& w) {
  return op.basis->interpolate(w);
}

double penalty_quadratic(const PenaltyOperator& op, const Eigen::VectorXd& w) {
  if (w.size() != op.grid.p) throw InvalidArgument("value vector length mismatch");
  return w.dot(op.penalty * w) / op.grid.p;
}

}  // namespace flreg
