#include "flreg/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "flreg/errors.hpp"

namespace flreg {

void FunctionalSample::validate() const {
  if (x.rows() < 2) throw InvalidArgument("need at least two curves");
  if (x.cols() != grid.p) throw InvalidArgument("curve columns do not match grid size");
  if (y.size() != x.rows()) throw InvalidArgument("response length does not match curve count");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("sample contains non-finite values");
}

CenteredDesign center(const FunctionalSample& sample) {
  sample.validate();
  CenteredDesign d;
  d.x_mean = sample.x.colwise().mean();
  d.y_mean = sample.y.mean();
  d.xc = sample.x.rowwise() - d.x_mean.transpose();
  d.yc = sample.y.array() - d.y_mean;
  return d;
}

WhitenedSystem::WhitenedSystem(const CenteredDesign& design, const PenaltyOperator& op,
                               double sigma_delta_sq)
    : n_(design.n()), p_(design.p()), sigma_delta_sq_(sigma_delta_sq),
      llt_(&op.penalty_llt) {
  if (p_ != op.grid.p) throw InvalidArgument("design and penalty grids differ");
  if (sigma_delta_sq_ < 0) throw InvalidArgument("noise variance must be nonnegative");

  Eigen::MatrixXd inner =
      design.xc.transpose() * design.xc / (static_cast<double>(n_) * p_);
  if (sigma_delta_sq_ > 0)
    inner.diagonal().array() -= sigma_delta_sq_ / p_;

  const auto lower = llt_->matrixL();
  Eigen::MatrixXd half = lower.solve(inner);                    // L^{-1} inner
  Eigen::MatrixXd white = lower.solve(half.transpose());        // L^{-1} inner L^{-T}
  white = 0.5 * (white + white.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(white);
  if (eig.info() != Eigen::Success)
    throw ConditioningError("eigendecomposition of whitened design failed", 0.0);
  eigvecs_ = eig.eigenvectors();
  eigenvalues_ = eig.eigenvalues();

  Eigen::VectorXd xty = design.xc.transpose() * design.yc;
  rhs_ = eigvecs_.transpose() * lower.solve(xty) / n_;

  if (sigma_delta_sq_ > 0) {
    Eigen::MatrixXd linv = lower.solve(Eigen::MatrixXd::Identity(p_, p_));
    Eigen::MatrixXd ku = (linv * linv.transpose()) * eigvecs_;
    kdiag_ = (eigvecs_.array() * ku.array()).colwise().sum().transpose();
  }
}

Eigen::VectorXd WhitenedSystem::alpha(double rho) const {
  if (!(rho > 0)) throw InvalidArgument("smoothing parameter rho must be positive");
  const double min_pivot = eigenvalues_.minCoeff() + rho;
  if (!(min_pivot > 0))
    throw ConditioningError("penalized system is not positive definite", min_pivot);
  Eigen::VectorXd z = rhs_.array() / (eigenvalues_.array() + rho);
  return llt_->matrixL().transpose().solve(eigvecs_ * z);
}

double WhitenedSystem::trace_hat(double rho) const {
  double tr = (eigenvalues_.array() / (eigenvalues_.array() + rho)).sum();
  if (sigma_delta_sq_ > 0)
    tr += (sigma_delta_sq_ / p_) *
          (kdiag_.array() / (eigenvalues_.array() + rho)).sum();
  return tr;
}

FittedModel assemble_model(const CenteredDesign& design, const PenaltyOperator& op,
                           Eigen::VectorXd alpha_hat, double rho) {
  FittedModel model;
  model.alpha_hat = std::move(alpha_hat);
  model.m = op.m;
  model.rho = rho;
  model.x_mean = design.x_mean;
  model.y_mean = design.y_mean;
  model.alpha0_hat = design.y_mean - model.alpha_hat.dot(design.x_mean) / op.grid.p;
  model.spline = op.basis->interpolate(model.alpha_hat);
  model.degenerate_design = design.xc.lpNorm<Eigen::Infinity>() == 0.0;
  Eigen::VectorXd resid = design.yc - design.xc * model.alpha_hat / op.grid.p;
  model.sigma_eps_hat_sq = resid.squaredNorm() / design.n();
  return model;
}

FittedModel fit(const FunctionalSample& sample, const PenaltyOperator& op, double rho) {
  if (!(rho > 0)) throw InvalidArgument("smoothing parameter rho must be positive");
  if (!(sample.grid == op.grid)) throw InvalidArgument("sample and penalty grids differ");
  CenteredDesign design = center(sample);
  WhitenedSystem system(design, op);
  return assemble_model(design, op, system.alpha(rho), rho);
}

double seminorm_gamma_np_sq(const Eigen::VectorXd& u, const CenteredDesign& design) {
  if (u.size() != design.p()) throw InvalidArgument("vector length does not match design");
  const double p = design.p();
  return (design.xc * u).squaredNorm() / (design.n() * p * p);
}

double seminorm_gamma_n_sq(const Eigen::VectorXd& u_fine,
                           const Eigen::MatrixXd& centered_curves_fine) {
  if (u_fine.size() != centered_curves_fine.cols())
    throw InvalidArgument("vector length does not match curve grid");
  const double pf = static_cast<double>(u_fine.size());
  return (centered_curves_fine * u_fine).squaredNorm() /
         (centered_curves_fine.rows() * pf * pf);
}

double seminorm_gamma_true_sq(
    const Eigen::VectorXd& u_fine,
    const std::vector<std::pair<double, Eigen::VectorXd>>& spectrum) {
  const double pf = static_cast<double>(u_fine.size());
  double out = 0.0;
  for (const auto& [lambda, zeta] : spectrum) {
    if (lambda < 0) throw InvalidArgument("covariance eigenvalues must be nonnegative");
    if (zeta.size() != u_fine.size())
      throw InvalidArgument("eigenfunction grid does not match vector length");
    const double ip = zeta.dot(u_fine) / pf;
    out += lambda * ip * ip;
  }
  return out;
}

}  // namespace flreg
