#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "flreg/grid.hpp"
#include "flreg/spline_basis.hpp"

namespace flreg {

// n discretized curves on a common grid plus scalar responses.
struct FunctionalSample {
  Grid grid;
  Eigen::MatrixXd x;  // n x p, x(i,j) = X_i(t_j)
  Eigen::VectorXd y;  // length n

  int n() const { return static_cast<int>(x.rows()); }
  void validate() const;
};

struct CenteredDesign {
  Eigen::MatrixXd xc;  // n x p, column-centered
  Eigen::VectorXd yc;  // length n, mean-centered
  Eigen::VectorXd x_mean;
  double y_mean = 0.0;

  int n() const { return static_cast<int>(xc.rows()); }
  int p() const { return static_cast<int>(xc.cols()); }
};

CenteredDesign center(const FunctionalSample& sample);

struct FittedModel {
  Eigen::VectorXd alpha_hat;  // slope values at the grid points
  SplineFunction spline;      // off-grid representation of alpha_hat
  double alpha0_hat = 0.0;
  int m = 0;
  double rho = 0.0;
  Eigen::VectorXd x_mean;
  double y_mean = 0.0;
  double sigma_eps_hat_sq = 0.0;
  bool degenerate_design = false;  // all curves identical; slope is vacuous
};

// Shared eigenstructure for the ridge path: A_m = LL', the inner matrix
// (1/(np)) Xc'Xc - (sigma_delta_sq/p) I is whitened to S = U diag(s) U',
// after which every rho costs O(p^2). sigma_delta_sq = 0 gives the plain
// estimator; a positive value gives the errors-in-variables correction.
class WhitenedSystem {
 public:
  WhitenedSystem(const CenteredDesign& design, const PenaltyOperator& op,
                 double sigma_delta_sq = 0.0);

  // alpha(rho) = (1/n) (inner + rho A_m)^{-1} Xc'Yc.
  Eigen::VectorXd alpha(double rho) const;
  // Tr(H_rho) for the smoother H_rho = (1/(np)) Xc M^{-1} Xc'.
  double trace_hat(double rho) const;
  // Smallest eigenvalue of the whitened inner matrix; inner + rho A_m is
  // positive definite iff min_eigenvalue() + rho > 0.
  double min_eigenvalue() const { return eigenvalues_.minCoeff(); }
  double max_eigenvalue() const { return eigenvalues_.maxCoeff(); }
  double sigma_delta_sq() const { return sigma_delta_sq_; }
  int n() const { return n_; }
  int p() const { return p_; }

 private:
  int n_, p_;
  double sigma_delta_sq_;
  const Eigen::LLT<Eigen::MatrixXd>* llt_;
  Eigen::MatrixXd eigvecs_;       // U
  Eigen::VectorXd eigenvalues_;   // s
  Eigen::VectorXd rhs_;           // U' L^{-1} Xc'Yc / n
  Eigen::VectorXd kdiag_;         // diag(U' L^{-1}L^{-T} U), corrected case only
};

FittedModel fit(const FunctionalSample& sample, const PenaltyOperator& op, double rho);

// Intercept, spline representation and residual variance around a solved
// coefficient vector.
FittedModel assemble_model(const CenteredDesign& design, const PenaltyOperator& op,
                           Eigen::VectorXd alpha_hat, double rho);

// Squared discretized empirical semi-norm: (1/p) u' ((1/(np)) Xc'Xc) u.
double seminorm_gamma_np_sq(const Eigen::VectorXd& u, const CenteredDesign& design);

// Squared empirical semi-norm (1/n) sum_i <X_i - Xbar, u>^2 with inner
// products taken by midpoint quadrature on the rows' grid.
double seminorm_gamma_n_sq(const Eigen::VectorXd& u_fine,
                           const Eigen::MatrixXd& centered_curves_fine);

// Squared population semi-norm sum_r lambda_r <zeta_r, u>^2 from a truncated
// spectrum given on a quadrature grid.
double seminorm_gamma_true_sq(
    const Eigen::VectorXd& u_fine,
    const std::vector<std::pair<double, Eigen::VectorXd>>& spectrum);

}  // namespace flreg
