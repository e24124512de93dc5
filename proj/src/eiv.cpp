#include "flreg/eiv.hpp"

#include <Eigen/Cholesky>

#include "flreg/errors.hpp"

namespace flreg {

double estimate_noise_variance(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  const Eigen::Index p = w.cols();
  if (n < 1) throw InvalidArgument("need at least one curve");
  if (p < 3)
    throw InsufficientGrid("second-difference noise estimate needs p >= 3, got p=" +
                           std::to_string(p));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 1; j + 1 < p; ++j) {
      const double d = w(i, j - 1) - 2.0 * w(i, j) + w(i, j + 1);
      acc += d * d;
    }
    total += acc / (6.0 * static_cast<double>(p - 2));
  }
  return total / static_cast<double>(n);
}

NoisyFitReport fit_corrected(const FunctionalSample& sample_w, const PenaltyOperator& op,
                             double rho, std::optional<double> sigma_override) {
  if (!(rho > 0)) throw InvalidArgument("smoothing parameter rho must be positive");
  if (!(sample_w.grid == op.grid)) throw InvalidArgument("sample and penalty grids differ");
  if (sigma_override && *sigma_override < 0)
    throw InvalidArgument("sigma_delta override must be nonnegative");

  NoisyFitReport report;
  // The estimator is defined on the raw observations, not the centered ones.
  report.sigma_delta_hat_sq =
      sigma_override ? *sigma_override : estimate_noise_variance(sample_w.x);

  CenteredDesign design = center(sample_w);
  WhitenedSystem system(design, op, report.sigma_delta_hat_sq);
  // Inertia of the corrected matrix is preserved by the whitening congruence;
  // the smallest whitened eigenvalue plus rho plays the role of the pivot.
  report.min_pivot = system.min_eigenvalue() + rho;
  if (!(report.min_pivot > 0)) {
    report.corrected = false;
    report.warning = "corrected matrix not positive definite (min pivot " +
                     std::to_string(report.min_pivot) + "); using the uncorrected fit";
    WhitenedSystem plain(design, op);
    report.model = assemble_model(design, op, plain.alpha(rho), rho);
    return report;
  }

  report.corrected = true;
  report.model = assemble_model(design, op, system.alpha(rho), rho);
  return report;
}

std::pair<double, double> gcv_score_corrected(const CenteredDesign& design_w,
                                              const PenaltyOperator& op, double rho,
                                              double sigma_delta_sq) {
  if (sigma_delta_sq < 0) throw InvalidArgument("sigma_delta_sq must be nonnegative");
  WhitenedSystem system(design_w, op, sigma_delta_sq);
  return detail::gcv_at(system, design_w, rho);
}

GCVResult select_rho_corrected(const CenteredDesign& design_w, const PenaltyOperator& op,
                               double sigma_delta_sq, const std::vector<double>& rho_grid) {
  WhitenedSystem system(design_w, op, sigma_delta_sq);
  GCVResult result = detail::sweep_rho(system, design_w, rho_grid);
  result.best_m = op.m;
  return result;
}

GCVResult select_rho_corrected(const CenteredDesign& design_w, const PenaltyOperator& op,
                               double sigma_delta_sq) {
  WhitenedSystem system(design_w, op, sigma_delta_sq);
  GCVResult result = detail::sweep_rho(system, design_w, default_rho_grid(system));
  result.best_m = op.m;
  return result;
}

}  // namespace flreg
