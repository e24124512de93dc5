#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flreg/estimator.hpp"
#include "flreg/model_selection.hpp"

namespace flreg {

// Second-difference estimator of the observation-noise variance, averaged
// over curves: (1/n) sum_i (1/(6(p-2))) sum_j [W(t_{j-1}) - 2W(t_j) + W(t_{j+1})]^2.
double estimate_noise_variance(const Eigen::MatrixXd& w);

struct NoisyFitReport {
  double sigma_delta_hat_sq = 0.0;
  double min_pivot = 0.0;  // smallest factorization pivot of the corrected matrix
  bool corrected = false;
  std::string warning;
  FittedModel model;
};

// Bias-corrected fit on noisy curves: the empirical second-moment matrix is
// debiased by sigma_delta_hat_sq/p before adding the penalty. Falls back to
// the uncorrected fit (with a warning) if the corrected matrix is not
// positive definite.
NoisyFitReport fit_corrected(const FunctionalSample& sample_w, const PenaltyOperator& op,
                             double rho, std::optional<double> sigma_override = {});

// GCV with the debiased inner matrix; the smoother still applies Wc outside.
std::pair<double, double> gcv_score_corrected(const CenteredDesign& design_w,
                                              const PenaltyOperator& op, double rho,
                                              double sigma_delta_sq);

GCVResult select_rho_corrected(const CenteredDesign& design_w, const PenaltyOperator& op,
                               double sigma_delta_sq, const std::vector<double>& rho_grid);
GCVResult select_rho_corrected(const CenteredDesign& design_w, const PenaltyOperator& op,
                               double sigma_delta_sq);

}  // namespace flreg
