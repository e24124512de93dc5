#pragma once

#include <Eigen/Core>

#include "flreg/estimator.hpp"

namespace flreg {

// Standard normal CDF (erfc-based) and quantile (rational approximation with
// one Newton refinement; absolute accuracy ~1e-9 in the open unit interval).
double normal_cdf(double x);
double normal_quantile(double prob);

// alpha0_hat + (1/p) sum_j alpha_hat(t_j) x_new(t_j) for a curve on the model grid.
double predict(const FittedModel& model, const Eigen::VectorXd& x_new);

// Prediction for a curve observed on a finer grid: the curve is interpolated
// by a natural spline on its own sites and the integral of alpha_hat * x is
// taken by Gauss-Legendre over the union of both splines' breakpoints.
double predict_fine(const FittedModel& model, const Eigen::VectorXd& times,
                    const Eigen::VectorXd& values);

// (1/n) sum_i (Y_i - Ybar - (1/p) sum_j alpha_hat(t_j)(X_i(t_j) - Xbar(t_j)))^2.
double residual_variance(const FittedModel& model, const FunctionalSample& sample);

struct PredictionInterval {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;  // 1 - tau
  double sigma_eps = 0.0;
};

PredictionInterval prediction_interval(double point, double sigma_eps, double tau);

// Mean squared prediction error on a test set.
double eqm(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals);

}  // namespace flreg
