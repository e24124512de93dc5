#include "flreg/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "flreg/errors.hpp"

namespace flreg {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

namespace {

// Acklam's rational approximation of the standard normal quantile.
double acklam_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw InvalidArgument("quantile probability must lie in (0,1)");
  double x = acklam_quantile(prob);
  // One Newton step against the erfc-based CDF.
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (density > 0) x -= (normal_cdf(x) - prob) / density;
  return x;
}

double predict(const FittedModel& model, const Eigen::VectorXd& x_new) {
  if (x_new.size() != model.alpha_hat.size())
    throw InvalidArgument("curve length " + std::to_string(x_new.size()) +
                          " does not match model grid " +
                          std::to_string(model.alpha_hat.size()));
  const double p = static_cast<double>(model.alpha_hat.size());
  return model.alpha0_hat + model.alpha_hat.dot(x_new) / p;
}

double predict_fine(const FittedModel& model, const Eigen::VectorXd& times,
                    const Eigen::VectorXd& values) {
  if (times.size() != values.size()) throw InvalidArgument("times/values length mismatch");
  NaturalSplineBasis curve_basis(times, model.m);
  SplineFunction curve = curve_basis.interpolate(values);

  // Union of breakpoints of both splines; the product is polynomial of degree
  // <= 4m-2 on each cell, so a 2m-point Gauss rule is exact.
  const int p = static_cast<int>(model.alpha_hat.size());
  Grid grid = build_grid(p);
  std::vector<double> cuts;
  cuts.reserve(p + times.size() + 2);
  cuts.push_back(0.0);
  for (int j = 0; j < p; ++j) cuts.push_back(grid.points[j]);
  for (Eigen::Index j = 0; j < times.size(); ++j) cuts.push_back(times[j]);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());

  auto [qx, qw] = gauss_legendre(2 * model.m);
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b), hal = 0.5 * (b - a);
    for (std::size_t q = 0; q < qx.size(); ++q) {
      const double t = mid + hal * qx[q];
      integral += hal * qw[q] * model.spline(t) * curve(t);
    }
  }
  return model.alpha0_hat + integral;
}

double residual_variance(const FittedModel& model, const FunctionalSample& sample) {
  sample.validate();
  if (sample.grid.p != model.alpha_hat.size())
    throw InvalidArgument("sample grid does not match model grid");
  const double p = sample.grid.p;
  const double ybar = sample.y.mean();
  const Eigen::VectorXd xbar = sample.x.colwise().mean();
  double acc = 0.0;
  for (int i = 0; i < sample.n(); ++i) {
    const double fitted =
        model.alpha_hat.dot(sample.x.row(i).transpose() - xbar) / p;
    const double r = sample.y[i] - ybar - fitted;
    acc += r * r;
  }
  return acc / sample.n();
}

PredictionInterval prediction_interval(double point, double sigma_eps, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0,1)");
  if (sigma_eps < 0) throw InvalidArgument("sigma_eps must be nonnegative");
  const double half = normal_quantile(1.0 - tau / 2.0) * sigma_eps;
  PredictionInterval out;
  out.point = point;
  out.lower = point - half;
  out.upper = point + half;
  out.level = 1.0 - tau;
  out.sigma_eps = sigma_eps;
  return out;
}

double eqm(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals) {
  if (predictions.size() != actuals.size())
    throw InvalidArgument("prediction/actual length mismatch");
  if (predictions.size() < 1) throw InvalidArgument("need at least one test point");
  return (predictions - actuals).squaredNorm() / predictions.size();
}

}  // namespace flreg
