#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "flreg/estimator.hpp"
#include "flreg/grid.hpp"

namespace flreg {

enum class ProcessKind { brownian, fourier_kl };

// Gaussian process generator with a known covariance spectrum. For
// fourier_kl the eigenvalues are lambda_r = r^{-(2q+1)} with the orthonormal
// sqrt(2) sin/cos Fourier family; brownian is standard Brownian motion
// (tail decay exponent q = 1/2).
struct ProcessSpec {
  ProcessKind kind = ProcessKind::brownian;
  double q = 1.0;      // eigendecay exponent, fourier_kl only
  int modes = 200;     // truncation count R
  std::uint64_t seed = 0;
};

// One realization of n curves, sampled jointly on the working grid and on a
// refined midpoint grid so that quadrature against the latent curves is
// available without re-simulation.
struct CurveSet {
  Grid grid;
  Eigen::MatrixXd x;       // n x p
  Grid fine_grid;
  Eigen::MatrixXd x_fine;  // n x (refine*p)
};

// Deterministic stream split for reproducible parallel simulation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

CurveSet generate_curves(const ProcessSpec& spec, int n, const Grid& grid,
                         int refine = 10);

// Y_i = alpha0 + (midpoint quadrature of alpha * X_i on the curves' grid) + eps_i.
Eigen::VectorXd generate_responses(const Eigen::MatrixXd& curves, const Grid& grid,
                                   const std::function<double(double)>& alpha_true,
                                   double alpha0, double sigma_eps, std::uint64_t seed);

Eigen::MatrixXd add_observation_noise(const Eigen::MatrixXd& curves, double sigma_delta,
                                      std::uint64_t seed);

// Leading (lambda_r, zeta_r) eigenpairs evaluated on a quadrature grid.
std::vector<std::pair<double, Eigen::VectorXd>> process_spectrum(const ProcessSpec& spec,
                                                                 const Grid& grid,
                                                                 int modes);

// Tail-decay exponent entering the theoretical rate.
double process_decay_q(const ProcessSpec& spec);

// -(2m+2q+1)/(2m+2q+2), the minimax exponent of the squared prediction error.
double theoretical_exponent(int m, double q);

// Default slope function: smooth, nonzero across the generator's Fourier modes.
double default_alpha(double t);
inline constexpr double kDefaultAlpha0 = 1.0;

enum class SemiNorm { gamma_np, gamma_n, gamma_true };
enum class RhoRule { gcv, theoretical };

struct RateStudyConfig {
  ProcessSpec process;
  std::function<double(double)> alpha_true = default_alpha;
  double alpha0 = kDefaultAlpha0;
  double sigma_eps = 1.0;
  int m = 2;
  std::vector<int> n_values;
  int p = 100;
  int replicates = 50;
  SemiNorm seminorm = SemiNorm::gamma_np;
  RhoRule rho_rule = RhoRule::theoretical;
  // Multiplier on the theoretical rho rule; the default keeps rho below the
  // full-shrinkage knee of the default slope function at desk-scale n.
  double rho_scale = 3e-5;
  int threads = 1;
};

struct RateStudyResult {
  std::vector<int> n_values;
  std::vector<std::vector<double>> errors;  // per n, per replicate
  std::vector<double> median_errors;
  double slope = 0.0;
  double theoretical_exponent = 0.0;
};

RateStudyResult rate_study(const RateStudyConfig& config);

// OLS slope of log(median error) on log(n).
double fit_log_slope(const std::vector<int>& n_values, const std::vector<double>& medians);

double median(std::vector<double> values);

}  // namespace flreg
