#include "flreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "flreg/errors.hpp"
#include "flreg/model_selection.hpp"

namespace flreg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double fourier_zeta(int r, double t) {
  // r = 1,2,3,... -> sqrt(2) sin(2*pi*k*t), sqrt(2) cos(2*pi*k*t) alternating.
  const int k = (r + 1) / 2;
  const double arg = 2.0 * M_PI * k * t;
  return (r % 2 == 1) ? M_SQRT2 * std::sin(arg) : M_SQRT2 * std::cos(arg);
}

double brownian_lambda(int r) {
  const double f = M_PI * (r - 0.5);
  return 1.0 / (f * f);
}

double brownian_zeta(int r, double t) {
  return M_SQRT2 * std::sin(M_PI * (r - 0.5) * t);
}

void validate(const ProcessSpec& spec) {
  if (spec.modes < 1) throw InvalidArgument("process needs at least one mode");
  if (spec.kind == ProcessKind::fourier_kl && !(spec.q > 0))
    throw InvalidArgument("fourier_kl eigendecay exponent q must be positive");
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

CurveSet generate_curves(const ProcessSpec& spec, int n, const Grid& grid, int refine) {
  validate(spec);
  if (n < 1) throw InvalidArgument("curve count must be positive");
  if (refine < 1) throw InvalidArgument("refinement factor must be positive");

  CurveSet out;
  out.grid = grid;
  out.fine_grid = build_grid(refine * grid.p);
  out.x.resize(n, grid.p);
  out.x_fine.resize(n, out.fine_grid.p);

  if (spec.kind == ProcessKind::fourier_kl) {
    const int R = spec.modes;
    Eigen::VectorXd sqrt_lambda(R);
    for (int r = 1; r <= R; ++r) sqrt_lambda[r - 1] = std::pow(r, -(2.0 * spec.q + 1.0) / 2.0);
    Eigen::MatrixXd zeta(R, grid.p), zeta_fine(R, out.fine_grid.p);
    for (int r = 1; r <= R; ++r) {
      for (int j = 0; j < grid.p; ++j) zeta(r - 1, j) = fourier_zeta(r, grid.points[j]);
      for (int j = 0; j < out.fine_grid.p; ++j)
        zeta_fine(r - 1, j) = fourier_zeta(r, out.fine_grid.points[j]);
    }
    for (int i = 0; i < n; ++i) {
      std::mt19937_64 rng(derive_seed(spec.seed, 0x6b, i));
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd xi(R);
      for (int r = 0; r < R; ++r) xi[r] = sqrt_lambda[r] * normal(rng);
      out.x.row(i) = xi.transpose() * zeta;
      out.x_fine.row(i) = xi.transpose() * zeta_fine;
    }
    return out;
  }

  // Brownian motion: exact increments over the union of both grids, then the
  // coarse and fine values are read off the same path.
  const int pu = grid.p + out.fine_grid.p;
  std::vector<std::pair<double, int>> times;  // (t, destination)
  times.reserve(pu);
  for (int j = 0; j < grid.p; ++j) times.emplace_back(grid.points[j], j);
  for (int j = 0; j < out.fine_grid.p; ++j)
    times.emplace_back(out.fine_grid.points[j], grid.p + j);
  std::sort(times.begin(), times.end());

  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(spec.seed, 0xb2, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    double level = 0.0, prev = 0.0;
    for (const auto& [t, dest] : times) {
      const double dt = t - prev;
      if (dt > 0) level += std::sqrt(dt) * normal(rng);
      prev = t;
      if (dest < grid.p)
        out.x(i, dest) = level;
      else
        out.x_fine(i, dest - grid.p) = level;
    }
  }
  return out;
}

Eigen::VectorXd generate_responses(const Eigen::MatrixXd& curves, const Grid& grid,
                                   const std::function<double(double)>& alpha_true,
                                   double alpha0, double sigma_eps, std::uint64_t seed) {
  if (curves.cols() != grid.p) throw InvalidArgument("curves do not match the grid");
  if (sigma_eps < 0) throw InvalidArgument("sigma_eps must be nonnegative");
  Eigen::VectorXd alpha_vals(grid.p);
  for (int j = 0; j < grid.p; ++j) alpha_vals[j] = alpha_true(grid.points[j]);
  Eigen::VectorXd y = (curves * alpha_vals / grid.p).array() + alpha0;
  if (sigma_eps > 0) {
    std::mt19937_64 rng(derive_seed(seed, 0xe5));
    std::normal_distribution<double> normal(0.0, sigma_eps);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += normal(rng);
  }
  return y;
}

Eigen::MatrixXd add_observation_noise(const Eigen::MatrixXd& curves, double sigma_delta,
                                      std::uint64_t seed) {
  if (sigma_delta < 0) throw InvalidArgument("sigma_delta must be nonnegative");
  if (sigma_delta == 0) return curves;
  Eigen::MatrixXd w = curves;
  std::mt19937_64 rng(derive_seed(seed, 0xd7));
  std::normal_distribution<double> normal(0.0, sigma_delta);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) += normal(rng);
  return w;
}

std::vector<std::pair<double, Eigen::VectorXd>> process_spectrum(const ProcessSpec& spec,
                                                                 const Grid& grid,
                                                                 int modes) {
  validate(spec);
  if (modes < 1) throw InvalidArgument("need at least one spectral mode");
  std::vector<std::pair<double, Eigen::VectorXd>> out;
  out.reserve(modes);
  for (int r = 1; r <= modes; ++r) {
    Eigen::VectorXd zeta(grid.p);
    double lambda;
    if (spec.kind == ProcessKind::brownian) {
      lambda = brownian_lambda(r);
      for (int j = 0; j < grid.p; ++j) zeta[j] = brownian_zeta(r, grid.points[j]);
    } else {
      lambda = std::pow(r, -(2.0 * spec.q + 1.0));
      for (int j = 0; j < grid.p; ++j) zeta[j] = fourier_zeta(r, grid.points[j]);
    }
    out.emplace_back(lambda, std::move(zeta));
  }
  return out;
}

double process_decay_q(const ProcessSpec& spec) {
  // Brownian KL eigenvalues (pi(r-1/2))^{-2} give tail sums of order k^{-1}.
  return spec.kind == ProcessKind::brownian ? 0.5 : spec.q;
}

double theoretical_exponent(int m, double q) {
  return -(2.0 * m + 2.0 * q + 1.0) / (2.0 * m + 2.0 * q + 2.0);
}

double default_alpha(double t) {
  return std::sin(2.0 * M_PI * t) + 0.5 * std::cos(4.0 * M_PI * t);
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  std::nth_element(values.begin(), values.begin() + mid - 1, values.begin() + mid);
  return 0.5 * (values[mid - 1] + hi);
}

double fit_log_slope(const std::vector<int>& n_values, const std::vector<double>& medians) {
  if (n_values.size() != medians.size() || n_values.size() < 2)
    throw InvalidArgument("slope fit needs matching n/median lists of length >= 2");
  const std::size_t k = n_values.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(medians[i] > 0)) throw InvalidArgument("median errors must be positive");
    const double x = std::log(static_cast<double>(n_values[i]));
    const double y = std::log(medians[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = k * sxx - sx * sx;
  if (denom == 0) throw InvalidArgument("n values must not be all equal");
  return (k * sxy - sx * sy) / denom;
}

namespace {

struct ReplicateTask {
  int n_index;
  int replicate;
};

double run_replicate(const RateStudyConfig& config, const PenaltyOperator& op,
                     const Grid& grid, int n,
                     const std::vector<std::pair<double, Eigen::VectorXd>>& spectrum,
                     std::uint64_t curve_seed, std::uint64_t response_seed) {
  ProcessSpec spec = config.process;
  spec.seed = curve_seed;
  CurveSet curves = generate_curves(spec, n, grid);

  FunctionalSample sample;
  sample.grid = grid;
  sample.x = curves.x;
  sample.y = generate_responses(curves.x_fine, curves.fine_grid, config.alpha_true,
                                config.alpha0, config.sigma_eps, response_seed);

  double rho;
  CenteredDesign design = center(sample);
  if (config.rho_rule == RhoRule::theoretical) {
    const double expo = theoretical_exponent(config.m, process_decay_q(config.process));
    rho = config.rho_scale * std::pow(static_cast<double>(n), expo);
  } else {
    rho = select_rho(design, op).best_rho;
  }
  WhitenedSystem system(design, op);
  Eigen::VectorXd alpha_hat = system.alpha(rho);

  Eigen::VectorXd alpha_true_grid(grid.p);
  for (int j = 0; j < grid.p; ++j) alpha_true_grid[j] = config.alpha_true(grid.points[j]);

  switch (config.seminorm) {
    case SemiNorm::gamma_np:
      return seminorm_gamma_np_sq(alpha_hat - alpha_true_grid, design);
    case SemiNorm::gamma_n: {
      SplineFunction spline = op.basis->interpolate(alpha_hat);
      Eigen::VectorXd u(curves.fine_grid.p);
      for (int j = 0; j < curves.fine_grid.p; ++j)
        u[j] = spline(curves.fine_grid.points[j]) - config.alpha_true(curves.fine_grid.points[j]);
      Eigen::MatrixXd centered =
          curves.x_fine.rowwise() - curves.x_fine.colwise().mean();
      return seminorm_gamma_n_sq(u, centered);
    }
    case SemiNorm::gamma_true: {
      SplineFunction spline = op.basis->interpolate(alpha_hat);
      Eigen::VectorXd u(curves.fine_grid.p);
      for (int j = 0; j < curves.fine_grid.p; ++j)
        u[j] = spline(curves.fine_grid.points[j]) - config.alpha_true(curves.fine_grid.points[j]);
      return seminorm_gamma_true_sq(u, spectrum);
    }
  }
  throw InvalidArgument("unknown seminorm");
}

}  // namespace

RateStudyResult rate_study(const RateStudyConfig& config) {
  if (config.n_values.size() < 3)
    throw InvalidArgument("rate study needs at least 3 sample sizes");
  for (std::size_t i = 1; i < config.n_values.size(); ++i)
    if (config.n_values[i] <= config.n_values[i - 1])
      throw InvalidArgument("sample sizes must be strictly increasing");
  if (config.replicates < 10) throw InvalidArgument("need at least 10 replicates");

  const Grid grid = build_grid(config.p);
  const PenaltyOperator op = build_penalty(grid, config.m);
  const Grid fine = build_grid(10 * config.p);
  std::vector<std::pair<double, Eigen::VectorXd>> spectrum;
  if (config.seminorm == SemiNorm::gamma_true)
    spectrum = process_spectrum(config.process, fine, config.process.modes);

  RateStudyResult result;
  result.n_values = config.n_values;
  result.errors.assign(config.n_values.size(),
                       std::vector<double>(config.replicates, 0.0));
  result.theoretical_exponent =
      theoretical_exponent(config.m, process_decay_q(config.process));

  std::vector<ReplicateTask> tasks;
  for (std::size_t ni = 0; ni < config.n_values.size(); ++ni)
    for (int rep = 0; rep < config.replicates; ++rep)
      tasks.push_back({static_cast<int>(ni), rep});

  // Seeds depend only on (base seed, n, replicate): the schedule, serial or
  // parallel, cannot change the result.
  std::mutex failure_mutex;
  std::string failure;
  auto run_task = [&](const ReplicateTask& task) {
    const int n = config.n_values[task.n_index];
    try {
      const std::uint64_t curve_seed = derive_seed(config.process.seed, 1, n, task.replicate);
      const std::uint64_t resp_seed = derive_seed(config.process.seed, 2, n, task.replicate);
      result.errors[task.n_index][task.replicate] =
          run_replicate(config, op, grid, n, spectrum, curve_seed, resp_seed);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (failure.empty())
        failure = "rate study aborted at n=" + std::to_string(n) + " replicate " +
                  std::to_string(task.replicate) + ": " + e.what();
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (const auto& task : tasks) run_task(task);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (tasks.size() + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(tasks.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i) run_task(tasks[i]);
      });
    }
    for (auto& t : pool) t.join();
  }
  if (!failure.empty()) throw Error("rate-study", failure);

  result.median_errors.reserve(result.errors.size());
  for (const auto& errs : result.errors) result.median_errors.push_back(median(errs));
  result.slope = fit_log_slope(result.n_values, result.median_errors);
  return result;
}

}  // namespace flreg
