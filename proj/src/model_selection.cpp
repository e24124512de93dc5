#include "flreg/model_selection.hpp"

#include <cmath>

#include "flreg/errors.hpp"

namespace flreg {

namespace detail {

std::pair<double, double> gcv_at(const WhitenedSystem& system,
                                 const CenteredDesign& design, double rho) {
  if (!(rho > 0)) throw InvalidArgument("rho must be positive");
  if (!(system.min_eigenvalue() + rho > 0))
    throw DegenerateSmoother("corrected design matrix loses positive definiteness at rho=" +
                             std::to_string(rho));
  const double n = system.n();
  const double trace = system.trace_hat(rho);
  const double denom = 1.0 - trace / n;
  if (!(denom > kGcvDenominatorGuard))
    throw DegenerateSmoother("GCV denominator below guard at rho=" + std::to_string(rho) +
                             " (trace " + std::to_string(trace) + ")");
  Eigen::VectorXd fitted = design.xc * system.alpha(rho) / system.p();
  const double score = (design.yc - fitted).squaredNorm() / n / (denom * denom);
  return {score, trace};
}

GCVResult sweep_rho(const WhitenedSystem& system, const CenteredDesign& design,
                    const std::vector<double>& rho_grid) {
  if (rho_grid.empty()) throw InvalidArgument("rho grid is empty");
  GCVResult result;
  for (double rho : rho_grid) {
    try {
      auto [score, trace] = gcv_at(system, design, rho);
      result.rho_grid.push_back(rho);
      result.scores.push_back(score);
      result.traces.push_back(trace);
    } catch (const DegenerateSmoother& e) {
      result.warnings.push_back(std::string("skipped rho=") + std::to_string(rho) +
                                ": " + e.what());
    }
  }
  if (result.rho_grid.empty())
    throw NoValidRho("every rho in the grid violates the GCV denominator guard");
  // Ties break toward larger rho; the grid is swept in ascending order.
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.scores.size(); ++i)
    if (result.scores[i] <= result.scores[best]) best = i;
  result.best_rho = result.rho_grid[best];
  result.best_score = result.scores[best];
  return result;
}

}  // namespace detail

std::pair<double, double> gcv_score(const CenteredDesign& design,
                                    const PenaltyOperator& op, double rho) {
  WhitenedSystem system(design, op);
  return detail::gcv_at(system, design, rho);
}

std::vector<double> default_rho_grid(const WhitenedSystem& system) {
  double scale = system.max_eigenvalue();
  if (!(scale > 0)) scale = 1.0;
  constexpr int kPoints = 40;
  const double lo = std::log(1e-8 * scale);
  const double hi = std::log(1e2 * scale);
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i)
    grid[i] = std::exp(lo + (hi - lo) * i / (kPoints - 1));
  return grid;
}

GCVResult select_rho(const CenteredDesign& design, const PenaltyOperator& op,
                     const std::vector<double>& rho_grid) {
  WhitenedSystem system(design, op);
  GCVResult result = detail::sweep_rho(system, design, rho_grid);
  result.best_m = op.m;
  return result;
}

GCVResult select_rho(const CenteredDesign& design, const PenaltyOperator& op) {
  WhitenedSystem system(design, op);
  GCVResult result = detail::sweep_rho(system, design, default_rho_grid(system));
  result.best_m = op.m;
  return result;
}

GCVResult select_rho_and_m(const CenteredDesign& design,
                           const std::vector<const PenaltyOperator*>& ops,
                           const std::vector<double>& rho_grid) {
  if (ops.empty()) throw InvalidArgument("no penalty operators supplied");
  if (2 * static_cast<int>(ops.size()) > design.n())
    throw InvalidArgument("largest order M must satisfy M <= n/2");

  GCVResult best;
  bool have_best = false;
  for (const PenaltyOperator* op : ops) {
    GCVResult cur;
    try {
      cur = select_rho(design, *op, rho_grid);
    } catch (const NoValidRho&) {
      continue;
    }
    cur.best_m = op->m;
    // Strict comparison keeps the smaller m on exact ties.
    if (!have_best || cur.best_score < best.best_score) {
      best = std::move(cur);
      have_best = true;
    }
  }
  if (!have_best)
    throw NoValidRho("every (rho, m) combination violates the GCV denominator guard");
  return best;
}

}  // namespace flreg
