#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flreg/estimator.hpp"

namespace flreg {

struct GCVResult {
  std::vector<double> rho_grid;  // evaluated points (guard-violating ones skipped)
  std::vector<double> scores;
  std::vector<double> traces;
  double best_rho = 0.0;
  double best_score = 0.0;
  int best_m = 0;
  std::vector<std::string> warnings;
};

// Guard on the GCV denominator 1 - Tr(H_rho)/n.
inline constexpr double kGcvDenominatorGuard = 1e-8;

// (score, trace) of the GCV criterion at a single rho.
std::pair<double, double> gcv_score(const CenteredDesign& design,
                                    const PenaltyOperator& op, double rho);

// 40 log-spaced points over [1e-8, 1e2] x (largest whitened design eigenvalue).
std::vector<double> default_rho_grid(const WhitenedSystem& system);

GCVResult select_rho(const CenteredDesign& design, const PenaltyOperator& op,
                     const std::vector<double>& rho_grid);
GCVResult select_rho(const CenteredDesign& design, const PenaltyOperator& op);

// Joint (rho, m) selection over a family of penalty operators (ascending m).
// Ties go to larger rho, then to smaller m.
GCVResult select_rho_and_m(const CenteredDesign& design,
                           const std::vector<const PenaltyOperator*>& ops,
                           const std::vector<double>& rho_grid);

namespace detail {
// Shared sweep used by the plain and corrected selectors.
GCVResult sweep_rho(const WhitenedSystem& system, const CenteredDesign& design,
                    const std::vector<double>& rho_grid);
std::pair<double, double> gcv_at(const WhitenedSystem& system,
                                 const CenteredDesign& design, double rho);
}  // namespace detail

}  // namespace flreg
