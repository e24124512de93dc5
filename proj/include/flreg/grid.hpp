#pragma once

#include <Eigen/Core>

#include "flreg/errors.hpp"

namespace flreg {

// Equidistant midpoint grid on [0,1]: t_j = (2j-1)/(2p), spacing 1/p.
struct Grid {
  int p = 0;
  Eigen::VectorXd points;

  double spacing() const { return 1.0 / p; }
  bool operator==(const Grid& other) const {
    return p == other.p && points == other.points;
  }
};

inline Grid build_grid(int p) {
  if (p < 1) throw InvalidArgument("grid size must be positive, got " + std::to_string(p));
  Grid g;
  g.p = p;
  g.points.resize(p);
  for (int j = 0; j < p; ++j) g.points[j] = (2.0 * j + 1.0) / (2.0 * p);
  return g;
}

}  // namespace flreg
