#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "flreg/errors.hpp"
#include "flreg/grid.hpp"
#include "flreg/spline_basis.hpp"
#include "oracles.hpp"

using namespace flreg;

TEST_CASE("grid points sit at interval midpoints") {
  Grid g2 = build_grid(2);
  CHECK(g2.points[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g2.points[1] == doctest::Approx(0.75).epsilon(1e-15));

  Grid g1 = build_grid(1);
  CHECK(g1.points[0] == doctest::Approx(0.5).epsilon(1e-15));

  Grid g5 = build_grid(5);
  for (int j = 0; j < 5; ++j)
    CHECK(g5.points[j] == doctest::Approx(0.1 + 0.2 * j).epsilon(1e-14));

  for (int p : {1, 7, 64, 501}) {
    Grid g = build_grid(p);
    CHECK(std::abs(g.points[0] - 0.5 / p) <= 1e-14);
    for (int j = 1; j < p; ++j)
      CHECK(std::abs(g.points[j] - g.points[j - 1] - 1.0 / p) <= 1e-14);
    CHECK(g.points[0] > 0.0);
    CHECK(g.points[p - 1] < 1.0);
  }

  CHECK_THROWS_AS(build_grid(0), InvalidArgument);
}

TEST_CASE("build_penalty rejects unsupported configurations") {
  CHECK_THROWS_AS(build_penalty(build_grid(3), 2), UnderdeterminedBasis);
  CHECK_THROWS_AS(build_penalty(build_grid(5), 3), UnderdeterminedBasis);
  CHECK_THROWS_AS(build_penalty(build_grid(10), 0), UnsupportedOrder);
  CHECK_THROWS_AS(build_penalty(build_grid(10), 4), UnsupportedOrder);
}

TEST_CASE("m=1 penalty is the Dirichlet energy of the broken line") {
  const Grid grid = build_grid(9);
  const PenaltyOperator op = build_penalty(grid, 1);
  std::mt19937 rng(7);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd w(grid.p);
    for (int j = 0; j < grid.p; ++j) w[j] = normal(rng);
    double energy = 0.0;  // sum of (dw)^2 / h over the knot intervals
    for (int j = 1; j < grid.p; ++j) {
      const double dw = w[j] - w[j - 1];
      energy += dw * dw * grid.p;
    }
    CHECK(w.dot(op.penalty_star * w) == doctest::Approx(energy).epsilon(1e-9));
  }
  // The single null vector of p A_1* is the constant vector.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.p);
  CHECK((grid.p * op.penalty_star * ones).norm() <= 1e-8 * ones.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(grid.p * op.penalty_star);
  int zeros = 0;
  for (int i = 0; i < grid.p; ++i)
    if (eig.eigenvalues()[i] < 1e-8) ++zeros;
  CHECK(zeros == 1);
}

namespace {

// Ascending eigenvalues of p A_m* through the SVD of its factor, which keeps
// the zero modes exact instead of smearing them by eps * ||p A_m*||.
Eigen::VectorXd penalty_spectrum(const PenaltyOperator& op) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.star_factor);
  const Eigen::VectorXd sv = svd.singularValues();  // descending, length p-m
  Eigen::VectorXd eig = Eigen::VectorXd::Zero(op.grid.p);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    eig[op.grid.p - 1 - i] = sv[i] * sv[i];
  return eig;
}

}  // namespace

TEST_CASE("penalty eigenvalue law: m zero eigenvalues and a bounded band") {
  for (int m : {1, 2}) {
    for (int p : {32, 64, 128}) {
      const PenaltyOperator op = build_penalty(build_grid(p), m);
      const Eigen::VectorXd mu = penalty_spectrum(op);

      int zeros = 0;
      for (int i = 0; i < p; ++i)
        if (mu[i] < 1e-8) ++zeros;
      CHECK(zeros == m);

      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (int j = 1; j <= p - m; ++j) {
        const double ratio = mu[m + j - 1] / std::pow(M_PI * j, 2.0 * m);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      CAPTURE(m);
      CAPTURE(p);
      CHECK(hi / lo <= 20.0);
    }
  }
}

TEST_CASE("m=2 p=50 eigenvalue band is tighter than 10") {
  const PenaltyOperator op = build_penalty(build_grid(50), 2);
  const Eigen::VectorXd mu = penalty_spectrum(op);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int j = 1; j <= 48; ++j) {
    const double ratio = mu[j + 1] / std::pow(M_PI * j, 4.0);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo < 10.0);
}

TEST_CASE("eigenvalue ratios are stable across p at fixed j") {
  for (int m : {1, 2}) {
    std::vector<Eigen::VectorXd> spectra;
    for (int p : {32, 64, 128})
      spectra.push_back(penalty_spectrum(build_penalty(build_grid(p), m)));
    for (int j = 1; j <= 10; ++j) {
      const double base = spectra[0][m + j - 1] / std::pow(M_PI * j, 2.0 * m);
      for (std::size_t k = 1; k < spectra.size(); ++k) {
        const double ratio = spectra[k][m + j - 1] / std::pow(M_PI * j, 2.0 * m);
        CHECK(ratio / base <= 2.0);
        CHECK(base / ratio <= 2.0);
      }
    }
  }
}

TEST_CASE("projector P_m is a rank-m orthogonal projector") {
  for (int m : {1, 2, 3}) {
    for (int p : {2 * m, 11, 40}) {
      const PenaltyOperator op = build_penalty(build_grid(p), m);
      const Eigen::MatrixXd& pm = op.proj_poly;
      CHECK((pm - pm.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
      CHECK((pm * pm - pm).lpNorm<Eigen::Infinity>() <= 1e-10);
      CHECK(pm.trace() == doctest::Approx(m).epsilon(1e-10));
    }
  }
}

TEST_CASE("p A_m* annihilates discretized polynomials of degree < m and nothing else") {
  std::mt19937 rng(11);
  std::normal_distribution<double> normal;
  // Dense matrix-vector products carry an eps * ||p A_m*|| floor, so the
  // dense-route check uses sizes where that floor sits well under 1e-8; the
  // factored route is checked at larger sizes.
  for (auto [m, p] : {std::pair{1, 24}, {2, 24}, {3, 10}}) {
    const Grid grid = build_grid(p);
    const PenaltyOperator op = build_penalty(grid, m);
    const Eigen::MatrixXd pa = static_cast<double>(p) * op.penalty_star;

    for (int l = 0; l < m; ++l) {
      Eigen::VectorXd v(p);
      for (int j = 0; j < p; ++j) v[j] = std::pow(grid.points[j], l);
      CHECK((pa * v).norm() <= 1e-8 * v.norm());
    }

    const Eigen::VectorXd mu = penalty_spectrum(op);
    const double mu_next = mu[m];
    CHECK(mu_next > 1e-8);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd v(p);
      for (int j = 0; j < p; ++j) v[j] = normal(rng);
      v -= op.proj_poly * v;  // orthogonal to E_m
      v.normalize();
      CHECK((pa * v).norm() >= 0.5 * mu_next);
    }
  }

  // Factored route: || F v ||^2 = v' (p A_m*) v stays tiny for monomials at
  // every supported size.
  for (int m : {1, 2, 3}) {
    for (int p : {32, 128}) {
      const Grid grid = build_grid(p);
      const PenaltyOperator op = build_penalty(grid, m);
      for (int l = 0; l < m; ++l) {
        Eigen::VectorXd v(p);
        for (int j = 0; j < p; ++j) v[j] = std::pow(grid.points[j], l);
        CHECK((op.star_factor * v).squaredNorm() <= 1e-8 * v.squaredNorm());
      }
    }
  }
}

TEST_CASE("A_m factorizes as SPD across the supported range") {
  for (int m : {1, 2, 3}) {
    for (int p : {2 * m, 2 * m + 1, 17, 50, 101}) {
      const PenaltyOperator op = build_penalty(build_grid(p), m);
      CHECK(op.penalty_llt.info() == Eigen::Success);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op.penalty);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      // A_m* is PSD up to representation error in the dense product.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> star(op.penalty_star);
      const double scale = star.eigenvalues().maxCoeff();
      CHECK(star.eigenvalues().minCoeff() >= -1e-12 * scale);
    }
  }
}

TEST_CASE("interpolation hits the data and reproduces polynomials") {
  std::mt19937 rng(3);
  std::normal_distribution<double> normal;
  for (int m : {1, 2, 3}) {
    const int p = 12;
    const Grid grid = build_grid(p);
    const PenaltyOperator op = build_penalty(grid, m);

    SUBCASE("constants are reproduced everywhere") {
      SplineFunction s = interpolate(op, Eigen::VectorXd::Constant(p, 3.25));
      for (double t : {0.0, 0.013, 0.5, 0.77, 1.0})
        CHECK(s(t) == doctest::Approx(3.25).epsilon(1e-11));
    }

    SUBCASE("degree m-1 polynomials are reproduced on [0,1]") {
      Eigen::VectorXd w(p);
      auto poly = [&](double t) {
        double acc = 0.0, pw = 1.0;
        for (int l = 0; l < m; ++l, pw *= t) acc += (l + 1.0) * pw;
        return acc;
      };
      for (int j = 0; j < p; ++j) w[j] = poly(grid.points[j]);
      SplineFunction s = interpolate(op, w);
      for (double t : {0.0, 0.04, 0.31, 0.5, 0.99, 1.0})
        CHECK(std::abs(s(t) - poly(t)) <= 1e-9 * (1.0 + std::abs(poly(t))));
    }

    SUBCASE("random data is interpolated exactly") {
      for (int rep = 0; rep < 333; ++rep) {
        Eigen::VectorXd w(p);
        for (int j = 0; j < p; ++j) w[j] = normal(rng);
        SplineFunction s = interpolate(op, w);
        double worst = 0.0;
        for (int j = 0; j < p; ++j)
          worst = std::max(worst, std::abs(s(grid.points[j]) - w[j]));
        CHECK(worst <= 1e-9 * (1.0 + w.lpNorm<Eigen::Infinity>()));
      }
    }
  }

  CHECK_THROWS_AS(interpolate(build_penalty(build_grid(8), 2), Eigen::VectorXd::Zero(7)),
                  InvalidArgument);
}

TEST_CASE("natural cubic interpolant matches the Reinsch oracle") {
  const Grid grid = build_grid(4);
  const PenaltyOperator op = build_penalty(grid, 2);
  Eigen::VectorXd w(4);
  w << 0.0, 1.0, 1.0, 0.0;
  SplineFunction s = interpolate(op, w);

  std::vector<double> knots(grid.points.begin(), grid.points.end());
  oracles::ReinschCubic oracle(knots, {0.0, 1.0, 1.0, 0.0});
  CHECK(std::abs(s(0.5) - oracle(0.5)) <= 1e-8);
  // Frozen oracle value: interior second derivatives solve
  // (5/24) M = -4 with M2 = M3 = -19.2, giving s(0.5) = 1.15.
  CHECK(oracle(0.5) == doctest::Approx(1.15).epsilon(1e-12));
  for (double t : {0.05, 0.2, 0.4, 0.66, 0.9, 1.0})
    CHECK(std::abs(s(t) - oracle(t)) <= 1e-8);
}

TEST_CASE("interpolant minimizes the m-th derivative energy") {
  std::mt19937 rng(21);
  std::normal_distribution<double> normal;
  auto [qx, qw] = gauss_legendre(24);
  for (int m : {1, 2}) {
    const int p = 8;
    const Grid grid = build_grid(p);
    const PenaltyOperator op = build_penalty(grid, m);
    Eigen::VectorXd w(p);
    for (int j = 0; j < p; ++j) w[j] = normal(rng);
    SplineFunction s = interpolate(op, w);
    const double spline_energy = w.dot(op.penalty_star * w);

    // Perturbations vanish at every grid point: sin(2 pi k p t) has zeros at
    // all midpoints t_j = (2j-1)/(2p). The competitor f = s + bump has
    //   int (f^{(m)})^2 = spline_energy + 2 int s^{(m)} bump^{(m)} + bump_energy,
    // with the cross term integrated by composite Gauss per knot interval and
    // the bump energy analytic.
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> cuts{0.0};
    for (int j = 0; j < p; ++j) cuts.push_back(grid.points[j]);
    cuts.push_back(1.0);
    for (int rep = 0; rep < 20; ++rep) {
      const int k = 1 + rep % 3;
      const double omega = 2.0 * M_PI * k * p;
      const double c = unif(rng) / std::pow(omega, m);
      const double phase = m * M_PI / 2.0;
      auto bump_der_m = [&](double t) {
        return c * std::pow(omega, m) * std::sin(omega * t + phase);
      };
      double cross = 0.0;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        const double hal = 0.5 * (cuts[i + 1] - cuts[i]);
        for (std::size_t q = 0; q < qx.size(); ++q) {
          const double t = mid + hal * qx[q];
          cross += hal * qw[q] * s.derivative(t, m) * bump_der_m(t);
        }
      }
      const double amp = c * std::pow(omega, m);
      const double bump_energy =
          amp * amp * (0.5 - (std::sin(2.0 * (omega + phase)) - std::sin(2.0 * phase)) /
                                 (4.0 * omega));
      const double f_energy = spline_energy + 2.0 * cross + bump_energy;
      CHECK(spline_energy <= f_energy + 1e-8);
    }
  }
}

TEST_CASE("penalty_quadratic splits into projector and energy parts") {
  const int p = 8;
  const Grid grid = build_grid(p);

  SUBCASE("zero vector gives zero") {
    const PenaltyOperator op = build_penalty(grid, 2);
    CHECK(penalty_quadratic(op, Eigen::VectorXd::Zero(p)) == 0.0);
  }

  SUBCASE("discretized low-degree polynomials only see the projector term") {
    for (int m : {1, 2, 3}) {
      const PenaltyOperator op = build_penalty(grid, m);
      Eigen::VectorXd w(p);
      for (int j = 0; j < p; ++j) w[j] = std::pow(grid.points[j], m - 1);
      w /= std::sqrt(w.squaredNorm() / p);  // unit discrete norm
      const double expected = w.squaredNorm() / p;
      CHECK(penalty_quadratic(op, w) == doctest::Approx(expected).epsilon(1e-9));
    }
  }

  SUBCASE("sin data matches the finite-difference quadrature oracle") {
    const PenaltyOperator op = build_penalty(grid, 2);
    Eigen::VectorXd w(p);
    std::vector<double> knots(p), vals(p);
    for (int j = 0; j < p; ++j) {
      w[j] = std::sin(2.0 * M_PI * grid.points[j]);
      knots[j] = grid.points[j];
      vals[j] = w[j];
    }
    oracles::ReinschCubic oracle(knots, vals);
    const double h = 1e-5;
    const double integral = oracles::midpoint_integral(
        [&](double t) {
          double d2;
          if (t < h || t > 1.0 - h) {
            d2 = oracle.second_derivative(t);
          } else {
            d2 = (oracle(t - h) - 2.0 * oracle(t) + oracle(t + h)) / (h * h);
          }
          return d2 * d2;
        },
        2 * p * 640);
    const double proj_part = w.dot(op.proj_poly * w) / p;
    const double expected = proj_part + integral;
    CHECK(penalty_quadratic(op, w) ==
          doctest::Approx(expected).epsilon(1e-6));
  }

  SUBCASE("positive for nonzero input") {
    const PenaltyOperator op = build_penalty(grid, 2);
    std::mt19937 rng(5);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd w(p);
      for (int j = 0; j < p; ++j) w[j] = normal(rng);
      if (w.norm() == 0) continue;
      CHECK(penalty_quadratic(op, w) > 0.0);
    }
  }
}

TEST_CASE("any basis of NS^m yields the same penalty: A* agrees with the oracle energy") {
  // The recombined-basis A_m* must equal the energy of the classical natural
  // cubic interpolant, basis choice notwithstanding.
  const int p = 10;
  const Grid grid = build_grid(p);
  const PenaltyOperator op = build_penalty(grid, 2);
  std::vector<double> knots(grid.points.begin(), grid.points.end());
  std::mt19937 rng(13);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> vals(p);
    Eigen::VectorXd w(p);
    for (int j = 0; j < p; ++j) {
      vals[j] = normal(rng);
      w[j] = vals[j];
    }
    oracles::ReinschCubic oracle(knots, vals);
    // The second derivative is piecewise linear, so 2-point Gauss per knot
    // interval integrates its square exactly.
    const double g = 1.0 / std::sqrt(3.0);
    double energy = 0.0;
    for (int j = 0; j + 1 < p; ++j) {
      const double mid = 0.5 * (knots[j] + knots[j + 1]);
      const double hal = 0.5 * (knots[j + 1] - knots[j]);
      for (double node : {mid - hal * g, mid + hal * g}) {
        const double d2 = oracle.second_derivative(node);
        energy += hal * d2 * d2;
      }
    }
    CHECK(w.dot(op.penalty_star * w) == doctest::Approx(energy).epsilon(1e-9));
  }
}
