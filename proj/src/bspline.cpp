#include "flreg/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "flreg/errors.hpp"

namespace flreg {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int nodes) {
  if (nodes < 1) throw InvalidArgument("quadrature needs at least one node");
  std::vector<double> x(nodes), w(nodes);
  const int half = (nodes + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (nodes + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < nodes; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = nodes * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[nodes - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[nodes - 1 - i] = w[i];
  }
  return {x, w};
}

BSplineBasis::BSplineBasis(std::vector<double> knots, int order)
    : knots_(std::move(knots)), order_(order) {
  if (order_ < 1) throw InvalidArgument("spline order must be positive");
  if (static_cast<int>(knots_.size()) < 2 * order_)
    throw InvalidArgument("knot vector too short for order " + std::to_string(order_));
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw InvalidArgument("knot vector must be nondecreasing");
}

int BSplineBasis::find_span(double t) const {
  const int nb = size();
  // Valid spans are [order-1, nb-1]; clamp t into the domain.
  if (t >= knots_[nb]) return nb - 1;
  if (t <= knots_[order_ - 1]) return order_ - 1;
  auto it = std::upper_bound(knots_.begin() + order_ - 1, knots_.begin() + nb + 1, t);
  return static_cast<int>(it - knots_.begin()) - 1;
}

void BSplineBasis::eval(double t, int nders, Eigen::MatrixXd& ders, int& first) const {
  const int deg = order_ - 1;
  const int span = find_span(t);
  first = span - deg;

  // Piegl & Tiller A2.3 (DersBasisFuns).
  Eigen::MatrixXd ndu(order_, order_);
  std::vector<double> left(order_), right(order_);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= deg; ++j) {
    left[j] = t - knots_[span + 1 - j];
    right[j] = knots_[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  ders.setZero(nders + 1, order_);
  for (int j = 0; j <= deg; ++j) ders(0, j) = ndu(j, deg);

  Eigen::MatrixXd a(2, order_);
  for (int r = 0; r <= deg; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= std::min(nders, deg); ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = deg - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : deg - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = deg;
  for (int k = 1; k <= std::min(nders, deg); ++k) {
    for (int j = 0; j <= deg; ++j) ders(k, j) *= factor;
    factor *= deg - k;
  }
  // Derivatives of order >= `order` vanish identically (rows stay zero).
}

double BSplineBasis::value(const Eigen::VectorXd& coefs, double t) const {
  return derivative(coefs, t, 0);
}

double BSplineBasis::derivative(const Eigen::VectorXd& coefs, double t, int der) const {
  if (coefs.size() != size()) throw InvalidArgument("coefficient length mismatch");
  if (der >= order_) return 0.0;
  Eigen::MatrixXd ders;
  int first = 0;
  eval(t, der, ders, first);
  double out = 0.0;
  for (int j = 0; j < order_; ++j) out += ders(der, j) * coefs[first + j];
  return out;
}

Eigen::MatrixXd BSplineBasis::collocation(const Eigen::VectorXd& sites, int der) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(sites.size(), size());
  Eigen::MatrixXd ders;
  int first = 0;
  for (Eigen::Index r = 0; r < sites.size(); ++r) {
    if (der >= order_) continue;
    eval(sites[r], der, ders, first);
    for (int j = 0; j < order_; ++j) out(r, first + j) = ders(der, j);
  }
  return out;
}

Eigen::MatrixXd BSplineBasis::gram(int der) const {
  const int nb = size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nb, nb);
  if (der >= order_) return g;
  // Integrand is piecewise polynomial of degree 2*(order-1-der); a rule with
  // `order` points is exact (2*order-1 >= 2*(order-1-der) for der >= 0).
  auto [qx, qw] = gauss_legendre(order_);
  Eigen::MatrixXd ders;
  int first = 0;
  for (int span = order_ - 1; span < nb; ++span) {
    const double a = knots_[span];
    const double b = knots_[span + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    const double hal = 0.5 * (b - a);
    for (size_t q = 0; q < qx.size(); ++q) {
      const double t = mid + hal * qx[q];
      const double w = hal * qw[q];
      eval(t, der, ders, first);
      for (int i = 0; i < order_; ++i) {
        const double vi = ders(der, i);
        if (vi == 0.0) continue;
        for (int j = 0; j < order_; ++j)
          g(first + i, first + j) += w * vi * ders(der, j);
      }
    }
  }
  return g;
}

}  // namespace flreg
