#pragma once

// Independent reference implementations used only by the tests. None of them
// call back into the library's kernel or objective code.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "acs/kernels.hpp"
#include "acs/sampling.hpp"

namespace oracle {

/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by the trapezoid rule.
/// The integrand is even and entire, so the rule converges geometrically in
/// 1/h; the range is cut where the integrand drops 60 e-folds below its peak.
inline double bessel_k_quadrature(double nu, double x) {
  using ld = long double;
  auto log_f = [&](ld t) { return -static_cast<ld>(x) * std::cosh(t) + static_cast<ld>(nu) * t; };
  // Peak of -x cosh t + nu t.
  const ld t_peak = std::asinh(static_cast<ld>(nu) / static_cast<ld>(x));
  const ld peak = log_f(t_peak);
  ld t_end = t_peak + 1;
  while (log_f(t_end) > peak - 60) t_end += 1;
  const ld h = 1.0L / 256;
  ld sum = 0;
  for (ld t = h; t <= t_end; t += h) {
    sum += std::exp(log_f(t) - peak) + std::exp(-static_cast<ld>(x) * std::cosh(t) - static_cast<ld>(nu) * t - peak);
  }
  sum = 0.5L * sum + 0.5L * std::exp(-static_cast<ld>(x) - peak);  // t = 0 weighs 1/2, cosh(0) = 1
  return static_cast<double>(h * sum * std::exp(peak));
}

/// Correlation at scaled distance u from textbook closed forms and Boost's
/// Bessel function.
inline double correlation(const acs::KernelFamily& family, double u) {
  if (u == 0.0) return 1.0;
  if (const auto* m = std::get_if<acs::Matern>(&family)) {
    if (u > 700.0) return 0.0;
    return std::pow(2.0, 1.0 - m->nu) / std::tgamma(m->nu) * std::pow(u, m->nu) *
           boost::math::cyl_bessel_k(m->nu, u);
  }
  if (const auto* p = std::get_if<acs::PoweredExponential>(&family)) return std::exp(-std::pow(u, p->nu));
  const auto& r = std::get<acs::RationalQuadratic>(family);
  return std::pow(1.0 + u * u, -(r.dim / 2.0 + r.nu));
}

/// Explicit n x n correlation matrix. B is applied as a dense matrix product.
inline Eigen::MatrixXd dense_k(const acs::SiteSet& sites, const acs::KernelFamily& family,
                               const acs::Anisotropy& aniso) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  const int d = sites.dim();
  Eigen::MatrixXd b(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) b(i, j) = aniso.matrix()[static_cast<std::size_t>(i * d + j)];
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd h(d);
      for (int a = 0; a < d; ++a) h(a) = sites.site(static_cast<std::size_t>(i))[a] - sites.site(static_cast<std::size_t>(j))[a];
      k(i, j) = correlation(family, (b * h).norm());
    }
  }
  return k;
}

struct Dense {
  double yky;
  double k_frob_sq;
};

inline Dense dense_summary(std::span<const double> y, const acs::SiteSet& sites,
                           const acs::KernelFamily& family, const acs::Anisotropy& aniso) {
  const Eigen::MatrixXd k = dense_k(sites, family, aniso);
  const Eigen::Map<const Eigen::VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
  return {v.dot(k * v), k.squaredNorm()};
}

/// Richardson extrapolation of the central difference in coordinate j.
template <class F>
double richardson_derivative(const F& f, std::vector<double> x, std::size_t j, double h) {
  auto central = [&](double step) {
    auto xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    return (f(xp) - f(xm)) / (2 * step);
  };
  return (4 * central(h / 2) - central(h)) / 3;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// One-sample KS distance against a CDF.
template <class Cdf>
double ks_one_sample(std::vector<double> a, const Cdf& cdf) {
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double c = cdf(a[i]);
    d = std::max({d, std::abs(c - i / n), std::abs((i + 1) / n - c)});
  }
  return d;
}

}  // namespace oracle
