#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "acs/errors.hpp"
#include "acs/estimation.hpp"

namespace acs {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

}  // namespace

CorrelationFn make_correlation(const KernelFamily& family, AnisotropyForm form, int dim) {
  RadialProfile profile(family);
  return [profile, form, dim](std::span<const double> lag, std::span<const double> theta) {
    return profile(Anisotropy::from_params(form, dim, theta).scaled_distance(lag));
  };
}

Eigen::MatrixXd correlation_matrix(const SiteSet& sites, const CorrelationFn& corr,
                                   std::span<const double> theta) {
  const std::size_t n = sites.size();
  const auto d = static_cast<std::size_t>(sites.dim());
  Eigen::MatrixXd k(n, n);
  std::vector<double> lag(d);
  const std::vector<double> zero(d, 0.0);
  const double diag = corr(zero, theta);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = diag;
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t a = 0; a < d; ++a) lag[a] = sites.site(j)[a] - sites.site(i)[a];
      k(i, j) = k(j, i) = corr(lag, theta);
    }
  }
  return k;
}

IdentifiabilityReport identifiability_margin(const SiteSet& sites, const CorrelationFn& corr,
                                             const std::vector<std::vector<double>>& theta_grid,
                                             double r1) {
  if (!(r1 > 1.0)) throw std::invalid_argument("identifiability: radius must exceed 1");
  if (theta_grid.size() < 2) throw std::invalid_argument("identifiability: grid needs >= 2 points");
  const std::size_t n = sites.size();
  const auto d = static_cast<std::size_t>(sites.dim());

  // Lags to every neighbour within r1, per site.
  std::vector<std::vector<std::vector<double>>> lags(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || distance(sites.site(i), sites.site(j)) > r1) continue;
      std::vector<double> h(d);
      for (std::size_t a = 0; a < d; ++a) h[a] = sites.site(j)[a] - sites.site(i)[a];
      lags[i].push_back(std::move(h));
    }
    if (lags[i].empty())
      throw PreconditionError("identifiability: site " + std::to_string(i) +
                              " has no neighbour within radius " + std::to_string(r1));
  }

  IdentifiabilityReport report;
  report.radius = r1;
  report.grid_size = theta_grid.size();
  report.margin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < theta_grid.size(); ++a) {
    for (std::size_t b = a + 1; b < theta_grid.size(); ++b) {
      const auto& t1 = theta_grid[a];
      const auto& t2 = theta_grid[b];
      const double sep = distance(t1, t2);
      if (sep == 0.0) continue;
      double site_min = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n && site_min > 0.0; ++i) {
        double best = 0.0;
        for (const auto& h : lags[i]) best = std::max(best, std::abs(corr(h, t2) - corr(h, t1)));
        site_min = std::min(site_min, best);
      }
      const double ratio = site_min / sep;
      if (ratio < report.margin) {
        report.margin = ratio;
        report.worst_pair = {t1, t2};
      }
    }
  }
  if (!std::isfinite(report.margin))
    throw std::invalid_argument("identifiability: grid has no distinct pair of points");
  return report;
}

IdentifiabilityReport identifiability_margin(const SiteSet& sites, const KernelFamily& family,
                                             AnisotropyForm form,
                                             const std::vector<std::vector<double>>& theta_grid,
                                             double r1) {
  return identifiability_margin(sites, make_correlation(family, form, sites.dim()), theta_grid, r1);
}

SpectralBoundsReport spectral_bounds(const SiteSet& sites, const CorrelationFn& corr,
                                     const std::vector<std::vector<double>>& theta_grid) {
  if (sites.size() > kSpectralOracleCap)
    throw PreconditionError("spectral_bounds: n = " + std::to_string(sites.size()) +
                            " exceeds the dense oracle cap of " +
                            std::to_string(kSpectralOracleCap));
  if (theta_grid.empty()) throw std::invalid_argument("spectral_bounds: empty grid");

  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(theta_grid.size());
  SpectralBoundsReport report;
  report.lambda_min_est = std::numeric_limits<double>::infinity();
  report.lambda_max_est = 0.0;
  for (const auto& theta : theta_grid) {
    mats.push_back(correlation_matrix(sites, corr, theta));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mats.back(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("spectral_bounds: eigensolver failed");
    report.lambda_min_est = std::min(report.lambda_min_est, es.eigenvalues().minCoeff());
    report.lambda_max_est = std::max(report.lambda_max_est, es.eigenvalues().maxCoeff());
  }
  for (std::size_t a = 0; a < theta_grid.size(); ++a) {
    for (std::size_t b = a + 1; b < theta_grid.size(); ++b) {
      const double sep = distance(theta_grid[a], theta_grid[b]);
      if (sep == 0.0) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mats[b] - mats[a], Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericalError("spectral_bounds: eigensolver failed");
      report.lipschitz_est = std::max(report.lipschitz_est, es.eigenvalues().cwiseAbs().maxCoeff() / sep);
    }
  }
  return report;
}

SpectralBoundsReport spectral_bounds(const SiteSet& sites, const KernelFamily& family,
                                     AnisotropyForm form,
                                     const std::vector<std::vector<double>>& theta_grid) {
  return spectral_bounds(sites, make_correlation(family, form, sites.dim()), theta_grid);
}

KlCheck kl_bound_check(const SiteSet& sites, const KernelFamily& family, AnisotropyForm form,
                       std::span<const double> theta1, std::span<const double> theta2,
                       const std::vector<std::vector<double>>& extra_grid) {
  const std::size_t n = sites.size();
  if (n > kKlOracleCap)
    throw PreconditionError("kl_bound_check: n = " + std::to_string(n) +
                            " exceeds the dense oracle cap of " + std::to_string(kKlOracleCap));
  if (theta1.size() != theta2.size())
    throw std::invalid_argument("kl_bound_check: parameter vectors differ in size");

  std::vector<std::vector<double>> grid = {{theta1.begin(), theta1.end()},
                                           {theta2.begin(), theta2.end()}};
  grid.insert(grid.end(), extra_grid.begin(), extra_grid.end());
  const auto corr = make_correlation(family, form, sites.dim());

  KlCheck check;
  check.constants = spectral_bounds(sites, corr, grid);
  const double sep = distance(theta1, theta2);
  if (check.constants.lipschitz_est > 0.0)
    check.radius = check.constants.lambda_min_est / (2.0 * check.constants.lipschitz_est);
  if (sep == 0.0) return check;

  const double lambda_min = check.constants.lambda_min_est;
  const double lipschitz = check.constants.lipschitz_est;
  if (!(lambda_min > 0.0)) throw NumericalError("kl_bound_check: correlation matrix is singular");
  check.radius = lipschitz > 0.0 ? lambda_min / (2.0 * lipschitz) : std::numeric_limits<double>::infinity();
  check.within_radius = sep <= check.radius;

  const Eigen::MatrixXd k1 = correlation_matrix(sites, corr, theta1);
  const Eigen::MatrixXd k2 = correlation_matrix(sites, corr, theta2);
  const Eigen::LLT<Eigen::MatrixXd> l1(k1);
  const Eigen::LLT<Eigen::MatrixXd> l2(k2);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success)
    throw NumericalError("kl_bound_check: correlation matrix is singular");
  const double trace = l2.solve(k1).trace();
  const double logdet1 = 2.0 * l1.matrixLLT().diagonal().array().log().sum();
  const double logdet2 = 2.0 * l2.matrixLLT().diagonal().array().log().sum();
  check.kl = 0.5 * (trace - static_cast<double>(n) + logdet2 - logdet1);
  const double ratio = lipschitz / lambda_min * sep;
  check.bound = 2.0 * static_cast<double>(n) * ratio * ratio;
  return check;
}

}  // namespace acs
