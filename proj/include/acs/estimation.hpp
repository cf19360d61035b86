#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "acs/kernels.hpp"
#include "acs/objective.hpp"
#include "acs/optimizer.hpp"
#include "acs/sampling.hpp"

namespace acs {

/// theta -> (G_n, F_n, phi_hat) for one observed sample. Holds the sorted
/// sample so repeated evaluations skip the preparation step.
class ProfileObjective {
public:
  ProfileObjective(const FieldSample& sample, KernelFamily family, AnisotropyForm form,
                   unsigned workers = 0);

  QuadraticSummary summary(std::span<const double> theta) const;
  double g_n(std::span<const double> theta) const { return acs::g_n(summary(theta)); }
  double f_n(double phi, std::span<const double> theta) const {
    return acs::f_n(summary(theta), phi);
  }

  std::size_t size() const { return sorted_.size(); }
  int dim() const { return sorted_.dim(); }
  AnisotropyForm form() const { return form_; }
  const KernelFamily& family() const { return family_; }

private:
  SortedSample sorted_;
  KernelFamily family_;
  RadialProfile profile_;
  AnisotropyForm form_;
  unsigned workers_;
};

struct CurvePoint {
  std::vector<double> theta;
  double value = 0.0;
};

struct EstimationResult {
  double phi_hat = 0.0;
  std::vector<double> theta_hat;
  OptimizeOutcome outcome;
  bool phi_at_boundary = false;
  /// G_n at theta_hat.
  double objective_value = 0.0;
  std::vector<CurvePoint> objective_curve;

  /// Any theta coordinate within fd_step of a face, or phi clamped.
  bool boundary_hit() const { return phi_at_boundary || outcome.any_boundary_hit(); }
};

/// theta_hat = argmax G_n over the box (Brent for one parameter, projected
/// L-BFGS otherwise), then the closed-form phi_hat at theta_hat.
EstimationResult estimate(const FieldSample& sample, const KernelFamily& family,
                          AnisotropyForm form, const ParameterBounds& bounds,
                          const OptimizerConfig& cfg = {}, unsigned workers = 0);

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;
};

/// Cartesian grid in row-major order (last axis fastest). count == 1 yields lo.
std::vector<std::vector<double>> make_grid(std::span<const GridAxis> axes);

/// (theta, G_n / sqrt(n)) along the grid, in grid order.
std::vector<CurvePoint> sweep_objective(const FieldSample& sample, const KernelFamily& family,
                                        AnisotropyForm form,
                                        const std::vector<std::vector<double>>& grid,
                                        unsigned workers = 0);

/// Strict interior local maxima of a 1-D sequence, counted as +/- sign changes
/// of the first differences (zero differences are skipped).
int count_interior_maxima(std::span<const double> values);

// ---------------------------------------------------------------------------
// Diagnostics built on dense oracles (small n only).

/// Correlation between two sites separated by `lag` under parameters `theta`.
using CorrelationFn = std::function<double(std::span<const double> lag, std::span<const double> theta)>;

CorrelationFn make_correlation(const KernelFamily& family, AnisotropyForm form, int dim);

Eigen::MatrixXd correlation_matrix(const SiteSet& sites, const CorrelationFn& corr,
                                   std::span<const double> theta);

struct IdentifiabilityReport {
  double margin = 0.0;
  double radius = 0.0;
  std::pair<std::vector<double>, std::vector<double>> worst_pair;
  std::size_t grid_size = 0;
};

/// min over distinct grid pairs of
///   [min over sites s of max over neighbours s' (|s'-s| <= r1) of |K(s'-s, t2) - K(s'-s, t1)|] / |t2 - t1|.
/// Throws acs::PreconditionError naming the site when a site has no neighbour.
IdentifiabilityReport identifiability_margin(const SiteSet& sites, const CorrelationFn& corr,
                                             const std::vector<std::vector<double>>& theta_grid,
                                             double r1);
IdentifiabilityReport identifiability_margin(const SiteSet& sites, const KernelFamily& family,
                                             AnisotropyForm form,
                                             const std::vector<std::vector<double>>& theta_grid,
                                             double r1);

struct SpectralBoundsReport {
  double lambda_min_est = 0.0;
  double lambda_max_est = 0.0;
  /// max over grid pairs of |K_n(t2) - K_n(t1)|_op / |t2 - t1|.
  double lipschitz_est = 0.0;
};

inline constexpr std::size_t kSpectralOracleCap = 2000;
inline constexpr std::size_t kKlOracleCap = 500;

SpectralBoundsReport spectral_bounds(const SiteSet& sites, const CorrelationFn& corr,
                                     const std::vector<std::vector<double>>& theta_grid);
SpectralBoundsReport spectral_bounds(const SiteSet& sites, const KernelFamily& family,
                                     AnisotropyForm form,
                                     const std::vector<std::vector<double>>& theta_grid);

struct KlCheck {
  double kl = 0.0;
  double bound = 0.0;
  SpectralBoundsReport constants;
  /// Lambda_min / (2 D_max) from the estimated constants.
  double radius = 0.0;
  /// |t2 - t1| <= radius, where the bound is proven to apply.
  bool within_radius = true;
  bool passed() const { return kl <= bound; }
};

/// Exact Gaussian KL(N(0, K_n(t1)) || N(0, K_n(t2))) against
/// 2 n (D_max / Lambda_min |t2 - t1|)^2, with the constants estimated by
/// spectral_bounds over {t1, t2} plus `extra_grid`. Pairs farther apart than
/// Lambda_min / (2 D_max) are still evaluated and flagged via within_radius.
/// Throws acs::PreconditionError above kKlOracleCap sites.
KlCheck kl_bound_check(const SiteSet& sites, const KernelFamily& family, AnisotropyForm form,
                       std::span<const double> theta1, std::span<const double> theta2,
                       const std::vector<std::vector<double>>& extra_grid = {});

}  // namespace acs
