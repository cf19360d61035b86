#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "acs/estimation.hpp"

namespace acs {

struct ExperimentConfig {
  KernelFamily family = Matern{0.5};
  AnisotropyForm form = AnisotropyForm::Isotropic;
  CovarianceParams truth{1.0, {4.0}};
  int N = 64;
  int dim = 2;
  double delta = 0.1;
  std::size_t features = 20000;
  int replicates = 50;
  ParameterBounds bounds = ParameterBounds::defaults(AnisotropyForm::Isotropic, 2);
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  unsigned workers = 0;

  /// Throws std::invalid_argument (T < 1, truth outside bounds, ...).
  void validate() const;
};

struct ReplicateRecord {
  int index = 0;
  std::uint64_t seed = 0;
  double phi_hat = 0.0;
  std::vector<double> theta_hat;
  bool boundary_hit = false;
  bool converged = false;
  int iterations = 0;
  double objective_value = 0.0;
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double rmse = 0.0;
};

struct StageTimes {
  double simulate_seconds = 0.0;
  double estimate_seconds = 0.0;
};

struct ExperimentReport {
  std::size_t n = 0;
  std::vector<ReplicateRecord> replicates;
  std::size_t excluded_count = 0;
  /// sigma (= sqrt(phi)), phi, then one entry per theta coordinate. Computed
  /// over replicates without a boundary hit.
  std::vector<ParameterSummary> summary;
  StageTimes times;

  const ParameterSummary& parameter(const std::string& name) const;
};

/// Names of the theta coordinates for a form: theta | theta, rho | b11, b12, ...
std::vector<std::string> theta_names(AnisotropyForm form, int dim);

/// Seed of replicate r: a child stream of the master seed keyed by r.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index);

using ProgressFn = std::function<void(const ReplicateRecord&)>;

/// T simulate -> estimate cycles; every replicate draws its own lattice and
/// field from replicate_seed(seed, r). Throws std::runtime_error when every
/// replicate hits the boundary.
ExperimentReport run_replicated(const ExperimentConfig& cfg, const ProgressFn& progress = {});

struct RatePoint {
  int N = 0;
  std::size_t n = 0;
  double rmse_theta = 0.0;       // sqrt(mean |theta_hat - theta0|^2)
  double rmse_phi_ratio = 0.0;   // sqrt(mean (phi_hat/phi0 - 1)^2)
  double median_phi_ratio = 0.0; // median |phi_hat/phi0 - 1|
  std::size_t excluded = 0;
};

struct RateStudy {
  std::vector<RatePoint> points;
  /// Least-squares slope of log rmse_theta on log sqrt(ln n / n).
  double slope = 0.0;
};

RateStudy rate_study(const ExperimentConfig& base, std::span<const int> grid_sides,
                     const ProgressFn& progress = {});

struct NormalityStats {
  std::string name;
  std::vector<double> standardized;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 0.0;
};

/// Standardizes by the sample mean and SD, then reports moments and the KS
/// distance to N(0, 1).
NormalityStats normality_statistics(std::string name, std::span<const double> samples);

/// sqrt(n) (theta_hat - theta0) per coordinate over non-excluded replicates.
/// Requires at least 200 replicates.
std::vector<NormalityStats> normality_study(const ExperimentConfig& cfg,
                                            const ProgressFn& progress = {});

enum class CltMatrix { RandomSymmetric, Identity };

struct QuadraticCltPoint {
  std::size_t n = 0;
  std::vector<double> psi;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double ks_statistic = 0.0;  // against N(0, 2)
  double ks_pvalue = 0.0;
};

/// Psi_n = (Z' A Z - tr A) / |A|_F over R standard normal Z, one fixed A per n.
std::vector<QuadraticCltPoint> quadratic_clt_check(std::span<const std::size_t> sizes,
                                                   std::uint64_t seed, std::size_t replicates,
                                                   CltMatrix kind = CltMatrix::RandomSymmetric);

struct GradientStudy {
  std::vector<double> mean;            // per coordinate of (phi, theta)
  std::vector<double> standard_error;
  std::size_t replicates = 0;
};

/// Monte Carlo mean of the finite-difference gradient of F_n at the true
/// (phi0, theta0). Uses `cfg.features` spectral features per replicate.
GradientStudy stationary_gradient_study(const ExperimentConfig& cfg, std::size_t replicates);

/// Kolmogorov distribution tail P(K > x) with the small-sample correction of
/// Stephens applied to the statistic.
double ks_pvalue(double statistic, std::size_t n);

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

}  // namespace acs
