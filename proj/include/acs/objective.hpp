#pragma once

#include <functional>
#include <span>
#include <vector>

#include "acs/kernels.hpp"
#include "acs/sampling.hpp"

namespace acs {

/// Y' K_n(theta) Y and |K_n(theta)|_F^2 for one theta.
struct QuadraticSummary {
  double yky = 0.0;
  double k_frob_sq = 0.0;
  std::size_t n = 0;

  bool operator==(const QuadraticSummary&) const = default;
};

/// Rows of the pair triangle are processed in fixed blocks of this many rows;
/// block partial sums are combined in ascending block order.
inline constexpr std::size_t kRowBlock = 256;

/// A sample prepared for repeated matrix-free evaluation: sites sorted
/// lexicographically (ties broken by y) so that results do not depend on the
/// input order of the sites.
class SortedSample {
public:
  SortedSample(const SiteSet& sites, std::span<const double> y);

  std::size_t size() const { return y_.size(); }
  int dim() const { return dim_; }

  /// Sums all n(n-1)/2 pairs without forming K_n. Bit-identical for any
  /// `workers`.
  QuadraticSummary summarize(const RadialProfile& profile, const Anisotropy& aniso,
                             unsigned workers = 0) const;

private:
  int dim_;
  std::vector<double> coords_;
  std::vector<double> y_;
};

/// Throws std::invalid_argument when y and sites differ in length.
QuadraticSummary quadratic_summary(std::span<const double> y, const SiteSet& sites,
                                   const KernelFamily& family, const Anisotropy& aniso,
                                   unsigned workers = 0);

/// (1/n) (phi yky - phi^2/2 |K|_F^2)
double f_n(const QuadraticSummary& s, double phi);
double f_n(std::span<const double> y, const SiteSet& sites, const KernelFamily& family,
           const Anisotropy& aniso, double phi, unsigned workers = 0);

/// yky / |K|_F, the objective after maximizing phi out.
double g_n(const QuadraticSummary& s);
double g_n(std::span<const double> y, const SiteSet& sites, const KernelFamily& family,
           const Anisotropy& aniso, unsigned workers = 0);

struct PhiEstimate {
  double value = 0.0;
  bool at_boundary = false;  // clamped into [phi_min, phi_max]
};

/// yky / |K|_F^2 clamped into [phi_min, phi_max].
PhiEstimate phi_hat(const QuadraticSummary& s, double phi_min, double phi_max);
PhiEstimate phi_hat(std::span<const double> y, const SiteSet& sites, const KernelFamily& family,
                    const Anisotropy& aniso, double phi_min, double phi_max, unsigned workers = 0);

using VectorObjective = std::function<double(std::span<const double>)>;

/// Finite-difference gradient: central where theta +/- step both stay in
/// [lo, hi], one-sided at faces. Throws std::invalid_argument for zero-width
/// box dimensions.
std::vector<double> fd_gradient(const VectorObjective& objective, std::span<const double> theta,
                                double step, std::span<const double> lo,
                                std::span<const double> hi);

}  // namespace acs
