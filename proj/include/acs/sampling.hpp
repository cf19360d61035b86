#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "acs/kernels.hpp"

namespace acs {

struct LatticeMeta {
  int N = 0;
  int dim = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const LatticeMeta&) const = default;
};

/// Ordered sampling locations in R^d, stored row-major (n x d).
class SiteSet {
public:
  SiteSet() = default;
  SiteSet(int dim, std::vector<double> coords, LatticeMeta meta = {});

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / static_cast<std::size_t>(dim_); }
  int dim() const { return dim_; }
  std::span<const double> site(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> coords() const { return coords_; }
  const LatticeMeta& meta() const { return meta_; }

  /// Brute-force O(n^2) minimum pairwise distance.
  double min_pairwise_distance() const;

  bool operator==(const SiteSet&) const = default;

private:
  int dim_ = 0;
  std::vector<double> coords_;
  LatticeMeta meta_;
};

/// Sites v_i + delta * p_i with v_i enumerating {1..N}^d in row-major order
/// (last coordinate fastest) and p_i uniform on [-1, 1]^d from the "lattice"
/// stream of `seed`. Rejects delta outside [0, 1/2).
SiteSet make_perturbed_lattice(int N, int dim, double delta, std::uint64_t seed);

/// How a simulated sample was produced.
struct Provenance {
  KernelFamily family;
  Anisotropy anisotropy;
  double phi;
  std::size_t features;
  std::uint64_t seed;
};

struct FieldSample {
  SiteSet sites;
  std::vector<double> y;
  std::optional<Provenance> provenance;
};

/// Frequencies are stored row-major (p x d), in radians per coordinate unit.
struct SpectralFeatures {
  int dim = 0;
  std::vector<double> omegas;
  std::vector<double> phases;

  std::size_t size() const { return phases.size(); }
  std::span<const double> omega(std::size_t k) const {
    return {omegas.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

/// Inverse of F(r) = 1 - (1 + r^2)^-nu, the radius law of the 2-D Matern
/// spectral density: r = sqrt((1 - u)^(-1/nu) - 1).
double matern_radius_icdf(double u, double nu);

enum class MaternSampler {
  Auto,        // Polar for d == 2, ChiSquare otherwise
  Polar,       // uniform direction + inverse-CDF radius; d == 2 only
  ChiSquare,   // z / sqrt(W), W ~ chi^2(2 nu); any d
};

/// Draws p frequencies from the kernel's spectral density (omega = B omega')
/// and p phases uniform on [-pi, pi]. Frequencies use the "frequencies" stream
/// of `seed`, phases the "phases" stream. Powered exponential has no sampler
/// and raises std::invalid_argument.
SpectralFeatures sample_frequencies(const KernelFamily& family, const Anisotropy& aniso,
                                    std::size_t p, std::uint64_t seed,
                                    MaternSampler sampler = MaternSampler::Auto);

/// Features are summed per site in fixed chunks of this size, in order.
inline constexpr std::size_t kFeatureChunk = 4096;

/// y_i = sqrt(phi) sqrt(2/p) sum_k cos(<omega_k, s_i> + xi_k).
std::vector<double> evaluate_features(const SiteSet& sites, const SpectralFeatures& features,
                                      double phi, unsigned workers = 0);

/// Spectral simulation of a zero-mean stationary field with covariance
/// phi * K(|B h|). Deterministic given `seed`, for any worker count.
FieldSample simulate_field(const SiteSet& sites, const KernelFamily& family,
                           const Anisotropy& aniso, double phi, std::size_t p, std::uint64_t seed,
                           unsigned workers = 0);

}  // namespace acs
