#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "acs/parallel.hpp"
#include "acs/rng.hpp"
#include "acs/sampling.hpp"

namespace acs {

SiteSet::SiteSet(int dim, std::vector<double> coords, LatticeMeta meta)
    : dim_(dim), coords_(std::move(coords)), meta_(meta) {
  if (dim < 1) throw std::invalid_argument("SiteSet: dim must be >= 1");
  if (coords_.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument("SiteSet: coordinate count is not a multiple of dim");
}

double SiteSet::min_pairwise_distance() const {
  const std::size_t n = size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = site(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = site(j);
      double sq = 0.0;
      for (int k = 0; k < dim_; ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
      best = std::min(best, sq);
    }
  }
  return std::sqrt(best);
}

SiteSet make_perturbed_lattice(int N, int dim, double delta, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("lattice: N must be >= 1");
  if (dim < 1) throw std::invalid_argument("lattice: d must be >= 1");
  if (!(delta >= 0.0 && delta < 0.5))
    throw std::invalid_argument("lattice: delta must lie in [0, 1/2)");

  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(N);

  auto rng = CounterRng(seed).stream("lattice");
  std::vector<double> coords(n * static_cast<std::size_t>(dim));
  std::vector<int> index(static_cast<std::size_t>(dim), 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) {
      const double p = 2.0 * rng.uniform() - 1.0;
      coords[i * dim + k] = index[k] + delta * p;
    }
    for (int k = dim - 1; k >= 0; --k) {
      if (++index[k] <= N) break;
      index[k] = 1;
    }
  }
  return SiteSet(dim, std::move(coords), LatticeMeta{N, dim, delta, seed});
}

double matern_radius_icdf(double u, double nu) {
  if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("matern_radius_icdf: u must lie in [0, 1)");
  if (!(nu > 0.0)) throw std::domain_error("matern_radius_icdf: nu must be positive");
  // expm1/log1p keep the small-u end accurate.
  return std::sqrt(std::expm1(-std::log1p(-u) / nu));
}

namespace {

void draw_standard_normal(CounterRng& rng, std::normal_distribution<double>& normal,
                          std::span<double> out) {
  for (double& v : out) v = normal(rng);
}

}  // namespace

SpectralFeatures sample_frequencies(const KernelFamily& family, const Anisotropy& aniso,
                                    std::size_t p, std::uint64_t seed, MaternSampler sampler) {
  validate(family);
  if (p < 1) throw std::invalid_argument("sample_frequencies: p must be >= 1");
  const int d = aniso.dim();
  if (const auto* rq = std::get_if<RationalQuadratic>(&family); rq && rq->dim != d)
    throw std::invalid_argument("sample_frequencies: rational quadratic dim does not match anisotropy");
  if (std::holds_alternative<PoweredExponential>(family))
    throw std::invalid_argument("spectral sampler unavailable for powered_exponential");

  const CounterRng root(seed);
  auto freq_rng = root.stream("frequencies");
  auto phase_rng = root.stream("phases");

  SpectralFeatures f;
  f.dim = d;
  f.omegas.resize(p * static_cast<std::size_t>(d));
  f.phases.resize(p);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> base(static_cast<std::size_t>(d));
  const double nu = fractal_index(family);

  if (std::holds_alternative<Matern>(family)) {
    if (sampler == MaternSampler::Auto) sampler = d == 2 ? MaternSampler::Polar : MaternSampler::ChiSquare;
    if (sampler == MaternSampler::Polar && d != 2)
      throw std::invalid_argument("sample_frequencies: polar Matern sampler requires d == 2");
    std::gamma_distribution<double> chi_sq(nu, 2.0);  // chi^2 with 2 nu dof
    for (std::size_t k = 0; k < p; ++k) {
      draw_standard_normal(freq_rng, normal, base);
      if (sampler == MaternSampler::Polar) {
        const double norm = std::hypot(base[0], base[1]);
        const double r = matern_radius_icdf(freq_rng.uniform(), nu);
        base[0] *= r / norm;
        base[1] *= r / norm;
      } else {
        const double scale = 1.0 / std::sqrt(chi_sq(freq_rng));
        for (double& v : base) v *= scale;
      }
      aniso.apply(base, std::span<double>(f.omegas).subspan(k * d, d));
    }
  } else {
    // (1 + u^2)^-a is a Gamma(a, 1) mixture of exp(-s u^2), the characteristic
    // function of N(0, 2 s I).
    std::gamma_distribution<double> mixing(0.5 * d + nu, 1.0);
    for (std::size_t k = 0; k < p; ++k) {
      const double scale = std::sqrt(2.0 * mixing(freq_rng));
      draw_standard_normal(freq_rng, normal, base);
      for (double& v : base) v *= scale;
      aniso.apply(base, std::span<double>(f.omegas).subspan(k * d, d));
    }
  }

  for (std::size_t k = 0; k < p; ++k)
    f.phases[k] = std::numbers::pi * (2.0 * phase_rng.uniform() - 1.0);
  return f;
}

std::vector<double> evaluate_features(const SiteSet& sites, const SpectralFeatures& features,
                                      double phi, unsigned workers) {
  if (features.size() < 1) throw std::invalid_argument("evaluate_features: no features");
  if (features.dim != sites.dim())
    throw std::invalid_argument("evaluate_features: feature and site dimensions differ");
  if (!(phi > 0.0)) throw std::invalid_argument("evaluate_features: phi must be positive");

  const std::size_t n = sites.size();
  const std::size_t p = features.size();
  const int d = sites.dim();
  const double amplitude = std::sqrt(phi) * std::sqrt(2.0 / static_cast<double>(p));
  std::vector<double> y(n);

  constexpr std::size_t kSitesPerTask = 64;
  const std::size_t n_tasks = (n + kSitesPerTask - 1) / kSitesPerTask;
  parallel_for(n_tasks, workers, [&](std::size_t task) {
    const std::size_t begin = task * kSitesPerTask;
    const std::size_t end = std::min(n, begin + kSitesPerTask);
    for (std::size_t i = begin; i < end; ++i) {
      const auto s = sites.site(i);
      double total = 0.0;
      for (std::size_t c0 = 0; c0 < p; c0 += kFeatureChunk) {
        const std::size_t c1 = std::min(p, c0 + kFeatureChunk);
        double chunk = 0.0;
        if (d == 2) {
          const double sx = s[0];
          const double sy = s[1];
          const double* w = features.omegas.data();
          for (std::size_t k = c0; k < c1; ++k)
            chunk += std::cos(w[2 * k] * sx + w[2 * k + 1] * sy + features.phases[k]);
        } else {
          for (std::size_t k = c0; k < c1; ++k) {
            const auto w = features.omega(k);
            double arg = features.phases[k];
            for (int j = 0; j < d; ++j) arg += w[j] * s[j];
            chunk += std::cos(arg);
          }
        }
        total += chunk;
      }
      y[i] = amplitude * total;
    }
  });
  return y;
}

FieldSample simulate_field(const SiteSet& sites, const KernelFamily& family,
                           const Anisotropy& aniso, double phi, std::size_t p, std::uint64_t seed,
                           unsigned workers) {
  if (sites.dim() != aniso.dim())
    throw std::invalid_argument("simulate_field: site and anisotropy dimensions differ");
  const auto features = sample_frequencies(family, aniso, p, seed);
  FieldSample out;
  out.sites = sites;
  out.y = evaluate_features(sites, features, phi, workers);
  out.provenance = Provenance{family, aniso, phi, p, seed};
  return out;
}

}  // namespace acs
