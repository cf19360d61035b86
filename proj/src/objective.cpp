#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "acs/objective.hpp"
#include "acs/parallel.hpp"

namespace acs {

namespace {

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

struct BlockSums {
  CompensatedSum yky;
  CompensatedSum kk;
};

}  // namespace

SortedSample::SortedSample(const SiteSet& sites, std::span<const double> y) : dim_(sites.dim()) {
  const std::size_t n = sites.size();
  if (y.size() != n)
    throw std::invalid_argument("quadratic_summary: y has " + std::to_string(y.size()) +
                                " values for " + std::to_string(n) + " sites");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto sa = sites.site(a);
    const auto sb = sites.site(b);
    for (int k = 0; k < dim_; ++k)
      if (sa[k] != sb[k]) return sa[k] < sb[k];
    return y[a] < y[b];
  });
  coords_.resize(n * static_cast<std::size_t>(dim_));
  y_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = sites.site(order[i]);
    std::copy(s.begin(), s.end(), coords_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
    y_[i] = y[order[i]];
  }
}

QuadraticSummary SortedSample::summarize(const RadialProfile& profile, const Anisotropy& aniso,
                                         unsigned workers) const {
  if (aniso.dim() != dim_)
    throw std::invalid_argument("quadratic_summary: anisotropy dimension does not match sites");
  const std::size_t n = size();
  const auto d = static_cast<std::size_t>(dim_);

  // |B(s_i - s_j)| = |B s_i - B s_j|, so map the sites once.
  std::vector<double> mapped(n * d);
  for (std::size_t i = 0; i < n; ++i)
    aniso.apply(std::span<const double>(coords_).subspan(i * d, d),
                std::span<double>(mapped).subspan(i * d, d));

  const std::size_t n_blocks = (n + kRowBlock - 1) / kRowBlock;
  std::vector<BlockSums> blocks(n_blocks);
  parallel_for(n_blocks, workers, [&](std::size_t b) {
    BlockSums acc;
    const std::size_t row_end = std::min(n, (b + 1) * kRowBlock);
    for (std::size_t i = b * kRowBlock; i < row_end; ++i) {
      const double yi = y_[i];
      const double* si = mapped.data() + i * d;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double* sj = mapped.data() + j * d;
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = si[k] - sj[k];
          sq += diff * diff;
        }
        const double kij = profile(std::sqrt(sq));
        acc.yky.add(kij * yi * y_[j]);
        acc.kk.add(kij * kij);
      }
    }
    blocks[b] = acc;
  });

  CompensatedSum yky;
  CompensatedSum kk;
  for (const auto& blk : blocks) {
    yky.add(blk.yky.sum);
    yky.add(blk.yky.carry);
    kk.add(blk.kk.sum);
    kk.add(blk.kk.carry);
  }
  CompensatedSum diag;
  for (double v : y_) diag.add(v * v);

  QuadraticSummary out;
  out.n = n;
  out.yky = diag.value() + 2.0 * yky.value();
  out.k_frob_sq = static_cast<double>(n) + 2.0 * kk.value();
  return out;
}

QuadraticSummary quadratic_summary(std::span<const double> y, const SiteSet& sites,
                                   const KernelFamily& family, const Anisotropy& aniso,
                                   unsigned workers) {
  return SortedSample(sites, y).summarize(RadialProfile(family), aniso, workers);
}

double f_n(const QuadraticSummary& s, double phi) {
  return (phi * s.yky - 0.5 * phi * phi * s.k_frob_sq) / static_cast<double>(s.n);
}

double f_n(std::span<const double> y, const SiteSet& sites, const KernelFamily& family,
           const Anisotropy& aniso, double phi, unsigned workers) {
  return f_n(quadratic_summary(y, sites, family, aniso, workers), phi);
}

double g_n(const QuadraticSummary& s) { return s.yky / std::sqrt(s.k_frob_sq); }

double g_n(std::span<const double> y, const SiteSet& sites, const KernelFamily& family,
           const Anisotropy& aniso, unsigned workers) {
  return g_n(quadratic_summary(y, sites, family, aniso, workers));
}

PhiEstimate phi_hat(const QuadraticSummary& s, double phi_min, double phi_max) {
  const double raw = s.yky / s.k_frob_sq;
  if (raw < phi_min) return {phi_min, true};
  if (raw > phi_max) return {phi_max, true};
  return {raw, false};
}

PhiEstimate phi_hat(std::span<const double> y, const SiteSet& sites, const KernelFamily& family,
                    const Anisotropy& aniso, double phi_min, double phi_max, unsigned workers) {
  return phi_hat(quadratic_summary(y, sites, family, aniso, workers), phi_min, phi_max);
}

std::vector<double> fd_gradient(const VectorObjective& objective, std::span<const double> theta,
                                double step, std::span<const double> lo,
                                std::span<const double> hi) {
  const std::size_t m = theta.size();
  if (lo.size() != m || hi.size() != m)
    throw std::invalid_argument("fd_gradient: bounds and theta differ in size");
  if (!(step > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  for (std::size_t j = 0; j < m; ++j)
    if (!(hi[j] > lo[j]))
      throw std::invalid_argument("fd_gradient: zero-width box in dimension " + std::to_string(j));

  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(m);
  double f0 = 0.0;
  bool have_f0 = false;
  auto center = [&] {
    if (!have_f0) {
      f0 = objective(theta);
      have_f0 = true;
    }
    return f0;
  };
  auto eval_at = [&](std::size_t j, double v) {
    point[j] = v;
    const double f = objective(point);
    point[j] = theta[j];
    return f;
  };

  for (std::size_t j = 0; j < m; ++j) {
    const double up = theta[j] + step;
    const double down = theta[j] - step;
    if (up <= hi[j] && down >= lo[j]) {
      grad[j] = (eval_at(j, up) - eval_at(j, down)) / (up - down);
    } else if (up <= hi[j]) {
      grad[j] = (eval_at(j, up) - center()) / (up - theta[j]);
    } else if (down >= lo[j]) {
      grad[j] = (center() - eval_at(j, down)) / (theta[j] - down);
    } else {
      // Box narrower than the step: difference across the whole box.
      grad[j] = (eval_at(j, hi[j]) - eval_at(j, lo[j])) / (hi[j] - lo[j]);
    }
  }
  return grad;
}

}  // namespace acs
