#include <cmath>
#include <stdexcept>

#include "acs/estimation.hpp"

namespace acs {

ProfileObjective::ProfileObjective(const FieldSample& sample, KernelFamily family,
                                   AnisotropyForm form, unsigned workers)
    : sorted_(sample.sites, sample.y),
      family_(std::move(family)),
      profile_(family_),
      form_(form),
      workers_(workers) {
  if (sorted_.size() == 0) throw std::invalid_argument("estimate: sample is empty");
}

QuadraticSummary ProfileObjective::summary(std::span<const double> theta) const {
  return sorted_.summarize(profile_, Anisotropy::from_params(form_, sorted_.dim(), theta),
                           workers_);
}

EstimationResult estimate(const FieldSample& sample, const KernelFamily& family,
                          AnisotropyForm form, const ParameterBounds& bounds,
                          const OptimizerConfig& cfg, unsigned workers) {
  bounds.validate();
  const ProfileObjective objective(sample, family, form, workers);
  const auto m = static_cast<std::size_t>(parameter_count(form, objective.dim()));
  if (bounds.size() != m)
    throw std::invalid_argument("estimate: bounds have " + std::to_string(bounds.size()) +
                                " theta coordinates, " + to_string(form) + " needs " +
                                std::to_string(m));

  EstimationResult result;
  if (m == 1) {
    result.outcome = maximize_scalar(
        [&](double t) { return objective.g_n(std::span<const double>(&t, 1)); },
        bounds.theta_lo[0], bounds.theta_hi[0], cfg);
  } else {
    result.outcome = maximize_box([&](std::span<const double> t) { return objective.g_n(t); },
                                  bounds.theta_lo, bounds.theta_hi, cfg);
  }
  result.theta_hat = result.outcome.argmax;

  const auto summary = objective.summary(result.theta_hat);
  const auto phi = phi_hat(summary, bounds.phi_min, bounds.phi_max);
  result.phi_hat = phi.value;
  result.phi_at_boundary = phi.at_boundary;
  result.objective_value = g_n(summary);
  return result;
}

std::vector<std::vector<double>> make_grid(std::span<const GridAxis> axes) {
  if (axes.empty()) throw std::invalid_argument("grid: no axes");
  for (const auto& ax : axes)
    if (ax.count < 1 || !(ax.hi >= ax.lo))
      throw std::invalid_argument("grid: each axis needs count >= 1 and hi >= lo");

  std::vector<std::vector<double>> out;
  std::vector<int> idx(axes.size(), 0);
  for (;;) {
    std::vector<double> point(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& ax = axes[a];
      point[a] = ax.count == 1 ? ax.lo : ax.lo + (ax.hi - ax.lo) * idx[a] / (ax.count - 1);
    }
    out.push_back(std::move(point));
    std::size_t a = axes.size();
    while (a-- > 0) {
      if (++idx[a] < axes[a].count) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
  }
}

std::vector<CurvePoint> sweep_objective(const FieldSample& sample, const KernelFamily& family,
                                        AnisotropyForm form,
                                        const std::vector<std::vector<double>>& grid,
                                        unsigned workers) {
  if (grid.empty()) throw std::invalid_argument("sweep: grid is empty");
  const ProfileObjective objective(sample, family, form, workers);
  const double root_n = std::sqrt(static_cast<double>(objective.size()));
  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  for (const auto& theta : grid) curve.push_back({theta, objective.g_n(theta) / root_n});
  return curve;
}

int count_interior_maxima(std::span<const double> values) {
  int count = 0;
  int last_sign = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double diff = values[i] - values[i - 1];
    const int sign = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
    if (sign == 0) continue;
    if (last_sign == 1 && sign == -1) ++count;
    last_sign = sign;
  }
  return count;
}

}  // namespace acs
