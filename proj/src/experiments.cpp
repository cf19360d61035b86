#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "acs/errors.hpp"
#include "acs/experiments.hpp"
#include "acs/parallel.hpp"
#include "acs/rng.hpp"

namespace acs {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

void ExperimentConfig::validate() const {
  acs::validate(family);
  if (replicates < 1) throw std::invalid_argument("experiment: replicates must be >= 1");
  if (N < 1 || dim < 1) throw std::invalid_argument("experiment: N and dim must be >= 1");
  if (!(delta >= 0.0 && delta < 0.5)) throw std::invalid_argument("experiment: delta must lie in [0, 1/2)");
  if (features < 1) throw std::invalid_argument("experiment: features must be >= 1");
  if (const auto* rq = std::get_if<RationalQuadratic>(&family); rq && rq->dim != dim)
    throw std::invalid_argument("experiment: rational quadratic dim must equal the lattice dimension");
  bounds.validate();
  optimizer.validate();
  if (truth.theta.size() != static_cast<std::size_t>(parameter_count(form, dim)))
    throw std::invalid_argument("experiment: true theta has the wrong number of coordinates");
  if (bounds.size() != truth.theta.size())
    throw std::invalid_argument("experiment: bounds and true theta differ in size");
  if (!bounds.contains(truth)) throw std::invalid_argument("experiment: true parameters lie outside the bounds");
  if (form == AnisotropyForm::FullMatrix) {
    const auto a = Anisotropy::from_params(form, dim, truth.theta);
    Anisotropy::full_matrix(std::vector<double>(a.matrix().begin(), a.matrix().end()), dim);
  } else {
    (void)Anisotropy::from_params(form, dim, truth.theta);
  }
}

const ParameterSummary& ExperimentReport::parameter(const std::string& name) const {
  for (const auto& p : summary)
    if (p.name == name) return p;
  throw std::out_of_range("experiment report has no parameter '" + name + "'");
}

std::vector<std::string> theta_names(AnisotropyForm form, int dim) {
  switch (form) {
    case AnisotropyForm::Isotropic:
      return {"theta"};
    case AnisotropyForm::DiagonalRanges:
      return {"theta", "rho"};
    case AnisotropyForm::FullMatrix: {
      std::vector<std::string> names;
      for (int i = 1; i <= dim; ++i)
        for (int j = i; j <= dim; ++j) names.push_back("b" + std::to_string(i) + std::to_string(j));
      return names;
    }
  }
  return {};
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  return CounterRng(master).child(index).key();
}

ExperimentReport run_replicated(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto T = static_cast<std::size_t>(cfg.replicates);
  const unsigned workers = resolve_workers(cfg.workers);
  // Parallelize across replicates when there are several; otherwise inside
  // the objective. Results do not depend on this choice.
  const unsigned outer = T > 1 ? workers : 1;
  const unsigned inner = T > 1 ? 1 : workers;
  const auto truth_aniso = Anisotropy::from_params(cfg.form, cfg.dim, cfg.truth.theta);

  ExperimentReport report;
  report.replicates.resize(T);
  std::mutex mutex;
  parallel_for(T, outer, [&](std::size_t r) {
    ReplicateRecord rec;
    rec.index = static_cast<int>(r);
    rec.seed = replicate_seed(cfg.seed, r);

    const auto t0 = std::chrono::steady_clock::now();
    const auto sites = make_perturbed_lattice(cfg.N, cfg.dim, cfg.delta, rec.seed);
    const auto sample =
        simulate_field(sites, cfg.family, truth_aniso, cfg.truth.phi, cfg.features, rec.seed, inner);
    const double t_sim = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const auto est = estimate(sample, cfg.family, cfg.form, cfg.bounds, cfg.optimizer, inner);
    const double t_est = seconds_since(t1);

    rec.phi_hat = est.phi_hat;
    rec.theta_hat = est.theta_hat;
    rec.boundary_hit = est.boundary_hit();
    rec.converged = est.outcome.converged;
    rec.iterations = est.outcome.iterations;
    rec.objective_value = est.objective_value;

    std::lock_guard lock(mutex);
    report.times.simulate_seconds += t_sim;
    report.times.estimate_seconds += t_est;
    report.replicates[r] = rec;
    if (progress) progress(rec);
  });

  std::size_t n = 1;
  for (int k = 0; k < cfg.dim; ++k) n *= static_cast<std::size_t>(cfg.N);
  report.n = n;

  const auto names = theta_names(cfg.form, cfg.dim);
  std::vector<ParameterSummary> summary;
  summary.push_back({"sigma", std::sqrt(cfg.truth.phi), 0.0, 0.0});
  summary.push_back({"phi", cfg.truth.phi, 0.0, 0.0});
  for (std::size_t j = 0; j < names.size(); ++j) summary.push_back({names[j], cfg.truth.theta[j], 0.0, 0.0});

  std::size_t kept = 0;
  for (const auto& rec : report.replicates) {
    if (rec.boundary_hit) {
      ++report.excluded_count;
      continue;
    }
    ++kept;
    std::vector<double> values = {std::sqrt(rec.phi_hat), rec.phi_hat};
    values.insert(values.end(), rec.theta_hat.begin(), rec.theta_hat.end());
    for (std::size_t j = 0; j < summary.size(); ++j) {
      summary[j].mean += values[j];
      summary[j].rmse += (values[j] - summary[j].truth) * (values[j] - summary[j].truth);
    }
  }
  if (kept == 0) throw std::runtime_error("experiment: every replicate hit the parameter boundary");
  for (auto& s : summary) {
    s.mean /= static_cast<double>(kept);
    s.rmse = std::sqrt(s.rmse / static_cast<double>(kept));
  }
  report.summary = std::move(summary);
  return report;
}

RateStudy rate_study(const ExperimentConfig& base, std::span<const int> grid_sides,
                     const ProgressFn& progress) {
  if (grid_sides.size() < 3) throw std::invalid_argument("rate_study: need at least 3 grid sizes");
  RateStudy study;
  for (int N : grid_sides) {
    ExperimentConfig cfg = base;
    cfg.N = N;
    const auto report = run_replicated(cfg, progress);

    RatePoint pt;
    pt.N = N;
    pt.n = report.n;
    pt.excluded = report.excluded_count;
    double sq_theta = 0.0;
    double sq_phi = 0.0;
    std::vector<double> phi_err;
    for (const auto& rec : report.replicates) {
      if (rec.boundary_hit) continue;
      for (std::size_t j = 0; j < rec.theta_hat.size(); ++j) {
        const double e = rec.theta_hat[j] - cfg.truth.theta[j];
        sq_theta += e * e;
      }
      const double ratio = rec.phi_hat / cfg.truth.phi - 1.0;
      sq_phi += ratio * ratio;
      phi_err.push_back(std::abs(ratio));
    }
    const auto kept = static_cast<double>(phi_err.size());
    pt.rmse_theta = std::sqrt(sq_theta / kept);
    pt.rmse_phi_ratio = std::sqrt(sq_phi / kept);
    pt.median_phi_ratio = median(phi_err);
    study.points.push_back(pt);
  }

  // OLS slope of log rmse on log sqrt(ln n / n).
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& pt : study.points) {
    const auto n = static_cast<double>(pt.n);
    xs.push_back(std::log(std::sqrt(std::log(n) / n)));
    ys.push_back(std::log(pt.rmse_theta));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  study.slope = sxy / sxx;
  return study;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

NormalityStats normality_statistics(std::string name, std::span<const double> samples) {
  if (samples.size() < 3) throw std::invalid_argument("normality: need at least 3 samples");
  const auto n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double x : samples) {
    const double c = x - mean;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  NormalityStats out;
  out.name = std::move(name);
  out.skewness = m3 / std::pow(m2, 1.5);
  out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  const double sd = std::sqrt(m2 * n / (n - 1.0));
  out.standardized.reserve(samples.size());
  for (double x : samples) out.standardized.push_back((x - mean) / sd);
  out.ks_statistic = ks_statistic(out.standardized, normal_cdf);
  out.ks_pvalue = ks_pvalue(out.ks_statistic, samples.size());
  return out;
}

std::vector<NormalityStats> normality_study(const ExperimentConfig& cfg, const ProgressFn& progress) {
  if (cfg.replicates < 200)
    throw PreconditionError("normality_study: requires at least 200 replicates, got " +
                            std::to_string(cfg.replicates));
  const auto report = run_replicated(cfg, progress);
  const double root_n = std::sqrt(static_cast<double>(report.n));
  const auto names = theta_names(cfg.form, cfg.dim);
  std::vector<NormalityStats> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> scaled;
    for (const auto& rec : report.replicates)
      if (!rec.boundary_hit) scaled.push_back(root_n * (rec.theta_hat[j] - cfg.truth.theta[j]));
    out.push_back(normality_statistics(names[j], scaled));
  }
  return out;
}

std::vector<QuadraticCltPoint> quadratic_clt_check(std::span<const std::size_t> sizes,
                                                   std::uint64_t seed, std::size_t replicates,
                                                   CltMatrix kind) {
  if (replicates < 2) throw std::invalid_argument("quadratic_clt_check: need at least 2 replicates");
  std::vector<QuadraticCltPoint> out;
  for (std::size_t n : sizes) {
    if (n < 1) throw std::invalid_argument("quadratic_clt_check: n must be >= 1");
    const auto root = CounterRng(seed).child(n);
    auto matrix_rng = root.stream("matrix");
    auto vector_rng = root.stream("vectors");
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(ni, ni);
    if (kind == CltMatrix::RandomSymmetric) {
      for (Eigen::Index i = 0; i < ni; ++i)
        for (Eigen::Index j = i; j < ni; ++j) a(i, j) = a(j, i) = normal(matrix_rng);
    }
    const double trace = a.trace();
    const double frob = a.norm();

    QuadraticCltPoint pt;
    pt.n = n;
    pt.psi.reserve(replicates);
    Eigen::VectorXd z(ni);
    for (std::size_t r = 0; r < replicates; ++r) {
      for (Eigen::Index i = 0; i < ni; ++i) z(i) = normal(vector_rng);
      pt.psi.push_back((z.dot(a * z) - trace) / frob);
    }
    const auto R = static_cast<double>(replicates);
    pt.mean = std::accumulate(pt.psi.begin(), pt.psi.end(), 0.0) / R;
    double m2 = 0.0;
    double m3 = 0.0;
    for (double v : pt.psi) {
      m2 += (v - pt.mean) * (v - pt.mean);
      m3 += std::pow(v - pt.mean, 3);
    }
    pt.variance = m2 / (R - 1.0);
    pt.skewness = (m3 / R) / std::pow(m2 / R, 1.5);
    pt.ks_statistic = ks_statistic(pt.psi, [](double x) { return normal_cdf(x / std::numbers::sqrt2); });
    pt.ks_pvalue = ks_pvalue(pt.ks_statistic, replicates);
    out.push_back(std::move(pt));
  }
  return out;
}

GradientStudy stationary_gradient_study(const ExperimentConfig& cfg, std::size_t replicates) {
  cfg.validate();
  if (replicates < 2) throw std::invalid_argument("stationary_gradient_study: need at least 2 replicates");
  const auto truth_aniso = Anisotropy::from_params(cfg.form, cfg.dim, cfg.truth.theta);
  const std::size_t m = cfg.truth.theta.size() + 1;

  std::vector<double> eta = {cfg.truth.phi};
  eta.insert(eta.end(), cfg.truth.theta.begin(), cfg.truth.theta.end());
  std::vector<double> lo = {cfg.bounds.phi_min};
  lo.insert(lo.end(), cfg.bounds.theta_lo.begin(), cfg.bounds.theta_lo.end());
  std::vector<double> hi = {cfg.bounds.phi_max};
  hi.insert(hi.end(), cfg.bounds.theta_hi.begin(), cfg.bounds.theta_hi.end());

  std::vector<std::vector<double>> grads(replicates);
  parallel_for(replicates, cfg.workers, [&](std::size_t r) {
    const auto seed = replicate_seed(cfg.seed, r);
    const auto sites = make_perturbed_lattice(cfg.N, cfg.dim, cfg.delta, seed);
    const auto sample = simulate_field(sites, cfg.family, truth_aniso, cfg.truth.phi, cfg.features, seed, 1);
    const ProfileObjective objective(sample, cfg.family, cfg.form, 1);
    auto f = [&](std::span<const double> p) { return objective.f_n(p[0], p.subspan(1)); };
    grads[r] = fd_gradient(f, eta, cfg.optimizer.fd_step, lo, hi);
  });

  GradientStudy study;
  study.replicates = replicates;
  study.mean.assign(m, 0.0);
  study.standard_error.assign(m, 0.0);
  const auto R = static_cast<double>(replicates);
  for (const auto& g : grads)
    for (std::size_t j = 0; j < m; ++j) study.mean[j] += g[j] / R;
  for (const auto& g : grads)
    for (std::size_t j = 0; j < m; ++j) study.standard_error[j] += (g[j] - study.mean[j]) * (g[j] - study.mean[j]);
  for (auto& se : study.standard_error) se = std::sqrt(se / (R - 1.0) / R);
  return study;
}

}  // namespace acs
