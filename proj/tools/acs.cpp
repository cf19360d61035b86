// acs: simulate, estimate, sweep, experiment, check.
//
// Exit codes: 0 ok, 1 a diagnostic failed or internal error, 2 boundary hit,
// 3 no convergence, 4 input error, 5 precondition, 64 usage.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "acs/config.hpp"
#include "acs/errors.hpp"
#include "acs/io.hpp"
#include "acs/parallel.hpp"

namespace {

using nlohmann::json;
namespace cfg = acs::config;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitBoundary = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitInput = 4;
constexpr int kExitPrecondition = 5;
constexpr int kExitUsage = 64;

json document(const cfg::RunConfig& config) {
  return {{"format_version", acs::io::kFormatVersion}, {"config", cfg::to_json(config)}};
}

template <class T>
const T& expect(const cfg::RunConfig& config, const std::string& command) {
  if (const auto* c = std::get_if<T>(&config)) return *c;
  throw acs::UsageError("config is for '" + cfg::command_name(config) + "', not '" + command + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void emit(const std::string& text, const std::string& out) {
  if (out.empty())
    std::cout << text << std::flush;
  else
    acs::io::write_file_atomic(out, text);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_simulate(const std::string& config_path, const std::string& out, unsigned workers) {
  const auto config = cfg::load(config_path);
  const auto& c = expect<cfg::SimulateConfig>(config, "simulate");
  const auto t0 = std::chrono::steady_clock::now();
  const auto sites = acs::make_perturbed_lattice(c.lattice.N, c.lattice.dim, c.lattice.delta, c.seed);
  const auto family = cfg::make_family(c.kernel, c.lattice.dim);
  const auto aniso = acs::Anisotropy::from_params(c.form, c.lattice.dim, c.theta);
  const auto sample = acs::simulate_field(sites, family, aniso, c.phi, c.features, c.seed, workers);

  json doc = document(config);
  doc["provenance"] = acs::io::provenance_to_json(*sample.provenance, sites.meta());
  acs::io::write_sample_csv(out, sample);
  acs::io::write_file_atomic(out + ".json", dump(doc));
  std::fprintf(stderr, "simulate: n=%zu in %.2fs -> %s\n", sample.y.size(), seconds_since(t0), out.c_str());
  return kExitOk;
}

int cmd_estimate(const std::string& sample_path, const std::string& config_path, const std::string& out,
                 unsigned workers) {
  const auto config = cfg::load(config_path);
  const auto& c = expect<cfg::EstimateConfig>(config, "estimate");
  const auto sample = acs::io::read_sample_csv(sample_path);
  const int dim = sample.sites.dim();
  const auto family = cfg::make_family(c.kernel, dim);
  const auto bounds = cfg::make_bounds(c.bounds, c.form, dim);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = acs::estimate(sample, family, c.form, bounds, c.optimizer, workers);

  json doc = document(config);
  doc["n"] = sample.y.size();
  doc["d"] = dim;
  doc["result"] = acs::io::estimation_to_json(result);
  emit(dump(doc), out);
  std::fprintf(stderr, "estimate: n=%zu, %d evaluations in %.2fs\n", sample.y.size(),
               result.outcome.evaluations, seconds_since(t0));
  if (result.boundary_hit()) return kExitBoundary;
  if (!result.outcome.converged) return kExitNoConvergence;
  return kExitOk;
}

int cmd_sweep(const std::string& sample_path, const std::string& config_path, const std::string& out,
              unsigned workers) {
  const auto config = cfg::load(config_path);
  const auto& c = expect<cfg::SweepConfig>(config, "sweep");
  const auto sample = acs::io::read_sample_csv(sample_path);
  const int dim = sample.sites.dim();
  if (c.grid.size() != static_cast<std::size_t>(acs::parameter_count(c.form, dim)))
    throw acs::InputError("config $.grid: expected " + std::to_string(acs::parameter_count(c.form, dim)) +
                          " axes for " + acs::to_string(c.form));
  const auto grid = acs::make_grid(c.grid);
  const auto curve = acs::sweep_objective(sample, cfg::make_family(c.kernel, dim), c.form, grid, workers);
  emit(acs::io::curve_to_csv(curve), out);
  if (!out.empty()) acs::io::write_file_atomic(out + ".json", dump(document(config)));
  return kExitOk;
}

json rate_json(const acs::RateStudy& study) {
  json points = json::array();
  for (const auto& p : study.points)
    points.push_back({{"N", p.N},
                      {"n", p.n},
                      {"rmse_theta", p.rmse_theta},
                      {"rmse_phi_ratio", p.rmse_phi_ratio},
                      {"median_phi_ratio", p.median_phi_ratio},
                      {"excluded", p.excluded}});
  return {{"points", points}, {"slope", study.slope}};
}

int cmd_experiment(const std::string& config_path, const std::string& out, unsigned workers) {
  const auto config = cfg::load(config_path);
  const auto& c = expect<cfg::ExperimentCommand>(config, "experiment");
  const auto t0 = std::chrono::steady_clock::now();
  const auto progress = [](const acs::ReplicateRecord& r) {
    std::fprintf(stderr, "replicate %d: phi_hat=%.6g theta_hat[0]=%.6g%s\n", r.index, r.phi_hat,
                 r.theta_hat.empty() ? 0.0 : r.theta_hat[0], r.boundary_hit ? " (boundary)" : "");
  };

  json doc = document(config);
  std::string csv;
  switch (c.study) {
    case cfg::Study::Replicated: {
      const auto exp = c.experiment(workers);
      const auto report = acs::run_replicated(exp, progress);
      doc["report"] = acs::io::report_to_json(report, exp.form, exp.dim);
      csv = acs::io::report_to_csv(report, exp.form, exp.dim);
      std::fprintf(stderr, "stages: simulate %.2fs, estimate %.2fs\n", report.times.simulate_seconds,
                   report.times.estimate_seconds);
      break;
    }
    case cfg::Study::Rate: {
      const auto study = acs::rate_study(c.experiment(workers), c.grid_sides, progress);
      doc["report"] = rate_json(study);
      csv = "N,n,rmse_theta,rmse_phi_ratio,median_phi_ratio,excluded\n";
      for (const auto& p : study.points)
        csv += std::to_string(p.N) + "," + std::to_string(p.n) + "," + acs::io::format_double(p.rmse_theta) +
               "," + acs::io::format_double(p.rmse_phi_ratio) + "," +
               acs::io::format_double(p.median_phi_ratio) + "," + std::to_string(p.excluded) + "\n";
      break;
    }
    case cfg::Study::Normality: {
      const auto stats = acs::normality_study(c.experiment(workers), progress);
      json params = json::array();
      for (const auto& s : stats) {
        params.push_back({{"name", s.name},
                          {"skewness", s.skewness},
                          {"excess_kurtosis", s.excess_kurtosis},
                          {"ks_statistic", s.ks_statistic},
                          {"ks_pvalue", s.ks_pvalue}});
        for (std::size_t i = 0; i < s.standardized.size(); ++i)
          csv += s.name + "," + std::to_string(i) + "," + acs::io::format_double(s.standardized[i]) + "\n";
      }
      csv = "parameter,index,standardized\n" + csv;
      doc["report"] = {{"parameters", params}};
      break;
    }
    case cfg::Study::QuadraticClt: {
      const auto points = acs::quadratic_clt_check(c.sizes, c.seed, static_cast<std::size_t>(c.replicates),
                                                   c.matrix);
      json rows = json::array();
      csv = "n,index,psi\n";
      for (const auto& p : points) {
        rows.push_back({{"n", p.n},
                        {"mean", p.mean},
                        {"variance", p.variance},
                        {"skewness", p.skewness},
                        {"ks_statistic", p.ks_statistic},
                        {"ks_pvalue", p.ks_pvalue}});
        for (std::size_t i = 0; i < p.psi.size(); ++i)
          csv += std::to_string(p.n) + "," + std::to_string(i) + "," + acs::io::format_double(p.psi[i]) + "\n";
      }
      doc["report"] = {{"points", rows}};
      break;
    }
    case cfg::Study::Stationary: {
      const auto study =
          acs::stationary_gradient_study(c.experiment(workers), static_cast<std::size_t>(c.replicates));
      doc["report"] = {{"mean", study.mean},
                       {"standard_error", study.standard_error},
                       {"replicates", study.replicates}};
      csv = "coordinate,mean,standard_error\n";
      for (std::size_t i = 0; i < study.mean.size(); ++i)
        csv += std::to_string(i) + "," + acs::io::format_double(study.mean[i]) + "," +
               acs::io::format_double(study.standard_error[i]) + "\n";
      break;
    }
  }

  if (out.empty()) {
    std::cout << dump(doc) << std::flush;
  } else {
    acs::io::write_file_atomic(out + ".json", dump(doc));
    acs::io::write_file_atomic(out + ".csv", csv);
  }
  std::fprintf(stderr, "experiment %s: %.2fs\n", cfg::to_string(c.study).c_str(), seconds_since(t0));
  return kExitOk;
}

int cmd_check(const std::string& config_path, const std::string& out) {
  const auto config = cfg::load(config_path);
  const auto& c = expect<cfg::CheckConfig>(config, "check");
  const auto sites = acs::make_perturbed_lattice(c.lattice.N, c.lattice.dim, c.lattice.delta, c.seed);
  const auto family = cfg::make_family(c.kernel, c.lattice.dim);

  // Dense oracle first so an oversized lattice is refused before other work.
  const auto spectral = acs::spectral_bounds(sites, family, c.form, c.theta_grid);
  const auto ident = acs::identifiability_margin(sites, family, c.form, c.theta_grid, c.radius);

  json kl = json::array();
  bool kl_ok = true;
  for (const auto& [t1, t2] : c.kl_pairs) {
    const auto check = acs::kl_bound_check(sites, family, c.form, t1, t2, c.theta_grid);
    kl_ok = kl_ok && check.passed();
    kl.push_back({{"theta1", t1}, {"theta2", t2}, {"kl", check.kl}, {"bound", check.bound}, {"passed", check.passed()}});
  }
  const bool ident_ok = ident.margin > 0.0;
  const bool spectral_ok = spectral.lambda_min_est > 0.0;

  json doc = document(config);
  doc["identifiability"] = {{"margin", ident.margin},
                            {"radius", ident.radius},
                            {"worst_pair", {ident.worst_pair.first, ident.worst_pair.second}},
                            {"passed", ident_ok}};
  doc["spectral_bounds"] = {{"lambda_min", spectral.lambda_min_est},
                            {"lambda_max", spectral.lambda_max_est},
                            {"lipschitz", spectral.lipschitz_est},
                            {"passed", spectral_ok}};
  doc["kl"] = kl;
  const bool ok = ident_ok && spectral_ok && kl_ok;
  doc["passed"] = ok;
  emit(dump(doc), out);
  return ok ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inversion-free covariance estimation for Gaussian random fields on perturbed lattices"};
  app.require_subcommand(1);
  unsigned workers = 0;
  app.add_option("--workers", workers, "Worker threads (0 = available cores)");

  std::string config_path, sample_path, out;

  auto* sim = app.add_subcommand("simulate", "Simulate a field sample (CSV + provenance JSON)");
  sim->add_option("config", config_path, "Config JSON")->required();
  sim->add_option("-o,--out", out, "Output CSV path; provenance goes to <out>.json")->required();

  auto* est = app.add_subcommand("estimate", "Estimate (phi, theta) from a sample; JSON to stdout");
  est->add_option("sample", sample_path, "Sample CSV")->required();
  est->add_option("config", config_path, "Config JSON")->required();
  est->add_option("-o,--out", out, "Write the JSON here instead of stdout");

  auto* swp = app.add_subcommand("sweep", "Profile objective G_n/sqrt(n) over a grid; CSV");
  swp->add_option("sample", sample_path, "Sample CSV")->required();
  swp->add_option("config", config_path, "Config JSON")->required();
  swp->add_option("-o,--out", out, "Write the CSV here (and the config to <out>.json)");

  auto* exp = app.add_subcommand("experiment", "Replicated Monte Carlo studies");
  exp->add_option("config", config_path, "Config JSON")->required();
  exp->add_option("-o,--out", out, "Output prefix: <out>.json and <out>.csv");

  auto* chk = app.add_subcommand("check", "Identifiability, spectral and KL diagnostics");
  chk->add_option("config", config_path, "Config JSON")->required();
  chk->add_option("-o,--out", out, "Write the JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  workers = acs::resolve_workers(workers);
  try {
    if (sim->parsed()) return cmd_simulate(config_path, out, workers);
    if (est->parsed()) return cmd_estimate(sample_path, config_path, out, workers);
    if (swp->parsed()) return cmd_sweep(sample_path, config_path, out, workers);
    if (exp->parsed()) return cmd_experiment(config_path, out, workers);
    if (chk->parsed()) return cmd_check(config_path, out);
  } catch (const acs::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const acs::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const acs::PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}
