#include <cmath>
#include <random>

#include <doctest.h>

#include "acs/errors.hpp"
#include "acs/experiments.hpp"

using namespace acs;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.N = 10;
  cfg.features = 2000;
  cfg.replicates = 6;
  cfg.seed = 42;
  cfg.workers = 1;
  return cfg;
}

}  // namespace

TEST_SUITE("replicated") {
  TEST_CASE("a single replicate reproduces one estimate") {
    auto cfg = small_config();
    cfg.replicates = 1;
    bool saw_abort = false, saw_kept = false;
    for (std::uint64_t master = 1; master <= 30 && !(saw_abort && saw_kept); ++master) {
      cfg.seed = master;
      const auto seed = replicate_seed(cfg.seed, 0);
      const auto sites = make_perturbed_lattice(cfg.N, 2, cfg.delta, seed);
      const auto sample = simulate_field(sites, cfg.family, Anisotropy::isotropic(4.0, 2), 1.0, cfg.features, seed);
      const auto est = estimate(sample, cfg.family, cfg.form, cfg.bounds, cfg.optimizer);
      if (est.boundary_hit()) {
        // Every replicate excluded: the run aborts.
        CHECK_THROWS_AS(run_replicated(cfg), std::runtime_error);
        saw_abort = true;
        continue;
      }
      const auto report = run_replicated(cfg);
      REQUIRE(report.replicates.size() == 1);
      CHECK(report.replicates[0].theta_hat == est.theta_hat);
      CHECK(report.replicates[0].phi_hat == est.phi_hat);
      CHECK(report.parameter("theta").mean == est.theta_hat[0]);
      CHECK(report.parameter("theta").rmse == doctest::Approx(std::abs(est.theta_hat[0] - 4.0)).epsilon(1e-14));
      CHECK(report.parameter("sigma").rmse == doctest::Approx(std::abs(std::sqrt(est.phi_hat) - 1.0)).epsilon(1e-14));
      CHECK(report.parameter("phi").rmse == doctest::Approx(std::abs(est.phi_hat - 1.0)).epsilon(1e-14));
      saw_kept = true;
    }
    CHECK(saw_kept);
  }

  TEST_CASE("exclusion accounting and summaries over kept replicates") {
    auto cfg = small_config();
    cfg.N = 5;
    cfg.replicates = 12;
    const auto report = run_replicated(cfg);
    std::size_t flagged = 0;
    double sum = 0, sq = 0;
    for (const auto& r : report.replicates) {
      if (r.boundary_hit) {
        ++flagged;
        continue;
      }
      sum += r.theta_hat[0];
      sq += (r.theta_hat[0] - 4) * (r.theta_hat[0] - 4);
    }
    CHECK(report.excluded_count == flagged);
    const double kept = static_cast<double>(report.replicates.size() - flagged);
    CHECK(report.parameter("theta").mean == doctest::Approx(sum / kept).epsilon(1e-14));
    CHECK(report.parameter("theta").rmse == doctest::Approx(std::sqrt(sq / kept)).epsilon(1e-14));
    CHECK(report.n == 25);
  }

  TEST_CASE("identical across worker counts") {
    auto cfg = small_config();
    const auto a = run_replicated(cfg);
    cfg.workers = 4;
    const auto b = run_replicated(cfg);
    for (std::size_t r = 0; r < a.replicates.size(); ++r) {
      CHECK(a.replicates[r].theta_hat == b.replicates[r].theta_hat);
      CHECK(a.replicates[r].phi_hat == b.replicates[r].phi_hat);
      CHECK(a.replicates[r].seed == b.replicates[r].seed);
    }
    CHECK(a.parameter("theta").rmse == b.parameter("theta").rmse);
  }

  TEST_CASE("replicate seeds are distinct and stable") {
    CHECK(replicate_seed(1, 0) != replicate_seed(1, 1));
    CHECK(replicate_seed(1, 0) != replicate_seed(2, 0));
    CHECK(replicate_seed(9, 3) == replicate_seed(9, 3));
  }

  TEST_CASE("configuration validation") {
    auto cfg = small_config();
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.truth.theta = {20.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.family = RationalQuadratic{1.5, 3};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("theta names") {
    CHECK(theta_names(AnisotropyForm::Isotropic, 2) == std::vector<std::string>{"theta"});
    CHECK(theta_names(AnisotropyForm::DiagonalRanges, 2) == std::vector<std::string>{"theta", "rho"});
    CHECK(theta_names(AnisotropyForm::FullMatrix, 2) == std::vector<std::string>{"b11", "b12", "b22"});
  }
}

TEST_SUITE("studies") {
  TEST_CASE("rate study needs three sizes") {
    const std::vector<int> two{4, 8};
    CHECK_THROWS_AS(rate_study(small_config(), two), std::invalid_argument);
  }

  TEST_CASE("normality study needs 200 replicates") {
    CHECK_THROWS_AS(normality_study(small_config()), PreconditionError);
  }

  TEST_CASE("KS p-values of exact normal draws are uniform across seeds") {
    std::vector<double> pvalues;
    for (int seed = 0; seed < 300; ++seed) {
      std::mt19937_64 gen(seed);
      std::normal_distribution<double> normal;
      std::vector<double> x(200);
      for (auto& v : x) v = normal(gen);
      const double d = ks_statistic(x, [](double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); });
      pvalues.push_back(ks_pvalue(d, x.size()));
    }
    const double d = ks_statistic(pvalues, [](double u) { return std::clamp(u, 0.0, 1.0); });
    CHECK(ks_pvalue(d, pvalues.size()) > 0.001);
    const auto rejected = std::count_if(pvalues.begin(), pvalues.end(), [](double p) { return p < 0.05; });
    CHECK(rejected <= 30);
  }

  TEST_CASE("normality statistics of normal draws") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> normal(3.0, 2.0);
    std::vector<double> x(2000);
    for (auto& v : x) v = normal(gen);
    const auto s = normality_statistics("x", x);
    CHECK(std::abs(s.skewness) < 0.2);
    CHECK(std::abs(s.excess_kurtosis) < 0.4);
    CHECK(s.ks_pvalue > 0.01);
    double mean = 0;
    for (double v : s.standardized) mean += v;
    CHECK(std::abs(mean / 2000) < 1e-12);
  }

  TEST_CASE("Kolmogorov tail values") {
    // Large-n asymptotics: P(sqrt(n) D > 1.358) ~ 0.05.
    CHECK(ks_pvalue(1.358 / std::sqrt(1e6), 1000000) == doctest::Approx(0.05).epsilon(0.01));
    CHECK(ks_pvalue(0.0, 100) == 1.0);
    CHECK(ks_pvalue(1.0, 100) < 1e-12);
  }

  TEST_CASE("quadratic form CLT with the identity matrix") {
    const std::vector<std::size_t> sizes{64};
    const auto pts = quadratic_clt_check(sizes, 5, 4000, CltMatrix::Identity);
    REQUIRE(pts.size() == 1);
    // Var = 2 exactly; the sample variance of chi-square has SE ~ sqrt((m4 - 4)/R).
    CHECK(std::abs(pts[0].variance - 2.0) < 0.2);
    CHECK(std::abs(pts[0].mean) < 4 * std::sqrt(2.0 / 4000));
    CHECK(pts[0].psi.size() == 4000);
  }

  TEST_CASE("quadratic form CLT with random symmetric matrices") {
    const std::vector<std::size_t> sizes{8, 128};
    const auto pts = quadratic_clt_check(sizes, 9, 2000);
    CHECK(pts[1].variance > 1.8);
    CHECK(pts[1].variance < 2.2);
  }

  TEST_CASE("stationary gradient of the expected objective") {
    auto cfg = small_config();
    cfg.N = 8;
    cfg.features = 500;
    const auto g = stationary_gradient_study(cfg, 300);
    REQUIRE(g.mean.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(g.mean[j]) < 4 * g.standard_error[j]);
  }
}
