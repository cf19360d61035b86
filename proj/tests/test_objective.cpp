#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "acs/objective.hpp"
#include "oracles.hpp"

using namespace acs;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

// Sites so far apart that every off-diagonal correlation underflows to zero.
SiteSet far_sites(int n) {
  std::vector<double> c;
  for (int i = 0; i < n; ++i) {
    c.push_back(1e6 * i);
    c.push_back(0.0);
  }
  return SiteSet(2, c);
}

struct RandomConfig {
  SiteSet sites;
  std::vector<double> y;
  KernelFamily family;
  Anisotropy aniso;
};

RandomConfig random_config(std::mt19937_64& gen, int n_max) {
  std::uniform_int_distribution<int> n_dist(2, n_max);
  std::uniform_int_distribution<int> d_dist(1, 3);
  std::uniform_int_distribution<int> fam_dist(0, 4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int n = n_dist(gen);
  const int d = d_dist(gen);
  std::vector<double> coords(static_cast<std::size_t>(n * d));
  for (auto& c : coords) c = 12.0 * unif(gen);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = normal(gen);
  KernelFamily family;
  switch (fam_dist(gen)) {
    case 0: family = Matern{0.5}; break;
    case 1: family = Matern{0.2 + 3 * unif(gen)}; break;
    case 2: family = PoweredExponential{0.1 + 1.8 * unif(gen)}; break;
    case 3: family = RationalQuadratic{0.2 + 2 * unif(gen), d}; break;
    default: family = Matern{2.5}; break;
  }
  const double theta = 0.3 + 8 * unif(gen);
  Anisotropy aniso = Anisotropy::isotropic(theta, d);
  if (d == 2 && unif(gen) < 0.5) aniso = Anisotropy::diagonal_ranges(theta, 0.3 + 8 * unif(gen));
  return {SiteSet(d, coords), y, family, aniso};
}

}  // namespace

TEST_SUITE("quadratic summary") {
  TEST_CASE("identity case") {
    const auto sites = far_sites(5);
    const std::vector<double> y{1, -2, 3, 0.5, 4};
    const auto s = quadratic_summary(y, sites, Matern{0.5}, Anisotropy::isotropic(0.1, 2));
    CHECK(s.yky == doctest::Approx(1 + 4 + 9 + 0.25 + 16).epsilon(1e-15));
    CHECK(s.k_frob_sq == 5.0);
    CHECK(s.n == 5);
  }

  TEST_CASE("two-site closed form") {
    const SiteSet sites(1, {0.0, 1.0});
    const std::vector<double> y{1, 1};
    const auto s = quadratic_summary(y, sites, Matern{0.5}, Anisotropy::isotropic(1.0, 1));
    CHECK(rel_err(s.yky, 2 + 2 * std::exp(-1.0)) < 1e-15);
    CHECK(rel_err(s.k_frob_sq, 2 + 2 * std::exp(-2.0)) < 1e-15);
  }

  TEST_CASE("matches the dense matrix oracle") {
    std::mt19937_64 gen(2024);
    for (int rep = 0; rep < 60; ++rep) {
      const auto c = random_config(gen, 200);
      const auto s = quadratic_summary(c.y, c.sites, c.family, c.aniso, 1);
      const auto o = oracle::dense_summary(c.y, c.sites, c.family, c.aniso);
      CAPTURE(rep);
      CHECK(rel_err(s.yky, o.yky) < 1e-12);
      CHECK(rel_err(s.k_frob_sq, o.k_frob_sq) < 1e-12);
      CHECK(s.k_frob_sq >= static_cast<double>(s.n));
    }
  }

  TEST_CASE("bit-identical across worker counts and input orderings") {
    const auto sites = make_perturbed_lattice(27, 2, 0.3, 3);  // 729 sites, several row blocks
    std::mt19937_64 gen(1);
    std::normal_distribution<double> normal;
    std::vector<double> y(sites.size());
    for (auto& v : y) v = normal(gen);
    const auto aniso = Anisotropy::diagonal_ranges(3, 7);
    const auto s1 = quadratic_summary(y, sites, Matern{0.8}, aniso, 1);
    CHECK(quadratic_summary(y, sites, Matern{0.8}, aniso, 2) == s1);
    CHECK(quadratic_summary(y, sites, Matern{0.8}, aniso, 5) == s1);

    std::vector<std::size_t> perm(sites.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> coords, yp;
    for (auto i : perm) {
      coords.insert(coords.end(), sites.site(i).begin(), sites.site(i).end());
      yp.push_back(y[i]);
    }
    CHECK(quadratic_summary(yp, SiteSet(2, coords), Matern{0.8}, aniso, 3) == s1);
  }

  TEST_CASE("length mismatch") {
    const auto sites = far_sites(3);
    const std::vector<double> y{1, 2};
    CHECK_THROWS_AS(quadratic_summary(y, sites, Matern{0.5}, Anisotropy::isotropic(1, 2)), std::invalid_argument);
  }

  TEST_CASE("expectation identity E[Y'K(t)Y] = phi0 <K(t0), K(t)>") {
    const auto sites = make_perturbed_lattice(8, 2, 0.1, 2);
    const KernelFamily fam = Matern{0.5};
    const double phi0 = 1.5;
    const auto a0 = Anisotropy::isotropic(4.0, 2);
    const auto at = Anisotropy::isotropic(2.5, 2);
    const int reps = 2000;
    double sum = 0, sq = 0;
    for (int r = 0; r < reps; ++r) {
      const auto s = simulate_field(sites, fam, a0, phi0, 400, 900 + r, 1);
      const double v = quadratic_summary(s.y, sites, fam, at, 1).yky;
      sum += v;
      sq += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sq / reps - mean * mean) / reps);
    const double want = phi0 * oracle::dense_k(sites, fam, a0).cwiseProduct(oracle::dense_k(sites, fam, at)).sum();
    CHECK(std::abs(mean - want) < 4 * se);
  }
}

TEST_SUITE("objective") {
  TEST_CASE("f_n values") {
    const auto sites = far_sites(4);
    const std::vector<double> zero(4, 0.0);
    CHECK(f_n(zero, sites, Matern{0.5}, Anisotropy::isotropic(0.1, 2), 1.0) == -0.5);

    const SiteSet two(1, {0.0, 1.0});
    const std::vector<double> y{1, 1};
    const double want = 0.5 * ((2 + 2 * std::exp(-1.0)) - (2 + 2 * std::exp(-2.0)) / 2);
    CHECK(rel_err(f_n(y, two, Matern{0.5}, Anisotropy::isotropic(1, 1), 1.0), want) < 1e-14);
  }

  TEST_CASE("g_n and phi_hat on the two-site example") {
    const SiteSet two(1, {0.0, 1.0});
    const std::vector<double> y{1, 1};
    const auto a = Anisotropy::isotropic(1, 1);
    const double yky = 2 + 2 * std::exp(-1.0), fro = 2 + 2 * std::exp(-2.0);
    CHECK(rel_err(g_n(y, two, Matern{0.5}, a), yky / std::sqrt(fro)) < 1e-14);
    const auto p = phi_hat(y, two, Matern{0.5}, a, 1e-4, 1e4);
    CHECK(rel_err(p.value, yky / fro) < 1e-14);
    CHECK_FALSE(p.at_boundary);
  }

  TEST_CASE("identity case: g_n = |y|^2 / sqrt(n), phi_hat = |y|^2 / n") {
    const auto sites = far_sites(4);
    const std::vector<double> y{1, 2, 3, 4};
    const auto a = Anisotropy::isotropic(0.1, 2);
    CHECK(g_n(y, sites, Matern{0.5}, a) == doctest::Approx(30.0 / 2.0).epsilon(1e-15));
    CHECK(phi_hat(y, sites, Matern{0.5}, a, 1e-4, 1e4).value == doctest::Approx(7.5).epsilon(1e-15));
  }

  TEST_CASE("y = 0 clamps phi_hat to phi_min") {
    const auto sites = make_perturbed_lattice(3, 2, 0.1, 1);
    const std::vector<double> y(9, 0.0);
    const auto p = phi_hat(y, sites, Matern{0.5}, Anisotropy::isotropic(2, 2), 1e-4, 1e4);
    CHECK(p.value == 1e-4);
    CHECK(p.at_boundary);
  }

  TEST_CASE("quadratic homogeneity and vertex identity") {
    std::mt19937_64 gen(8);
    for (int rep = 0; rep < 10; ++rep) {
      auto c = random_config(gen, 60);
      const double g = g_n(c.y, c.sites, c.family, c.aniso);
      auto y3 = c.y;
      for (auto& v : y3) v *= 3.0;
      CHECK(rel_err(g_n(y3, c.sites, c.family, c.aniso), 9 * g) < 1e-13);

      const auto s = quadratic_summary(c.y, c.sites, c.family, c.aniso);
      const double vertex = s.yky / s.k_frob_sq;
      const double best = f_n(s, vertex);
      CHECK(rel_err(best, s.yky * s.yky / (2.0 * s.n * s.k_frob_sq)) < 1e-12);
      std::uniform_real_distribution<double> logphi(std::log(1e-4), std::log(1e4));
      for (int k = 0; k < 100; ++k) CHECK(f_n(s, std::exp(logphi(gen))) <= best);
    }
  }
}

TEST_SUITE("finite differences") {
  const std::vector<double> lo{0.1, 0.1}, hi{15, 15};

  TEST_CASE("exact for linear objectives") {
    const VectorObjective f = [](std::span<const double> t) { return 3 * t[0] - 2 * t[1]; };
    const std::vector<double> at{4, 6};
    const auto g = fd_gradient(f, at, 1e-3, lo, hi);
    CHECK(std::abs(g[0] - 3) < 1e-9);
    CHECK(std::abs(g[1] + 2) < 1e-9);
  }

  TEST_CASE("central differences on a quadratic") {
    const VectorObjective f = [](std::span<const double> t) { return t[0] * t[0] + t[1] * t[1]; };
    const std::vector<double> at{1, 2};
    const auto g = fd_gradient(f, at, 1e-3, lo, hi);
    CHECK(std::abs(g[0] - 2) < 1e-6);
    CHECK(std::abs(g[1] - 4) < 1e-6);
  }

  TEST_CASE("one-sided at faces") {
    int calls_outside = 0;
    const VectorObjective f = [&](std::span<const double> t) {
      if (t[0] < 0.1 || t[1] > 15) ++calls_outside;
      return t[0] * t[0] + t[1] * t[1];
    };
    const std::vector<double> at{0.1, 15};
    const auto g = fd_gradient(f, at, 1e-3, lo, hi);
    CHECK(calls_outside == 0);
    CHECK(std::abs(g[0] - 0.2) < 2e-3);
    CHECK(std::abs(g[1] - 30) < 2e-3);
  }

  TEST_CASE("zero-width box dimension") {
    const VectorObjective f = [](std::span<const double> t) { return t[0]; };
    const std::vector<double> at{1.0}, l{1.0}, h{1.0};
    CHECK_THROWS_AS(fd_gradient(f, at, 1e-3, l, h), std::invalid_argument);
  }

  TEST_CASE("matches Richardson extrapolation on g_n") {
    const auto sites = make_perturbed_lattice(10, 2, 0.2, 6);
    const auto sample = simulate_field(sites, Matern{0.5}, Anisotropy::diagonal_ranges(3, 5), 1.0, 3000, 9);
    const VectorObjective g = [&](std::span<const double> t) {
      return g_n(sample.y, sites, Matern{0.5}, Anisotropy::diagonal_ranges(t[0], t[1]));
    };
    const std::vector<double> at{2.5, 4.0};
    const auto fd = fd_gradient(g, at, 1e-3, lo, hi);
    const auto gv = [&](const std::vector<double>& t) { return g(t); };
    for (std::size_t j = 0; j < 2; ++j) {
      const double r = oracle::richardson_derivative(gv, at, j, 1e-2);
      CHECK(rel_err(fd[j], r) < 1e-4);
    }
  }
}
