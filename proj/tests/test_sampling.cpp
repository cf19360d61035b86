#include <algorithm>
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "acs/sampling.hpp"
#include "oracles.hpp"

using namespace acs;

namespace {

std::vector<double> radii(const SpectralFeatures& f) {
  std::vector<double> r(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    double s = 0;
    for (double w : f.omega(k)) s += w * w;
    r[k] = std::sqrt(s);
  }
  return r;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

// CDF of the first frequency coordinate, obtained by numerically inverting the
// kernel: F(w) = 1/2 + (1/pi) int_0^inf K(t e1) sin(w t) / t dt.
double marginal_cdf_by_inversion(const KernelFamily& family, double w) {
  if (w == 0.0) return 0.5;
  const double t_max = 400.0;
  const int steps = 200000;  // Simpson, even count
  const double h = t_max / steps;
  auto f = [&](double t) {
    if (t == 0.0) return w;  // sin(w t)/t -> w, K(0) = 1
    return radial_profile(family, t) * std::sin(w * t) / t;
  };
  double s = f(0) + f(t_max);
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 0.5 + s * h / 3.0 / std::numbers::pi;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("regular lattice at delta = 0") {
    const auto s = make_perturbed_lattice(2, 2, 0.0, 99);
    REQUIRE(s.size() == 4);
    const std::vector<double> want{1, 1, 1, 2, 2, 1, 2, 2};
    CHECK(std::vector<double>(s.coords().begin(), s.coords().end()) == want);
  }

  TEST_CASE("N=3, d=1, delta=0.3") {
    const auto s = make_perturbed_lattice(3, 1, 0.3, 7);
    REQUIRE(s.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s.site(i)[0] - (i + 1.0)) <= 0.3);
    CHECK(s.min_pairwise_distance() >= 0.4);
  }

  TEST_CASE("N=100, d=2, delta=0.3 keeps the minimum distance") {
    const auto s = make_perturbed_lattice(100, 2, 0.3, 12345);
    CHECK(s.size() == 10000);
    CHECK(s.min_pairwise_distance() >= 0.4);
    for (double c : s.coords()) {
      CHECK(c >= 0.7);
      CHECK(c <= 100.3);
    }
  }

  TEST_CASE("bit-identical for identical inputs, different across seeds") {
    CHECK(make_perturbed_lattice(8, 3, 0.2, 5) == make_perturbed_lattice(8, 3, 0.2, 5));
    CHECK_FALSE(make_perturbed_lattice(8, 3, 0.2, 5) == make_perturbed_lattice(8, 3, 0.2, 6));
    CHECK(make_perturbed_lattice(4, 2, 0.1, 5).meta().seed == 5);
  }

  TEST_CASE("rejects delta outside [0, 1/2)") {
    CHECK_THROWS_AS(make_perturbed_lattice(4, 2, 0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_perturbed_lattice(4, 2, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_perturbed_lattice(0, 2, 0.1, 1), std::invalid_argument);
  }
}

TEST_SUITE("spectral sampler") {
  TEST_CASE("radius inverse CDF") {
    CHECK(matern_radius_icdf(0.0, 1.0) == 0.0);
    CHECK(matern_radius_icdf(0.75, 1.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    CHECK(matern_radius_icdf(0.5, 0.5) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    // Exact inverse of F(r) = 1 - (1 + r^2)^-nu.
    for (double u : {1e-9, 0.1, 0.5, 0.9, 0.999999}) {
      const double r = matern_radius_icdf(u, 1.7);
      CHECK(1 - std::pow(1 + r * r, -1.7) == doctest::Approx(u).epsilon(1e-12));
    }
    CHECK_THROWS_AS(matern_radius_icdf(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(matern_radius_icdf(-0.1, 1.0), std::domain_error);
  }

  TEST_CASE("median radius of Matern(1) frequencies scales with 1/theta") {
    const auto f1 = sample_frequencies(Matern{1.0}, Anisotropy::isotropic(1.0, 2), 100000, 3);
    const auto f2 = sample_frequencies(Matern{1.0}, Anisotropy::isotropic(2.0, 2), 100000, 3);
    CHECK(std::abs(median(radii(f1)) - 1.0) < 0.015);
    CHECK(std::abs(median(radii(f2)) - 0.5) < 0.0075);
  }

  TEST_CASE("radius law matches F_r") {
    const double theta = 4.0, nu = 0.5;
    const auto f = sample_frequencies(Matern{nu}, Anisotropy::isotropic(theta, 2), 100000, 21);
    auto r = radii(f);
    for (auto& x : r) x *= theta;
    CHECK(oracle::ks_one_sample(r, [&](double x) { return 1 - std::pow(1 + x * x, -nu); }) < 0.01);
  }

  TEST_CASE("chi-square and polar Matern samplers agree") {
    for (double nu : {0.5, 1.5}) {
      const auto polar = sample_frequencies(Matern{nu}, Anisotropy::isotropic(1.0, 2), 100000, 8, MaternSampler::Polar);
      const auto chi = sample_frequencies(Matern{nu}, Anisotropy::isotropic(1.0, 2), 100000, 9, MaternSampler::ChiSquare);
      CHECK(oracle::ks_two_sample(radii(polar), radii(chi)) < 0.01);
    }
    CHECK_THROWS_AS(sample_frequencies(Matern{0.5}, Anisotropy::isotropic(1.0, 3), 10, 1, MaternSampler::Polar),
                    std::invalid_argument);
  }

  TEST_CASE("chi-square sampler in d = 3 reproduces the kernel") {
    const auto f = sample_frequencies(Matern{1.5}, Anisotropy::isotropic(2.0, 3), 200000, 4);
    for (const std::vector<double> h : {std::vector<double>{1, 0, 0}, std::vector<double>{1, 1, 1}}) {
      double sum = 0, sq = 0;
      for (std::size_t k = 0; k < f.size(); ++k) {
        const double c = std::cos(f.omega(k)[0] * h[0] + f.omega(k)[1] * h[1] + f.omega(k)[2] * h[2]);
        sum += c;
        sq += c * c;
      }
      const double n = static_cast<double>(f.size());
      const double mean = sum / n;
      const double se = std::sqrt((sq / n - mean * mean) / n);
      CHECK(std::abs(mean - correlation(h, Matern{1.5}, Anisotropy::isotropic(2.0, 3))) < 4 * se);
    }
  }

  TEST_CASE("rational quadratic frequencies invert the kernel") {
    const KernelFamily rq = RationalQuadratic{0.5, 2};
    const auto f = sample_frequencies(rq, Anisotropy::isotropic(1.0, 2), 100000, 17);
    // E[cos <omega, h>] = K(h).
    const std::vector<double> h{1.0, 0.0};
    double sum = 0, sq = 0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double c = std::cos(f.omega(k)[0]);
      sum += c;
      sq += c * c;
    }
    const double n = static_cast<double>(f.size());
    const double se = std::sqrt((sq / n - (sum / n) * (sum / n)) / n);
    CHECK(std::abs(sum / n - correlation(h, rq, Anisotropy::isotropic(1.0, 2))) < 3 * se);

    // Marginal law of omega_1 against the numerically inverted kernel.
    std::vector<double> w1(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) w1[k] = f.omega(k)[0];
    std::sort(w1.begin(), w1.end());
    double d = 0;
    for (int q = 1; q < 40; ++q) {
      const double x = w1[w1.size() * q / 40];
      const double emp = static_cast<double>(std::upper_bound(w1.begin(), w1.end(), x) - w1.begin()) / n;
      d = std::max(d, std::abs(emp - marginal_cdf_by_inversion(rq, x)));
    }
    CHECK(d < 0.01);
  }

  TEST_CASE("anisotropic frequencies are B omega'") {
    const auto iso = sample_frequencies(Matern{0.5}, Anisotropy::isotropic(1.0, 2), 1000, 2);
    const auto diag = sample_frequencies(Matern{0.5}, Anisotropy::diagonal_ranges(4.0, 6.0), 1000, 2);
    for (std::size_t k = 0; k < 1000; ++k) {
      CHECK(diag.omega(k)[0] == doctest::Approx(iso.omega(k)[0] / 4.0).epsilon(1e-14));
      CHECK(diag.omega(k)[1] == doctest::Approx(iso.omega(k)[1] / 6.0).epsilon(1e-14));
      CHECK(diag.phases[k] == iso.phases[k]);
    }
  }

  TEST_CASE("phases uniform on [-pi, pi]") {
    const auto f = sample_frequencies(Matern{0.5}, Anisotropy::isotropic(1.0, 2), 50000, 6);
    for (double x : f.phases) {
      REQUIRE(x >= -std::numbers::pi);
      REQUIRE(x <= std::numbers::pi);
    }
    CHECK(oracle::ks_one_sample(f.phases, [](double x) { return (x + std::numbers::pi) / (2 * std::numbers::pi); }) < 0.01);
  }

  TEST_CASE("powered exponential has no sampler") {
    CHECK_THROWS_WITH_AS(sample_frequencies(PoweredExponential{1.0}, Anisotropy::isotropic(1.0, 2), 10, 1),
                         doctest::Contains("spectral sampler unavailable"), std::invalid_argument);
  }
}

TEST_SUITE("simulator") {
  TEST_CASE("single cosine at phase zero") {
    const auto sites = make_perturbed_lattice(2, 2, 0.0, 1);
    SpectralFeatures f{2, {0.0, 0.0}, {0.0}};
    const auto y = evaluate_features(sites, f, 2.5);
    for (double v : y) CHECK(v == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  }

  TEST_CASE("zero mean and unit variance over seeds at a fixed site") {
    const auto sites = make_perturbed_lattice(2, 2, 0.1, 1);
    const int reps = 500;
    double sum = 0, sq = 0, quad = 0;
    for (int r = 0; r < reps; ++r) {
      const auto s = simulate_field(sites, Matern{0.5}, Anisotropy::isotropic(4.0, 2), 1.0, 500, 1000 + r, 1);
      const double v = s.y[3];
      sum += v;
      sq += v * v;
      quad += v * v * v * v;
    }
    const double mean = sum / reps;
    CHECK(std::abs(mean) < 4 * std::sqrt(1.0 / reps));
    const double var = sq / reps;
    const double se_var = std::sqrt((quad / reps - var * var) / reps);
    CHECK(std::abs(var - 1.0) < 5 * se_var);
  }

  TEST_CASE("identical for any worker count and reproducible") {
    const auto sites = make_perturbed_lattice(20, 2, 0.2, 4);
    const auto a = simulate_field(sites, Matern{1.5}, Anisotropy::diagonal_ranges(3, 5), 2.0, 9000, 77, 1);
    const auto b = simulate_field(sites, Matern{1.5}, Anisotropy::diagonal_ranges(3, 5), 2.0, 9000, 77, 3);
    CHECK(a.y == b.y);
    REQUIRE(a.provenance.has_value());
    CHECK(a.provenance->features == 9000);
    CHECK(a.provenance->seed == 77);
  }

  TEST_CASE("spectral covariance at a lag") {
    // Sites 0 and 1 of a 1 x 2 lattice are one unit apart.
    const SiteSet sites(2, {1.0, 1.0, 2.0, 1.0});
    const int reps = 500;
    double sum = 0, sq = 0;
    for (int r = 0; r < reps; ++r) {
      const auto s = simulate_field(sites, Matern{0.5}, Anisotropy::isotropic(4.0, 2), 1.0, 2000, 50000 + r, 1);
      const double c = s.y[0] * s.y[1];
      sum += c;
      sq += c * c;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sq / reps - mean * mean) / reps);
    CHECK(std::abs(mean - std::exp(-0.25)) < 3 * se);
  }

  TEST_CASE("invalid inputs") {
    const auto sites = make_perturbed_lattice(2, 2, 0.0, 1);
    CHECK_THROWS_AS(simulate_field(sites, Matern{0.5}, Anisotropy::isotropic(1, 2), 1.0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_field(sites, Matern{0.5}, Anisotropy::isotropic(1, 2), -1.0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_field(sites, Matern{0.5}, Anisotropy::isotropic(1, 3), 1.0, 10, 1), std::invalid_argument);
  }
}
