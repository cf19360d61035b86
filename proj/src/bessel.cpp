#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "acs/kernels.hpp"

namespace acs {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 10000;

// Taylor coefficients of 1/Gamma(1 + z) about z = 0.
constexpr std::array<double, 26> kRecipGammaCoeffs = {
    1.0,
    0.5772156649015328606065,
    -0.6558780715202538810770,
    -0.0420026350340952355290,
    0.1665386113822914895017,
    -0.0421977345555443367482,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.0002152416741149509728,
    0.0001280502823881161862,
    -0.0000201348547807882387,
    -0.0000012504934821426707,
    0.0000011330272319816959,
    -2.056338416977607103e-7,
    6.116095104481415818e-9,
    5.002007644469222930e-9,
    -1.181274570487020145e-9,
    1.043426711691100510e-10,
    7.782263439905071254e-12,
    -3.696805618642205708e-12,
    5.100370287454475979e-13,
    -2.058326053566506783e-14,
    -5.348122539423017982e-15,
    1.226778628238260790e-15,
    -1.181259301697458770e-16,
};

// Temme's gamma1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu) and
// gamma2 = (1/G(1-mu) + 1/G(1+mu)) / 2, evaluated from the power series so
// gamma1 stays accurate as mu -> 0. Also returns 1/G(1+mu), 1/G(1-mu).
struct TemmeGammas {
  double gam1, gam2, gampl, gammi;
};

TemmeGammas temme_gammas(double mu) {
  double odd = 0.0;   // sum over odd k of a_k mu^(k-1)
  double even = 0.0;  // sum over even k of a_k mu^k
  for (std::size_t k = kRecipGammaCoeffs.size(); k-- > 0;) {
    if (k % 2 == 1) {
      odd = odd * mu * mu + kRecipGammaCoeffs[k];
    } else {
      even = even * mu * mu + kRecipGammaCoeffs[k];
    }
  }
  TemmeGammas g{};
  g.gam1 = -odd;
  g.gam2 = even;
  g.gampl = even + mu * odd;  // 1/G(1+mu)
  g.gammi = even - mu * odd;  // 1/G(1-mu)
  return g;
}

// K_mu(x) and K_{mu+1}(x), both scaled by exp(x), for |mu| <= 1/2.
std::pair<double, double> bessel_k_pair_scaled(double mu, double x) {
  if (x <= 2.0) {
    // Temme's series.
    const double half_x = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    const double d = -std::log(half_x);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const auto g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    const double dd = half_x * half_x;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxTerms; ++i) {
      const double di = i;
      ff = (di * ff + p + q) / (di * di - mu * mu);
      c *= dd / di;
      p /= di - mu;
      q /= di + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - di * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    if (i > kMaxTerms) throw std::runtime_error("bessel_k: series did not converge");
    const double scale = std::exp(x);
    return {sum * scale, sum1 * (2.0 / x) * scale};
  }

  // Steed's continued fraction (Temme's normalisation).
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  int i = 2;
  for (; i <= kMaxTerms; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  if (i > kMaxTerms) throw std::runtime_error("bessel_k: continued fraction did not converge");
  h *= a1;
  const double kmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
  const double k1 = kmu * (mu + x + 0.5 - h) / x;
  return {kmu, k1};
}

bool is_half_integer(double nu, int& k) {
  const double twice = 2.0 * nu;
  const double r = std::round(twice);
  if (std::abs(twice - r) > 0.0 || static_cast<long>(r) % 2 == 0 || r > 41.0) return false;
  k = static_cast<int>((r - 1.0) / 2.0);
  return true;
}

// exp(x) K_{k+1/2}(x) = sqrt(pi/(2x)) sum_j (k+j)! / (j! (k-j)!) (2x)^-j
double half_integer_scaled(int k, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int j = 1; j <= k; ++j) {
    term *= static_cast<double>((k + j) * (k - j + 1)) / (j * 2.0 * x);
    sum += term;
  }
  return std::sqrt(std::numbers::pi / (2.0 * x)) * sum;
}

void check_domain(double nu, double x) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::domain_error("bessel_k: nu must be positive");
  if (!(x > 0.0) || std::isnan(x)) throw std::domain_error("bessel_k: x must be positive");
}

}  // namespace

namespace detail {

double bessel_k_scaled_general(double nu, double x) {
  check_domain(nu, x);
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  auto [kmu, k1] = bessel_k_pair_scaled(mu, x);
  const double two_over_x = 2.0 / x;
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * two_over_x * k1 + kmu;
    kmu = k1;
    k1 = next;
  }
  return kmu;
}

}  // namespace detail

double bessel_k_scaled(double nu, double x) {
  check_domain(nu, x);
  int k = 0;
  const double v = is_half_integer(nu, k) ? half_integer_scaled(k, x)
                                          : detail::bessel_k_scaled_general(nu, x);
  if (!std::isfinite(v)) throw std::overflow_error("bessel_k: result overflows");
  return v;
}

double bessel_k(double nu, double x) {
  const double v = bessel_k_scaled(nu, x) * std::exp(-x);
  if (!std::isfinite(v)) throw std::overflow_error("bessel_k: result overflows");
  return v;
}

}  // namespace acs
