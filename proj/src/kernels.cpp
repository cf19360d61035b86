#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "acs/kernels.hpp"

namespace acs {

namespace {

constexpr double kMaternZeroCutoff = 1e-8;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void validate(const KernelFamily& family) {
  std::visit(Overloaded{
                 [](const Matern& k) {
                   if (!(k.nu > 0.0) || !std::isfinite(k.nu))
                     throw std::invalid_argument("matern: nu must be positive");
                 },
                 [](const PoweredExponential& k) {
                   if (!(k.nu > 0.0 && k.nu < 2.0))
                     throw std::invalid_argument("powered exponential: nu must lie in (0, 2)");
                 },
                 [](const RationalQuadratic& k) {
                   if (!(k.nu > 0.0) || !std::isfinite(k.nu))
                     throw std::invalid_argument("rational quadratic: nu must be positive");
                   if (k.dim < 1) throw std::invalid_argument("rational quadratic: dim must be >= 1");
                 },
             },
             family);
}

std::string family_name(const KernelFamily& family) {
  return std::visit(Overloaded{
                        [](const Matern&) { return std::string("matern"); },
                        [](const PoweredExponential&) { return std::string("powered_exponential"); },
                        [](const RationalQuadratic&) { return std::string("rational_quadratic"); },
                    },
                    family);
}

double fractal_index(const KernelFamily& family) {
  return std::visit([](const auto& k) { return k.nu; }, family);
}

// ---------------------------------------------------------------------------

RadialProfile::RadialProfile(const KernelFamily& family) {
  validate(family);
  nu_ = fractal_index(family);
  if (std::holds_alternative<Matern>(family)) {
    if (nu_ == 0.5) {
      kind_ = Kind::Exponential;
    } else if (nu_ == 1.5) {
      kind_ = Kind::Matern32;
    } else if (nu_ == 2.5) {
      kind_ = Kind::Matern52;
    } else {
      kind_ = Kind::MaternGeneral;
      log_norm_ = (1.0 - nu_) * std::numbers::ln2 - std::lgamma(nu_);
    }
  } else if (std::holds_alternative<PoweredExponential>(family)) {
    kind_ = Kind::PoweredExp;
  } else {
    const auto& rq = std::get<RationalQuadratic>(family);
    exponent_ = 0.5 * rq.dim + nu_;
    const double twice = 2.0 * exponent_;
    if (twice == std::round(twice) && twice <= 128.0) {
      int_power_ = static_cast<int>(exponent_);
      kind_ = (static_cast<int>(twice) % 2 == 0) ? Kind::RationalQuadInt : Kind::RationalQuadHalf;
    } else {
      kind_ = Kind::RationalQuadGeneral;
    }
  }
}

double RadialProfile::operator()(double u) const {
  switch (kind_) {
    case Kind::Exponential:
      return std::exp(-u);
    case Kind::Matern32:
      return (1.0 + u) * std::exp(-u);
    case Kind::Matern52:
      return (1.0 + u + u * u / 3.0) * std::exp(-u);
    case Kind::MaternGeneral:
      if (u < kMaternZeroCutoff) return 1.0;
      return std::exp(log_norm_ + nu_ * std::log(u) - u + std::log(bessel_k_scaled(nu_, u)));
    case Kind::PoweredExp:
      return std::exp(-std::pow(u, nu_));
    case Kind::RationalQuadInt:
    case Kind::RationalQuadHalf: {
      const double t = 1.0 + u * u;
      double p = 1.0;
      for (int i = 0; i < int_power_; ++i) p *= t;
      if (kind_ == Kind::RationalQuadHalf) p *= std::sqrt(t);
      return 1.0 / p;
    }
    case Kind::RationalQuadGeneral:
      return std::pow(1.0 + u * u, -exponent_);
  }
  return 0.0;
}

double radial_profile(const KernelFamily& family, double u) {
  if (!(u >= 0.0)) throw std::invalid_argument("radial_profile: u must be >= 0");
  return RadialProfile(family)(u);
}

// ---------------------------------------------------------------------------

std::string to_string(AnisotropyForm form) {
  switch (form) {
    case AnisotropyForm::Isotropic:
      return "isotropic";
    case AnisotropyForm::DiagonalRanges:
      return "diagonal_ranges";
    case AnisotropyForm::FullMatrix:
      return "full_matrix";
  }
  return "?";
}

AnisotropyForm anisotropy_form_from_string(const std::string& name) {
  if (name == "isotropic") return AnisotropyForm::Isotropic;
  if (name == "diagonal_ranges") return AnisotropyForm::DiagonalRanges;
  if (name == "full_matrix") return AnisotropyForm::FullMatrix;
  throw std::invalid_argument("unknown anisotropy form '" + name + "'");
}

int parameter_count(AnisotropyForm form, int dim) {
  switch (form) {
    case AnisotropyForm::Isotropic:
      return 1;
    case AnisotropyForm::DiagonalRanges:
      return 2;
    case AnisotropyForm::FullMatrix:
      return dim * (dim + 1) / 2;
  }
  return 0;
}

Anisotropy Anisotropy::isotropic(double theta, int dim) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw std::invalid_argument("isotropic range must be positive");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  std::vector<double> b(static_cast<std::size_t>(dim * dim), 0.0);
  for (int i = 0; i < dim; ++i) b[static_cast<std::size_t>(i * dim + i)] = 1.0 / theta;
  return {AnisotropyForm::Isotropic, dim, std::move(b)};
}

Anisotropy Anisotropy::diagonal_ranges(double theta, double rho) {
  if (!(theta > 0.0) || !(rho > 0.0) || !std::isfinite(theta) || !std::isfinite(rho))
    throw std::invalid_argument("diagonal ranges must be positive");
  return {AnisotropyForm::DiagonalRanges, 2, {1.0 / theta, 0.0, 0.0, 1.0 / rho}};
}

Anisotropy Anisotropy::full_matrix(std::vector<double> b, int dim, double eig_lo, double eig_hi) {
  if (dim < 1 || b.size() != static_cast<std::size_t>(dim * dim))
    throw std::invalid_argument("full_matrix: B must be dim x dim");
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (std::abs(b[i * dim + j] - b[j * dim + i]) > 1e-12 * scale)
        throw std::invalid_argument("full_matrix: B must be symmetric");
  Anisotropy a{AnisotropyForm::FullMatrix, dim, std::move(b)};
  const auto [lo, hi] = a.eigen_range();
  if (!(lo > 0.0)) throw std::invalid_argument("full_matrix: B must be positive definite");
  if (lo < eig_lo || hi > eig_hi)
    throw std::invalid_argument("full_matrix: eigenvalues of B outside the declared bounds");
  return a;
}

Anisotropy Anisotropy::from_params(AnisotropyForm form, int dim, std::span<const double> theta) {
  if (theta.size() != static_cast<std::size_t>(parameter_count(form, dim)))
    throw std::invalid_argument("anisotropy: expected " +
                                std::to_string(parameter_count(form, dim)) + " parameters for " +
                                to_string(form) + ", got " + std::to_string(theta.size()));
  switch (form) {
    case AnisotropyForm::Isotropic:
      return isotropic(theta[0], dim);
    case AnisotropyForm::DiagonalRanges:
      if (dim != 2) throw std::invalid_argument("diagonal_ranges requires dim == 2");
      return diagonal_ranges(theta[0], theta[1]);
    case AnisotropyForm::FullMatrix: {
      // Symmetric only; positive definiteness is not checked here so that
      // optimizers may probe the whole parameter box.
      std::vector<double> b(static_cast<std::size_t>(dim * dim));
      std::size_t k = 0;
      for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
          b[i * dim + j] = theta[k];
          b[j * dim + i] = theta[k];
          ++k;
        }
      return {AnisotropyForm::FullMatrix, dim, std::move(b)};
    }
  }
  throw std::invalid_argument("anisotropy: unknown form");
}

std::vector<double> Anisotropy::params() const {
  switch (form_) {
    case AnisotropyForm::Isotropic:
      return {1.0 / b_[0]};
    case AnisotropyForm::DiagonalRanges:
      return {1.0 / b_[0], 1.0 / b_[3]};
    case AnisotropyForm::FullMatrix: {
      std::vector<double> out;
      for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j) out.push_back(b_[i * dim_ + j]);
      return out;
    }
  }
  return {};
}

void Anisotropy::apply(std::span<const double> h, std::span<double> out) const {
  if (h.size() != static_cast<std::size_t>(dim_) || out.size() != h.size())
    throw std::invalid_argument("anisotropy: lag dimension mismatch");
  for (int i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < dim_; ++j) acc += b_[i * dim_ + j] * h[j];
    out[i] = acc;
  }
}

double Anisotropy::scaled_distance(std::span<const double> h) const {
  if (h.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("anisotropy: lag dimension mismatch");
  double sq = 0.0;
  for (int i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < dim_; ++j) acc += b_[i * dim_ + j] * h[j];
    sq += acc * acc;
  }
  return std::sqrt(sq);
}

std::pair<double, double> Anisotropy::eigen_range() const {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> b(
      b_.data(), dim_, dim_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

double scaled_distance(std::span<const double> h, const Anisotropy& aniso) {
  return aniso.scaled_distance(h);
}

double correlation(std::span<const double> h, const KernelFamily& family, const Anisotropy& aniso) {
  return radial_profile(family, aniso.scaled_distance(h));
}

// ---------------------------------------------------------------------------

ParameterBounds ParameterBounds::defaults(AnisotropyForm form, int dim) {
  ParameterBounds b;
  if (form == AnisotropyForm::FullMatrix) {
    // B entries are inverse ranges: diagonal in [1/15, 1/0.1].
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) {
        b.theta_lo.push_back(i == j ? 1.0 / 15.0 : -10.0);
        b.theta_hi.push_back(10.0);
      }
    return b;
  }
  const auto m = static_cast<std::size_t>(parameter_count(form, dim));
  b.theta_lo.assign(m, 0.1);
  b.theta_hi.assign(m, 15.0);
  return b;
}

bool ParameterBounds::contains_theta(std::span<const double> theta) const {
  if (theta.size() != theta_lo.size()) return false;
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= theta_lo[i] && theta[i] <= theta_hi[i])) return false;
  return true;
}

bool ParameterBounds::contains(const CovarianceParams& params) const {
  return params.phi >= phi_min && params.phi <= phi_max && contains_theta(params.theta);
}

void ParameterBounds::validate() const {
  if (!(phi_min > 0.0) || !(phi_max > phi_min))
    throw std::invalid_argument("bounds: require 0 < phi_min < phi_max");
  if (theta_lo.empty() || theta_lo.size() != theta_hi.size())
    throw std::invalid_argument("bounds: theta box must be non-empty with matching sizes");
  for (std::size_t i = 0; i < theta_lo.size(); ++i)
    if (!(theta_hi[i] > theta_lo[i]))
      throw std::invalid_argument("bounds: theta box dimension " + std::to_string(i) +
                                  " has zero or negative width");
}

}  // namespace acs
