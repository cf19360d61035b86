#pragma once

#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace acs {

// ---------------------------------------------------------------------------
// Kernel families. The fractal index nu is fixed (known) during estimation.

struct Matern {
  double nu;
};

/// exp(-u^nu), 0 < nu < 2.
struct PoweredExponential {
  double nu;
};

/// (1 + u^2)^-(dim/2 + nu).
struct RationalQuadratic {
  double nu;
  int dim;
};

using KernelFamily = std::variant<Matern, PoweredExponential, RationalQuadratic>;

/// Throws std::invalid_argument when nu (or dim) is outside the family's range.
void validate(const KernelFamily& family);

std::string family_name(const KernelFamily& family);
double fractal_index(const KernelFamily& family);

// ---------------------------------------------------------------------------
// Special functions

/// Modified Bessel function of the second kind K_nu(x).
///
/// Throws std::domain_error for nu <= 0 or x <= 0 and std::overflow_error when
/// the result is not representable.
double bessel_k(double nu, double x);

/// exp(x) * K_nu(x); finite for large x where bessel_k underflows.
double bessel_k_scaled(double nu, double x);

namespace detail {
// Temme series / Steed continued fraction route, without the half-integer
// shortcut. Exposed for tests.
double bessel_k_scaled_general(double nu, double x);
}  // namespace detail

// ---------------------------------------------------------------------------
// Radial profiles

/// K(u) for a scaled distance u >= 0. K(0) == 1 exactly.
double radial_profile(const KernelFamily& family, double u);

/// Radial profile with the per-family constants resolved once, for hot loops.
class RadialProfile {
public:
  explicit RadialProfile(const KernelFamily& family);

  double operator()(double u) const;

private:
  enum class Kind {
    Exponential,      // Matern 1/2
    Matern32,
    Matern52,
    MaternGeneral,
    PoweredExp,
    RationalQuadInt,  // exponent is an integer
    RationalQuadHalf, // exponent is an integer + 1/2
    RationalQuadGeneral,
  };

  Kind kind_;
  double nu_ = 0.0;
  double exponent_ = 0.0;
  int int_power_ = 0;
  double log_norm_ = 0.0;  // log(2^(1-nu) / Gamma(nu))
};

// ---------------------------------------------------------------------------
// Geometric anisotropy: correlation depends on the lag h through |B h|, where
// B is the symmetric square root of A0. Isotropic ranges use B = I / theta.

enum class AnisotropyForm { Isotropic, DiagonalRanges, FullMatrix };

std::string to_string(AnisotropyForm form);
AnisotropyForm anisotropy_form_from_string(const std::string& name);

/// Number of correlation parameters for a form in `dim` dimensions.
int parameter_count(AnisotropyForm form, int dim);

class Anisotropy {
public:
  static Anisotropy isotropic(double theta, int dim);
  static Anisotropy diagonal_ranges(double theta, double rho);
  /// `b` is row-major dim x dim. Must be symmetric positive definite with
  /// eigenvalues inside [eig_lo, eig_hi].
  static Anisotropy full_matrix(std::vector<double> b, int dim, double eig_lo = 0.0,
                                double eig_hi = std::numeric_limits<double>::infinity());

  /// Builds the anisotropy for a parameter vector of the given form. FullMatrix
  /// parameters are the upper triangle of B in row-major order.
  static Anisotropy from_params(AnisotropyForm form, int dim, std::span<const double> theta);

  AnisotropyForm form() const { return form_; }
  int dim() const { return dim_; }
  /// Row-major B.
  std::span<const double> matrix() const { return b_; }
  std::vector<double> params() const;

  /// out = B h
  void apply(std::span<const double> h, std::span<double> out) const;
  /// |B h|_2
  double scaled_distance(std::span<const double> h) const;

  /// Smallest and largest eigenvalue of B.
  std::pair<double, double> eigen_range() const;

private:
  Anisotropy(AnisotropyForm form, int dim, std::vector<double> b)
      : form_(form), dim_(dim), b_(std::move(b)) {}

  AnisotropyForm form_;
  int dim_;
  std::vector<double> b_;
};

double scaled_distance(std::span<const double> h, const Anisotropy& aniso);
double correlation(std::span<const double> h, const KernelFamily& family, const Anisotropy& aniso);

// ---------------------------------------------------------------------------
// Parameters

struct CovarianceParams {
  double phi = 1.0;
  std::vector<double> theta;
};

/// Box I x Theta for (phi, theta).
struct ParameterBounds {
  double phi_min = 1e-4;
  double phi_max = 1e4;
  std::vector<double> theta_lo;
  std::vector<double> theta_hi;

  /// [0.1, 15] per range coordinate. FullMatrix entries (inverse ranges) get
  /// [1/15, 10] on the diagonal and [-10, 10] off it.
  static ParameterBounds defaults(AnisotropyForm form, int dim);

  std::size_t size() const { return theta_lo.size(); }
  bool contains_theta(std::span<const double> theta) const;
  bool contains(const CovarianceParams& params) const;
  /// Throws std::invalid_argument on inverted or empty boxes.
  void validate() const;
};

}  // namespace acs
