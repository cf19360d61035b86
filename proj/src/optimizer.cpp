#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "acs/errors.hpp"
#include "acs/objective.hpp"
#include "acs/optimizer.hpp"

namespace acs {

void OptimizerConfig::validate() const {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("optimizer: rel_tol must be positive");
  if (!(x_tol > 0.0)) throw std::invalid_argument("optimizer: x_tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("optimizer: max_iter must be >= 1");
  if (!(fd_step > 0.0)) throw std::invalid_argument("optimizer: fd_step must be positive");
  if (memory < 1) throw std::invalid_argument("optimizer: memory must be >= 1");
  if (multi_start < 0) throw std::invalid_argument("optimizer: multi_start must be >= 0");
}

bool OptimizeOutcome::any_boundary_hit() const {
  return std::any_of(boundary_hit.begin(), boundary_hit.end(), [](bool b) { return b; });
}

namespace {

std::vector<bool> boundary_flags(std::span<const double> x, std::span<const double> lo,
                                 std::span<const double> hi, double tol) {
  std::vector<bool> flags(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    flags[i] = (x[i] - lo[i] <= tol) || (hi[i] - x[i] <= tol);
  return flags;
}

double checked(double v, const char* where, std::span<const double> x) {
  if (!std::isfinite(v)) {
    std::string at;
    for (double xi : x) at += (at.empty() ? "" : ", ") + std::to_string(xi);
    throw NumericalError(std::string(where) + ": objective is not finite at (" + at + ")");
  }
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

OptimizeOutcome maximize_scalar(const ScalarObjective& f, double lo, double hi,
                                const OptimizerConfig& cfg) {
  cfg.validate();
  if (!(lo < hi)) throw std::invalid_argument("maximize_scalar: require lo < hi");

  OptimizeOutcome out;
  auto cost = [&](double x) {
    ++out.evaluations;
    return -checked(f(x), "maximize_scalar", std::span<const double>(&x, 1));
  };

  const double golden = 0.5 * (3.0 - std::sqrt(5.0));
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  const double t = cfg.x_tol * (hi - lo) / 3.0;

  double a = lo;
  double b = hi;
  double x = a + golden * (b - a);
  double w = x;
  double v = x;
  double fx = cost(x);
  double fw = fx;
  double fv = fx;
  double d = 0.0;
  double e = 0.0;

  for (out.iterations = 0; out.iterations < cfg.max_iter; ++out.iterations) {
    const double m = 0.5 * (a + b);
    const double tol1 = eps * std::abs(x) + t;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) {
      out.converged = true;
      break;
    }
    bool golden_step = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      r = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * r) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = x < m ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x < m ? b : a) - x;
      d = golden * e;
    }
    const double u = x + (std::abs(d) >= tol1 ? d : (d > 0.0 ? tol1 : -tol1));
    const double fu = cost(u);
    // Strict improvement: the first point reaching the best value is kept.
    if (fu < fx) {
      if (u < x) {
        b = x;
      } else {
        a = x;
      }
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x) {
        a = u;
      } else {
        b = u;
      }
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }

  out.argmax = {x};
  out.value = -fx;
  const double lo_arr[1] = {lo};
  const double hi_arr[1] = {hi};
  out.boundary_hit = boundary_flags(out.argmax, lo_arr, hi_arr, cfg.fd_step);
  return out;
}

namespace {

OptimizeOutcome maximize_box_from(const BoxObjective& f, std::span<const double> lo,
                                  std::span<const double> hi, std::vector<double> x,
                                  const OptimizerConfig& cfg) {
  const std::size_t m = lo.size();
  OptimizeOutcome out;

  // Minimize c(x) = -f(x).
  auto cost = [&](std::span<const double> p) {
    ++out.evaluations;
    return -checked(f(p), "maximize_box", p);
  };
  auto gradient = [&](std::span<const double> p) {
    auto g = fd_gradient(cost, p, cfg.fd_step, lo, hi);
    for (double gi : g)
      if (!std::isfinite(gi)) throw NumericalError("maximize_box: gradient is not finite");
    return g;
  };
  auto project = [&](std::vector<double>& p) {
    for (std::size_t i = 0; i < m; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
  };

  project(x);
  double fx = cost(x);
  std::vector<double> g = gradient(x);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> history;

  auto is_free = [&](std::size_t i, std::span<const double> p, std::span<const double> grad) {
    if (p[i] <= lo[i] && grad[i] > 0.0) return false;
    if (p[i] >= hi[i] && grad[i] < 0.0) return false;
    return true;
  };

  for (out.iterations = 0; out.iterations < cfg.max_iter;) {
    std::vector<bool> free(m);
    double pg_norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      free[i] = is_free(i, x, g);
      if (free[i]) pg_norm = std::max(pg_norm, std::abs(g[i]));
    }
    if (pg_norm == 0.0) {
      out.converged = true;
      break;
    }

    // Two-loop recursion restricted to the free coordinates.
    std::vector<double> q(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) q[i] = free[i] ? g[i] : 0.0;
    std::vector<double> alpha(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
      const auto& [s, y] = history[k];
      alpha[k] = dot(s, q) / dot(s, y);
      for (std::size_t i = 0; i < m; ++i) q[i] -= alpha[k] * y[i];
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& qi : q) qi *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const auto& [s, y] = history[k];
      const double beta = dot(y, q) / dot(s, y);
      for (std::size_t i = 0; i < m; ++i) q[i] += s[i] * (alpha[k] - beta);
    }
    std::vector<double> dir(m);
    for (std::size_t i = 0; i < m; ++i) dir[i] = free[i] ? -q[i] : 0.0;
    if (dot(dir, g) >= 0.0) {
      history.clear();
      for (std::size_t i = 0; i < m; ++i) dir[i] = free[i] ? -g[i] : 0.0;
    }

    // First step is capped to one unit per coordinate.
    double step = 1.0;
    if (history.empty()) {
      double dmax = 0.0;
      for (double di : dir) dmax = std::max(dmax, std::abs(di));
      step = std::min(1.0, 1.0 / dmax);
    }

    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktrack = 40;
    bool accepted = false;
    std::vector<double> x_new(m);
    double f_new = fx;
    for (int bt = 0; bt < kMaxBacktrack; ++bt, step *= 0.5) {
      for (std::size_t i = 0; i < m; ++i) x_new[i] = x[i] + step * dir[i];
      project(x_new);
      std::vector<double> delta(m);
      for (std::size_t i = 0; i < m; ++i) delta[i] = x_new[i] - x[i];
      if (std::all_of(delta.begin(), delta.end(), [](double v) { return v == 0.0; })) break;
      f_new = cost(x_new);
      if (f_new < fx + kArmijo * dot(g, delta)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent along the projected arc within finite-difference accuracy.
      out.converged = true;
      break;
    }
    ++out.iterations;

    const auto g_new = gradient(x_new);
    std::vector<double> s(m);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-10 * std::sqrt(dot(s, s) * dot(y, y))) {
      history.emplace_back(s, y);
      if (history.size() > static_cast<std::size_t>(cfg.memory)) history.pop_front();
    }

    const double change = std::abs(f_new - fx);
    const double scale = std::max({std::abs(fx), std::abs(f_new), 1e-300});
    x = x_new;
    fx = f_new;
    g = g_new;
    if (change <= cfg.rel_tol * scale) {
      out.converged = true;
      break;
    }
  }

  out.argmax = x;
  out.value = -fx;
  out.boundary_hit = boundary_flags(x, lo, hi, cfg.fd_step);
  return out;
}

}  // namespace

OptimizeOutcome maximize_box(const BoxObjective& f, std::span<const double> lo,
                             std::span<const double> hi, const OptimizerConfig& cfg) {
  cfg.validate();
  const std::size_t m = lo.size();
  if (m == 0 || hi.size() != m) throw std::invalid_argument("maximize_box: bad bounds");
  for (std::size_t i = 0; i < m; ++i)
    if (!(hi[i] > lo[i]))
      throw std::invalid_argument("maximize_box: degenerate box in dimension " + std::to_string(i));

  std::vector<double> start = cfg.initial_guess;
  if (start.empty()) start.assign(m, 2.0);
  if (start.size() != m) throw std::invalid_argument("maximize_box: initial guess has wrong size");
  if (cfg.initial_guess.empty()) {
    for (std::size_t i = 0; i < m; ++i) start[i] = std::clamp(start[i], lo[i], hi[i]);
  } else {
    for (std::size_t i = 0; i < m; ++i)
      if (!(start[i] >= lo[i] && start[i] <= hi[i]))
        throw std::invalid_argument("maximize_box: initial guess outside the box in dimension " +
                                    std::to_string(i));
  }

  auto best = maximize_box_from(f, lo, hi, start, cfg);
  for (int k = 0; k < cfg.multi_start; ++k) {
    std::vector<double> alt(m);
    const double frac = (k + 0.5) / cfg.multi_start;
    for (std::size_t i = 0; i < m; ++i) alt[i] = lo[i] + frac * (hi[i] - lo[i]);
    auto cand = maximize_box_from(f, lo, hi, alt, cfg);
    cand.evaluations += best.evaluations;
    if (cand.value > best.value) {
      best = std::move(cand);
    } else {
      best.evaluations = cand.evaluations;
    }
  }
  return best;
}

}  // namespace acs
