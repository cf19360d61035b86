#include <fstream>
#include <set>

#include "acs/config.hpp"
#include "acs/errors.hpp"

namespace acs::config {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can
// be rejected as unknown.
class Reader {
public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw InputError("config " + where + ": " + what);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& raw(const std::string& key) {
    if (!has(key)) fail(where(key), "missing required key");
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? as_number(obj_.at(key), where(key)) : fallback;
  }
  double number(const std::string& key) { return as_number(raw(key), where(key)); }

  long long integer(const std::string& key, long long fallback) {
    return has(key) ? as_integer(obj_.at(key), where(key)) : fallback;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    return has(key) ? as_numbers(obj_.at(key), where(key)) : fallback;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!seen_.contains(key)) fail(where(key), "unknown key");
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "expected a finite number");
    return x;
  }
  static long long as_integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    return v.get<long long>();
  }
  static std::vector<double> as_numbers(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

long long positive(long long v, const std::string& where) {
  if (v < 1) Reader::fail(where, "must be >= 1");
  return v;
}

KernelSpec read_kernel(Reader& parent) {
  KernelSpec spec;
  if (!parent.has("kernel")) return spec;
  Reader r(parent.raw("kernel"), parent.where("kernel"));
  spec.family = r.string("family", spec.family);
  spec.nu = r.number("nu", spec.nu);
  r.finish();
  // Probe with d = 2 so bad nu values are caught before any compute.
  try {
    validate(make_family(spec, 2));
  } catch (const std::invalid_argument& e) {
    Reader::fail(parent.where("kernel"), e.what());
  }
  return spec;
}

AnisotropyForm read_form(const std::string& name, const std::string& where) {
  try {
    return anisotropy_form_from_string(name);
  } catch (const std::invalid_argument& e) {
    Reader::fail(where, e.what());
  }
}

// {"form": ..., "theta": [...]}
void read_anisotropy(Reader& parent, AnisotropyForm& form, std::vector<double>& theta) {
  if (!parent.has("anisotropy")) return;
  Reader r(parent.raw("anisotropy"), parent.where("anisotropy"));
  form = read_form(r.string("form", to_string(form)), r.where("form"));
  theta = r.numbers("theta", theta);
  r.finish();
}

LatticeSpec read_lattice(Reader& parent, LatticeSpec spec) {
  if (!parent.has("lattice")) return spec;
  Reader r(parent.raw("lattice"), parent.where("lattice"));
  spec.N = static_cast<int>(positive(r.integer("N", spec.N), r.where("N")));
  spec.dim = static_cast<int>(positive(r.integer("d", spec.dim), r.where("d")));
  spec.delta = r.number("delta", spec.delta);
  if (!(spec.delta >= 0.0 && spec.delta < 0.5)) Reader::fail(r.where("delta"), "must lie in [0, 0.5)");
  r.finish();
  return spec;
}

BoundsSpec read_bounds(Reader& parent) {
  BoundsSpec spec;
  if (!parent.has("bounds")) return spec;
  Reader r(parent.raw("bounds"), parent.where("bounds"));
  const auto phi = r.numbers("phi", {spec.phi_min, spec.phi_max});
  if (phi.size() != 2) Reader::fail(r.where("phi"), "expected [lo, hi]");
  spec.phi_min = phi[0];
  spec.phi_max = phi[1];
  spec.theta_lo = r.numbers("theta_lo", {});
  spec.theta_hi = r.numbers("theta_hi", {});
  r.finish();
  return spec;
}

OptimizerConfig read_optimizer(Reader& parent) {
  OptimizerConfig cfg;
  if (!parent.has("optimizer")) return cfg;
  Reader r(parent.raw("optimizer"), parent.where("optimizer"));
  cfg.rel_tol = r.number("rel_tol", cfg.rel_tol);
  cfg.x_tol = r.number("x_tol", cfg.x_tol);
  cfg.max_iter = static_cast<int>(r.integer("max_iter", cfg.max_iter));
  cfg.fd_step = r.number("fd_step", cfg.fd_step);
  cfg.initial_guess = r.numbers("initial_guess", {});
  cfg.memory = static_cast<int>(r.integer("memory", cfg.memory));
  cfg.multi_start = static_cast<int>(r.integer("multi_start", cfg.multi_start));
  r.finish();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    Reader::fail(parent.where("optimizer"), e.what());
  }
  return cfg;
}

std::uint64_t read_seed(Reader& r, std::uint64_t fallback) {
  if (!r.has("seed")) return fallback;
  const json& v = r.raw("seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    Reader::fail(r.where("seed"), "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<std::vector<double>> read_points(const json& v, const std::string& where) {
  if (!v.is_array()) Reader::fail(where, "expected an array of parameter vectors");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(Reader::as_numbers(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

void check_theta_size(const std::vector<double>& theta, AnisotropyForm form, int dim,
                      const std::string& where) {
  const auto m = static_cast<std::size_t>(parameter_count(form, dim));
  if (theta.size() != m)
    Reader::fail(where, "expected " + std::to_string(m) + " parameters for " + to_string(form) +
                            " in d = " + std::to_string(dim) + ", got " + std::to_string(theta.size()));
}

SimulateConfig read_simulate(Reader& r) {
  SimulateConfig c;
  c.kernel = read_kernel(r);
  read_anisotropy(r, c.form, c.theta);
  c.phi = r.number("phi", c.phi);
  if (!(c.phi > 0.0)) Reader::fail(r.where("phi"), "must be positive");
  c.lattice = read_lattice(r, c.lattice);
  c.features = static_cast<std::size_t>(positive(r.integer("features", 20000), r.where("features")));
  c.seed = read_seed(r, c.seed);
  check_theta_size(c.theta, c.form, c.lattice.dim, r.where("anisotropy.theta"));
  try {
    const auto family = make_family(c.kernel, c.lattice.dim);
    validate(family);
    (void)Anisotropy::from_params(c.form, c.lattice.dim, c.theta);
    if (std::holds_alternative<PoweredExponential>(family))
      Reader::fail(r.where("kernel"), "the spectral simulator has no sampler for powered_exponential");
  } catch (const std::invalid_argument& e) {
    Reader::fail(r.where("anisotropy"), e.what());
  }
  return c;
}

EstimateConfig read_estimate(Reader& r) {
  EstimateConfig c;
  c.kernel = read_kernel(r);
  c.form = read_form(r.string("anisotropy_form", to_string(c.form)), r.where("anisotropy_form"));
  c.bounds = read_bounds(r);
  c.optimizer = read_optimizer(r);
  return c;
}

SweepConfig read_sweep(Reader& r) {
  SweepConfig c;
  c.kernel = read_kernel(r);
  c.form = read_form(r.string("anisotropy_form", to_string(c.form)), r.where("anisotropy_form"));
  const json& grid = r.raw("grid");
  if (!grid.is_array() || grid.empty()) Reader::fail(r.where("grid"), "expected a non-empty array of axes");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Reader axis(grid[i], r.where("grid[" + std::to_string(i) + "]"));
    GridAxis a;
    a.lo = axis.number("lo");
    a.hi = axis.number("hi");
    a.count = static_cast<int>(positive(axis.integer("count", 1), axis.where("count")));
    axis.finish();
    if (a.hi < a.lo) Reader::fail(axis.where("hi"), "must be >= lo");
    c.grid.push_back(a);
  }
  return c;
}

Study read_study(const std::string& name) {
  if (name == "replicated") return Study::Replicated;
  if (name == "rate") return Study::Rate;
  if (name == "normality") return Study::Normality;
  if (name == "quadratic_clt") return Study::QuadraticClt;
  if (name == "stationary") return Study::Stationary;
  throw UsageError("unknown study '" + name +
                   "' (expected replicated, rate, normality, quadratic_clt or stationary)");
}

ExperimentCommand read_experiment(Reader& r) {
  ExperimentCommand c;
  c.study = read_study(r.string("study"));
  c.kernel = read_kernel(r);
  read_anisotropy(r, c.form, c.theta);
  c.phi = r.number("phi", c.phi);
  c.lattice = read_lattice(r, c.lattice);
  c.features = static_cast<std::size_t>(positive(r.integer("features", 20000), r.where("features")));
  c.replicates = static_cast<int>(positive(r.integer("replicates", c.replicates), r.where("replicates")));
  c.bounds = read_bounds(r);
  c.optimizer = read_optimizer(r);
  c.seed = read_seed(r, c.seed);
  if (r.has("grid_sides")) {
    c.grid_sides.clear();
    for (double v : r.numbers("grid_sides", {})) c.grid_sides.push_back(static_cast<int>(v));
  }
  if (r.has("sizes")) {
    c.sizes.clear();
    for (double v : r.numbers("sizes", {})) {
      if (!(v >= 1.0)) Reader::fail(r.where("sizes"), "sizes must be >= 1");
      c.sizes.push_back(static_cast<std::size_t>(v));
    }
  }
  const std::string matrix = r.string("matrix", "random_symmetric");
  if (matrix == "random_symmetric") c.matrix = CltMatrix::RandomSymmetric;
  else if (matrix == "identity") c.matrix = CltMatrix::Identity;
  else Reader::fail(r.where("matrix"), "expected random_symmetric or identity");

  check_theta_size(c.theta, c.form, c.lattice.dim, r.where("anisotropy.theta"));
  if (c.study != Study::QuadraticClt) {
    try {
      c.experiment(1).validate();
    } catch (const std::invalid_argument& e) {
      Reader::fail(r.where("experiment"), e.what());
    }
  }
  return c;
}

CheckConfig read_check(Reader& r) {
  CheckConfig c;
  c.kernel = read_kernel(r);
  c.form = read_form(r.string("anisotropy_form", to_string(c.form)), r.where("anisotropy_form"));
  c.lattice = read_lattice(r, c.lattice);
  c.seed = read_seed(r, c.seed);
  c.theta_grid = read_points(r.raw("theta_grid"), r.where("theta_grid"));
  c.radius = r.number("radius", c.radius);
  if (r.has("kl_pairs")) {
    const json& pairs = r.raw("kl_pairs");
    if (!pairs.is_array()) Reader::fail(r.where("kl_pairs"), "expected an array of [theta1, theta2]");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto where = r.where("kl_pairs[" + std::to_string(i) + "]");
      const auto pt = read_points(pairs[i], where);
      if (pt.size() != 2) Reader::fail(where, "expected [theta1, theta2]");
      c.kl_pairs.emplace_back(pt[0], pt[1]);
    }
  }
  for (const auto& t : c.theta_grid) check_theta_size(t, c.form, c.lattice.dim, r.where("theta_grid"));
  for (const auto& [a, b] : c.kl_pairs) {
    check_theta_size(a, c.form, c.lattice.dim, r.where("kl_pairs"));
    check_theta_size(b, c.form, c.lattice.dim, r.where("kl_pairs"));
  }
  return c;
}

json kernel_json(const KernelSpec& k) { return {{"family", k.family}, {"nu", k.nu}}; }

json lattice_json(const LatticeSpec& l) { return {{"N", l.N}, {"d", l.dim}, {"delta", l.delta}}; }

json bounds_json(const BoundsSpec& b, AnisotropyForm form, int dim) {
  const auto resolved = make_bounds(b, form, dim);
  return {{"phi", {resolved.phi_min, resolved.phi_max}},
          {"theta_lo", resolved.theta_lo},
          {"theta_hi", resolved.theta_hi}};
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"rel_tol", o.rel_tol}, {"x_tol", o.x_tol},       {"max_iter", o.max_iter},
          {"fd_step", o.fd_step}, {"initial_guess", o.initial_guess}, {"memory", o.memory},
          {"multi_start", o.multi_start}};
}

}  // namespace

KernelFamily make_family(const KernelSpec& spec, int dim) {
  if (spec.family == "matern") return Matern{spec.nu};
  if (spec.family == "powered_exponential") return PoweredExponential{spec.nu};
  if (spec.family == "rational_quadratic") return RationalQuadratic{spec.nu, dim};
  throw std::invalid_argument("unknown kernel family '" + spec.family +
                              "' (expected matern, powered_exponential or rational_quadratic)");
}

ParameterBounds make_bounds(const BoundsSpec& spec, AnisotropyForm form, int dim) {
  auto b = ParameterBounds::defaults(form, dim);
  b.phi_min = spec.phi_min;
  b.phi_max = spec.phi_max;
  if (!spec.theta_lo.empty()) b.theta_lo = spec.theta_lo;
  if (!spec.theta_hi.empty()) b.theta_hi = spec.theta_hi;
  if (b.theta_lo.size() != b.theta_hi.size() ||
      b.theta_lo.size() != static_cast<std::size_t>(parameter_count(form, dim)))
    throw InputError("config bounds: theta_lo/theta_hi must have " +
                     std::to_string(parameter_count(form, dim)) + " entries for " + to_string(form));
  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config bounds: ") + e.what());
  }
  return b;
}

std::string to_string(Study study) {
  switch (study) {
    case Study::Replicated: return "replicated";
    case Study::Rate: return "rate";
    case Study::Normality: return "normality";
    case Study::QuadraticClt: return "quadratic_clt";
    case Study::Stationary: return "stationary";
  }
  return "unknown";
}

ExperimentConfig ExperimentCommand::experiment(unsigned workers) const {
  ExperimentConfig cfg;
  cfg.family = make_family(kernel, lattice.dim);
  cfg.form = form;
  cfg.truth = {phi, theta};
  cfg.N = lattice.N;
  cfg.dim = lattice.dim;
  cfg.delta = lattice.delta;
  cfg.features = features;
  cfg.replicates = replicates;
  cfg.bounds = make_bounds(bounds, form, lattice.dim);
  cfg.optimizer = optimizer;
  cfg.seed = seed;
  cfg.workers = workers;
  return cfg;
}

RunConfig parse(const json& doc) {
  Reader r(doc, "$");
  const std::string command = r.string("command");
  RunConfig out;
  try {
    if (command == "simulate") out = read_simulate(r);
    else if (command == "estimate") out = read_estimate(r);
    else if (command == "sweep") out = read_sweep(r);
    else if (command == "experiment") out = read_experiment(r);
    else if (command == "check") out = read_check(r);
    else throw UsageError("unknown command '" + command + "'");
  } catch (const std::invalid_argument& e) {
    Reader::fail("$", e.what());
  }
  r.finish();
  return out;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config '" + path.string() + "': " + e.what());
  }
  return parse(doc);
}

std::string command_name(const RunConfig& cfg) {
  static constexpr const char* names[] = {"simulate", "estimate", "sweep", "experiment", "check"};
  return names[cfg.index()];
}

json to_json(const RunConfig& cfg) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SimulateConfig>) {
          return {{"command", "simulate"},
                  {"kernel", kernel_json(c.kernel)},
                  {"anisotropy", {{"form", to_string(c.form)}, {"theta", c.theta}}},
                  {"phi", c.phi},
                  {"lattice", lattice_json(c.lattice)},
                  {"features", c.features},
                  {"seed", c.seed}};
        } else if constexpr (std::is_same_v<T, EstimateConfig>) {
          // Bounds depend on the sample dimension; keep the overrides as given.
          json b = {{"phi", {c.bounds.phi_min, c.bounds.phi_max}}};
          if (!c.bounds.theta_lo.empty()) b["theta_lo"] = c.bounds.theta_lo;
          if (!c.bounds.theta_hi.empty()) b["theta_hi"] = c.bounds.theta_hi;
          return {{"command", "estimate"},
                  {"kernel", kernel_json(c.kernel)},
                  {"anisotropy_form", to_string(c.form)},
                  {"bounds", b},
                  {"optimizer", optimizer_json(c.optimizer)}};
        } else if constexpr (std::is_same_v<T, SweepConfig>) {
          json grid = json::array();
          for (const auto& a : c.grid) grid.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
          return {{"command", "sweep"},
                  {"kernel", kernel_json(c.kernel)},
                  {"anisotropy_form", to_string(c.form)},
                  {"grid", grid}};
        } else if constexpr (std::is_same_v<T, ExperimentCommand>) {
          return {{"command", "experiment"},
                  {"study", to_string(c.study)},
                  {"kernel", kernel_json(c.kernel)},
                  {"anisotropy", {{"form", to_string(c.form)}, {"theta", c.theta}}},
                  {"phi", c.phi},
                  {"lattice", lattice_json(c.lattice)},
                  {"features", c.features},
                  {"replicates", c.replicates},
                  {"bounds", bounds_json(c.bounds, c.form, c.lattice.dim)},
                  {"optimizer", optimizer_json(c.optimizer)},
                  {"seed", c.seed},
                  {"grid_sides", c.grid_sides},
                  {"sizes", c.sizes},
                  {"matrix", c.matrix == CltMatrix::Identity ? "identity" : "random_symmetric"}};
        } else {
          json pairs = json::array();
          for (const auto& [a, b] : c.kl_pairs) pairs.push_back({a, b});
          return {{"command", "check"},
                  {"kernel", kernel_json(c.kernel)},
                  {"anisotropy_form", to_string(c.form)},
                  {"lattice", lattice_json(c.lattice)},
                  {"seed", c.seed},
                  {"theta_grid", c.theta_grid},
                  {"radius", c.radius},
                  {"kl_pairs", pairs}};
        }
      },
      cfg);
}

}  // namespace acs::config
