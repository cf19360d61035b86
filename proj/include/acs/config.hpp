#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "acs/estimation.hpp"
#include "acs/experiments.hpp"

namespace acs::config {

/// Kernel as written in a config. Rational quadratic needs the spatial
/// dimension, which estimate/sweep only learn from the sample.
struct KernelSpec {
  std::string family = "matern";
  double nu = 0.5;
};

KernelFamily make_family(const KernelSpec& spec, int dim);

struct LatticeSpec {
  int N = 64;
  int dim = 2;
  double delta = 0.1;
};

/// Bounds overrides; empty fields fall back to ParameterBounds::defaults.
struct BoundsSpec {
  double phi_min = 1e-4;
  double phi_max = 1e4;
  std::vector<double> theta_lo;
  std::vector<double> theta_hi;
};

ParameterBounds make_bounds(const BoundsSpec& spec, AnisotropyForm form, int dim);

struct SimulateConfig {
  KernelSpec kernel;
  AnisotropyForm form = AnisotropyForm::Isotropic;
  std::vector<double> theta{4.0};
  double phi = 1.0;
  LatticeSpec lattice;
  std::size_t features = 20000;
  std::uint64_t seed = 1;
};

struct EstimateConfig {
  KernelSpec kernel;
  AnisotropyForm form = AnisotropyForm::Isotropic;
  BoundsSpec bounds;
  OptimizerConfig optimizer;
};

struct SweepConfig {
  KernelSpec kernel;
  AnisotropyForm form = AnisotropyForm::Isotropic;
  std::vector<GridAxis> grid;
};

enum class Study { Replicated, Rate, Normality, QuadraticClt, Stationary };

std::string to_string(Study study);

struct ExperimentCommand {
  Study study = Study::Replicated;
  KernelSpec kernel;
  AnisotropyForm form = AnisotropyForm::Isotropic;
  std::vector<double> theta{4.0};
  double phi = 1.0;
  LatticeSpec lattice;
  std::size_t features = 20000;
  int replicates = 50;
  BoundsSpec bounds;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  std::vector<int> grid_sides{16, 32, 64};          // rate
  std::vector<std::size_t> sizes{8, 64, 512};       // quadratic_clt
  CltMatrix matrix = CltMatrix::RandomSymmetric;    // quadratic_clt

  ExperimentConfig experiment(unsigned workers) const;
};

struct CheckConfig {
  KernelSpec kernel;
  AnisotropyForm form = AnisotropyForm::Isotropic;
  LatticeSpec lattice{6, 2, 0.1};
  std::uint64_t seed = 1;
  std::vector<std::vector<double>> theta_grid;
  double radius = 1.5;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> kl_pairs;
};

using RunConfig = std::variant<SimulateConfig, EstimateConfig, SweepConfig, ExperimentCommand, CheckConfig>;

/// Validates the whole document before anything runs. Unknown keys, wrong
/// types and out-of-range values raise acs::InputError with the key path; an
/// unknown study raises acs::UsageError.
RunConfig parse(const nlohmann::json& doc);
RunConfig load(const std::filesystem::path& path);

/// Fully resolved config, defaults included.
nlohmann::json to_json(const RunConfig& cfg);

std::string command_name(const RunConfig& cfg);

}  // namespace acs::config
