#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "acs/estimation.hpp"
#include "acs/experiments.hpp"
#include "acs/sampling.hpp"

namespace acs::io {

inline constexpr int kFormatVersion = 1;

/// 17 significant digits; round-trips every double.
std::string format_double(double v);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// CSV with header x1,...,xd,y and one row per site.
std::string sample_to_csv(const FieldSample& sample);
void write_sample_csv(const std::filesystem::path& path, const FieldSample& sample);

/// Parses a sample CSV. Throws acs::InputError naming the row on malformed
/// input and for files with no data rows.
FieldSample parse_sample_csv(std::istream& in, const std::string& origin = "<stream>");
FieldSample read_sample_csv(const std::filesystem::path& path);

nlohmann::json kernel_to_json(const KernelFamily& family);
nlohmann::json anisotropy_to_json(const Anisotropy& aniso);

/// {family, nu, anisotropy, phi, p, seed, N, d, delta}
nlohmann::json provenance_to_json(const Provenance& prov, const LatticeMeta& lattice);

/// {phi_hat, theta_hat, converged, boundary_hit, iterations, objective_value}
nlohmann::json estimation_to_json(const EstimationResult& result);

/// theta_1,...,theta_m,g_over_sqrt_n
std::string curve_to_csv(const std::vector<CurvePoint>& curve);

nlohmann::json report_to_json(const ExperimentReport& report, AnisotropyForm form, int dim);
/// One row per replicate: index, seed, estimates, flags.
std::string report_to_csv(const ExperimentReport& report, AnisotropyForm form, int dim);

}  // namespace acs::io
