#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "acs/errors.hpp"
#include "acs/io.hpp"

namespace acs::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return {buf, static_cast<std::size_t>(len)};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw InputError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string sample_to_csv(const FieldSample& sample) {
  const int d = sample.sites.dim();
  std::string out;
  for (int k = 1; k <= d; ++k) out += "x" + std::to_string(k) + ",";
  out += "y\n";
  for (std::size_t i = 0; i < sample.sites.size(); ++i) {
    for (double c : sample.sites.site(i)) {
      out += format_double(c);
      out += ',';
    }
    out += format_double(sample.y[i]);
    out += '\n';
  }
  return out;
}

void write_sample_csv(const std::filesystem::path& path, const FieldSample& sample) {
  write_file_atomic(path, sample_to_csv(sample));
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& field, const std::string& origin, std::size_t row) {
  std::size_t begin = field.find_first_not_of(' ');
  std::size_t end = field.find_last_not_of(' ');
  if (begin == std::string::npos) throw InputError(origin + ": row " + std::to_string(row) + ": empty field");
  const char* first = field.data() + begin;
  const char* last = field.data() + end + 1;
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw InputError(origin + ": row " + std::to_string(row) + ": cannot parse '" + field + "' as a number");
  return v;
}

}  // namespace

FieldSample parse_sample_csv(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw InputError(origin + ": empty file (expected header x1,...,xd,y)");
  const auto header = split(line);
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1 || header.back() != "y")
    throw InputError(origin + ": header must be x1,...,xd,y");
  for (int k = 0; k < d; ++k)
    if (header[k] != "x" + std::to_string(k + 1))
      throw InputError(origin + ": header column " + std::to_string(k + 1) + " must be x" + std::to_string(k + 1));

  std::vector<double> coords;
  std::vector<double> y;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw InputError(origin + ": row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    for (int k = 0; k < d; ++k) coords.push_back(parse_number(fields[k], origin, row));
    y.push_back(parse_number(fields[d], origin, row));
  }
  if (y.empty()) throw InputError(origin + ": no data rows");
  FieldSample sample;
  sample.sites = SiteSet(d, std::move(coords));
  sample.y = std::move(y);
  return sample;
}

FieldSample read_sample_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sample '" + path.string() + "'");
  return parse_sample_csv(in, path.string());
}

json kernel_to_json(const KernelFamily& family) {
  return {{"family", family_name(family)}, {"nu", fractal_index(family)}};
}

json anisotropy_to_json(const Anisotropy& aniso) {
  return {{"form", to_string(aniso.form())}, {"theta", aniso.params()}};
}

json provenance_to_json(const Provenance& prov, const LatticeMeta& lattice) {
  return {
      {"family", family_name(prov.family)},
      {"nu", fractal_index(prov.family)},
      {"anisotropy", anisotropy_to_json(prov.anisotropy)},
      {"phi", prov.phi},
      {"p", prov.features},
      {"seed", prov.seed},
      {"N", lattice.N},
      {"d", lattice.dim},
      {"delta", lattice.delta},
  };
}

json estimation_to_json(const EstimationResult& result) {
  json flags = json::array();
  for (bool b : result.outcome.boundary_hit) flags.push_back(b);
  return {
      {"phi_hat", result.phi_hat},
      {"phi_at_boundary", result.phi_at_boundary},
      {"theta_hat", result.theta_hat},
      {"converged", result.outcome.converged},
      {"boundary_hit", flags},
      {"iterations", result.outcome.iterations},
      {"evaluations", result.outcome.evaluations},
      {"objective_value", result.objective_value},
  };
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  const std::size_t m = curve.empty() ? 0 : curve.front().theta.size();
  std::string out;
  for (std::size_t j = 1; j <= m; ++j) out += "theta_" + std::to_string(j) + ",";
  out += "g_over_sqrt_n\n";
  for (const auto& pt : curve) {
    for (double t : pt.theta) out += format_double(t) + ",";
    out += format_double(pt.value) + "\n";
  }
  return out;
}

json report_to_json(const ExperimentReport& report, AnisotropyForm form, int dim) {
  json summary = json::object();
  for (const auto& s : report.summary)
    summary[s.name] = {{"truth", s.truth}, {"mean", s.mean}, {"rmse", s.rmse}};
  json reps = json::array();
  const auto names = theta_names(form, dim);
  for (const auto& r : report.replicates) {
    reps.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"phi_hat", r.phi_hat},
                    {"theta_hat", r.theta_hat},
                    {"boundary_hit", r.boundary_hit},
                    {"converged", r.converged},
                    {"iterations", r.iterations},
                    {"objective_value", r.objective_value}});
  }
  return {{"n", report.n},
          {"replicates", reps.size()},
          {"excluded_count", report.excluded_count},
          {"theta_names", names},
          {"summary", summary},
          {"per_replicate", reps}};
}

std::string report_to_csv(const ExperimentReport& report, AnisotropyForm form, int dim) {
  std::string out = "index,seed,phi_hat,sigma_hat";
  for (const auto& name : theta_names(form, dim)) out += "," + name + "_hat";
  out += ",boundary_hit,converged,iterations\n";
  for (const auto& r : report.replicates) {
    out += std::to_string(r.index) + "," + std::to_string(r.seed) + "," + format_double(r.phi_hat) +
           "," + format_double(std::sqrt(r.phi_hat));
    for (double t : r.theta_hat) out += "," + format_double(t);
    out += std::string(",") + (r.boundary_hit ? "1" : "0") + "," + (r.converged ? "1" : "0") + "," +
           std::to_string(r.iterations) + "\n";
  }
  return out;
}

}  // namespace acs::io
