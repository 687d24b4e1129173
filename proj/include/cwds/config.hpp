#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "cwds/controller.hpp"
#include "cwds/error.hpp"
#include "cwds/fbp.hpp"
#include "cwds/geometry.hpp"
#include "cwds/pdfp.hpp"

namespace cwds {

struct ConfigKey {
  std::string_view name;
  std::string_view help;
};

inline constexpr std::array<ConfigKey, 32> kConfigKeys{{
    {"n", "image side in pixels"},
    {"fov", "physical side length of the image square"},
    {"num_angles", "number of source positions"},
    {"num_detectors", "detector cells per view (default n)"},
    {"source_radius", "source-to-centre distance (default 2*fov)"},
    {"detector_radius", "centre-to-detector distance (default fov)"},
    {"detector_width", "detector cell width (default: fan covers the image square)"},
    {"angle_start", "first source angle in radians"},
    {"angle_range", "angular range in radians, views equispaced over [start, start+range)"},
    {"noise", "noise variance as a fraction of the squared reference level"},
    {"noise_ref", "noise reference level: peak or rms"},
    {"seed", "noise seed"},
    {"supersample", "simulate data on a 2x finer grid (0/1)"},
    {"c_pr", "target sparsity ratio in (0, 1]"},
    {"kappa", "coefficient counting threshold"},
    {"omega", "controller gain factor, beta = omega * mu0"},
    {"eps1", "sparsity error tolerance"},
    {"eps2", "relative iterate change tolerance"},
    {"imax", "iteration cap"},
    {"mu0", "initial threshold (default: from the backprojection)"},
    {"tau", "primal step size"},
    {"lambda", "dual step size"},
    {"levels", "Haar decomposition levels"},
    {"filter_cutoff", "ramp filter cutoff as a fraction of Nyquist"},
    {"max_nonzeros", "largest system matrix to assemble before going matrix-free"},
    {"sinogram", "sinogram container path"},
    {"image", "image container path (output of reconstructions, input of metrics)"},
    {"trace", "trace CSV output path"},
    {"prior", "prior image container path"},
    {"truth", "ground-truth image container path"},
    {"phantom", "ground-truth phantom output path (simulate)"},
    {"pgm", "16-bit PGM preview output path"},
}};

inline bool is_config_key(std::string_view key) {
  return std::any_of(kConfigKeys.begin(), kConfigKeys.end(), [&](const ConfigKey& k) { return k.name == key; });
}

/// Flat key/value run configuration: one "key = value" per line, '#' starts
/// a comment. Unknown keys are rejected.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text, std::string_view source = "<string>") {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string_view::npos)
        throw Error(ErrorCode::Config, std::string(source) + ":" + std::to_string(lineno) + ": expected 'key = value'");
      cfg.set(std::string(trim(trimmed.substr(0, eq))), std::string(trim(trimmed.substr(eq + 1))));
    }
    return cfg;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  void set(const std::string& key, const std::string& value) {
    if (!is_config_key(key)) throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorCode::Config, "missing required key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  long long get_int(const std::string& key) const {
    const auto s = get_string(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error(ErrorCode::Config, "key '" + key + "' expects an integer, got '" + s + "'");
    return v;
  }
  long long get_int(const std::string& key, long long fallback) const { return has(key) ? get_int(key) : fallback; }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto s = get_string(key);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw Error(ErrorCode::Config, "key '" + key + "' expects a boolean, got '" + s + "'");
  }

  ImageGrid grid() const { return ImageGrid(static_cast<int>(get_int("n")), get_double("fov", 1.0)); }

  FanBeamGeometry geometry() const {
    const auto g = grid();
    FanBeamGeometry geom;
    geom.angles = equispaced_angles(static_cast<int>(get_int("num_angles")), get_double("angle_start", 0.0),
                                    get_double("angle_range", 2.0 * std::numbers::pi));
    geom.num_detectors = static_cast<int>(get_int("num_detectors", g.n));
    geom.source_radius = get_double("source_radius", 2.0 * g.fov);
    geom.detector_radius = get_double("detector_radius", g.fov);
    geom.detector_width = has("detector_width")
                              ? get_double("detector_width")
                              : covering_detector_width(g, geom.source_radius, geom.detector_radius, geom.num_detectors);
    geom.validate(g);
    return geom;
  }

  PdfpParams solver() const {
    PdfpParams p{get_double("tau", 1.0), get_double("lambda", 0.99),
                 WaveletPlan(static_cast<int>(get_int("n")), static_cast<int>(get_int("levels", 3)))};
    p.validate();
    return p;
  }

  /// Controller settings; target_sparsity is left at 0 unless c_pr is set.
  ControllerConfig controller() const {
    ControllerConfig c;
    c.target_sparsity = get_double("c_pr", 0.0);
    c.kappa = get_double("kappa", c.kappa);
    c.omega = get_double("omega", c.omega);
    c.eps1 = get_double("eps1", c.eps1);
    c.eps2 = get_double("eps2", c.eps2);
    c.max_iterations = static_cast<int>(get_int("imax", c.max_iterations));
    return c;
  }

  FilterSpec filter() const { return FilterSpec{get_double("filter_cutoff", 1.0)}; }

 private:
  static std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::Config, "key '" + key + "' expects a number, got '" + s + "'");
  }

  std::map<std::string, std::string> values_;
};

}  // namespace cwds
