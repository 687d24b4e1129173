#pragma once

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cwds/config.hpp"
#include "cwds/controller.hpp"
#include "cwds/error.hpp"
#include "cwds/fbp.hpp"
#include "cwds/io.hpp"
#include "cwds/phantom.hpp"
#include "cwds/system_matrix.hpp"
#include "cwds/wavelet.hpp"

namespace cwds::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,      // unknown subcommand, flag or config key; missing required key
  kIo = 3,         // unreadable/unwritable file, malformed container
  kDimension = 4,  // sinogram/image sizes inconsistent with the configuration
  kInvalid = 5,    // parameter out of range, problem too large
  kNumerical = 6,  // non-finite iterate
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return kUsage;
    case ErrorCode::Io:
    case ErrorCode::UnrecognizedFormat:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::DtypeMismatch: return kIo;
    case ErrorCode::DimensionMismatch: return kDimension;
    case ErrorCode::InvalidArgument:
    case ErrorCode::ScaleGuard: return kInvalid;
    case ErrorCode::NonFinite: return kNumerical;
  }
  return kFailure;
}

inline constexpr std::string_view kExitCodeHelp =
    "Exit codes: 0 ok, 1 internal error, 2 usage/config error, 3 file error, "
    "4 dimension mismatch, 5 invalid parameter, 6 non-finite iterate.";

struct Context {
  RunConfig config;
  bool json = false;
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

inline void emit(const Context& ctx, const nlohmann::ordered_json& summary) {
  if (ctx.json) {
    ctx.out << summary.dump(2) << '\n';
    return;
  }
  for (const auto& [k, v] : summary.items()) {
    ctx.out << k << ": ";
    if (v.is_string()) ctx.out << v.get<std::string>();
    else if (v.is_number_float()) ctx.out << fmt(v.get<double>());
    else ctx.out << v.dump();
    ctx.out << '\n';
  }
}

inline Vector read_image(const std::string& path) { return matrix_to_image(read_matrix(path)); }

inline void write_image(const std::string& path, std::span<const double> f, int n) {
  write_matrix(path, image_to_matrix(f, n));
}

inline Vector read_sinogram(const std::string& path, const FanBeamGeometry& geom) {
  auto m = read_matrix(path);
  if (m.rows != static_cast<std::size_t>(geom.num_angles()) || m.cols != static_cast<std::size_t>(geom.num_detectors)) {
    throw Error(ErrorCode::DimensionMismatch, "sinogram '" + path + "' is " + std::to_string(m.rows) + "x" +
                                                  std::to_string(m.cols) + ", geometry expects " +
                                                  std::to_string(geom.num_angles()) + "x" +
                                                  std::to_string(geom.num_detectors));
  }
  return std::move(m.data);
}

inline std::optional<Vector> read_truth(const RunConfig& cfg, const ImageGrid& grid) {
  if (!cfg.has("truth")) return std::nullopt;
  auto t = read_image(cfg.get_string("truth"));
  cwds::detail::require_size(t.size(), grid.size(), "ground truth image");
  return t;
}

inline void maybe_write_pgm(const Context& ctx, std::span<const double> f, int n, const std::optional<Vector>& truth) {
  if (!ctx.config.has("pgm")) return;
  const auto& ref = truth ? std::span<const double>(*truth) : f;
  const double high = *std::max_element(ref.begin(), ref.end());
  if (!export_image_pgm(f, n, ctx.config.get_string("pgm"), 0.0, high))
    ctx.err << "warning: degenerate display window, PGM written as uniform gray\n";
}

}  // namespace detail

inline int run_simulate(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto grid = cfg.grid();
  const auto geom = cfg.geometry();
  const EllipsePhantom phantom(kModifiedSheppLogan);
  const SimulationOptions sim{cfg.get_bool("supersample", false)};
  const double noise = cfg.get_double("noise", 0.001);
  const auto ref = parse_noise_reference(cfg.get_string("noise_ref", "peak"));
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

  const auto clean = simulate_sinogram(phantom, geom, grid, sim);
  const auto noisy = add_gaussian_noise(clean, noise, seed, ref);
  write_matrix(cfg.get_string("sinogram"), static_cast<std::size_t>(geom.num_angles()),
               static_cast<std::size_t>(geom.num_detectors), noisy);
  const auto truth = phantom.rasterize(grid, grid.n);
  if (cfg.has("phantom")) detail::write_image(cfg.get_string("phantom"), truth, grid.n);
  detail::maybe_write_pgm(ctx, truth, grid.n, std::nullopt);

  nlohmann::ordered_json s;
  s["command"] = "simulate";
  s["sinogram"] = cfg.get_string("sinogram");
  s["num_angles"] = geom.num_angles();
  s["num_detectors"] = geom.num_detectors;
  s["noise_sigma"] = noise_sigma(clean, noise, ref);
  s["seed"] = seed;
  detail::emit(ctx, s);
  return kOk;
}

inline int run_sparsity_prior(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto prior = detail::read_image(cfg.get_string("prior"));
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(prior.size()))));
  const WaveletPlan plan(n, static_cast<int>(cfg.get_int("levels", 3)));
  const double kappa = cfg.get_double("kappa", 1e-6);
  const double c_pr = prior_sparsity_from_image(prior, plan, kappa);

  nlohmann::ordered_json s;
  s["command"] = "sparsity-prior";
  s["c_pr"] = c_pr;
  s["kappa"] = kappa;
  s["levels"] = plan.levels();
  detail::emit(ctx, s);
  return kOk;
}

template <LinearOperator Op>
int run_cwds_with(const Context& ctx, const Op& A, std::span<const double> sinogram, const ImageGrid& grid,
                  const std::string& operator_kind) {
  const auto& cfg = ctx.config;
  const auto params = cfg.solver();
  auto controller = cfg.controller();
  if (!cfg.has("c_pr")) {
    if (!cfg.has("prior")) throw Error(ErrorCode::Config, "reconstruct-cwds needs either c_pr or prior");
    const auto prior = detail::read_image(cfg.get_string("prior"));
    cwds::detail::require_size(prior.size(), grid.size(), "prior image");
    controller.target_sparsity = prior_sparsity_from_image(prior, params.plan, controller.kappa);
  }
  const auto truth = detail::read_truth(cfg, grid);

  const auto system = normalize_system(A, sinogram);
  std::optional<double> mu0;
  if (cfg.has("mu0")) mu0 = cfg.get_double("mu0");
  auto result = cwds_run(system.op, system.data, params, controller, mu0);

  auto& meta = result.trace.metadata;
  for (const auto& [k, v] : cfg.values()) meta.emplace_back(k, v);
  meta.emplace_back("target_sparsity", detail::fmt(controller.target_sparsity));
  meta.emplace_back("operator", operator_kind);
  meta.emplace_back("operator_norm", detail::fmt(system.norm));

  const auto image_path = cfg.get_string("image");
  const auto trace_path = cfg.get_string("trace", image_path + ".trace.csv");
  write_trace_csv(trace_path, result.trace);
  detail::write_image(image_path, result.image, grid.n);
  detail::maybe_write_pgm(ctx, result.image, grid.n, truth);

  nlohmann::ordered_json s;
  s["command"] = "reconstruct-cwds";
  s["iterations"] = result.iterations();
  s["final_mu"] = result.final_mu;
  s["final_sparsity"] = result.final_sparsity;
  s["stop_reason"] = to_string(result.trace.stop_reason);
  s["target_sparsity"] = controller.target_sparsity;
  s["initial_mu"] = result.trace.initial_mu;
  s["initial_beta"] = result.trace.initial_beta;
  s["operator_norm"] = system.norm;
  if (!result.trace.records.empty()) {
    s["final_error"] = result.trace.records.back().sparsity - controller.target_sparsity;
    s["final_change"] = result.trace.records.back().change;
  }
  if (truth) s["relative_error"] = relative_error(result.image, *truth);
  s["image"] = image_path;
  s["trace"] = trace_path;
  detail::emit(ctx, s);
  if (result.trace.stop_reason == StopReason::NonFinite) {
    ctx.err << "error: " << result.trace.diagnostic << '\n';
    return kNumerical;
  }
  return kOk;
}

inline int run_reconstruct_cwds(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto grid = cfg.grid();
  const auto geom = cfg.geometry();
  const auto sinogram = detail::read_sinogram(cfg.get_string("sinogram"), geom);
  AssemblyOptions assembly;
  assembly.max_nonzeros = static_cast<std::size_t>(cfg.get_int("max_nonzeros", static_cast<long long>(assembly.max_nonzeros)));
  if (predicted_nonzeros(geom, grid) <= assembly.max_nonzeros)
    return run_cwds_with(ctx, assemble_system_matrix(geom, grid, assembly), sinogram, grid, "assembled");
  return run_cwds_with(ctx, MatrixFreeProjector(geom, grid), sinogram, grid, "matrix-free");
}

inline int run_reconstruct_fbp(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto grid = cfg.grid();
  const auto geom = cfg.geometry();
  const auto sinogram = detail::read_sinogram(cfg.get_string("sinogram"), geom);
  const auto truth = detail::read_truth(cfg, grid);
  const auto image = fbp_reconstruct(sinogram, geom, grid, cfg.filter());
  detail::write_image(cfg.get_string("image"), image, grid.n);
  detail::maybe_write_pgm(ctx, image, grid.n, truth);

  nlohmann::ordered_json s;
  s["command"] = "reconstruct-fbp";
  s["filter_cutoff"] = cfg.filter().cutoff;
  if (truth) s["relative_error"] = relative_error(image, *truth);
  s["image"] = cfg.get_string("image");
  detail::emit(ctx, s);
  return kOk;
}

inline int run_metrics(const Context& ctx) {
  const auto image = detail::read_image(ctx.config.get_string("image"));
  const auto truth = detail::read_image(ctx.config.get_string("truth"));
  const double err = relative_error(image, truth);
  if (ctx.json) {
    nlohmann::ordered_json s;
    s["command"] = "metrics";
    s["relative_error"] = err;
    ctx.out << s.dump(2) << '\n';
  } else {
    ctx.out << detail::fmt(err) << '\n';
  }
  return kOk;
}

/// Entry point shared by the executable and the tests. `args` excludes the program name.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Controlled wavelet-domain sparsity reconstruction for fan-beam CT.\n" + std::string(kExitCodeHelp),
               "cwds"};
  app.set_version_flag("--version", "cwds " + std::string(kVersion));
  app.require_subcommand(1);

  struct Sub {
    std::string name;
    std::string help;
    int (*run)(const Context&) = nullptr;
    CLI::App* app = nullptr;
    std::string config_path;
    bool json = false;
    std::map<std::string, std::string> overrides;
  };
  const std::tuple<const char*, const char*, int (*)(const Context&)> commands[] = {
      {"simulate", "Simulate a noisy Shepp-Logan fan-beam sinogram", run_simulate},
      {"sparsity-prior", "Measure the wavelet sparsity ratio of a prior image", run_sparsity_prior},
      {"reconstruct-cwds", "Reconstruct with controlled wavelet-domain sparsity", run_reconstruct_cwds},
      {"reconstruct-fbp", "Reconstruct with fan-beam filtered backprojection", run_reconstruct_fbp},
      {"metrics", "Relative l2 error of an image against a ground truth", run_metrics},
  };
  std::vector<Sub> subs(std::size(commands));
  for (std::size_t k = 0; k < subs.size(); ++k) std::tie(subs[k].name, subs[k].help, subs[k].run) = commands[k];
  for (auto& sub : subs) {
    sub.app = app.add_subcommand(sub.name, sub.help);
    sub.app->add_option("--config", sub.config_path, "key = value configuration file");
    sub.app->add_flag("--json-summary", sub.json, "print a machine-readable JSON summary");
    for (const auto& key : kConfigKeys) {
      const std::string k(key.name);
      sub.app->add_option_function<std::string>(
          "--" + k, [&sub, k](const std::string& v) { sub.overrides[k] = v; }, std::string(key.help));
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  for (auto& sub : subs) {
    if (!sub.app->parsed()) continue;
    try {
      RunConfig cfg = sub.config_path.empty() ? RunConfig{} : RunConfig::load(sub.config_path);
      for (const auto& [k, v] : sub.overrides) cfg.set(k, v);
      return sub.run(Context{std::move(cfg), sub.json, out, err});
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code_for(e.code());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kFailure;
    }
  }
  return kUsage;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_main(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace cwds::cli
