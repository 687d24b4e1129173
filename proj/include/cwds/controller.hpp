#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cwds/error.hpp"
#include "cwds/image.hpp"
#include "cwds/pdfp.hpp"
#include "cwds/system_matrix.hpp"
#include "cwds/wavelet.hpp"

namespace cwds {

/// Settings of the sparsity feedback loop. Defaults follow the published
/// experiments; target_sparsity has no default and must be supplied.
struct ControllerConfig {
  double target_sparsity = 0.0;
  double kappa = 1e-6;
  double omega = 1.0;
  double eps1 = 5e-4;
  double eps2 = 5e-4;
  int max_iterations = 1500;

  void validate() const {
    detail::require(target_sparsity > 0.0 && target_sparsity <= 1.0, ErrorCode::InvalidArgument,
                    "target sparsity must lie in (0, 1]");
    detail::require(kappa > 0.0, ErrorCode::InvalidArgument, "kappa must be positive");
    detail::require(omega > 0.0, ErrorCode::InvalidArgument, "omega must be positive");
    detail::require(eps1 > 0.0 && eps2 > 0.0, ErrorCode::InvalidArgument, "tolerances must be positive");
    detail::require(max_iterations > 0, ErrorCode::InvalidArgument, "iteration cap must be positive");
  }
};

/// Target sparsity measured on a known object similar to the one imaged.
inline double prior_sparsity_from_image(std::span<const double> prior, const WaveletPlan& plan, double kappa) {
  const double c = sparsity_ratio(prior, plan, kappa);
  detail::require(c > 0.0, ErrorCode::InvalidArgument,
                  "prior image has no wavelet coefficient above kappa; target sparsity would be zero");
  return c;
}

/// Mean magnitude of the M = round(n (1 - C_pr)) smallest coefficients; 0 when M = 0.
inline double initial_mu_from_coefficients(std::span<const double> coeffs, double target_sparsity) {
  detail::require(target_sparsity > 0.0 && target_sparsity <= 1.0, ErrorCode::InvalidArgument,
                  "target sparsity must lie in (0, 1]");
  std::vector<double> mags(coeffs.size());
  std::transform(coeffs.begin(), coeffs.end(), mags.begin(), [](double c) { return std::abs(c); });
  std::sort(mags.begin(), mags.end());
  const auto count = static_cast<std::size_t>(std::lround(static_cast<double>(mags.size()) * (1.0 - target_sparsity)));
  if (count == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) sum += mags[k];
  return sum / static_cast<double>(count);
}

/// Initial threshold from the Haar coefficients of the plain backprojection A^T m.
template <LinearOperator Op>
double init_mu_from_backprojection(const Op& A, std::span<const double> m, const WaveletPlan& plan,
                                   double target_sparsity) {
  const auto bp = back_project(A, m);
  return initial_mu_from_coefficients(forward_haar_2d(bp, plan), target_sparsity);
}

/// beta = omega * mu0, or omega * kappa when mu0 = 0 so the gain stays positive.
inline double init_beta(double mu0, double omega, double kappa = 1e-6) {
  detail::require(mu0 >= 0.0, ErrorCode::InvalidArgument, "initial threshold must be non-negative");
  detail::require(omega > 0.0, ErrorCode::InvalidArgument, "omega must be positive");
  return mu0 > 0.0 ? omega * mu0 : omega * kappa;
}

/// Integral control step mu' = max(0, mu + beta (C - C_pr)).
inline double update_mu(double mu, double beta, double sparsity, double target_sparsity) {
  return std::max(0.0, mu + beta * (sparsity - target_sparsity));
}

inline constexpr double kMinBetaShrink = 0.01;

/// Shrinks beta by (1 - |e_now - e_prev|) when the error changes sign.
/// A zero error carries no sign, so it never triggers a shrink. The factor
/// is floored at kMinBetaShrink.
inline double tune_beta_on_sign_change(double beta, double e_now, double e_prev) {
  if (e_now == 0.0 || e_prev == 0.0) return beta;
  if (std::signbit(e_now) == std::signbit(e_prev)) return beta;
  return beta * std::max(kMinBetaShrink, 1.0 - std::abs(e_now - e_prev));
}

/// Keep iterating while under the cap and either the sparsity error or the
/// relative iterate change is still above its tolerance.
inline bool should_continue(double error, double change, int iteration, const ControllerConfig& config) {
  return iteration < config.max_iterations && (std::abs(error) >= config.eps1 || change >= config.eps2);
}

enum class StopReason { Converged, CapReached, NonFinite };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::CapReached: return "cap reached";
    case StopReason::NonFinite: return "non-finite iterate";
  }
  return "unknown";
}

/// One row per completed iteration i (0-based):
///   beta      = gain after sign-change tuning,
///   mu        = mu(i+1), the controller output,
///   sparsity  = C(i+1) of the new iterate, error = C(i+1) - C_pr,
///   change    = ||f(i+1) - f(i)|| / ||f(i+1)||, so the last row carries the stopping test's inputs,
///   objective = 1/2 ||A f(i) - m||^2 + mu(i) ||W f(i)||_1 at the iterate entering the step.
struct TraceRecord {
  int iteration = 0;
  double mu = 0.0;
  double beta = 0.0;
  double sparsity = 0.0;
  double error = 0.0;
  double change = 0.0;
  double objective = 0.0;
};

struct IterationTrace {
  std::vector<TraceRecord> records;
  std::vector<std::pair<std::string, std::string>> metadata;
  double initial_mu = 0.0;
  double initial_beta = 0.0;
  StopReason stop_reason = StopReason::Converged;
  std::string diagnostic;
};

struct CwdsResult {
  Vector image;
  IterationTrace trace;
  double final_mu = 0.0;
  double final_sparsity = 0.0;
  int iterations() const { return static_cast<int>(trace.records.size()); }
};

/// Controlled wavelet-domain sparsity reconstruction.
///
/// Runs PDFP from f = 0, v = 0 while an integral controller adjusts the
/// threshold so that the fraction of Haar coefficients above kappa tracks
/// config.target_sparsity. Per iteration, in order: error e = C(i) - C_pr,
/// beta shrink on a sign change of e, mu(i+1) = max(0, mu(i) + beta e), one
/// PDFP step thresholded with mu(i), then C(i+1) and d of the new iterate.
/// The loop ends when |C - C_pr| < eps1 and d < eps2 for the newest iterate,
/// or at max_iterations. `A` and `m` are expected to be normalised by ||A||.
template <LinearOperator Op>
CwdsResult cwds_run(const Op& A, std::span<const double> m, const PdfpParams& params,
                    const ControllerConfig& config, std::optional<double> mu0 = std::nullopt) {
  params.validate();
  config.validate();
  const auto& plan = params.plan;
  detail::require_size(plan.size(), A.cols(), "wavelet plan");
  detail::require_size(m.size(), A.rows(), "sinogram");

  CwdsResult result;
  auto& trace = result.trace;
  double mu = mu0 ? *mu0 : init_mu_from_backprojection(A, m, plan, config.target_sparsity);
  detail::require(mu >= 0.0 && std::isfinite(mu), ErrorCode::InvalidArgument, "initial threshold must be non-negative");
  double beta = init_beta(mu, config.omega, config.kappa);
  trace.initial_mu = mu;
  trace.initial_beta = beta;

  const double total = static_cast<double>(plan.size());
  auto state = PdfpState::zeros(plan.size());
  double sparsity = 1.0;
  double error = 1.0;
  double previous_error = 1.0;
  double change = std::numeric_limits<double>::infinity();
  double l1_norm = 0.0;
  Vector coeffs(plan.size());
  int i = 0;

  while (should_continue(error, change, i, config)) {
    error = sparsity - config.target_sparsity;
    beta = tune_beta_on_sign_change(beta, error, previous_error);
    const double next_mu = update_mu(mu, beta, sparsity, config.target_sparsity);

    PdfpStepInfo info;
    PdfpState next;
    try {
      next = pdfp_step(state, mu, params, A, m, &info);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NonFinite) throw;
      trace.stop_reason = StopReason::NonFinite;
      trace.diagnostic = err.what();
      break;
    }
    const double objective = 0.5 * info.residual_norm2 + mu * l1_norm;

    forward_haar_2d(next.f, plan, coeffs);
    sparsity = static_cast<double>(count_above_threshold(coeffs, config.kappa)) / total;
    l1_norm = 0.0;
    for (double c : coeffs) l1_norm += std::abs(c);
    const double fnorm = norm2(next.f);
    change = fnorm > 0.0 ? distance2(next.f, state.f) / fnorm : 0.0;

    if (error != 0.0) previous_error = error;
    error = sparsity - config.target_sparsity;
    trace.records.push_back({i, next_mu, beta, sparsity, error, change, objective});
    ++i;
    state = std::move(next);
    mu = next_mu;
  }

  if (trace.stop_reason != StopReason::NonFinite)
    trace.stop_reason = should_continue(error, change, 0, config) ? StopReason::CapReached : StopReason::Converged;
  result.image = std::move(state.f);
  result.final_mu = mu;
  result.final_sparsity = sparsity;
  return result;
}

}  // namespace cwds
