#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cwds/error.hpp"
#include "cwds/image.hpp"
#include "cwds/system_matrix.hpp"
#include "cwds/wavelet.hpp"

namespace cwds {

/// Step sizes of the primal-dual fixed point iteration.
///
/// Convergence needs 0 < lambda < 1 / lambda_max(W W^T) = 1 for orthonormal
/// W, and 0 < tau < 2 / ||A||^2, i.e. tau in (0, 2) once A is normalised.
struct PdfpParams {
  double tau = 1.0;
  double lambda = 0.99;
  WaveletPlan plan;

  void validate() const {
    detail::require(tau > 0.0 && std::isfinite(tau), ErrorCode::InvalidArgument, "tau must be positive");
    detail::require(lambda > 0.0 && lambda < 1.0, ErrorCode::InvalidArgument, "lambda must lie in (0, 1)");
  }
};

struct PdfpState {
  Vector f;  // primal iterate, non-negative after every step
  Vector v;  // dual variable in the wavelet domain
  std::size_t iteration = 0;

  static PdfpState zeros(std::size_t size) { return {Vector(size, 0.0), Vector(size, 0.0), 0}; }
};

/// T_mu(c) = sign(c) max(|c| - mu/2, 0).
inline double soft_threshold(double c, double mu) {
  const double t = 0.5 * mu;
  if (c > t) return c - t;
  if (c < -t) return c + t;
  return 0.0;
}

inline Vector soft_threshold(std::span<const double> c, double mu) {
  detail::require(mu >= 0.0, ErrorCode::InvalidArgument, "threshold must be non-negative");
  Vector out(c.size());
  std::transform(c.begin(), c.end(), out.begin(), [mu](double x) { return soft_threshold(x, mu); });
  return out;
}

/// (I - T_mu)(c): clips every component to [-mu/2, mu/2].
inline double soft_threshold_residual(double c, double mu) { return std::clamp(c, -0.5 * mu, 0.5 * mu); }

inline Vector project_nonneg(std::span<const double> f) {
  Vector out(f.size());
  std::transform(f.begin(), f.end(), out.begin(), [](double x) { return std::max(x, 0.0); });
  return out;
}

/// Gradient of g(f) = 1/2 ||A f - m||^2, i.e. A^T (A f - m).
template <LinearOperator Op>
Vector grad_data_fidelity(const Op& A, std::span<const double> m, std::span<const double> f) {
  detail::require_size(m.size(), A.rows(), "sinogram");
  auto r = forward_project(A, f);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] -= m[k];
  return back_project(A, r);
}

/// 1/2 ||A f - m||^2 + weight * ||W f||_1.
template <LinearOperator Op>
double objective_value(const Op& A, std::span<const double> m, std::span<const double> f, double weight,
                       const WaveletPlan& plan) {
  detail::require_size(m.size(), A.rows(), "sinogram");
  const auto af = forward_project(A, f);
  const double fit = 0.5 * distance2(af, m) * distance2(af, m);
  double l1 = 0.0;
  for (double c : forward_haar_2d(f, plan)) l1 += std::abs(c);
  return fit + weight * l1;
}

/// l1 weight whose objective the fixed points of pdfp_step minimise.
///
/// The dual update applies T_mu with threshold mu/2, which is the l1 prox
/// with weight theta scaled by tau/lambda; hence theta = lambda * mu / (2 tau).
inline double effective_l1_weight(double mu, const PdfpParams& params) {
  return params.lambda * mu / (2.0 * params.tau);
}

struct PdfpStepInfo {
  double residual_norm2 = 0.0;  // ||A f - m||^2 at the incoming iterate
};

/// One primal-dual fixed point iteration at fixed threshold mu:
///
///   y+ = P_C(f - tau grad g(f) - lambda W^T v)
///   v+ = (I - T_mu)(W y+ + v)
///   f+ = P_C(f - tau grad g(f) - lambda W^T v+)
///
/// grad g(f) is evaluated once and shared by both primal updates, so each
/// step costs one forward and one adjoint application of A.
template <LinearOperator Op>
PdfpState pdfp_step(const PdfpState& state, double mu, const PdfpParams& params, const Op& A,
                    std::span<const double> m, PdfpStepInfo* info = nullptr) {
  const auto& plan = params.plan;
  detail::require(mu >= 0.0 && std::isfinite(mu), ErrorCode::InvalidArgument, "threshold must be non-negative");
  detail::require_size(state.f.size(), A.cols(), "primal iterate");
  detail::require_size(state.v.size(), plan.size(), "dual iterate");
  detail::require_size(plan.size(), A.cols(), "wavelet plan");
  detail::require_size(m.size(), A.rows(), "sinogram");

  const std::size_t n = state.f.size();
  auto residual = forward_project(A, state.f);
  for (std::size_t k = 0; k < residual.size(); ++k) residual[k] -= m[k];
  if (info) info->residual_norm2 = dot(residual, residual);
  const auto grad = back_project(A, residual);

  Vector base(n);
  for (std::size_t k = 0; k < n; ++k) base[k] = state.f[k] - params.tau * grad[k];

  Vector wt(n);
  inverse_haar_2d(state.v, plan, wt);
  Vector y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = std::max(base[k] - params.lambda * wt[k], 0.0);

  PdfpState next;
  next.iteration = state.iteration + 1;
  next.v.resize(n);
  forward_haar_2d(y, plan, next.v);
  for (std::size_t k = 0; k < n; ++k) next.v[k] = soft_threshold_residual(next.v[k] + state.v[k], mu);

  inverse_haar_2d(next.v, plan, wt);
  next.f.resize(n);
  for (std::size_t k = 0; k < n; ++k) next.f[k] = std::max(base[k] - params.lambda * wt[k], 0.0);

  if (!all_finite(next.f) || !all_finite(next.v)) {
    throw Error(ErrorCode::NonFinite, "PDFP iterate became non-finite at iteration " +
                                          std::to_string(next.iteration) + " (mu=" + std::to_string(mu) + ")");
  }
  return next;
}

}  // namespace cwds
