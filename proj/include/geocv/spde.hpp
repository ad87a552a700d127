#pragma once

#include <cmath>

#include <Eigen/Sparse>

#include "geocv/common.hpp"
#include "geocv/mesh.hpp"

namespace geocv {

// Matern smoothness is fixed at alpha = 2 (nu = 1 in two dimensions).
struct SpdeParams {
  double log_tau = 0.0;
  double log_kappa = 0.0;

  SpdeParams() = default;
  SpdeParams(double lt, double lk) : log_tau(lt), log_kappa(lk) {
    if (!std::isfinite(lt) || !std::isfinite(lk)) throw error("SpdeParams: non-finite value");
  }
};

// Q = tau^2 (kappa^4 C + 2 kappa^2 G + G C^-1 G) with lumped (diagonal) C,
// so every term stays sparse.
inline SpMat assemble_precision(const FemMatrices& fem, const SpdeParams& params) {
  double tau = std::exp(params.log_tau);
  double kappa = std::exp(params.log_kappa);
  if (!std::isfinite(tau) || !std::isfinite(kappa))
    throw error("assemble_precision: non-finite tau or kappa");
  int n = static_cast<int>(fem.c_diag.size());
  SpMat c(n, n);
  c.reserve(Eigen::VectorXi::Constant(n, 1));
  for (int i = 0; i < n; ++i) c.insert(i, i) = fem.c_diag[i];
  SpMat cinv(n, n);
  cinv.reserve(Eigen::VectorXi::Constant(n, 1));
  for (int i = 0; i < n; ++i) cinv.insert(i, i) = 1.0 / fem.c_diag[i];
  const SpMat& g = fem.stiffness;
  double k2 = kappa * kappa;
  SpMat q = (tau * tau) * (k2 * k2 * c + 2.0 * k2 * g + SpMat(g * cinv * g));
  q = 0.5 * (q + SpMat(q.transpose()));  // restore exact symmetry lost to roundoff
  q.makeCompressed();
  return q;
}

struct SpdeSummaries {
  double range;        // distance at which Matern correlation drops to ~0.13
  double marginal_sd;  // stationary field standard deviation
};

inline SpdeSummaries spde_summaries(const SpdeParams& params) {
  double tau = std::exp(params.log_tau);
  double kappa = std::exp(params.log_kappa);
  SpdeSummaries s;
  s.range = std::sqrt(8.0) / kappa;
  s.marginal_sd = 1.0 / std::sqrt(4.0 * M_PI * kappa * kappa * tau * tau);
  return s;
}

// Independent Gaussian priors on (log tau, log kappa).
inline double theta_log_prior(const SpdeParams& params, double mean_log_tau, double mean_log_kappa,
                              double sd_log_tau, double sd_log_kappa) {
  if (!(sd_log_tau > 0) || !(sd_log_kappa > 0))
    throw error("theta_log_prior: non-positive prior sd");
  auto lg = [](double x, double m, double s) {
    double z = (x - m) / s;
    return -0.5 * std::log(2 * M_PI) - std::log(s) - 0.5 * z * z;
  };
  return lg(params.log_tau, mean_log_tau, sd_log_tau) +
         lg(params.log_kappa, mean_log_kappa, sd_log_kappa);
}

}  // namespace geocv
