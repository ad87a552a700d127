#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "geocv/common.hpp"
#include "geocv/formula.hpp"
#include "geocv/mesh.hpp"
#include "geocv/optim.hpp"
#include "geocv/spde.hpp"

namespace geocv {

struct Dataset {
  std::vector<Point2> coords;
  std::vector<std::string> col_names;
  std::vector<Eigen::VectorXd> cols;
  // standardization factors recorded at load time, for polygon alignment
  Point2 center{0.0, 0.0};
  Point2 scale{1.0, 1.0};

  size_t n() const { return coords.size(); }

  const Eigen::VectorXd& column(const std::string& name) const {
    for (size_t i = 0; i < col_names.size(); ++i)
      if (col_names[i] == name) return cols[i];
    throw error("dataset: no column '" + name + "'");
  }

  bool has_column(const std::string& name) const {
    for (const auto& c : col_names)
      if (c == name) return true;
    return false;
  }

  void add_column(const std::string& name, Eigen::VectorXd v) {
    if (has_column(name)) throw error("dataset: duplicate column '" + name + "'");
    if (static_cast<size_t>(v.size()) != n()) throw error("dataset: column length mismatch");
    col_names.push_back(name);
    cols.push_back(std::move(v));
  }

  void validate() const {
    if (n() < 1) throw error("dataset: empty");
    for (const auto& p : coords)
      if (!finite(p)) throw error("dataset: non-finite coordinate");
    for (size_t i = 0; i < cols.size(); ++i) {
      if (static_cast<size_t>(cols[i].size()) != n())
        throw error("dataset: column '" + col_names[i] + "' length mismatch");
      if (!cols[i].allFinite())
        throw error("dataset: non-finite value in column '" + col_names[i] + "'");
    }
  }
};

// Joint design [A | X]: spatial block first (mesh-vertex weights), then the
// intercept column and covariates in formula order.
struct Assembly {
  SpMat M;
  Eigen::VectorXd y;
  int n_spatial = 0;  // latent indices [0, n_spatial)
  int n_fixed = 0;    // latent indices [n_spatial, n_spatial + n_fixed)
  std::vector<std::string> fixed_names;
};

inline Assembly assemble(const Dataset& dataset, const ModelSpec& spec, const Mesh& mesh,
                         const Projector& projector) {
  dataset.validate();
  const int n = static_cast<int>(dataset.n());
  Assembly asm_;
  asm_.y = dataset.column(spec.response);
  asm_.n_spatial = spec.spatial ? static_cast<int>(mesh.vertices.size()) : 0;
  if (spec.intercept) asm_.fixed_names.push_back("intercept");
  for (const auto& c : spec.covariates) asm_.fixed_names.push_back(c);
  asm_.n_fixed = static_cast<int>(asm_.fixed_names.size());

  std::vector<Eigen::Triplet<double>> trip;
  if (spec.spatial) {
    if (projector.A.rows() != n) throw error("assemble: projector row count mismatch");
    for (int r = 0; r < n; ++r)
      if (!projector.inside[r])
        throw error("assemble: observation " + std::to_string(r) + " lies outside the mesh");
    for (int k = 0; k < projector.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(projector.A, k); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  }
  int col = asm_.n_spatial;
  if (spec.intercept) {
    for (int r = 0; r < n; ++r) trip.emplace_back(r, col, 1.0);
    ++col;
  }
  for (const auto& c : spec.covariates) {
    const Eigen::VectorXd& v = dataset.column(c);
    for (int r = 0; r < n; ++r)
      if (v[r] != 0.0) trip.emplace_back(r, col, v[r]);
    ++col;
  }
  asm_.M.resize(n, asm_.n_spatial + asm_.n_fixed);
  asm_.M.setFromTriplets(trip.begin(), trip.end());
  asm_.M.makeCompressed();
  return asm_;
}

struct PriorConfig {
  double beta_prec = 1e-3;  // zero-mean Gaussian precision on fixed effects
  double mean_log_tau = 0.0;
  double mean_log_kappa = 0.0;
  double sd_log_tau = 10.0;
  double sd_log_kappa = 10.0;
  double mean_log_noise_prec = 0.0;
  double sd_log_noise_prec = 10.0;
};

// Mesh-adaptive default: prior range = 20% of the hull diameter, prior
// marginal sd = 1, weakly informative sds.
inline PriorConfig default_priors(double hull_diam) {
  PriorConfig pc;
  double kappa0 = std::sqrt(8.0) / (0.2 * hull_diam);
  double tau0 = 1.0 / (std::sqrt(4.0 * M_PI) * kappa0);
  pc.mean_log_kappa = std::log(kappa0);
  pc.mean_log_tau = std::log(tau0);
  return pc;
}

struct FitConfig {
  PriorConfig priors;
  int max_evals = 500;      // per optimizer start
  double tol = 1e-6;        // simplex objective-spread tolerance
  bool compute_summaries = true;
  bool compute_slices = true;
  std::vector<double> theta_start;  // warm start; empty = prior means
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
};

struct HyperSlice {
  std::string name;
  std::vector<double> value;
  std::vector<double> log_post;  // conditional slice through the mode
};

namespace detail {

using Factor = Eigen::SimplicialLDLT<SpMat>;

inline double logdet(const Factor& f) {
  return f.vectorD().array().log().sum();
}

struct LatentSystem {
  SpMat Q_prior;
  SpMat Q_post;
  Eigen::VectorXd b;
  double logdet_prior = 0.0;
};

// theta layout: [log_kappa, log_tau] when spatial, then [log_noise_prec] for
// the normal family.
inline int theta_dim(const ModelSpec& spec) {
  return (spec.spatial ? 2 : 0) + (spec.family == Family::normal ? 1 : 0);
}

inline std::vector<std::string> theta_names(const ModelSpec& spec) {
  std::vector<std::string> nm;
  if (spec.spatial) { nm.push_back("log_kappa"); nm.push_back("log_tau"); }
  if (spec.family == Family::normal) nm.push_back("log_noise_prec");
  return nm;
}

inline SpMat prior_precision(const Assembly& a, const FemMatrices& fem, const ModelSpec& spec,
                             const Eigen::VectorXd& theta, const PriorConfig& priors) {
  int m = a.n_spatial + a.n_fixed;
  std::vector<Eigen::Triplet<double>> trip;
  if (spec.spatial) {
    SpMat q = assemble_precision(fem, SpdeParams(theta[1], theta[0]));
    for (int k = 0; k < q.outerSize(); ++k)
      for (SpMat::InnerIterator it(q, k); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  }
  for (int j = 0; j < a.n_fixed; ++j)
    trip.emplace_back(a.n_spatial + j, a.n_spatial + j, priors.beta_prec);
  SpMat q_prior(m, m);
  q_prior.setFromTriplets(trip.begin(), trip.end());
  q_prior.makeCompressed();
  return q_prior;
}

inline double theta_log_prior_full(const ModelSpec& spec, const Eigen::VectorXd& theta,
                                   const PriorConfig& priors) {
  double lp = 0.0;
  auto lg = [](double x, double m, double s) {
    double z = (x - m) / s;
    return -0.5 * std::log(2 * M_PI) - std::log(s) - 0.5 * z * z;
  };
  int k = 0;
  if (spec.spatial) {
    lp += theta_log_prior(SpdeParams(theta[1], theta[0]), priors.mean_log_tau,
                          priors.mean_log_kappa, priors.sd_log_tau, priors.sd_log_kappa);
    k = 2;
  }
  if (spec.family == Family::normal)
    lp += lg(theta[k], priors.mean_log_noise_prec, priors.sd_log_noise_prec);
  return lp;
}

}  // namespace detail

// Posterior handle kept alive by FitResult so predictions can reuse the
// factorized system.
struct GaussianPosterior {
  SpMat Q_post;
  detail::Factor factor;
  Eigen::VectorXd mu;
  double noise_var = 0.0;  // 0 for bernoulli

  double var_of(const Eigen::VectorXd& row) const {
    return row.dot(factor.solve(row));
  }
};

struct FitResult {
  ModelSpec spec;
  std::vector<std::string> theta_names;
  std::vector<double> theta_hat;
  std::vector<std::string> beta_names;
  std::vector<Summary> beta;
  std::vector<Summary> u;
  std::vector<Summary> linear_predictor;
  std::vector<Summary> fitted;
  double log_marginal = 0.0;
  std::vector<HyperSlice> hyper_slices;
  std::string warning;
  std::shared_ptr<GaussianPosterior> posterior;
  double range = std::numeric_limits<double>::quiet_NaN();        // spde nominal range at theta_hat
  double marginal_sd = std::numeric_limits<double>::quiet_NaN();  // spde marginal sd at theta_hat
};

// log p(y | theta) + log p(theta) for the normal family, with the latent
// Gaussian field integrated out analytically.
inline double log_marginal_gaussian(const Assembly& a, const FemMatrices& fem,
                                    const ModelSpec& spec, const Eigen::VectorXd& theta,
                                    const PriorConfig& priors) {
  if (spec.family != Family::normal) throw error("log_marginal_gaussian: normal family only");
  const int n = static_cast<int>(a.y.size());
  const int k_noise = spec.spatial ? 2 : 0;
  double prec_e = std::exp(theta[k_noise]);
  if (!std::isfinite(prec_e)) throw error("log_marginal_gaussian: non-finite noise precision");

  SpMat q_prior = detail::prior_precision(a, fem, spec, theta, priors);
  detail::Factor f_prior(q_prior);
  if (f_prior.info() != Eigen::Success || f_prior.vectorD().minCoeff() <= 0)
    throw error("log_marginal_gaussian: prior precision not SPD at theta=" +
                fmt_g(theta[0]) + (theta.size() > 1 ? "," + fmt_g(theta[1]) : ""));
  SpMat q_post = q_prior + SpMat(prec_e * SpMat(a.M.transpose()) * a.M);
  detail::Factor f_post(q_post);
  if (f_post.info() != Eigen::Success || f_post.vectorD().minCoeff() <= 0)
    throw error("log_marginal_gaussian: posterior precision not SPD");
  Eigen::VectorXd b = prec_e * (a.M.transpose() * a.y);
  Eigen::VectorXd mu = f_post.solve(b);
  double quad = prec_e * a.y.squaredNorm() - b.dot(mu);
  double logml = -0.5 * n * std::log(2 * M_PI) + 0.5 * detail::logdet(f_prior) +
                 0.5 * n * std::log(prec_e) - 0.5 * detail::logdet(f_post) - 0.5 * quad;
  return logml + detail::theta_log_prior_full(spec, theta, priors);
}

namespace detail {

inline Eigen::VectorXd theta_start_point(const ModelSpec& spec, const FitConfig& config) {
  int d = theta_dim(spec);
  Eigen::VectorXd t(d);
  if (!config.theta_start.empty()) {
    if (static_cast<int>(config.theta_start.size()) != d)
      throw error("fit: theta_start dimension mismatch");
    for (int i = 0; i < d; ++i) t[i] = config.theta_start[i];
    return t;
  }
  int k = 0;
  if (spec.spatial) {
    t[k++] = config.priors.mean_log_kappa;
    t[k++] = config.priors.mean_log_tau;
  }
  if (spec.family == Family::normal) t[k] = config.priors.mean_log_noise_prec;
  return t;
}

inline Eigen::VectorXd optimize_theta(const std::function<double(const Eigen::VectorXd&)>& obj,
                                      const ModelSpec& spec, const FitConfig& config,
                                      double* best_val) {
  Eigen::VectorXd start = theta_start_point(spec, config);
  if (start.size() == 0) { *best_val = obj(start); return start; }
  // numerically singular precisions far from the mode count as infinitely bad
  auto neg = [&](const Eigen::VectorXd& t) {
    try {
      return -obj(t);
    } catch (const error&) {
      return 1e300;
    }
  };
  SimplexResult r1 = nelder_mead(neg, start, 0.5, config.tol, config.max_evals);
  Eigen::VectorXd dispersed = start;
  for (int i = 0; i < dispersed.size(); ++i) dispersed[i] += (i % 2 == 0 ? 1.5 : -1.5);
  SimplexResult r2 = nelder_mead(neg, dispersed, 0.5, config.tol, config.max_evals);
  const SimplexResult& best = r1.fval <= r2.fval ? r1 : r2;
  if (!std::isfinite(best.fval) || best.fval >= 1e300)
    throw error("fit: optimizer failed to find a finite objective (best=" + fmt_g(-best.fval) +
                " after " + std::to_string(r1.evals + r2.evals) + " evaluations)");
  return best.x;
}

// 41-point conditional slice through the mode along each theta component;
// half-width 3 sd from the local curvature.
inline std::vector<HyperSlice> hyper_slices_at(
    const std::function<double(const Eigen::VectorXd&)>& obj, const Eigen::VectorXd& theta_hat,
    const std::vector<std::string>& names) {
  std::vector<HyperSlice> out;
  double f0 = obj(theta_hat);
  for (int i = 0; i < theta_hat.size(); ++i) {
    double h = 0.1;
    Eigen::VectorXd tp = theta_hat, tm = theta_hat;
    tp[i] += h;
    tm[i] -= h;
    double curv = -(obj(tp) - 2 * f0 + obj(tm)) / (h * h);
    double sd = 1.0 / std::sqrt(std::max(curv, 1e-6));
    sd = std::min(sd, 10.0);
    HyperSlice slice;
    slice.name = names[i];
    for (int g = 0; g < 41; ++g) {
      double v = theta_hat[i] + (g - 20) / 20.0 * 3.0 * sd;
      Eigen::VectorXd t = theta_hat;
      t[i] = v;
      slice.value.push_back(v);
      double val;
      try {
        val = obj(t);
      } catch (const error&) {
        val = -1e300;  // precision breaks down this far out; density is ~0 anyway
      }
      slice.log_post.push_back(val);
    }
    out.push_back(std::move(slice));
  }
  return out;
}

inline void fill_summaries(FitResult& fit, const Assembly& a, const GaussianPosterior& post,
                           bool with_components) {
  const int n = static_cast<int>(a.y.size());
  const int m = a.n_spatial + a.n_fixed;
  Eigen::VectorXd comp_sd(m);
  if (with_components) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
      e[i] = 1.0;
      comp_sd[i] = std::sqrt(post.factor.solve(e)[i]);
      e[i] = 0.0;
    }
    for (int i = 0; i < a.n_spatial; ++i) fit.u.push_back({post.mu[i], comp_sd[i]});
    for (int j = 0; j < a.n_fixed; ++j)
      fit.beta.push_back({post.mu[a.n_spatial + j], comp_sd[a.n_spatial + j]});
  }
  Eigen::VectorXd eta = a.M * post.mu;
  for (int r = 0; r < n; ++r) {
    Eigen::VectorXd row = a.M.row(r).transpose();
    double var = with_components ? post.var_of(row) : 0.0;
    fit.linear_predictor.push_back({eta[r], std::sqrt(var)});
    if (fit.spec.family == Family::normal) {
      fit.fitted.push_back({eta[r], std::sqrt(var)});  // identity link
    } else {
      double p = 1.0 / (1.0 + std::exp(-eta[r] / std::sqrt(1.0 + M_PI * var / 8.0)));
      fit.fitted.push_back({p, p * (1 - p) * std::sqrt(var)});
    }
  }
}

}  // namespace detail

// Empirical-Bayes fit for the normal family: maximize the analytic marginal
// over theta, then report the exact Gaussian conditional at the mode.
inline FitResult fit(const Assembly& a, const FemMatrices& fem, const ModelSpec& spec,
                     const FitConfig& config = {}) {
  if (spec.family != Family::normal) throw error("fit: normal family only; use fit_bernoulli");
  FitResult out;
  out.spec = spec;
  out.theta_names = detail::theta_names(spec);

  auto obj = [&](const Eigen::VectorXd& t) {
    return log_marginal_gaussian(a, fem, spec, t, config.priors);
  };
  double best_val = 0.0;
  Eigen::VectorXd theta_hat = detail::optimize_theta(obj, spec, config, &best_val);
  out.theta_hat.assign(theta_hat.data(), theta_hat.data() + theta_hat.size());
  out.log_marginal = obj(theta_hat);

  int k_noise = spec.spatial ? 2 : 0;
  double prec_e = std::exp(theta_hat[k_noise]);
  auto post = std::make_shared<GaussianPosterior>();
  SpMat q_prior = detail::prior_precision(a, fem, spec, theta_hat, config.priors);
  post->Q_post = q_prior + SpMat(prec_e * SpMat(a.M.transpose()) * a.M);
  post->factor.compute(post->Q_post);
  if (post->factor.info() != Eigen::Success)
    throw error("fit: factorization failed at theta_hat");
  post->mu = post->factor.solve(Eigen::VectorXd(prec_e * (a.M.transpose() * a.y)));
  post->noise_var = 1.0 / prec_e;
  out.posterior = post;

  if (spec.spatial) {
    SpdeSummaries s = spde_summaries(SpdeParams(theta_hat[1], theta_hat[0]));
    out.range = s.range;
    out.marginal_sd = s.marginal_sd;
  }
  for (const auto& nm : a.fixed_names) out.beta_names.push_back(nm);
  detail::fill_summaries(out, a, *post, config.compute_summaries);
  if (config.compute_slices && theta_hat.size() > 0)
    out.hyper_slices = detail::hyper_slices_at(obj, theta_hat, out.theta_names);
  return out;
}

namespace detail {

struct LaplaceFit {
  Eigen::VectorXd mode;
  SpMat H;  // negative Hessian at the mode
  double log_marginal = 0.0;
  bool separation = false;
};

// Newton ascent on the Bernoulli log posterior at fixed theta, then the
// Laplace approximation of log p(y | theta).
inline LaplaceFit laplace_bernoulli(const Assembly& a, const SpMat& q_prior,
                                    double logdet_prior) {
  const int n = static_cast<int>(a.y.size());
  const int m = a.n_spatial + a.n_fixed;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  auto logpost = [&](const Eigen::VectorXd& zz, Eigen::VectorXd* eta_out) {
    Eigen::VectorXd eta = a.M * zz;
    double ll = 0.0;
    for (int r = 0; r < n; ++r)
      ll += a.y[r] * eta[r] - std::log1p(std::exp(-std::abs(eta[r]))) -
            std::max(eta[r], 0.0);
    if (eta_out) *eta_out = eta;
    return ll - 0.5 * zz.dot(q_prior * zz);
  };
  Eigen::VectorXd eta;
  double lp = logpost(z, &eta);
  SpMat h;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse();
    Eigen::VectorXd w = p.array() * (1.0 - p.array());
    Eigen::VectorXd grad = a.M.transpose() * (a.y - p) - q_prior * z;
    SpMat wm = a.M;
    for (int k = 0; k < wm.outerSize(); ++k)
      for (SpMat::InnerIterator itr(wm, k); itr; ++itr)
        itr.valueRef() *= w[itr.row()];
    h = q_prior + SpMat(SpMat(a.M.transpose()) * wm);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-8) { converged = true; break; }
    Factor f(h);
    if (f.info() != Eigen::Success) throw error("fit_bernoulli: Newton factorization failed");
    Eigen::VectorXd dz = f.solve(grad);
    double step = 1.0;
    for (int hs = 0; hs < 30; ++hs) {
      Eigen::VectorXd zn = z + step * dz;
      Eigen::VectorXd eta_n;
      double lp_n = logpost(zn, &eta_n);
      if (lp_n > lp - 1e-12) {
        z = zn; eta = eta_n; lp = lp_n;
        break;
      }
      step /= 2;
      if (hs == 29) throw error("fit_bernoulli: Newton divergence");
    }
  }
  if (!converged) {
    Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse();
    Eigen::VectorXd grad = a.M.transpose() * (a.y - p) - q_prior * z;
    if (grad.lpNorm<Eigen::Infinity>() > 1e-5) throw error("fit_bernoulli: Newton divergence");
  }
  LaplaceFit res;
  res.mode = z;
  res.H = h;
  res.separation = (a.M * z).lpNorm<Eigen::Infinity>() > 30.0;
  Factor fh(h);
  if (fh.info() != Eigen::Success) throw error("fit_bernoulli: Hessian factorization failed");
  // lp already includes the prior quadratic form; add its normalizer
  res.log_marginal = lp - 0.5 * m * std::log(2 * M_PI) + 0.5 * logdet_prior +
                     0.5 * m * std::log(2 * M_PI) - 0.5 * logdet(fh);
  return res;
}

}  // namespace detail

inline FitResult fit_bernoulli(const Assembly& a, const FemMatrices& fem, const ModelSpec& spec,
                               const FitConfig& config = {}) {
  if (spec.family != Family::bernoulli) throw error("fit_bernoulli: bernoulli family only");
  for (int r = 0; r < a.y.size(); ++r)
    if (a.y[r] != 0.0 && a.y[r] != 1.0)
      throw error("fit_bernoulli: response must be 0/1 (row " + std::to_string(r) + ")");
  FitResult out;
  out.spec = spec;
  out.theta_names = detail::theta_names(spec);

  auto obj = [&](const Eigen::VectorXd& t) {
    SpMat q_prior = detail::prior_precision(a, fem, spec, t, config.priors);
    detail::Factor fp(q_prior);
    if (fp.info() != Eigen::Success || fp.vectorD().minCoeff() <= 0)
      throw error("fit_bernoulli: prior precision not SPD");
    detail::LaplaceFit lf = detail::laplace_bernoulli(a, q_prior, detail::logdet(fp));
    return lf.log_marginal + detail::theta_log_prior_full(spec, t, config.priors);
  };
  double best_val = 0.0;
  Eigen::VectorXd theta_hat = detail::optimize_theta(obj, spec, config, &best_val);
  out.theta_hat.assign(theta_hat.data(), theta_hat.data() + theta_hat.size());
  out.log_marginal = obj(theta_hat);

  SpMat q_prior = detail::prior_precision(a, fem, spec, theta_hat, config.priors);
  detail::Factor fp(q_prior);
  detail::LaplaceFit lf = detail::laplace_bernoulli(a, q_prior, detail::logdet(fp));
  if (lf.separation) out.warning = "possible complete separation: latent mode exceeds 30";

  auto post = std::make_shared<GaussianPosterior>();
  post->Q_post = lf.H;
  post->factor.compute(post->Q_post);
  post->mu = lf.mode;
  post->noise_var = 0.0;
  out.posterior = post;

  if (spec.spatial) {
    SpdeSummaries s = spde_summaries(SpdeParams(theta_hat[1], theta_hat[0]));
    out.range = s.range;
    out.marginal_sd = s.marginal_sd;
  }
  for (const auto& nm : a.fixed_names) out.beta_names.push_back(nm);
  detail::fill_summaries(out, a, *post, config.compute_summaries);
  if (config.compute_slices && theta_hat.size() > 0)
    out.hyper_slices = detail::hyper_slices_at(obj, theta_hat, out.theta_names);
  return out;
}

// Posterior predictive at new locations. Covariate columns must match the
// fitted spec's order.
inline std::vector<Summary> predict(const FitResult& fit, const Mesh& mesh,
                                    const std::vector<Point2>& new_coords,
                                    const std::map<std::string, Eigen::VectorXd>& new_covariates) {
  if (!fit.posterior) throw error("predict: fit has no posterior");
  const auto& post = *fit.posterior;
  const int n = static_cast<int>(new_coords.size());
  int n_spatial = fit.spec.spatial ? static_cast<int>(mesh.vertices.size()) : 0;
  int n_fixed = static_cast<int>(fit.beta_names.size());
  if (post.Q_post.rows() != n_spatial + n_fixed)
    throw error("predict: mesh does not match the fitted model");

  Projector proj;
  if (fit.spec.spatial) {
    proj = make_projector(mesh, new_coords);
    for (int r = 0; r < n; ++r)
      if (!proj.inside[r])
        throw error("predict: location " + std::to_string(r) + " (" + fmt_g(new_coords[r].x) +
                    ", " + fmt_g(new_coords[r].y) + ") lies outside the mesh");
  }
  std::vector<const Eigen::VectorXd*> xcols;
  for (int j = 0; j < n_fixed; ++j) {
    const std::string& nm = fit.beta_names[j];
    if (nm == "intercept") { xcols.push_back(nullptr); continue; }
    auto it = new_covariates.find(nm);
    if (it == new_covariates.end()) throw error("predict: missing covariate '" + nm + "'");
    if (it->second.size() != n) throw error("predict: covariate '" + nm + "' length mismatch");
    xcols.push_back(&it->second);
  }

  std::vector<Summary> out;
  for (int r = 0; r < n; ++r) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n_spatial + n_fixed);
    if (fit.spec.spatial) row.head(n_spatial) = proj.A.row(r).transpose();
    for (int j = 0; j < n_fixed; ++j)
      row[n_spatial + j] = xcols[j] ? (*xcols[j])[r] : 1.0;
    double mean = row.dot(post.mu);
    double var = post.var_of(row);
    if (fit.spec.family == Family::normal) {
      out.push_back({mean, std::sqrt(var + post.noise_var)});
    } else {
      double p = 1.0 / (1.0 + std::exp(-mean / std::sqrt(1.0 + M_PI * var / 8.0)));
      out.push_back({p, p * (1 - p) * std::sqrt(var)});
    }
  }
  return out;
}

}  // namespace geocv
