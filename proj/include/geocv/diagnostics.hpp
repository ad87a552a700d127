#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "geocv/common.hpp"
#include "geocv/model.hpp"

namespace geocv {

enum class PitVariant { plugin, loo };

struct ObsPred {
  double observed = 0.0;
  double predicted = 0.0;
  double sd = 0.0;
};

struct CalibrationReport {
  std::vector<double> pit;
  PitVariant variant = PitVariant::plugin;
  double ks_statistic = 0.0;
  std::vector<ObsPred> obs_pred;
};

// One-sample Kolmogorov-Smirnov statistic against Uniform(0,1).
inline double ks_uniform(std::vector<double> values) {
  if (values.empty()) throw error("ks_uniform: empty input");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw error("ks_uniform: value outside [0,1]");
  std::sort(values.begin(), values.end());
  double n = static_cast<double>(values.size());
  double stat = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    stat = std::max(stat, (i + 1) / n - values[i]);
    stat = std::max(stat, values[i] - i / n);
  }
  return stat;
}

// Posterior predictive probability of a replicate below each observation.
// plugin: full-data predictive. loo: exact leave-one-out via a rank-one
// downdate of the posterior precision (normal family only, either variant).
inline std::vector<double> pit_values(const FitResult& fit, const Assembly& a,
                                      PitVariant variant = PitVariant::plugin) {
  if (fit.spec.family != Family::normal) throw error("pit_values: normal family only");
  if (!fit.posterior) throw error("pit_values: fit has no posterior");
  const auto& post = *fit.posterior;
  const int n = static_cast<int>(a.y.size());
  const double noise_prec = 1.0 / post.noise_var;
  std::vector<double> pit(n);
  for (int r = 0; r < n; ++r) {
    Eigen::VectorXd row = a.M.row(r).transpose();
    double mu = row.dot(post.mu);
    double h = post.var_of(row);
    double mean, var;
    if (variant == PitVariant::plugin) {
      mean = mu;
      var = h + post.noise_var;
    } else {
      double ch = noise_prec * h;
      if (ch >= 1.0) throw error("pit_values: loo downdate lost positive definiteness");
      mean = (mu - ch * a.y[r]) / (1.0 - ch);
      var = h / (1.0 - ch) + post.noise_var;
    }
    if (!(var > 0)) throw error("pit_values: non-positive predictive variance");
    pit[r] = normal_cdf((a.y[r] - mean) / std::sqrt(var));
  }
  return pit;
}

inline std::vector<ObsPred> obs_pred(const FitResult& fit, const Eigen::VectorXd& y) {
  std::vector<ObsPred> out;
  for (int r = 0; r < y.size(); ++r) {
    const Summary& s = fit.fitted[r];
    out.push_back({y[r], s.mean, s.sd});
  }
  return out;
}

inline CalibrationReport calibration_report(const FitResult& fit, const Assembly& a,
                                            PitVariant variant = PitVariant::plugin) {
  CalibrationReport rep;
  rep.variant = variant;
  rep.pit = pit_values(fit, a, variant);
  rep.ks_statistic = ks_uniform(rep.pit);
  rep.obs_pred = obs_pred(fit, a.y);
  return rep;
}

}  // namespace geocv
