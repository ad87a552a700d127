#pragma once

#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "geocv/common.hpp"
#include "geocv/model.hpp"

namespace geocv {

struct SlooConfig {
  int ss = 20;          // number of SLOO runs
  double rad = 0.0;     // buffer radius; must be positive
  double alpha = 0.05;  // CI miscoverage
  std::uint64_t seed = 0;
  std::vector<ModelSpec> models;
  std::vector<std::string> labels;  // optional; defaults to model1, model2, ...
  int threads = 1;
  PriorConfig priors;
  int max_evals = 500;
  double tol = 1e-6;
};

struct SlooIteration {
  int holdout = -1;
  Point2 coord;
  double y_obs = 0.0;
  int removed = 0;  // buffered-out training points, holdout excluded
  std::vector<Summary> pred;
  std::vector<bool> ok;
  std::vector<std::string> messages;
};

struct MetricSummary {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ModelMetrics {
  std::string label;
  MetricSummary mae;
  MetricSummary rmse;
  int failures = 0;
};

struct SlooResult {
  std::vector<SlooIteration> iterations;
  std::vector<ModelMetrics> metrics;
  double rad = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> warm_theta_flat;  // metadata: per-model warm-start thetas
};

inline double default_radius(double range_estimate, const std::vector<Point2>& coords) {
  if (coords.size() < 2) throw error("default_radius: need at least two points");
  double maxd = 0.0;
  for (size_t i = 0; i < coords.size(); ++i)
    for (size_t j = i + 1; j < coords.size(); ++j) maxd = std::max(maxd, dist(coords[i], coords[j]));
  return std::min(range_estimate, maxd / 4.0);
}

// Training indices: everything strictly farther than rad from the held-out
// point; the held-out point itself is always excluded.
inline std::vector<int> buffer_partition(const std::vector<Point2>& coords, int holdout,
                                         double rad) {
  if (!(rad > 0)) throw error("buffer_partition: radius must be positive");
  std::vector<int> train;
  for (int j = 0; j < static_cast<int>(coords.size()); ++j) {
    if (j == holdout) continue;
    if (dist(coords[j], coords[holdout]) > rad) train.push_back(j);
  }
  if (train.empty()) throw error("buffer_partition: radius removes all data");
  return train;
}

inline std::vector<ModelMetrics> score_metrics(const std::vector<SlooIteration>& iterations,
                                               double alpha,
                                               const std::vector<std::string>& labels) {
  if (!(alpha > 0 && alpha < 1)) throw error("score_metrics: alpha outside (0,1)");
  size_t n_models = labels.size();
  double z = normal_quantile(1.0 - alpha / 2.0);
  std::vector<ModelMetrics> out;
  for (size_t mi = 0; mi < n_models; ++mi) {
    std::vector<double> abs_err, sq_err;
    int failures = 0;
    for (const auto& it : iterations) {
      if (!it.ok[mi]) { ++failures; continue; }
      double e = it.y_obs - it.pred[mi].mean;
      abs_err.push_back(std::abs(e));
      sq_err.push_back(e * e);
    }
    double k = static_cast<double>(abs_err.size());
    if (k < 2) throw error("score_metrics: fewer than 2 successful iterations for model '" +
                           labels[mi] + "'");
    auto mean_of = [&](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    auto pop_sd = [&](const std::vector<double>& v, double m) {
      double s = 0;
      for (double x : v) s += (x - m) * (x - m);
      return std::sqrt(s / v.size());
    };
    ModelMetrics mm;
    mm.label = labels[mi];
    mm.failures = failures;
    double mae = mean_of(abs_err);
    double half = z * pop_sd(abs_err, mae) / std::sqrt(k);
    mm.mae = {mae, mae - half, mae + half};
    double mse = mean_of(sq_err);
    double half2 = z * pop_sd(sq_err, mse) / std::sqrt(k);
    mm.rmse = {std::sqrt(mse), std::sqrt(std::max(mse - half2, 0.0)),
               std::sqrt(std::max(mse + half2, 0.0))};
    out.push_back(mm);
  }
  return out;
}

namespace detail {

inline Projector subset_rows(const Projector& full, const std::vector<int>& rows) {
  Projector sub;
  sub.inside.resize(rows.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t r = 0; r < rows.size(); ++r) {
    sub.inside[r] = full.inside[rows[r]];
    Eigen::VectorXd row = full.A.row(rows[r]).transpose();
    for (int c = 0; c < row.size(); ++c)
      if (row[c] != 0.0) trip.emplace_back(static_cast<int>(r), c, row[c]);
  }
  sub.A.resize(static_cast<int>(rows.size()), full.A.cols());
  sub.A.setFromTriplets(trip.begin(), trip.end());
  sub.A.makeCompressed();
  return sub;
}

inline Dataset subset_dataset(const Dataset& d, const std::vector<int>& rows) {
  Dataset sub;
  sub.center = d.center;
  sub.scale = d.scale;
  for (int r : rows) sub.coords.push_back(d.coords[r]);
  sub.col_names = d.col_names;
  for (const auto& col : d.cols) {
    Eigen::VectorXd v(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) v[i] = col[rows[i]];
    sub.cols.push_back(std::move(v));
  }
  return sub;
}

}  // namespace detail

// Buffered spatial leave-one-out cross-validation. The mesh is built once
// from the full data and reused; only observations are removed per run.
inline SlooResult run_sloo(const Dataset& dataset, const Mesh& mesh, const FemMatrices& fem,
                           const SlooConfig& config) {
  const int n = static_cast<int>(dataset.n());
  if (config.models.empty()) throw error("run_sloo: no models");
  if (config.ss < 1 || config.ss > n) throw error("run_sloo: ss outside [1, n]");
  if (!(config.rad > 0)) throw error("run_sloo: radius must be positive");
  if (!(config.alpha > 0 && config.alpha < 1)) throw error("run_sloo: alpha outside (0,1)");

  std::vector<std::string> labels = config.labels;
  while (labels.size() < config.models.size())
    labels.push_back("model" + std::to_string(labels.size() + 1));

  Projector full_proj = make_projector(mesh, dataset.coords);

  // full-data fits give the warm-start thetas
  std::vector<std::vector<double>> warm(config.models.size());
  for (size_t mi = 0; mi < config.models.size(); ++mi) {
    const ModelSpec& spec = config.models[mi];
    Assembly a = assemble(dataset, spec, mesh, full_proj);
    FitConfig fc;
    fc.priors = config.priors;
    fc.max_evals = config.max_evals;
    fc.tol = config.tol;
    fc.compute_summaries = false;
    fc.compute_slices = false;
    FitResult fr = spec.family == Family::normal ? fit(a, fem, spec, fc)
                                                 : fit_bernoulli(a, fem, spec, fc);
    warm[mi] = fr.theta_hat;
  }

  std::vector<int> holdouts;
  if (config.ss == n) {
    holdouts.resize(n);
    std::iota(holdouts.begin(), holdouts.end(), 0);
  } else {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(config.seed);
    for (int i = 0; i < config.ss; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    holdouts.assign(idx.begin(), idx.begin() + config.ss);
  }

  std::vector<SlooIteration> iterations(holdouts.size());
  auto run_one = [&](size_t k) {
    SlooIteration rec;
    rec.holdout = holdouts[k];
    rec.coord = dataset.coords[rec.holdout];
    std::vector<int> train = buffer_partition(dataset.coords, rec.holdout, config.rad);
    rec.removed = n - 1 - static_cast<int>(train.size());
    Dataset sub = detail::subset_dataset(dataset, train);
    Projector sub_proj = detail::subset_rows(full_proj, train);
    rec.y_obs = dataset.column(config.models[0].response)[rec.holdout];
    for (size_t mi = 0; mi < config.models.size(); ++mi) {
      const ModelSpec& spec = config.models[mi];
      try {
        Assembly a = assemble(sub, spec, mesh, sub_proj);
        FitConfig fc;
        fc.priors = config.priors;
        fc.max_evals = config.max_evals;
        fc.tol = config.tol;
        fc.compute_summaries = false;
        fc.compute_slices = false;
        fc.theta_start = warm[mi];
        FitResult fr = spec.family == Family::normal ? fit(a, fem, spec, fc)
                                                     : fit_bernoulli(a, fem, spec, fc);
        std::map<std::string, Eigen::VectorXd> covs;
        for (const auto& c : spec.covariates) {
          Eigen::VectorXd v(1);
          v[0] = dataset.column(c)[rec.holdout];
          covs[c] = v;
        }
        std::vector<Summary> p = predict(fr, mesh, {rec.coord}, covs);
        rec.pred.push_back(p[0]);
        rec.ok.push_back(true);
        rec.messages.push_back("");
      } catch (const std::exception& e) {
        rec.pred.push_back({0.0, 0.0});
        rec.ok.push_back(false);
        rec.messages.push_back(e.what());
      }
    }
    iterations[k] = std::move(rec);
  };

  int n_threads = std::max(1, config.threads);
  if (n_threads == 1) {
    for (size_t k = 0; k < holdouts.size(); ++k) run_one(k);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (size_t k = next.fetch_add(1); k < holdouts.size(); k = next.fetch_add(1)) run_one(k);
      });
    for (auto& th : pool) th.join();
  }

  SlooResult res;
  res.iterations = std::move(iterations);
  res.metrics = score_metrics(res.iterations, config.alpha, labels);
  res.rad = config.rad;
  res.seed = config.seed;
  for (const auto& w : warm)
    for (double v : w) res.warm_theta_flat.push_back(v);
  return res;
}

}  // namespace geocv
