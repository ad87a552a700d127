#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "geocv/common.hpp"

namespace geocv {

struct SimplexResult {
  Eigen::VectorXd x;
  double fval = 0.0;
  int evals = 0;
  bool converged = false;
};

// Nelder-Mead minimization; deterministic for fixed inputs.
inline SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x0, double step = 0.5,
                                 double tol = 1e-6, int max_evals = 500) {
  const int n = static_cast<int>(x0.size());
  SimplexResult res;
  if (n == 0) {
    res.x = x0;
    res.fval = f(x0);
    res.evals = 1;
    res.converged = true;
    return res;
  }
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    double v = f(x);
    return std::isfinite(v) ? v : 1e300;
  };
  for (int i = 1; i <= n; ++i) xs[i][i - 1] += step;
  for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

  while (evals < max_evals) {
    std::vector<int> ord(n + 1);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    {
      std::vector<Eigen::VectorXd> xs2(n + 1);
      std::vector<double> fs2(n + 1);
      for (int i = 0; i <= n; ++i) { xs2[i] = xs[ord[i]]; fs2[i] = fs[ord[i]]; }
      xs = std::move(xs2);
      fs = std::move(fs2);
    }
    if (fs[n] - fs[0] < tol) { res.converged = true; break; }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[i];
    centroid /= n;

    Eigen::VectorXd xr = centroid + (centroid - xs[n]);
    double fr = eval(xr);
    if (fr < fs[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[n]);
      double fe = eval(xe);
      if (fe < fr) { xs[n] = xe; fs[n] = fe; }
      else { xs[n] = xr; fs[n] = fr; }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr; fs[n] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (xs[n] - centroid);
      double fc = eval(xc);
      if (fc < fs[n]) { xs[n] = xc; fs[n] = fc; }
      else {
        for (int i = 1; i <= n; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (fs[i] < fs[best]) best = i;
  res.x = xs[best];
  res.fval = fs[best];
  res.evals = evals;
  return res;
}

}  // namespace geocv
