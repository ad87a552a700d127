#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "geocv/mesh.hpp"

namespace geocv::test {

inline std::vector<Point2> random_cloud(int n, std::uint64_t seed, double lo = 0.0,
                                        double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng)});
  return pts;
}

// 3-vertex mesh of the right triangle with legs 1 on the axes
inline Mesh unit_right_triangle() {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary = {true, true, true};
  return m;
}

inline Eigen::MatrixXd dense(const SpMat& s) { return Eigen::MatrixXd(s); }

}  // namespace geocv::test
