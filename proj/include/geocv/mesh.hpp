#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "geocv/common.hpp"

namespace geocv {

using SpMat = Eigen::SparseMatrix<double>;

struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW vertex indices
  std::vector<bool> boundary;                 // per-vertex: on the outer boundary
  double cutoff = 0.0;                        // min vertex spacing used at construction
};

struct Projector {
  SpMat A;                   // rows = query locations, cols = mesh vertices
  std::vector<bool> inside;  // per-row: location found in some triangle
};

struct FemMatrices {
  Eigen::VectorXd c_diag;  // lumped mass matrix diagonal
  SpMat stiffness;         // piecewise-linear stiffness matrix G
};

// Greedy thinning in input order: a point survives unless it lies within
// `cutoff` of an already retained point.
inline std::vector<Point2> dedup_points(const std::vector<Point2>& points, double cutoff) {
  if (points.empty()) throw error("dedup_points: no points");
  if (!(cutoff >= 0) || !std::isfinite(cutoff)) throw error("dedup_points: bad cutoff");
  std::vector<Point2> kept;
  for (const auto& p : points) {
    if (!finite(p)) throw error("dedup_points: non-finite point");
    bool close = false;
    for (const auto& q : kept)
      if (dist(p, q) < cutoff) { close = true; break; }
    if (!close) kept.push_back(p);
  }
  return kept;
}

// Andrew monotone chain; returns hull vertices in CCW order.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  int n = static_cast<int>(pts.size());
  if (n < 3) throw error("convex_hull: degenerate geometry");
  std::vector<Point2> h(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && orient2d(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (int i = n - 2, lo = k + 1; i >= 0; --i) {
    while (k >= lo && orient2d(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  if (static_cast<int>(h.size()) < 3) throw error("convex_hull: degenerate geometry");
  return h;
}

inline double hull_diameter(const std::vector<Point2>& hull) {
  double d = 0;
  for (size_t i = 0; i < hull.size(); ++i)
    for (size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, dist(hull[i], hull[j]));
  return d;
}

// signed distance is not needed; containment with tolerance suffices
inline bool in_convex_polygon(const std::vector<Point2>& poly, const Point2& p, double tol = 1e-9) {
  for (size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    double len = dist(a, b);
    if (orient2d(a, b, p) < -tol * std::max(len, 1.0)) return false;
  }
  return true;
}

namespace detail {

// Incremental Bowyer-Watson triangulation over a fixed super-triangle.
class Delaunay {
public:
  explicit Delaunay(const std::vector<Point2>& seed_pts) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : seed_pts) {
      xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
    }
    double cx = (xmin + xmax) / 2, cy = (ymin + ymax) / 2;
    double span = std::max({xmax - xmin, ymax - ymin, 1.0}) * 50.0;
    verts_.push_back({cx - 2 * span, cy - span});
    verts_.push_back({cx + 2 * span, cy - span});
    verts_.push_back({cx, cy + 2 * span});
    tris_.push_back({0, 1, 2});
    for (const auto& p : seed_pts) insert(p);
  }

  // Returns the new vertex index, or -1 when p coincides with an existing vertex.
  int insert(const Point2& p) {
    for (size_t i = 3; i < verts_.size(); ++i)
      if (dist(verts_[i], p) < 1e-14) return -1;
    std::vector<std::array<int, 3>> keep;
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : tris_) {
      if (in_circumcircle(t, p)) {
        for (int e = 0; e < 3; ++e) {
          int a = t[e], b = t[(e + 1) % 3];
          edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
      } else {
        keep.push_back(t);
      }
    }
    std::vector<std::array<int, 3>> cavity_edges_tris;
    int vi = static_cast<int>(verts_.size());
    verts_.push_back(p);
    for (const auto& t : tris_) {
      if (!in_circumcircle(t, p)) continue;
      for (int e = 0; e < 3; ++e) {
        int a = t[e], b = t[(e + 1) % 3];
        if (edge_count[{std::min(a, b), std::max(a, b)}] == 1)
          cavity_edges_tris.push_back({a, b, vi});
      }
    }
    tris_ = std::move(keep);
    for (auto& t : cavity_edges_tris) {
      if (orient2d(verts_[t[0]], verts_[t[1]], verts_[t[2]]) < 0) std::swap(t[1], t[2]);
      tris_.push_back(t);
    }
    return vi;
  }

  // Mesh with super-triangle vertices stripped and indices compacted.
  Mesh finish() const {
    Mesh m;
    std::vector<int> remap(verts_.size(), -1);
    for (size_t i = 3; i < verts_.size(); ++i) {
      remap[i] = static_cast<int>(m.vertices.size());
      m.vertices.push_back(verts_[i]);
    }
    for (const auto& t : tris_) {
      if (t[0] < 3 || t[1] < 3 || t[2] < 3) continue;
      std::array<int, 3> tt = {remap[t[0]], remap[t[1]], remap[t[2]]};
      if (orient2d(m.vertices[tt[0]], m.vertices[tt[1]], m.vertices[tt[2]]) <= 0)
        std::swap(tt[1], tt[2]);
      m.triangles.push_back(tt);
    }
    std::sort(m.triangles.begin(), m.triangles.end());
    m.boundary.assign(m.vertices.size(), false);
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : m.triangles)
      for (int e = 0; e < 3; ++e) {
        int a = t[e], b = t[(e + 1) % 3];
        edge_count[{std::min(a, b), std::max(a, b)}]++;
      }
    for (const auto& [edge, cnt] : edge_count)
      if (cnt == 1) {
        m.boundary[edge.first] = true;
        m.boundary[edge.second] = true;
      }
    return m;
  }

  const std::vector<Point2>& verts() const { return verts_; }
  const std::vector<std::array<int, 3>>& tris() const { return tris_; }

private:
  bool in_circumcircle(const std::array<int, 3>& t, const Point2& p) const {
    const Point2 &a = verts_[t[0]], &b = verts_[t[1]], &c = verts_[t[2]];
    double ax = a.x - p.x, ay = a.y - p.y;
    double bx = b.x - p.x, by = b.y - p.y;
    double cx = c.x - p.x, cy = c.y - p.y;
    double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                 (bx * bx + by * by) * (ax * cy - cx * ay) +
                 (cx * cx + cy * cy) * (ax * by - bx * ay);
    double ccw = orient2d(a, b, c);
    return ccw > 0 ? det > 1e-12 : det < -1e-12;
  }

  std::vector<Point2> verts_;
  std::vector<std::array<int, 3>> tris_;
};

// Offset each hull edge outward by `width` and miter-join adjacent edges.
inline std::vector<Point2> offset_hull(const std::vector<Point2>& hull, double width) {
  size_t n = hull.size();
  std::vector<Point2> out(n);
  for (size_t i = 0; i < n; ++i) {
    const Point2& prev = hull[(i + n - 1) % n];
    const Point2& cur = hull[i];
    const Point2& next = hull[(i + 1) % n];
    // outward normals of the two incident edges (hull is CCW, outward = right side)
    auto normal = [](const Point2& a, const Point2& b) {
      double dx = b.x - a.x, dy = b.y - a.y, len = std::hypot(dx, dy);
      return Point2{dy / len, -dx / len};
    };
    Point2 n1 = normal(prev, cur), n2 = normal(cur, next);
    double bx = n1.x + n2.x, by = n1.y + n2.y;
    double blen2 = bx * bx + by * by;
    if (blen2 < 1e-20) { out[i] = {cur.x + n2.x * width, cur.y + n2.y * width}; continue; }
    // miter length so that both offset edges are met
    double scale = 2.0 * width / blen2;
    out[i] = {cur.x + bx * scale, cur.y + by * scale};
  }
  return out;
}

inline std::vector<Point2> resample_ring(const std::vector<Point2>& ring, double max_step) {
  std::vector<Point2> out;
  size_t n = ring.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& a = ring[i];
    const Point2& b = ring[(i + 1) % n];
    double len = dist(a, b);
    int segs = std::max(1, static_cast<int>(std::ceil(len / max_step)));
    for (int s = 0; s < segs; ++s) {
      double t = static_cast<double>(s) / segs;
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return out;
}

}  // namespace detail

// Triangulate the data hull plus an extension ring, refining until every inner
// edge is <= 1.5*max_edge_inner and every outer edge <= 1.5*max_edge_outer.
// extension < 0 requests the default width of 0.3 * hull diameter.
inline Mesh build_mesh(const std::vector<Point2>& points, double max_edge_inner,
                       double max_edge_outer, double cutoff, double extension = -1.0) {
  if (!std::isfinite(max_edge_inner) || !std::isfinite(max_edge_outer) ||
      !std::isfinite(cutoff) || max_edge_inner <= 0 || max_edge_outer <= 0)
    throw error("build_mesh: non-finite or non-positive parameter");
  if (max_edge_inner > max_edge_outer)
    throw error("build_mesh: max_edge_inner must not exceed max_edge_outer");

  std::vector<Point2> pts = dedup_points(points, cutoff);
  if (pts.size() < 3) throw error("build_mesh: degenerate geometry");
  std::vector<Point2> hull;
  try {
    hull = convex_hull(pts);
  } catch (const error&) {
    throw error("build_mesh: degenerate geometry");
  }
  double diam = hull_diameter(hull);
  if (extension < 0) extension = 0.3 * diam;
  if (!(extension > 0)) throw error("build_mesh: extension must be positive");

  std::vector<Point2> ring =
      detail::resample_ring(detail::offset_hull(hull, extension), max_edge_outer);

  std::vector<Point2> seed = pts;
  for (const auto& p : ring) seed.push_back(p);
  detail::Delaunay dt(seed);

  const std::vector<Point2> inner_poly = hull;
  auto edge_limit = [&](const Point2& a, const Point2& b) {
    bool inner = in_convex_polygon(inner_poly, a, 1e-9) && in_convex_polygon(inner_poly, b, 1e-9);
    return 1.5 * (inner ? max_edge_inner : max_edge_outer);
  };

  std::set<std::pair<int, int>> unsplittable;
  for (int iter = 0; iter < 100000; ++iter) {
    // longest violating edge first, ties by index pair for determinism
    std::vector<std::tuple<double, int, int>> viol;
    std::set<std::pair<int, int>> seen;
    for (const auto& t : dt.tris()) {
      if (t[0] < 3 || t[1] < 3 || t[2] < 3) continue;
      for (int e = 0; e < 3; ++e) {
        int a = std::min(t[e], t[(e + 1) % 3]);
        int b = std::max(t[e], t[(e + 1) % 3]);
        if (!seen.insert({a, b}).second) continue;
        if (unsplittable.count({a, b})) continue;
        const Point2 &pa = dt.verts()[a], &pb = dt.verts()[b];
        double len = dist(pa, pb);
        if (len > edge_limit(pa, pb)) viol.emplace_back(-len, a, b);
      }
    }
    if (viol.empty()) break;
    std::sort(viol.begin(), viol.end());
    bool changed = false;
    for (const auto& [neg_len, a, b] : viol) {
      const Point2 &pa = dt.verts()[a], &pb = dt.verts()[b];
      Point2 mid{(pa.x + pb.x) / 2, (pa.y + pb.y) / 2};
      bool blocked = false;
      for (size_t i = 3; i < dt.verts().size(); ++i)
        if (dist(dt.verts()[i], mid) < cutoff) { blocked = true; break; }
      if (blocked) { unsplittable.insert({a, b}); continue; }
      dt.insert(mid);
      changed = true;
      break;  // edge indices shift after insertion; rescan
    }
    if (!changed) break;
  }

  Mesh m = dt.finish();
  m.cutoff = cutoff;
  return m;
}

inline double triangle_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * orient2d(a, b, c);
}

inline double mesh_area(const Mesh& m) {
  double area = 0;
  for (const auto& t : m.triangles)
    area += triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
  return area;
}

// Lumped mass matrix and piecewise-linear stiffness matrix.
inline FemMatrices fem_matrices(const Mesh& mesh) {
  int n = static_cast<int>(mesh.vertices.size());
  FemMatrices fem;
  fem.c_diag = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& t : mesh.triangles) {
    const Point2 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
    double area = triangle_area(a, b, c);
    if (area <= 0) throw error("fem_matrices: non-positive triangle area");
    for (int i = 0; i < 3; ++i) fem.c_diag[t[i]] += area / 3.0;
    // gradients of the barycentric basis functions
    double gx[3], gy[3];
    const Point2* v[3] = {&a, &b, &c};
    for (int i = 0; i < 3; ++i) {
      const Point2& p1 = *v[(i + 1) % 3];
      const Point2& p2 = *v[(i + 2) % 3];
      gx[i] = (p1.y - p2.y) / (2 * area);
      gy[i] = (p2.x - p1.x) / (2 * area);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(t[i], t[j], area * (gx[i] * gx[j] + gy[i] * gy[j]));
  }
  fem.stiffness.resize(n, n);
  fem.stiffness.setFromTriplets(trip.begin(), trip.end());
  fem.stiffness.makeCompressed();
  return fem;
}

// Barycentric interpolation weights at each query location. Locations outside
// every triangle get an all-zero row and inside=false. Shared-edge ties go to
// the lowest triangle index.
inline Projector make_projector(const Mesh& mesh, const std::vector<Point2>& locs) {
  int nv = static_cast<int>(mesh.vertices.size());
  Projector proj;
  proj.inside.assign(locs.size(), false);
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t r = 0; r < locs.size(); ++r) {
    const Point2& p = locs[r];
    for (size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
      const auto& t = mesh.triangles[ti];
      const Point2 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
      double area = orient2d(a, b, c);
      double w0 = orient2d(b, c, p) / area;
      double w1 = orient2d(c, a, p) / area;
      double w2 = orient2d(a, b, p) / area;
      double tol = -1e-12;
      if (w0 >= tol && w1 >= tol && w2 >= tol) {
        double ww[3] = {std::max(w0, 0.0), std::max(w1, 0.0), std::max(w2, 0.0)};
        double s = ww[0] + ww[1] + ww[2];
        for (int i = 0; i < 3; ++i)
          if (ww[i] > 0) trip.emplace_back(static_cast<int>(r), t[i], ww[i] / s);
        proj.inside[r] = true;
        break;
      }
    }
  }
  proj.A.resize(static_cast<int>(locs.size()), nv);
  proj.A.setFromTriplets(trip.begin(), trip.end());
  proj.A.makeCompressed();
  return proj;
}

}  // namespace geocv
