#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geocv/common.hpp"
#include "geocv/diagnostics.hpp"
#include "geocv/mesh.hpp"
#include "geocv/model.hpp"
#include "geocv/io.hpp"
#include "geocv/sloocv.hpp"

namespace geocv {

struct Figure {
  std::string name;  // panel name; files are written as <prefix>_<name>.svg/.csv
  std::string svg;
  std::string csv;
};

struct PlotBundle {
  std::vector<Figure> figures;

  void add(Figure f) {
    for (const auto& g : figures)
      if (g.name == f.name) throw error("plot bundle: duplicate figure '" + f.name + "'");
    figures.push_back(std::move(f));
  }
};

namespace svg {

inline std::string num(double v) { return fmt_g(v, 12); }

// Fixed-size canvas with a single data-to-pixel affine map. The map is
// recorded in an XML comment so emitted marks can be inverted in tests.
class Canvas {
public:
  Canvas(double x0, double x1, double y0, double y1, int width = 640, int height = 480)
      : w_(width), h_(height) {
    double padx = (x1 - x0) * 0.05, pady = (y1 - y0) * 0.05;
    if (padx <= 0) padx = std::max(std::abs(x0), 1.0) * 0.05;
    if (pady <= 0) pady = std::max(std::abs(y0), 1.0) * 0.05;
    x0 -= padx; x1 += padx; y0 -= pady; y1 += pady;
    ax_ = (w_ - 2.0 * margin_) / (x1 - x0);
    bx_ = margin_ - ax_ * x0;
    ay_ = -(h_ - 2.0 * margin_) / (y1 - y0);
    by_ = (h_ - margin_) - ay_ * y0;
    x0_ = x0; x1_ = x1; y0_ = y0; y1_ = y1;
    body_ << "<!-- axis-map " << num(ax_) << " " << num(bx_) << " " << num(ay_) << " "
          << num(by_) << " -->\n";
  }

  double px(double x) const { return ax_ * x + bx_; }
  double py(double y) const { return ay_ * y + by_; }
  double xscale() const { return ax_; }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, bool data_coords = true) {
    auto X1 = data_coords ? px(x1) : x1, Y1 = data_coords ? py(y1) : y1;
    auto X2 = data_coords ? px(x2) : x2, Y2 = data_coords ? py(y2) : y2;
    body_ << "<line x1=\"" << num(X1) << "\" y1=\"" << num(Y1) << "\" x2=\"" << num(X2)
          << "\" y2=\"" << num(Y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
          << num(width) << "\"/>\n";
  }

  void polyline(const std::vector<Point2>& pts, const std::string& stroke, double width = 1.5) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
          << "\" points=\"";
    for (const auto& p : pts) body_ << num(px(p.x)) << "," << num(py(p.y)) << " ";
    body_ << "\"/>\n";
  }

  void polygon(const std::vector<Point2>& pts, const std::string& stroke,
               const std::string& fill, double width = 1.5) {
    body_ << "<polygon fill=\"" << fill << "\" stroke=\"" << stroke << "\" stroke-width=\""
          << num(width) << "\" points=\"";
    for (const auto& p : pts) body_ << num(px(p.x)) << "," << num(py(p.y)) << " ";
    body_ << "\"/>\n";
  }

  void circle(double x, double y, double r_px, const std::string& fill,
              const std::string& cls = "mark") {
    body_ << "<circle class=\"" << cls << "\" cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
          << "\" r=\"" << num(r_px) << "\" fill=\"" << fill << "\"/>\n";
  }

  void disk(double x, double y, double r_data, const std::string& stroke,
            const std::string& fill) {
    body_ << "<circle class=\"disk\" cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
          << "\" r=\"" << num(r_data * std::abs(ax_)) << "\" fill=\"" << fill << "\" stroke=\""
          << stroke << "\" fill-opacity=\"0.5\"/>\n";
  }

  void rect(double x, double y, double wdata, double hdata, const std::string& fill) {
    body_ << "<rect x=\"" << num(px(x)) << "\" y=\"" << num(py(y + hdata)) << "\" width=\""
          << num(wdata * std::abs(ax_)) << "\" height=\"" << num(hdata * std::abs(ay_))
          << "\" fill=\"" << fill << "\"/>\n";
  }

  void cross(double x, double y, double half_px = 4.0) {
    double cx = px(x), cy = py(y);
    line(cx - half_px, cy - half_px, cx + half_px, cy + half_px, "black", 1.0, false);
    line(cx - half_px, cy + half_px, cx + half_px, cy - half_px, "black", 1.0, false);
  }

  void text(double x, double y, const std::string& s, bool data_coords = true,
            const std::string& fill = "black", int size = 12,
            const std::string& anchor = "start") {
    body_ << "<text x=\"" << num(data_coords ? px(x) : x) << "\" y=\""
          << num(data_coords ? py(y) : y) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" fill=\"" << fill << "\" text-anchor=\"" << anchor
          << "\">" << s << "</text>\n";
  }

  void axes(const std::string& xlabel, const std::string& ylabel, const std::string& title) {
    line(margin_, h_ - margin_, w_ - margin_, h_ - margin_, "black", 1.0, false);
    line(margin_, margin_, margin_, h_ - margin_, "black", 1.0, false);
    for (int i = 0; i <= 4; ++i) {
      double x = x0_ + (x1_ - x0_) * i / 4.0;
      double y = y0_ + (y1_ - y0_) * i / 4.0;
      line(px(x), h_ - margin_, px(x), h_ - margin_ + 4, "black", 1.0, false);
      text(px(x), h_ - margin_ + 16, fmt_g(x, 4), false, "black", 10, "middle");
      line(margin_ - 4, py(y), margin_, py(y), "black", 1.0, false);
      text(margin_ - 6, py(y) + 3, fmt_g(y, 4), false, "black", 10, "end");
    }
    text(w_ / 2.0, h_ - 8.0, xlabel, false, "black", 12, "middle");
    text(12.0, margin_ - 10.0, ylabel, false, "black", 12, "start");
    text(w_ / 2.0, 18.0, title, false, "black", 14, "middle");
  }

  std::string finish() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
        << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n"
        << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

private:
  int w_, h_;
  double margin_ = 50.0;
  double ax_ = 1, bx_ = 0, ay_ = 1, by_ = 0;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
  std::ostringstream body_;
};

inline std::string blue_ramp(double t) {
  // 0 -> near white, 1 -> dark blue
  t = std::clamp(t, 0.0, 1.0);
  int r = static_cast<int>(std::lround(240 - 210 * t));
  int g = static_cast<int>(std::lround(245 - 180 * t));
  int b = 255;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace svg

namespace detail {

inline Figure density_panel(const std::string& name, const std::string& title, double mean,
                            double sd, bool with_prior, double prior_mean, double prior_sd) {
  // posterior curve sampled at 201 points over mean +- 4 sd
  std::vector<Point2> curve;
  double ymax = 0;
  for (int i = 0; i < 201; ++i) {
    double x = mean - 4 * sd + 8 * sd * i / 200.0;
    double z = (x - mean) / sd;
    double d = std::exp(-0.5 * z * z) / (sd * std::sqrt(2 * M_PI));
    curve.push_back({x, d});
    ymax = std::max(ymax, d);
  }
  std::vector<Point2> prior;
  if (with_prior) {
    for (int i = 0; i < 201; ++i) {
      double x = mean - 4 * sd + 8 * sd * i / 200.0;
      double z = (x - prior_mean) / prior_sd;
      prior.push_back({x, std::exp(-0.5 * z * z) / (prior_sd * std::sqrt(2 * M_PI))});
    }
  }
  svg::Canvas c(mean - 4 * sd, mean + 4 * sd, 0, ymax);
  c.axes(title, "density", title);
  double zq = normal_quantile(0.975);
  c.line(mean - zq * sd, 0, mean - zq * sd, ymax, "grey");
  c.line(mean + zq * sd, 0, mean + zq * sd, ymax, "grey");
  if (with_prior) c.polyline(prior, "blue");
  c.polyline(curve, "black");
  Figure fig;
  fig.name = name;
  fig.svg = c.finish();
  std::ostringstream csv;
  csv << "value,posterior_density\n";
  for (const auto& p : curve) csv << fmt_full(p.x) << "," << fmt_full(p.y) << "\n";
  fig.csv = csv.str();
  return fig;
}

inline Figure slice_panel(const HyperSlice& s) {
  // conditional log-posterior slice, shown as a normalized density
  double lmax = *std::max_element(s.log_post.begin(), s.log_post.end());
  std::vector<Point2> curve;
  for (size_t i = 0; i < s.value.size(); ++i)
    curve.push_back({s.value[i], std::exp(s.log_post[i] - lmax)});
  double area = 0;
  for (size_t i = 1; i < curve.size(); ++i)
    area += 0.5 * (curve[i].y + curve[i - 1].y) * (curve[i].x - curve[i - 1].x);
  if (area > 0)
    for (auto& p : curve) p.y /= area;
  double ymax = 0;
  for (const auto& p : curve) ymax = std::max(ymax, p.y);
  // central 95% interval of the normalized slice
  double lo = curve.front().x, hi = curve.back().x, acc = 0;
  for (size_t i = 1; i < curve.size(); ++i) {
    double seg = 0.5 * (curve[i].y + curve[i - 1].y) * (curve[i].x - curve[i - 1].x);
    if (acc < 0.025 && acc + seg >= 0.025) lo = curve[i].x;
    if (acc < 0.975 && acc + seg >= 0.975) hi = curve[i - 1].x;
    acc += seg;
  }
  svg::Canvas c(curve.front().x, curve.back().x, 0, ymax);
  c.axes(s.name, "conditional density", "hyperparameter " + s.name + " (conditional slice)");
  c.line(lo, 0, lo, ymax, "grey");
  c.line(hi, 0, hi, ymax, "grey");
  c.polyline(curve, "black");
  Figure fig;
  fig.name = "hyper_" + s.name;
  fig.svg = c.finish();
  std::ostringstream csv;
  csv << "value,log_posterior\n";
  for (size_t i = 0; i < s.value.size(); ++i)
    csv << fmt_full(s.value[i]) << "," << fmt_full(s.log_post[i]) << "\n";
  fig.csv = csv.str();
  return fig;
}

inline Figure series_panel(const std::string& name, const std::string& title,
                           const std::vector<Summary>& vals) {
  double zq = normal_quantile(0.975);
  double ymin = 1e300, ymax = -1e300;
  for (const auto& s : vals) {
    ymin = std::min(ymin, s.mean - zq * s.sd);
    ymax = std::max(ymax, s.mean + zq * s.sd);
  }
  svg::Canvas c(0, static_cast<double>(vals.size() ? vals.size() - 1 : 1), ymin, ymax);
  c.axes("index", "value", title);
  std::vector<Point2> lo, hi, mean;
  for (size_t i = 0; i < vals.size(); ++i) {
    mean.push_back({static_cast<double>(i), vals[i].mean});
    lo.push_back({static_cast<double>(i), vals[i].mean - zq * vals[i].sd});
    hi.push_back({static_cast<double>(i), vals[i].mean + zq * vals[i].sd});
  }
  c.polyline(lo, "grey", 1.0);
  c.polyline(hi, "grey", 1.0);
  c.polyline(mean, "black");
  Figure fig;
  fig.name = name;
  fig.svg = c.finish();
  std::ostringstream csv;
  csv << "index,mean,sd\n";
  for (size_t i = 0; i < vals.size(); ++i)
    csv << i << "," << fmt_full(vals[i].mean) << "," << fmt_full(vals[i].sd) << "\n";
  fig.csv = csv.str();
  return fig;
}

}  // namespace detail

// Panel groups: fixed, hyper, random, predictor, fitted. Empty `which`
// selects everything applicable to the fit.
inline PlotBundle plot_model_summaries(const FitResult& fit, const PriorConfig& priors,
                                       const std::vector<std::string>& which = {}) {
  static const std::set<std::string> known = {"fixed", "hyper", "random", "predictor", "fitted"};
  for (const auto& w : which)
    if (!known.count(w)) throw error("plot_model_summaries: unknown panel '" + w + "'");
  auto want = [&](const std::string& w) {
    return which.empty() || std::find(which.begin(), which.end(), w) != which.end();
  };
  PlotBundle bundle;
  if (want("fixed")) {
    double prior_sd = 1.0 / std::sqrt(priors.beta_prec);
    for (size_t i = 0; i < fit.beta.size(); ++i)
      bundle.add(detail::density_panel("fixed_" + fit.beta_names[i], fit.beta_names[i],
                                       fit.beta[i].mean, fit.beta[i].sd, true, 0.0, prior_sd));
  }
  if (want("hyper"))
    for (const auto& s : fit.hyper_slices) bundle.add(detail::slice_panel(s));
  if (want("random") && !fit.u.empty())
    bundle.add(detail::series_panel("random_effects", "spatial random effect by vertex", fit.u));
  if (want("predictor"))
    bundle.add(detail::series_panel("linear_predictor", "linear predictor by observation",
                                    fit.linear_predictor));
  if (want("fitted"))
    bundle.add(detail::series_panel("fitted", "fitted values by observation", fit.fitted));
  return bundle;
}

inline PlotBundle plot_residuals(const CalibrationReport& report, double binwidth = 0.1) {
  if (!(binwidth > 0 && binwidth <= 1)) throw error("plot_residuals: binwidth outside (0,1]");
  PlotBundle bundle;
  {
    int nbins = static_cast<int>(std::ceil(1.0 / binwidth - 1e-12));
    std::vector<int> counts(nbins, 0);
    for (double v : report.pit) {
      int b = std::min(static_cast<int>(v / binwidth), nbins - 1);
      counts[b]++;
    }
    int cmax = *std::max_element(counts.begin(), counts.end());
    svg::Canvas c(0, 1, 0, static_cast<double>(cmax));
    c.axes("posterior replicate probability", "count", "calibration histogram");
    for (int b = 0; b < nbins; ++b)
      c.rect(b * binwidth, 0, binwidth, static_cast<double>(counts[b]), "steelblue");
    Figure fig;
    fig.name = "pit_hist";
    fig.svg = c.finish();
    std::ostringstream csv;
    csv << "bin_lo,bin_hi,count\n";
    for (int b = 0; b < nbins; ++b)
      csv << fmt_full(b * binwidth) << "," << fmt_full((b + 1) * binwidth) << "," << counts[b]
          << "\n";
    fig.csv = csv.str();
    bundle.add(fig);
  }
  {
    double lo = 1e300, hi = -1e300;
    for (const auto& p : report.obs_pred) {
      lo = std::min({lo, p.observed, p.predicted});
      hi = std::max({hi, p.observed, p.predicted});
    }
    svg::Canvas c(lo, hi, lo, hi);
    c.axes("observed", "predicted", "observed vs predicted");
    c.line(lo, lo, hi, hi, "black");
    for (const auto& p : report.obs_pred) c.circle(p.observed, p.predicted, 3, "steelblue");
    Figure fig;
    fig.name = "obs_pred";
    fig.svg = c.finish();
    std::ostringstream csv;
    csv << "observed,predicted,sd\n";
    for (const auto& p : report.obs_pred)
      csv << fmt_full(p.observed) << "," << fmt_full(p.predicted) << "," << fmt_full(p.sd)
          << "\n";
    fig.csv = csv.str();
    bundle.add(fig);
  }
  return bundle;
}

inline PlotBundle plot_mesh(const Mesh& mesh, const std::vector<Point2>& points = {}) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& v : mesh.vertices) {
    xmin = std::min(xmin, v.x); xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y); ymax = std::max(ymax, v.y);
  }
  svg::Canvas c(xmin, xmax, ymin, ymax, 640, 640);
  c.axes("long", "lat", "mesh");
  std::set<std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      edges.insert({std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])});
  for (const auto& [a, b] : edges)
    c.line(mesh.vertices[a].x, mesh.vertices[a].y, mesh.vertices[b].x, mesh.vertices[b].y,
           "grey", 0.5);
  for (const auto& p : points) c.circle(p.x, p.y, 3, "blue");
  Figure fig;
  fig.name = "mesh";
  fig.svg = c.finish();
  std::ostringstream csv;
  csv << "vertex,x,y,boundary\n";
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    csv << i << "," << fmt_full(mesh.vertices[i].x) << "," << fmt_full(mesh.vertices[i].y) << ","
        << (mesh.boundary[i] ? 1 : 0) << "\n";
  fig.csv = csv.str();
  PlotBundle bundle;
  bundle.add(fig);
  return bundle;
}

struct Raster {
  int nx = 0, ny = 0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  std::vector<double> values;  // row-major, NaN = outside the mesh

  double at(int ix, int iy) const { return values[iy * nx + ix]; }
  Point2 cell_center(int ix, int iy) const {
    return {xmin + (ix + 0.5) * (xmax - xmin) / nx, ymin + (iy + 0.5) * (ymax - ymin) / ny};
  }
};

// Posterior-mean field evaluated on a regular grid over the mesh bounding box.
inline Raster project_field(const FitResult& fit, const Mesh& mesh, int grid_nx, int grid_ny) {
  if (grid_nx < 2 || grid_ny < 2) throw error("project_field: grid dims must be >= 2");
  if (fit.u.empty()) throw error("project_field: fit has no spatial field");
  Raster r;
  r.nx = grid_nx;
  r.ny = grid_ny;
  r.xmin = 1e300; r.xmax = -1e300; r.ymin = 1e300; r.ymax = -1e300;
  for (const auto& v : mesh.vertices) {
    r.xmin = std::min(r.xmin, v.x); r.xmax = std::max(r.xmax, v.x);
    r.ymin = std::min(r.ymin, v.y); r.ymax = std::max(r.ymax, v.y);
  }
  std::vector<Point2> centers;
  for (int iy = 0; iy < grid_ny; ++iy)
    for (int ix = 0; ix < grid_nx; ++ix) centers.push_back(r.cell_center(ix, iy));
  Projector proj = make_projector(mesh, centers);
  Eigen::VectorXd umean(mesh.vertices.size());
  for (size_t i = 0; i < fit.u.size(); ++i) umean[i] = fit.u[i].mean;
  Eigen::VectorXd vals = proj.A * umean;
  r.values.resize(centers.size());
  for (size_t i = 0; i < centers.size(); ++i)
    r.values[i] = proj.inside[i] ? vals[i] : std::numeric_limits<double>::quiet_NaN();
  return r;
}

inline PlotBundle plot_field(const Raster& raster, const Polygon* polygon = nullptr,
                             const Mesh* mesh = nullptr,
                             const std::vector<Point2>& points = {}) {
  double vmin = 1e300, vmax = -1e300;
  for (double v : raster.values)
    if (std::isfinite(v)) { vmin = std::min(vmin, v); vmax = std::max(vmax, v); }
  if (!(vmin <= vmax)) { vmin = 0; vmax = 1; }
  double vspan = vmax > vmin ? vmax - vmin : 1.0;
  svg::Canvas c(raster.xmin, raster.xmax, raster.ymin, raster.ymax, 640, 640);
  c.axes("long", "lat", "random field");
  double dx = (raster.xmax - raster.xmin) / raster.nx;
  double dy = (raster.ymax - raster.ymin) / raster.ny;
  for (int iy = 0; iy < raster.ny; ++iy)
    for (int ix = 0; ix < raster.nx; ++ix) {
      double v = raster.at(ix, iy);
      if (!std::isfinite(v)) continue;
      c.rect(raster.xmin + ix * dx, raster.ymin + iy * dy, dx, dy,
             svg::blue_ramp((v - vmin) / vspan));
    }
  if (mesh) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh->triangles)
      for (int e = 0; e < 3; ++e)
        edges.insert({std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])});
    for (const auto& [a, b] : edges)
      c.line(mesh->vertices[a].x, mesh->vertices[a].y, mesh->vertices[b].x, mesh->vertices[b].y,
             "black", 0.3);
  }
  if (polygon)
    for (const auto& ring : polygon->rings) c.polygon(ring, "white", "none", 2.0);
  for (const auto& p : points) c.circle(p.x, p.y, 2, "red");
  Figure fig;
  fig.name = "field";
  fig.svg = c.finish();
  std::ostringstream csv;
  csv << "ix,iy,x,y,value\n";
  for (int iy = 0; iy < raster.ny; ++iy)
    for (int ix = 0; ix < raster.nx; ++ix) {
      Point2 p = raster.cell_center(ix, iy);
      csv << ix << "," << iy << "," << fmt_full(p.x) << "," << fmt_full(p.y) << ","
          << fmt_full(raster.at(ix, iy)) << "\n";
    }
  fig.csv = csv.str();
  PlotBundle bundle;
  bundle.add(fig);
  return bundle;
}

inline std::string metric_annotation(const ModelMetrics& m) {
  return "mae " + fmt_g(m.mae.mean, 4) + " [" + fmt_g(m.mae.lo, 4) + ", " + fmt_g(m.mae.hi, 4) +
         "]  rmse " + fmt_g(m.rmse.mean, 4) + " [" + fmt_g(m.rmse.lo, 4) + ", " +
         fmt_g(m.rmse.hi, 4) + "]";
}

inline PlotBundle plot_sloo(const SlooResult& result, const std::vector<Point2>& coords,
                            double rad) {
  PlotBundle bundle;
  for (size_t mi = 0; mi < result.metrics.size(); ++mi) {
    double lo = 1e300, hi = -1e300;
    for (const auto& it : result.iterations) {
      if (!it.ok[mi]) continue;
      lo = std::min({lo, it.y_obs, it.pred[mi].mean});
      hi = std::max({hi, it.y_obs, it.pred[mi].mean});
    }
    svg::Canvas c(lo, hi, lo, hi);
    c.axes("observed", "predicted", "sloo " + result.metrics[mi].label);
    c.line(lo, lo, hi, hi, "black");
    for (const auto& it : result.iterations)
      if (it.ok[mi]) c.circle(it.y_obs, it.pred[mi].mean, 3, "steelblue");
    c.text(60.0, 36.0, metric_annotation(result.metrics[mi]), false, "black", 11);
    Figure fig;
    fig.name = "sloo_scatter_" + result.metrics[mi].label;
    fig.svg = c.finish();
    std::ostringstream csv;
    csv << "iteration,observed,predicted,sd,ok\n";
    for (size_t k = 0; k < result.iterations.size(); ++k) {
      const auto& it = result.iterations[k];
      csv << k << "," << fmt_full(it.y_obs) << "," << fmt_full(it.pred[mi].mean) << ","
          << fmt_full(it.pred[mi].sd) << "," << (it.ok[mi] ? 1 : 0) << "\n";
    }
    fig.csv = csv.str();
    bundle.add(fig);
  }
  {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : coords) {
      xmin = std::min(xmin, p.x - rad); xmax = std::max(xmax, p.x + rad);
      ymin = std::min(ymin, p.y - rad); ymax = std::max(ymax, p.y + rad);
    }
    svg::Canvas c(xmin, xmax, ymin, ymax, 640, 640);
    c.axes("long", "lat", "sloo held-out locations");
    std::set<int> held;
    for (const auto& it : result.iterations) held.insert(it.holdout);
    for (size_t i = 0; i < coords.size(); ++i)
      if (!held.count(static_cast<int>(i))) c.cross(coords[i].x, coords[i].y);
    for (size_t k = 0; k < result.iterations.size(); ++k) {
      const auto& it = result.iterations[k];
      c.disk(it.coord.x, it.coord.y, rad, "red", "red");
      c.text(it.coord.x, it.coord.y, std::to_string(k + 1), true, "white", 11, "middle");
    }
    Figure fig;
    fig.name = "sloo_map";
    fig.svg = c.finish();
    std::ostringstream csv;
    csv << "iteration,holdout,x,y,removed\n";
    for (size_t k = 0; k < result.iterations.size(); ++k) {
      const auto& it = result.iterations[k];
      csv << k << "," << it.holdout << "," << fmt_full(it.coord.x) << "," << fmt_full(it.coord.y)
          << "," << it.removed << "\n";
    }
    fig.csv = csv.str();
    bundle.add(fig);
  }
  return bundle;
}

inline std::vector<std::string> write_bundle(const PlotBundle& bundle, const std::string& dir,
                                             const std::string& prefix) {
  std::vector<std::string> written;
  std::filesystem::create_directories(dir);
  for (const auto& fig : bundle.figures) {
    std::string base = dir + "/" + prefix + "_" + fig.name;
    {
      std::ofstream out(base + ".svg");
      if (!out) throw error("write_bundle: cannot write '" + base + ".svg'");
      out << fig.svg;
    }
    {
      std::ofstream out(base + ".csv");
      if (!out) throw error("write_bundle: cannot write '" + base + ".csv'");
      out << fig.csv;
    }
    written.push_back(base + ".svg");
    written.push_back(base + ".csv");
  }
  return written;
}

}  // namespace geocv
