#pragma once

#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geocv/common.hpp"
#include "geocv/diagnostics.hpp"
#include "geocv/mesh.hpp"
#include "geocv/model.hpp"
#include "geocv/sloocv.hpp"
#include "geocv/spde.hpp"

namespace geocv {

inline constexpr const char* kSchemaVersion = "1";

namespace csv {

// RFC-4180-style field splitting; quoted fields may contain commas and
// doubled quotes.
inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') { field += '"'; ++i; }
        else quoted = false;
      } else field += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_number(const std::string& s, size_t row, const std::string& col) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw error("csv: non-numeric or non-finite value '" + s + "' at row " +
                std::to_string(row) + ", column '" + col + "'");
  }
}

}  // namespace csv

struct LoadOptions {
  std::string x_col = "x";
  std::string y_col = "y";
  std::vector<std::string> columns;  // data columns to keep; empty = all
  bool scale_coords = true;
  std::string add_ones;  // name of an appended all-ones column, if non-empty
};

inline Dataset load_dataset(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw error("load_dataset: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw error("load_dataset: empty file");
  std::vector<std::string> header = csv::split_line(line);
  auto col_index = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw error("load_dataset: missing column '" + name + "'");
  };
  int xi = col_index(opts.x_col);
  int yi = col_index(opts.y_col);
  std::vector<int> keep;
  std::vector<std::string> keep_names;
  if (opts.columns.empty()) {
    for (size_t i = 0; i < header.size(); ++i)
      if (static_cast<int>(i) != xi && static_cast<int>(i) != yi) {
        keep.push_back(static_cast<int>(i));
        keep_names.push_back(header[i]);
      }
  } else {
    for (const auto& c : opts.columns) {
      keep.push_back(col_index(c));
      keep_names.push_back(c);
    }
  }

  Dataset d;
  std::vector<std::vector<double>> data(keep.size());
  size_t row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = csv::split_line(line);
    if (f.size() != header.size())
      throw error("load_dataset: row " + std::to_string(row) + " has " +
                  std::to_string(f.size()) + " fields, expected " + std::to_string(header.size()));
    d.coords.push_back({csv::parse_number(f[xi], row, opts.x_col),
                        csv::parse_number(f[yi], row, opts.y_col)});
    for (size_t k = 0; k < keep.size(); ++k)
      data[k].push_back(csv::parse_number(f[keep[k]], row, keep_names[k]));
    ++row;
  }
  if (d.coords.empty()) throw error("load_dataset: no data rows");
  for (size_t k = 0; k < keep.size(); ++k) {
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(data[k].data(), data[k].size());
    d.col_names.push_back(keep_names[k]);
    d.cols.push_back(v);
  }
  if (opts.scale_coords && d.coords.size() > 1) {
    size_t n = d.coords.size();
    double mx = 0, my = 0;
    for (const auto& p : d.coords) { mx += p.x; my += p.y; }
    mx /= n; my /= n;
    double sx = 0, sy = 0;
    for (const auto& p : d.coords) { sx += (p.x - mx) * (p.x - mx); sy += (p.y - my) * (p.y - my); }
    sx = std::sqrt(sx / (n - 1));
    sy = std::sqrt(sy / (n - 1));
    if (sx > 0 && sy > 0) {
      d.center = {mx, my};
      d.scale = {sx, sy};
      for (auto& p : d.coords) p = {(p.x - mx) / sx, (p.y - my) / sy};
    }
  }
  if (!opts.add_ones.empty() && !d.has_column(opts.add_ones))
    d.add_column(opts.add_ones, Eigen::VectorXd::Ones(d.coords.size()));
  d.validate();
  return d;
}

struct Polygon {
  std::vector<std::vector<Point2>> rings;
};

// Well-known-text POLYGON((x y, ...), (x y, ...)).
inline Polygon parse_wkt_polygon(const std::string& text) {
  size_t pos = 0;
  auto skip_ws = [&] { while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos; };
  auto expect = [&](const std::string& tok) {
    skip_ws();
    if (text.compare(pos, tok.size(), tok) != 0)
      throw error("polygon: expected '" + tok + "' at offset " + std::to_string(pos));
    pos += tok.size();
  };
  auto number = [&]() {
    skip_ws();
    size_t end = pos;
    while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) ||
                                 text[end] == '-' || text[end] == '+' || text[end] == '.' ||
                                 text[end] == 'e' || text[end] == 'E'))
      ++end;
    if (end == pos) throw error("polygon: expected number at offset " + std::to_string(pos));
    double v = std::stod(text.substr(pos, end - pos));
    pos = end;
    return v;
  };
  expect("POLYGON");
  expect("(");
  Polygon poly;
  while (true) {
    expect("(");
    std::vector<Point2> ring;
    while (true) {
      double x = number();
      double y = number();
      ring.push_back({x, y});
      skip_ws();
      if (pos < text.size() && text[pos] == ',') { ++pos; continue; }
      break;
    }
    expect(")");
    if (ring.size() < 4 || dist(ring.front(), ring.back()) > 1e-12)
      throw error("polygon: ring not closed");
    poly.rings.push_back(std::move(ring));
    skip_ws();
    if (pos < text.size() && text[pos] == ',') { ++pos; continue; }
    break;
  }
  expect(")");
  return poly;
}

inline Polygon load_polygon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("load_polygon: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_wkt_polygon(ss.str());
}

// Apply the dataset's recorded standardization to polygon coordinates.
inline Polygon transform_polygon(const Polygon& poly, const Point2& center, const Point2& scale) {
  Polygon out;
  for (const auto& ring : poly.rings) {
    std::vector<Point2> r;
    for (const auto& p : ring)
      r.push_back({(p.x - center.x) / scale.x, (p.y - center.y) / scale.y});
    out.rings.push_back(std::move(r));
  }
  return out;
}

struct SynthTruth {
  std::vector<double> beta;
  SpdeParams params{0.0, 0.0};
  double noise_sd = 0.0;
  Mesh mesh;
  Eigen::VectorXd u_field;         // latent field at mesh vertices
  Eigen::VectorXd u_at_locations;  // projected to the data locations
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int n = 100;
  SpdeParams params{0.0, 0.0};
  std::vector<double> beta{0.0};  // first entry multiplies the intercept
  double noise_sd = 1.0;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  double mesh_edge = 0.0;  // 0 = range/3, clamped to the domain size
};

// Uniform locations, GMRF field sampled by factorized-precision solve,
// response = X beta + A u + noise. Columns: resp, cov1..cov_{p-1}.
inline Dataset synth_dataset(const SynthConfig& cfg, SynthTruth* truth = nullptr) {
  if (cfg.n < 3) throw error("synth_dataset: need n >= 3");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ux(cfg.xmin, cfg.xmax), uy(cfg.ymin, cfg.ymax);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset d;
  for (int i = 0; i < cfg.n; ++i) d.coords.push_back({ux(rng), uy(rng)});

  double span = std::max(cfg.xmax - cfg.xmin, cfg.ymax - cfg.ymin);
  double edge = cfg.mesh_edge > 0 ? cfg.mesh_edge
                                  : std::min(spde_summaries(cfg.params).range / 3.0, span / 4.0);
  edge = std::max(edge, span / 40.0);
  std::vector<Point2> seed_pts = {{cfg.xmin, cfg.ymin}, {cfg.xmax, cfg.ymin},
                                  {cfg.xmax, cfg.ymax}, {cfg.xmin, cfg.ymax}};
  for (const auto& p : d.coords) seed_pts.push_back(p);
  Mesh mesh = build_mesh(seed_pts, edge, 2.0 * edge, edge / 10.0, 0.3 * span);
  FemMatrices fem = fem_matrices(mesh);
  SpMat q = assemble_precision(fem, cfg.params);
  detail::Factor f(q);
  if (f.info() != Eigen::Success || f.vectorD().minCoeff() <= 0)
    throw error("synth_dataset: precision not SPD");
  int nv = static_cast<int>(mesh.vertices.size());
  Eigen::VectorXd z(nv);
  for (int i = 0; i < nv; ++i) z[i] = gauss(rng);
  // u = P^-1 L^-T D^-1/2 z has covariance Q^-1
  Eigen::VectorXd w = f.vectorD().array().rsqrt() * z.array();
  Eigen::VectorXd v = f.matrixU().solve(w);
  Eigen::VectorXd u = f.permutationPinv() * v;

  Projector proj = make_projector(mesh, d.coords);
  Eigen::VectorXd u_loc = proj.A * u;

  int p = static_cast<int>(cfg.beta.size());
  Eigen::MatrixXd X(cfg.n, p);
  X.col(0).setOnes();
  for (int j = 1; j < p; ++j)
    for (int i = 0; i < cfg.n; ++i) X(i, j) = gauss(rng);
  Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(cfg.beta.data(), p);
  Eigen::VectorXd resp = X * beta + u_loc;
  for (int i = 0; i < cfg.n; ++i) resp[i] += cfg.noise_sd * gauss(rng);

  d.add_column("resp", resp);
  for (int j = 1; j < p; ++j) d.add_column("cov" + std::to_string(j), X.col(j));
  d.validate();

  if (truth) {
    truth->beta = cfg.beta;
    truth->params = cfg.params;
    truth->noise_sd = cfg.noise_sd;
    truth->mesh = mesh;
    truth->u_field = u;
    truth->u_at_locations = u_loc;
  }
  return d;
}

inline void save_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("save_dataset_csv: cannot write '" + path + "'");
  out << "x,y";
  for (const auto& c : d.col_names) out << "," << c;
  out << "\n";
  for (size_t i = 0; i < d.n(); ++i) {
    out << fmt_full(d.coords[i].x) << "," << fmt_full(d.coords[i].y);
    for (const auto& col : d.cols) out << "," << fmt_full(col[i]);
    out << "\n";
  }
}

// ---- result serialization: stable-order delimited text ----

namespace detail {

inline void check_schema(std::istream& in, const std::string& kind) {
  std::string line;
  if (!std::getline(in, line)) throw error("load: empty file");
  std::string expect = std::string("# geocv-schema ") + kSchemaVersion + " " + kind;
  if (line != expect)
    throw error("load: schema mismatch: got '" + line + "', expected '" + expect + "'");
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write '" + path + "'");
  return out;
}

}  // namespace detail

inline void save_fit(const FitResult& fit, const std::string& path) {
  std::ofstream out = detail::open_out(path);
  out << "# geocv-schema " << kSchemaVersion << " fit\n";
  out << "formula," << print_formula(fit.spec) << "\n";
  out << "family," << family_name(fit.spec.family) << "\n";
  out << "log_marginal," << fmt_full(fit.log_marginal) << "\n";
  out << "range," << fmt_full(fit.range) << "\n";
  out << "marginal_sd," << fmt_full(fit.marginal_sd) << "\n";
  out << "warning," << fit.warning << "\n";
  for (size_t i = 0; i < fit.theta_names.size(); ++i)
    out << "theta," << fit.theta_names[i] << "," << fmt_full(fit.theta_hat[i]) << "\n";
  for (size_t i = 0; i < fit.beta.size(); ++i)
    out << "beta," << fit.beta_names[i] << "," << fmt_full(fit.beta[i].mean) << ","
        << fmt_full(fit.beta[i].sd) << "\n";
  for (size_t i = 0; i < fit.u.size(); ++i)
    out << "u," << i << "," << fmt_full(fit.u[i].mean) << "," << fmt_full(fit.u[i].sd) << "\n";
  for (size_t i = 0; i < fit.linear_predictor.size(); ++i)
    out << "lp," << i << "," << fmt_full(fit.linear_predictor[i].mean) << ","
        << fmt_full(fit.linear_predictor[i].sd) << "\n";
  for (size_t i = 0; i < fit.fitted.size(); ++i)
    out << "fitted," << i << "," << fmt_full(fit.fitted[i].mean) << ","
        << fmt_full(fit.fitted[i].sd) << "\n";
  for (const auto& s : fit.hyper_slices)
    for (size_t g = 0; g < s.value.size(); ++g)
      out << "slice," << s.name << "," << fmt_full(s.value[g]) << "," << fmt_full(s.log_post[g])
          << "\n";
}

inline FitResult load_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("load_fit: cannot open '" + path + "'");
  detail::check_schema(in, "fit");
  FitResult fit;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = csv::split_line(line);
    const std::string& tag = f[0];
    if (tag == "formula") fit.spec = parse_formula(f[1]);
    else if (tag == "family") fit.spec.family = parse_family(f[1]);
    else if (tag == "log_marginal") fit.log_marginal = std::stod(f[1]);
    else if (tag == "range") fit.range = std::stod(f[1]);
    else if (tag == "marginal_sd") fit.marginal_sd = std::stod(f[1]);
    else if (tag == "warning") fit.warning = f[1];
    else if (tag == "theta") {
      fit.theta_names.push_back(f[1]);
      fit.theta_hat.push_back(std::stod(f[2]));
    } else if (tag == "beta") {
      fit.beta_names.push_back(f[1]);
      fit.beta.push_back({std::stod(f[2]), std::stod(f[3])});
    } else if (tag == "u") {
      fit.u.push_back({std::stod(f[2]), std::stod(f[3])});
    } else if (tag == "lp") {
      fit.linear_predictor.push_back({std::stod(f[2]), std::stod(f[3])});
    } else if (tag == "fitted") {
      fit.fitted.push_back({std::stod(f[2]), std::stod(f[3])});
    } else if (tag == "slice") {
      if (fit.hyper_slices.empty() || fit.hyper_slices.back().name != f[1])
        fit.hyper_slices.push_back({f[1], {}, {}});
      fit.hyper_slices.back().value.push_back(std::stod(f[2]));
      fit.hyper_slices.back().log_post.push_back(std::stod(f[3]));
    } else {
      throw error("load_fit: unknown tag '" + tag + "'");
    }
  }
  return fit;
}

inline void save_sloo(const SlooResult& res, const std::string& path) {
  std::ofstream out = detail::open_out(path);
  out << "# geocv-schema " << kSchemaVersion << " sloo\n";
  out << "rad," << fmt_full(res.rad) << "\n";
  out << "seed," << res.seed << "\n";
  out << "labels";
  for (const auto& m : res.metrics) out << "," << m.label;
  out << "\n";
  out << "warm_theta";
  for (double v : res.warm_theta_flat) out << "," << fmt_full(v);
  out << "\n";
  for (size_t k = 0; k < res.iterations.size(); ++k) {
    const auto& it = res.iterations[k];
    out << "iteration," << k << "," << it.holdout << "," << fmt_full(it.coord.x) << ","
        << fmt_full(it.coord.y) << "," << fmt_full(it.y_obs) << "," << it.removed;
    for (size_t mi = 0; mi < it.pred.size(); ++mi)
      out << "," << (it.ok[mi] ? 1 : 0) << "," << fmt_full(it.pred[mi].mean) << ","
          << fmt_full(it.pred[mi].sd);
    out << "\n";
  }
  for (const auto& m : res.metrics)
    out << "metric," << m.label << "," << fmt_full(m.mae.mean) << "," << fmt_full(m.mae.lo) << ","
        << fmt_full(m.mae.hi) << "," << fmt_full(m.rmse.mean) << "," << fmt_full(m.rmse.lo) << ","
        << fmt_full(m.rmse.hi) << "," << m.failures << "\n";
}

inline SlooResult load_sloo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("load_sloo: cannot open '" + path + "'");
  detail::check_schema(in, "sloo");
  SlooResult res;
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = csv::split_line(line);
    const std::string& tag = f[0];
    if (tag == "rad") res.rad = std::stod(f[1]);
    else if (tag == "seed") res.seed = std::stoull(f[1]);
    else if (tag == "labels") labels.assign(f.begin() + 1, f.end());
    else if (tag == "warm_theta") {
      for (size_t i = 1; i < f.size(); ++i)
        if (!f[i].empty()) res.warm_theta_flat.push_back(std::stod(f[i]));
    } else if (tag == "iteration") {
      SlooIteration it;
      it.holdout = std::stoi(f[2]);
      it.coord = {std::stod(f[3]), std::stod(f[4])};
      it.y_obs = std::stod(f[5]);
      it.removed = std::stoi(f[6]);
      for (size_t i = 7; i + 3 <= f.size(); i += 3) {
        it.ok.push_back(f[i] == "1");
        it.pred.push_back({std::stod(f[i + 1]), std::stod(f[i + 2])});
        it.messages.push_back("");
      }
      res.iterations.push_back(std::move(it));
    } else if (tag == "metric") {
      ModelMetrics m;
      m.label = f[1];
      m.mae = {std::stod(f[2]), std::stod(f[3]), std::stod(f[4])};
      m.rmse = {std::stod(f[5]), std::stod(f[6]), std::stod(f[7])};
      m.failures = std::stoi(f[8]);
      res.metrics.push_back(m);
    } else {
      throw error("load_sloo: unknown tag '" + tag + "'");
    }
  }
  return res;
}

inline void save_calibration(const CalibrationReport& rep, const std::string& path) {
  std::ofstream out = detail::open_out(path);
  out << "# geocv-schema " << kSchemaVersion << " calibration\n";
  out << "variant," << (rep.variant == PitVariant::plugin ? "plugin" : "loo") << "\n";
  out << "ks," << fmt_full(rep.ks_statistic) << "\n";
  for (size_t i = 0; i < rep.pit.size(); ++i)
    out << "row," << fmt_full(rep.pit[i]) << "," << fmt_full(rep.obs_pred[i].observed) << ","
        << fmt_full(rep.obs_pred[i].predicted) << "," << fmt_full(rep.obs_pred[i].sd) << "\n";
}

inline CalibrationReport load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("load_calibration: cannot open '" + path + "'");
  detail::check_schema(in, "calibration");
  CalibrationReport rep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = csv::split_line(line);
    if (f[0] == "variant") rep.variant = f[1] == "loo" ? PitVariant::loo : PitVariant::plugin;
    else if (f[0] == "ks") rep.ks_statistic = std::stod(f[1]);
    else if (f[0] == "row") {
      rep.pit.push_back(std::stod(f[1]));
      rep.obs_pred.push_back({std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
    } else throw error("load_calibration: unknown tag '" + f[0] + "'");
  }
  return rep;
}

// ---- flat key-value config with one section level ----

struct RunConfig {
  std::map<std::string, std::string> values;  // "section.key" -> value

  static RunConfig parse(std::istream& in) {
    RunConfig cfg;
    std::string line, section;
    while (std::getline(in, line)) {
      size_t h = line.find('#');
      if (h != std::string::npos) line = line.substr(0, h);
      auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      size_t eq = line.find('=');
      if (eq == std::string::npos) throw error("config: expected key = value in '" + line + "'");
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      std::string full = section.empty() ? key : section + "." + key;
      if (cfg.values.count(full)) throw error("config: duplicate key '" + full + "'");
      cfg.values[full] = val;
    }
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("config: cannot open '" + path + "'");
    return parse(in);
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string get(const std::string& key, const std::string& def = "") const {
    auto it = values.find(key);
    return it == values.end() ? def : it->second;
  }

  std::string require(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw error("config: missing key '" + key + "'");
    return it->second;
  }

  double get_num(const std::string& key, double def) const {
    auto it = values.find(key);
    return it == values.end() ? def : std::stod(it->second);
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = values.find(key);
    if (it == values.end()) return out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
      size_t a = tok.find_first_not_of(" \t");
      size_t b = tok.find_last_not_of(" \t");
      if (a != std::string::npos) out.push_back(tok.substr(a, b - a + 1));
    }
    return out;
  }
};

}  // namespace geocv
