#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "geocv/io.hpp"
#include "geocv/sloocv.hpp"
#include "helpers.hpp"

using namespace geocv;

#ifndef GEOCV_DATA_DIR
#define GEOCV_DATA_DIR "data"
#endif

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("csv field splitting handles quotes and crlf") {
  REQUIRE(csv::split_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(csv::split_line("a,\"b,c\",d") == std::vector<std::string>{"a", "b,c", "d"});
  REQUIRE(csv::split_line("\"he said \"\"hi\"\"\",x") ==
          std::vector<std::string>{"he said \"hi\"", "x"});
  REQUIRE(csv::split_line("a,b\r") == std::vector<std::string>{"a", "b"});
  REQUIRE(csv::split_line("a,,b") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("csv number parsing reports row and column") {
  REQUIRE(csv::parse_number("1.5e3", 0, "v") == 1500.0);
  REQUIRE_THROWS_WITH(csv::parse_number("abc", 7, "elev"),
                      Catch::Matchers::ContainsSubstring("row 7") &&
                          Catch::Matchers::ContainsSubstring("elev"));
  REQUIRE_THROWS_AS(csv::parse_number("nan", 1, "v"), error);
  REQUIRE_THROWS_AS(csv::parse_number("1.5x", 1, "v"), error);
}

TEST_CASE("soil dataset loads with scaled coordinates") {
  Dataset d = load_dataset(std::string(GEOCV_DATA_DIR) + "/meuse.csv");
  REQUIRE(d.n() == 155);
  REQUIRE(d.has_column("cadmium"));
  REQUIRE(d.has_column("elev"));
  REQUIRE(d.has_column("dist"));
  REQUIRE(d.has_column("om"));
  // standardized coordinates: mean 0, sample sd 1
  double mx = 0, my = 0;
  for (const auto& p : d.coords) { mx += p.x; my += p.y; }
  mx /= d.n(); my /= d.n();
  REQUIRE_THAT(mx, Catch::Matchers::WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(my, Catch::Matchers::WithinAbs(0.0, 1e-9));
  double sx = 0, sy = 0;
  for (const auto& p : d.coords) { sx += p.x * p.x; sy += p.y * p.y; }
  REQUIRE_THAT(std::sqrt(sx / (d.n() - 1)), Catch::Matchers::WithinAbs(1.0, 1e-9));
  REQUIRE_THAT(std::sqrt(sy / (d.n() - 1)), Catch::Matchers::WithinAbs(1.0, 1e-9));
  REQUIRE(d.scale.x > 0);

  // raw load undoes the standardization exactly
  LoadOptions raw;
  raw.scale_coords = false;
  Dataset r = load_dataset(std::string(GEOCV_DATA_DIR) + "/meuse.csv", raw);
  for (size_t i = 0; i < d.n(); ++i) {
    REQUIRE_THAT(d.coords[i].x * d.scale.x + d.center.x,
                 Catch::Matchers::WithinRel(r.coords[i].x, 1e-12));
    REQUIRE_THAT(d.coords[i].y * d.scale.y + d.center.y,
                 Catch::Matchers::WithinRel(r.coords[i].y, 1e-12));
  }
}

TEST_CASE("load_dataset selects columns and appends a ones column") {
  std::string path = tmp_path("geocv_io_sel.csv");
  write_file(path, "x,y,a,b\n1,2,3,4\n5,6,7,8\n");
  LoadOptions opts;
  opts.columns = {"b"};
  opts.add_ones = "y.intercept";
  opts.scale_coords = false;
  Dataset d = load_dataset(path, opts);
  REQUIRE(d.col_names == std::vector<std::string>{"b", "y.intercept"});
  REQUIRE(d.column("b")[1] == 8.0);
  REQUIRE(d.column("y.intercept").sum() == 2.0);
  std::filesystem::remove(path);
}

TEST_CASE("load_dataset guards malformed input") {
  std::string path = tmp_path("geocv_io_bad.csv");
  write_file(path, "x,y,v\n1,2\n");
  REQUIRE_THROWS_WITH(load_dataset(path), Catch::Matchers::ContainsSubstring("row 1"));
  write_file(path, "x,y,v\n");
  REQUIRE_THROWS_WITH(load_dataset(path), Catch::Matchers::ContainsSubstring("no data rows"));
  write_file(path, "x,y,v\n1,2,NA\n");
  REQUIRE_THROWS_AS(load_dataset(path), error);
  write_file(path, "x,y,v\n1,2,3\n");
  LoadOptions opts;
  opts.columns = {"w"};
  REQUIRE_THROWS_WITH(load_dataset(path, opts), Catch::Matchers::ContainsSubstring("'w'"));
  std::filesystem::remove(path);
  REQUIRE_THROWS_AS(load_dataset(path), error);
}

TEST_CASE("single-row load skips coordinate scaling") {
  std::string path = tmp_path("geocv_io_one.csv");
  write_file(path, "x,y,v\n10,20,3\n");
  Dataset d = load_dataset(path);
  REQUIRE(d.coords[0].x == 10.0);
  REQUIRE(d.coords[0].y == 20.0);
  REQUIRE(d.scale.x == 1.0);
  std::filesystem::remove(path);
}

TEST_CASE("wkt polygon parsing and transformation") {
  Polygon p = parse_wkt_polygon("POLYGON((0 0, 4 0, 4 2, 0 0))");
  REQUIRE(p.rings.size() == 1);
  REQUIRE(p.rings[0].size() == 4);
  REQUIRE(p.rings[0][2].x == 4.0);
  REQUIRE(p.rings[0][2].y == 2.0);

  Polygon holed = parse_wkt_polygon(
      "POLYGON ((0 0, 10 0, 10 10, 0 0), (1 1, 2 1, 2 2, 1 1))");
  REQUIRE(holed.rings.size() == 2);

  REQUIRE_THROWS_WITH(parse_wkt_polygon("LINESTRING(0 0, 1 1)"),
                      Catch::Matchers::ContainsSubstring("POLYGON"));
  REQUIRE_THROWS_WITH(parse_wkt_polygon("POLYGON((0 0, 1 0, 1 1, 0 1))"),
                      Catch::Matchers::ContainsSubstring("not closed"));

  Polygon t = transform_polygon(p, {2.0, 1.0}, {2.0, 0.5});
  REQUIRE_THAT(t.rings[0][1].x, Catch::Matchers::WithinAbs(1.0, 1e-15));   // (4-2)/2
  REQUIRE_THAT(t.rings[0][2].y, Catch::Matchers::WithinAbs(2.0, 1e-15));   // (2-1)/0.5
  REQUIRE_THAT(t.rings[0][0].x, Catch::Matchers::WithinAbs(-1.0, 1e-15));  // (0-2)/2
}

TEST_CASE("river polygon file is valid after dataset alignment") {
  Dataset d = load_dataset(std::string(GEOCV_DATA_DIR) + "/meuse.csv");
  Polygon p = load_polygon(std::string(GEOCV_DATA_DIR) + "/meuse_riv.wkt");
  REQUIRE(p.rings.size() == 1);
  REQUIRE(p.rings[0].size() >= 4);
  Polygon t = transform_polygon(p, d.center, d.scale);
  double span = 0;
  for (const auto& q : t.rings[0]) span = std::max(span, std::abs(q.x) + std::abs(q.y));
  REQUIRE(span < 20.0);  // aligned polygon lives on the standardized scale
}

TEST_CASE("synthetic data generator is seed deterministic") {
  SynthConfig sc;
  sc.seed = 11;
  sc.n = 25;
  sc.beta = {1.0, -2.0};
  SynthTruth t1, t2;
  Dataset a = synth_dataset(sc, &t1);
  Dataset b = synth_dataset(sc, &t2);
  REQUIRE(a.n() == 25);
  for (size_t i = 0; i < a.n(); ++i) {
    REQUIRE(a.coords[i].x == b.coords[i].x);
    REQUIRE(a.column("resp")[i] == b.column("resp")[i]);
    REQUIRE(a.column("cov1")[i] == b.column("cov1")[i]);
  }
  REQUIRE((t1.u_field - t2.u_field).cwiseAbs().maxCoeff() == 0.0);
  sc.seed = 12;
  Dataset c = synth_dataset(sc);
  REQUIRE(a.column("resp")[0] != c.column("resp")[0]);
}

TEST_CASE("synthetic response decomposes into its parts") {
  SynthConfig sc;
  sc.seed = 21;
  sc.n = 30;
  sc.beta = {2.0, 0.7};
  sc.noise_sd = 0.0;  // deterministic given the field
  SynthTruth truth;
  Dataset d = synth_dataset(sc, &truth);
  for (size_t i = 0; i < d.n(); ++i) {
    double expect = 2.0 + 0.7 * d.column("cov1")[i] + truth.u_at_locations[i];
    REQUIRE_THAT(d.column("resp")[i], Catch::Matchers::WithinAbs(expect, 1e-12));
  }
  // the projected field agrees with direct interpolation
  Projector proj = make_projector(truth.mesh, d.coords);
  Eigen::VectorXd direct = proj.A * truth.u_field;
  REQUIRE((direct - truth.u_at_locations).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthetic field variance is near the nominal marginal variance") {
  SynthConfig sc;
  sc.seed = 31;
  sc.n = 3;
  double kappa = 6.0;
  sc.params = SpdeParams(std::log(1.0 / (std::sqrt(4 * M_PI) * kappa)), std::log(kappa));
  sc.xmax = 4.0;
  sc.ymax = 4.0;
  sc.mesh_edge = 0.12;
  SynthTruth truth;
  synth_dataset(sc, &truth);
  REQUIRE(truth.u_field.size() > 1500);
  // interior vertices only, away from the boundary-effect zone
  double s = 0;
  int k = 0;
  for (int i = 0; i < truth.u_field.size(); ++i) {
    const Point2& p = truth.mesh.vertices[i];
    if (p.x > 1.0 && p.x < 3.0 && p.y > 1.0 && p.y < 3.0) {
      s += truth.u_field[i] * truth.u_field[i];
      ++k;
    }
  }
  REQUIRE(k > 200);
  REQUIRE_THAT(s / k, Catch::Matchers::WithinRel(1.0, 0.25));
}

TEST_CASE("dataset csv round trip") {
  SynthConfig sc;
  sc.seed = 41;
  sc.n = 12;
  sc.beta = {0.5, 1.5};
  Dataset d = synth_dataset(sc);
  std::string path = tmp_path("geocv_io_round.csv");
  save_dataset_csv(d, path);
  LoadOptions opts;
  opts.scale_coords = false;
  Dataset r = load_dataset(path, opts);
  REQUIRE(r.col_names == d.col_names);
  for (size_t i = 0; i < d.n(); ++i) {
    REQUIRE(r.coords[i].x == d.coords[i].x);
    REQUIRE(r.coords[i].y == d.coords[i].y);
    REQUIRE(r.column("resp")[i] == d.column("resp")[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("fit result serialization round trip") {
  SynthConfig sc;
  sc.seed = 51;
  sc.n = 30;
  sc.beta = {0.5, 1.0};
  sc.noise_sd = 0.3;
  SynthTruth truth;
  Dataset d = synth_dataset(sc, &truth);
  ModelSpec spec = parse_formula("resp ~ cov1 + spatial");
  Projector proj = make_projector(truth.mesh, d.coords);
  Assembly a = assemble(d, spec, truth.mesh, proj);
  FitConfig cfg;
  cfg.priors = default_priors(hull_diameter(convex_hull(d.coords)));
  FitResult fit0 = fit(a, fem_matrices(truth.mesh), spec, cfg);
  fit0.warning = "check me";
  std::string path = tmp_path("geocv_io_fit.txt");
  save_fit(fit0, path);
  FitResult r = load_fit(path);
  REQUIRE(print_formula(r.spec) == print_formula(fit0.spec));
  REQUIRE(r.spec.family == Family::normal);
  REQUIRE(r.log_marginal == fit0.log_marginal);
  REQUIRE(r.range == fit0.range);
  REQUIRE(r.marginal_sd == fit0.marginal_sd);
  REQUIRE(r.warning == "check me");
  REQUIRE(r.theta_names == fit0.theta_names);
  REQUIRE(r.theta_hat == fit0.theta_hat);
  REQUIRE(r.beta_names == fit0.beta_names);
  REQUIRE(r.beta.size() == fit0.beta.size());
  for (size_t i = 0; i < r.beta.size(); ++i) {
    REQUIRE(r.beta[i].mean == fit0.beta[i].mean);
    REQUIRE(r.beta[i].sd == fit0.beta[i].sd);
  }
  REQUIRE(r.u.size() == fit0.u.size());
  for (size_t i = 0; i < r.u.size(); ++i) REQUIRE(r.u[i].mean == fit0.u[i].mean);
  REQUIRE(r.linear_predictor.size() == fit0.linear_predictor.size());
  REQUIRE(r.fitted.size() == fit0.fitted.size());
  REQUIRE(r.hyper_slices.size() == fit0.hyper_slices.size());
  for (size_t s = 0; s < r.hyper_slices.size(); ++s) {
    REQUIRE(r.hyper_slices[s].name == fit0.hyper_slices[s].name);
    REQUIRE(r.hyper_slices[s].value == fit0.hyper_slices[s].value);
    REQUIRE(r.hyper_slices[s].log_post == fit0.hyper_slices[s].log_post);
  }
  std::filesystem::remove(path);
}

TEST_CASE("sloo result serialization round trip") {
  SynthConfig sc;
  sc.seed = 61;
  sc.n = 30;
  sc.beta = {0.5, 1.0};
  sc.noise_sd = 0.3;
  SynthTruth truth;
  Dataset d = synth_dataset(sc, &truth);
  SlooConfig cfg;
  cfg.ss = 6;
  cfg.rad = 0.1;
  cfg.seed = 199;
  cfg.models = {parse_formula("resp ~ cov1 + spatial"), parse_formula("resp ~ cov1")};
  cfg.labels = {"full", "plain"};
  cfg.priors = default_priors(hull_diameter(convex_hull(d.coords)));
  SlooResult res = run_sloo(d, truth.mesh, fem_matrices(truth.mesh), cfg);
  std::string path = tmp_path("geocv_io_sloo.txt");
  save_sloo(res, path);
  SlooResult r = load_sloo(path);
  REQUIRE(r.rad == res.rad);
  REQUIRE(r.seed == res.seed);
  REQUIRE(r.warm_theta_flat == res.warm_theta_flat);
  REQUIRE(r.iterations.size() == res.iterations.size());
  for (size_t k = 0; k < r.iterations.size(); ++k) {
    REQUIRE(r.iterations[k].holdout == res.iterations[k].holdout);
    REQUIRE(r.iterations[k].y_obs == res.iterations[k].y_obs);
    REQUIRE(r.iterations[k].removed == res.iterations[k].removed);
    REQUIRE(r.iterations[k].pred.size() == 2);
    for (size_t mi = 0; mi < 2; ++mi) {
      REQUIRE(r.iterations[k].ok[mi] == res.iterations[k].ok[mi]);
      REQUIRE(r.iterations[k].pred[mi].mean == res.iterations[k].pred[mi].mean);
      REQUIRE(r.iterations[k].pred[mi].sd == res.iterations[k].pred[mi].sd);
    }
  }
  REQUIRE(r.metrics.size() == 2);
  for (size_t mi = 0; mi < 2; ++mi) {
    REQUIRE(r.metrics[mi].label == res.metrics[mi].label);
    REQUIRE(r.metrics[mi].mae.mean == res.metrics[mi].mae.mean);
    REQUIRE(r.metrics[mi].mae.lo == res.metrics[mi].mae.lo);
    REQUIRE(r.metrics[mi].mae.hi == res.metrics[mi].mae.hi);
    REQUIRE(r.metrics[mi].rmse.mean == res.metrics[mi].rmse.mean);
    REQUIRE(r.metrics[mi].failures == res.metrics[mi].failures);
  }
  std::filesystem::remove(path);
}

TEST_CASE("calibration serialization round trip and schema guard") {
  CalibrationReport rep;
  rep.variant = PitVariant::loo;
  rep.pit = {0.25, 0.5, 0.9};
  rep.ks_statistic = ks_uniform(rep.pit);
  rep.obs_pred = {{1, 1.1, 0.2}, {2, 1.9, 0.3}, {3, 3.3, 0.4}};
  std::string path = tmp_path("geocv_io_cal.txt");
  save_calibration(rep, path);
  CalibrationReport r = load_calibration(path);
  REQUIRE(r.variant == PitVariant::loo);
  REQUIRE(r.ks_statistic == rep.ks_statistic);
  REQUIRE(r.pit == rep.pit);
  REQUIRE(r.obs_pred.size() == 3);
  REQUIRE(r.obs_pred[2].predicted == 3.3);

  // wrong kind for the same file
  REQUIRE_THROWS_WITH(load_fit(path), Catch::Matchers::ContainsSubstring("schema"));
  write_file(path, "# geocv-schema 99 calibration\nks,0.1\n");
  REQUIRE_THROWS_WITH(load_calibration(path), Catch::Matchers::ContainsSubstring("schema"));
  std::filesystem::remove(path);
}

TEST_CASE("run config parses sections, comments, and lists") {
  std::istringstream in(
      "# leading comment\n"
      "top = 1\n"
      "[data]\n"
      "path = data/meuse.csv  # trailing comment\n"
      "scale = true\n"
      "[model]\n"
      "formulas = a ~ b + spatial ; a ~ b\n"
      "labels = full ; plain\n"
      "[sloo]\n"
      "ss = 20\n"
      "rad = 1.5\n");
  RunConfig cfg = RunConfig::parse(in);
  REQUIRE(cfg.get("top") == "1");
  REQUIRE(cfg.require("data.path") == "data/meuse.csv");
  REQUIRE(cfg.get("data.scale") == "true");
  REQUIRE(cfg.get_list("model.formulas") ==
          std::vector<std::string>{"a ~ b + spatial", "a ~ b"});
  REQUIRE(cfg.get_list("model.labels") == std::vector<std::string>{"full", "plain"});
  REQUIRE(cfg.get_num("sloo.rad", 0.0) == 1.5);
  REQUIRE(cfg.get_num("sloo.missing", 7.0) == 7.0);
  REQUIRE(cfg.get("absent", "dflt") == "dflt");
  REQUIRE_THROWS_WITH(cfg.require("absent"), Catch::Matchers::ContainsSubstring("absent"));
  REQUIRE_FALSE(cfg.has("nope"));

  std::istringstream dup("[a]\nk = 1\nk = 2\n");
  REQUIRE_THROWS_WITH(RunConfig::parse(dup), Catch::Matchers::ContainsSubstring("duplicate"));
  std::istringstream bad("[a]\njust a line\n");
  REQUIRE_THROWS_AS(RunConfig::parse(bad), error);
}
