// Command-line front end: mesh / fit / sloo / report / synth subcommands
// driving the geocv library from a flat config file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "geocv/diagnostics.hpp"
#include "geocv/io.hpp"
#include "geocv/mesh.hpp"
#include "geocv/model.hpp"
#include "geocv/sloocv.hpp"
#include "geocv/viz.hpp"

namespace fs = std::filesystem;
using namespace geocv;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_contents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Pipeline {
  RunConfig cfg;
  std::string config_path;
  Dataset data;
  Mesh mesh;
  FemMatrices fem;
  Projector proj;
  PriorConfig priors;
  std::vector<ModelSpec> models;
  std::vector<std::string> labels;
  std::string out_dir;
  std::vector<std::string> produced;

  void load(const std::string& cfg_path, bool need_mesh) {
    config_path = cfg_path;
    cfg = RunConfig::load(cfg_path);
    out_dir = cfg.get("output.dir", "out");

    LoadOptions lo;
    lo.x_col = cfg.get("data.x", "x");
    lo.y_col = cfg.get("data.y", "y");
    lo.scale_coords = cfg.get("data.scale", "true") != "false";
    lo.add_ones = cfg.get("data.add_ones", "");
    data = load_dataset(cfg.require("data.path"), lo);
    std::cerr << "loaded " << data.n() << " observations from " << cfg.require("data.path")
              << "\n";

    std::vector<std::string> formulas = cfg.get_list("model.formulas");
    std::vector<std::string> families = cfg.get_list("model.families");
    for (size_t i = 0; i < formulas.size(); ++i) {
      ModelSpec spec = parse_formula(formulas[i]);
      std::string fam = families.empty() ? "normal"
                        : families.size() == 1 ? families[0]
                                               : families.at(i);
      spec.family = parse_family(fam);
      models.push_back(spec);
      labels.push_back(cfg.has("model.labels") ? cfg.get_list("model.labels").at(i)
                                               : "model" + std::to_string(i + 1));
    }

    if (need_mesh) {
      double ext = cfg.get("mesh.extension", "auto") == "auto"
                       ? -1.0
                       : cfg.get_num("mesh.extension", -1.0);
      mesh = build_mesh(data.coords, cfg.get_num("mesh.max_edge_inner", 0.2),
                        cfg.get_num("mesh.max_edge_outer", 0.5),
                        cfg.get_num("mesh.cutoff", 0.1), ext);
      std::cerr << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
                << " triangles\n";
      fem = fem_matrices(mesh);
      proj = make_projector(mesh, data.coords);

      double diam = hull_diameter(convex_hull(data.coords));
      priors = default_priors(diam);
      priors.beta_prec = cfg.get_num("priors.beta_prec", priors.beta_prec);
      priors.sd_log_tau = cfg.get_num("priors.sd_log_tau", priors.sd_log_tau);
      priors.sd_log_kappa = cfg.get_num("priors.sd_log_kappa", priors.sd_log_kappa);
      priors.mean_log_noise_prec =
          cfg.get_num("priors.mean_log_noise_prec", priors.mean_log_noise_prec);
      priors.sd_log_noise_prec = cfg.get_num("priors.sd_log_noise_prec", priors.sd_log_noise_prec);
    }
  }

  FitConfig fit_config() const {
    FitConfig fc;
    fc.priors = priors;
    fc.max_evals = static_cast<int>(cfg.get_num("fit.max_evals", 500));
    fc.tol = cfg.get_num("fit.tol", 1e-6);
    return fc;
  }

  void write_manifest(const std::string& command, std::uint64_t seed) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir + "/manifest.txt");
    out << "command," << command << "\n";
    out << "config," << config_path << "\n";
    out << "config_hash," << fnv1a(file_contents(config_path)) << "\n";
    out << "input," << cfg.get("data.path", "") << "\n";
    out << "seed," << seed << "\n";
    for (const auto& f : produced) out << "file," << f << "\n";
  }
};

int resolve_threads(int flag_threads) {
  if (flag_threads > 0) return flag_threads;
  if (const char* env = std::getenv("GEOCV_THREADS")) return std::max(1, std::atoi(env));
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_mesh(const std::string& cfg_path) {
  Pipeline p;
  p.load(cfg_path, true);
  PlotBundle bundle = plot_mesh(p.mesh, p.data.coords);
  auto files = write_bundle(bundle, p.out_dir, "mesh");
  p.produced.insert(p.produced.end(), files.begin(), files.end());
  p.write_manifest("mesh", 0);
  std::cerr << "wrote " << files.size() << " files to " << p.out_dir << "\n";
  return 0;
}

int cmd_fit(const std::string& cfg_path) {
  Pipeline p;
  p.load(cfg_path, true);
  if (p.models.empty()) throw error("fit: no formulas in config");
  for (size_t mi = 0; mi < p.models.size(); ++mi) {
    const ModelSpec& spec = p.models[mi];
    const std::string& label = p.labels[mi];
    std::cerr << "fitting " << label << ": " << print_formula(spec) << " ["
              << family_name(spec.family) << "]\n";
    Assembly a = assemble(p.data, spec, p.mesh, p.proj);
    FitConfig fc = p.fit_config();
    FitResult fr = spec.family == Family::normal ? fit(a, p.fem, spec, fc)
                                                 : fit_bernoulli(a, p.fem, spec, fc);
    if (!fr.warning.empty()) std::cerr << "warning: " << fr.warning << "\n";
    std::string fit_path = p.out_dir + "/fit_" + label + ".txt";
    fs::create_directories(p.out_dir);
    save_fit(fr, fit_path);
    p.produced.push_back(fit_path);

    auto files = write_bundle(plot_model_summaries(fr, p.priors), p.out_dir, label);
    p.produced.insert(p.produced.end(), files.begin(), files.end());

    if (spec.family == Family::normal) {
      PitVariant variant =
          p.cfg.get("diagnostics.pit", "plugin") == "loo" ? PitVariant::loo : PitVariant::plugin;
      CalibrationReport rep = calibration_report(fr, a, variant);
      std::string cal_path = p.out_dir + "/calibration_" + label + ".txt";
      save_calibration(rep, cal_path);
      p.produced.push_back(cal_path);
      auto rfiles = write_bundle(
          plot_residuals(rep, p.cfg.get_num("diagnostics.binwidth", 0.1)), p.out_dir, label);
      p.produced.insert(p.produced.end(), rfiles.begin(), rfiles.end());
    }
    if (spec.spatial) {
      int nx = static_cast<int>(p.cfg.get_num("field.grid_nx", 50));
      int ny = static_cast<int>(p.cfg.get_num("field.grid_ny", 50));
      Raster raster = project_field(fr, p.mesh, nx, ny);
      Polygon poly;
      bool has_poly = p.cfg.has("data.polygon");
      if (has_poly)
        poly = transform_polygon(load_polygon(p.cfg.require("data.polygon")), p.data.center,
                                 p.data.scale);
      auto ffiles = write_bundle(
          plot_field(raster, has_poly ? &poly : nullptr, &p.mesh, p.data.coords), p.out_dir,
          label);
      p.produced.insert(p.produced.end(), ffiles.begin(), ffiles.end());
    }
  }
  p.write_manifest("fit", 0);
  return 0;
}

int cmd_sloo(const std::string& cfg_path, int flag_threads) {
  Pipeline p;
  p.load(cfg_path, true);
  if (p.models.empty()) throw error("sloo: no formulas in config");

  SlooConfig sc;
  sc.ss = static_cast<int>(p.cfg.get_num("sloo.ss", 20));
  sc.alpha = p.cfg.get_num("sloo.alpha", 0.05);
  sc.seed = static_cast<std::uint64_t>(p.cfg.get_num("sloo.seed", 0));
  sc.models = p.models;
  sc.labels = p.labels;
  sc.threads = resolve_threads(flag_threads);
  sc.priors = p.priors;
  FitConfig fc = p.fit_config();
  sc.max_evals = fc.max_evals;
  sc.tol = fc.tol;

  std::string rad_str = p.cfg.get("sloo.rad", "auto");
  if (rad_str == "auto") {
    // fitted nominal range of the first spatial model drives the radius
    double range = -1;
    for (const auto& spec : p.models) {
      if (!spec.spatial) continue;
      Assembly a = assemble(p.data, spec, p.mesh, p.proj);
      FitConfig fc2 = fc;
      fc2.compute_summaries = false;
      fc2.compute_slices = false;
      FitResult fr = spec.family == Family::normal ? fit(a, p.fem, spec, fc2)
                                                   : fit_bernoulli(a, p.fem, spec, fc2);
      range = fr.range;
      break;
    }
    if (range <= 0) throw error("sloo: rad=auto needs at least one spatial model");
    sc.rad = default_radius(range, p.data.coords);
    std::cerr << "auto radius: fitted range " << fmt_g(range) << " -> rad " << fmt_g(sc.rad)
              << "\n";
  } else {
    sc.rad = std::stod(rad_str);
  }

  std::cerr << "sloo: ss=" << sc.ss << " rad=" << fmt_g(sc.rad) << " seed=" << sc.seed
            << " threads=" << sc.threads << "\n";
  SlooResult res = run_sloo(p.data, p.mesh, p.fem, sc);
  for (const auto& m : res.metrics)
    std::cerr << m.label << ": " << metric_annotation(m)
              << (m.failures ? " (" + std::to_string(m.failures) + " failed)" : "") << "\n";

  fs::create_directories(p.out_dir);
  std::string res_path = p.out_dir + "/sloo.txt";
  save_sloo(res, res_path);
  p.produced.push_back(res_path);
  auto files = write_bundle(plot_sloo(res, p.data.coords, sc.rad), p.out_dir, "sloo");
  p.produced.insert(p.produced.end(), files.begin(), files.end());
  p.write_manifest("sloo", sc.seed);
  return 0;
}

int cmd_report(const std::string& cfg_path, const std::vector<std::string>& fit_files,
               const std::string& sloo_file, const std::string& cal_file) {
  Pipeline p;
  p.load(cfg_path, false);
  PriorConfig priors;
  priors.beta_prec = p.cfg.get_num("priors.beta_prec", priors.beta_prec);
  for (const auto& f : fit_files) {
    FitResult fr = load_fit(f);
    std::string label = fs::path(f).stem().string();
    auto files = write_bundle(plot_model_summaries(fr, priors), p.out_dir, label);
    p.produced.insert(p.produced.end(), files.begin(), files.end());
  }
  if (!sloo_file.empty()) {
    SlooResult res = load_sloo(sloo_file);
    auto files = write_bundle(plot_sloo(res, p.data.coords, res.rad), p.out_dir, "sloo");
    p.produced.insert(p.produced.end(), files.begin(), files.end());
  }
  if (!cal_file.empty()) {
    CalibrationReport rep = load_calibration(cal_file);
    auto files = write_bundle(plot_residuals(rep, p.cfg.get_num("diagnostics.binwidth", 0.1)),
                              p.out_dir, "calibration");
    p.produced.insert(p.produced.end(), files.begin(), files.end());
  }
  p.write_manifest("report", 0);
  return 0;
}

int cmd_synth(const std::string& cfg_path) {
  RunConfig cfg = RunConfig::load(cfg_path);
  SynthConfig sc;
  sc.seed = static_cast<std::uint64_t>(cfg.get_num("synth.seed", 0));
  sc.n = static_cast<int>(cfg.get_num("synth.n", 100));
  double range = cfg.get_num("synth.range", 1.0);
  double msd = cfg.get_num("synth.marginal_sd", 1.0);
  double kappa = std::sqrt(8.0) / range;
  double tau = 1.0 / (std::sqrt(4.0 * M_PI) * kappa * msd);
  sc.params = SpdeParams(std::log(tau), std::log(kappa));
  sc.noise_sd = cfg.get_num("synth.noise_sd", 1.0);
  sc.beta.clear();
  for (const auto& b : cfg.get_list("synth.beta")) sc.beta.push_back(std::stod(b));
  if (sc.beta.empty()) sc.beta = {0.0};
  sc.xmin = cfg.get_num("synth.xmin", 0.0);
  sc.xmax = cfg.get_num("synth.xmax", 1.0);
  sc.ymin = cfg.get_num("synth.ymin", 0.0);
  sc.ymax = cfg.get_num("synth.ymax", 1.0);

  SynthTruth truth;
  Dataset d = synth_dataset(sc, &truth);
  std::string out_dir = cfg.get("output.dir", "out");
  fs::create_directories(out_dir);
  std::string data_path = out_dir + "/synth.csv";
  save_dataset_csv(d, data_path);
  std::ofstream tf(out_dir + "/synth_truth.txt");
  tf << "# geocv-schema " << kSchemaVersion << " synth_truth\n";
  tf << "seed," << sc.seed << "\n";
  tf << "log_tau," << fmt_full(sc.params.log_tau) << "\n";
  tf << "log_kappa," << fmt_full(sc.params.log_kappa) << "\n";
  tf << "noise_sd," << fmt_full(sc.noise_sd) << "\n";
  tf << "beta";
  for (double b : sc.beta) tf << "," << fmt_full(b);
  tf << "\n";
  std::cerr << "wrote " << data_path << " (n=" << d.n() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial regression and buffered leave-one-out cross-validation"};
  app.require_subcommand(1);

  std::string cfg_path;
  int threads = 0;
  std::vector<std::string> fit_files;
  std::string sloo_file, cal_file;

  auto* mesh_cmd = app.add_subcommand("mesh", "build the mesh and plot it");
  mesh_cmd->add_option("--config", cfg_path, "config file")->required();

  auto* fit_cmd = app.add_subcommand("fit", "fit each model; write results and plots");
  fit_cmd->add_option("--config", cfg_path, "config file")->required();

  auto* sloo_cmd = app.add_subcommand("sloo", "spatial leave-one-out cross-validation");
  sloo_cmd->add_option("--config", cfg_path, "config file")->required();
  sloo_cmd->add_option("--threads", threads, "worker threads (default: cores, or GEOCV_THREADS)");

  auto* report_cmd = app.add_subcommand("report", "regenerate plots from serialized results");
  report_cmd->add_option("--config", cfg_path, "config file")->required();
  report_cmd->add_option("--fit", fit_files, "serialized fit result(s)");
  report_cmd->add_option("--sloo", sloo_file, "serialized sloo result");
  report_cmd->add_option("--calibration", cal_file, "serialized calibration report");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset");
  synth_cmd->add_option("--config", cfg_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (mesh_cmd->parsed()) return cmd_mesh(cfg_path);
    if (fit_cmd->parsed()) return cmd_fit(cfg_path);
    if (sloo_cmd->parsed()) return cmd_sloo(cfg_path, threads);
    if (report_cmd->parsed()) return cmd_report(cfg_path, fit_files, sloo_file, cal_file);
    if (synth_cmd->parsed()) return cmd_synth(cfg_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
