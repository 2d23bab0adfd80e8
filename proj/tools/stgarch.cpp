// Batch front-end: simulation, estimation, prediction, Monte Carlo, and
// cross-validation runs driven by a sectioned key=value config file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "stgarch/covfit.hpp"
#include "stgarch/dataio.hpp"
#include "stgarch/estimate.hpp"
#include "stgarch/experiments.hpp"
#include "stgarch/krige.hpp"
#include "stgarch/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stgarch;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string threads = "auto";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void apply_threads(const std::string& threads) {
#ifdef _OPENMP
  if (threads != "auto") omp_set_num_threads(std::max(1, std::atoi(threads.c_str())));
#else
  (void)threads;
#endif
}

json config_to_json(const ConfigFile& config) {
  json j = json::object();
  for (const auto& [section, kv] : config.sections) {
    json s = json::object();
    for (const auto& [k, v] : kv) s[k] = v;
    j[section.empty() ? "(root)" : section] = s;
  }
  return j;
}

std::vector<int> parse_int_list(const std::string& s, const std::vector<int>& fallback) {
  if (s.empty()) return fallback;
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::atoi(tok.c_str()));
  return out.empty() ? fallback : out;
}

std::vector<double> parse_double_list(const std::string& s, const std::vector<double>& fallback) {
  if (s.empty()) return fallback;
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::strtod(tok.c_str(), nullptr));
  return out.empty() ? fallback : out;
}

GarchOrder order_from(const ConfigFile& c) {
  return GarchOrder{c.get_int("model", "p", 1), c.get_int("model", "q", 1)};
}

KernelFamily kernel_family_from(const std::string& name) {
  if (name == "uniform") return KernelFamily::uniform;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  if (name == "gaussian") return KernelFamily::gaussian;
  throw std::runtime_error("unknown kernel family '" + name + "'");
}

CovarianceFamily covariance_family_from(const std::string& name) {
  const auto f = parse_family(name);
  if (!f) throw std::runtime_error("unknown covariance family '" + name + "'");
  return *f;
}

KernelSpec kernel_from(const ConfigFile& c) {
  KernelSpec k;
  k.family = kernel_family_from(c.get_string("kernel", "family", "uniform"));
  k.bandwidth = c.get_double("kernel", "bandwidth", 0.0);
  return k;
}

OptimizerConfig optimizer_from(const ConfigFile& c, OptimizerConfig opt = {}) {
  opt.tol = c.get_double("optimizer", "tol", opt.tol);
  opt.gtol = c.get_double("optimizer", "gtol", opt.gtol);
  opt.n_starts = c.get_int("optimizer", "n_starts", opt.n_starts);
  opt.max_iter = c.get_int("optimizer", "max_iter", opt.max_iter);
  return opt;
}

CovarianceModel covariance_from(const ConfigFile& c) {
  CovarianceModel m;
  m.family = covariance_family_from(c.get_string("covariance", "family", "exponential"));
  m.sill = c.get_double("covariance", "sill", 1.0);
  m.range = c.get_double("covariance", "range", 0.5);
  m.nugget = c.get_double("covariance", "nugget", 0.0);
  m.smoothness = c.get_double("covariance", "smoothness", 1.5);
  return m;
}

SurfaceConfig surface_from(const ConfigFile& c) {
  SurfaceConfig sc;
  sc.grid = c.get_int("model", "grid", sc.grid);
  sc.degree = c.get_int("model", "degree", sc.degree);
  sc.omega_min = c.get_double("model", "omega_min", sc.omega_min);
  sc.omega_max = c.get_double("model", "omega_max", sc.omega_max);
  sc.alpha_min = c.get_double("model", "alpha_min", sc.alpha_min);
  sc.alpha_max = c.get_double("model", "alpha_max", sc.alpha_max);
  sc.beta_min = c.get_double("model", "beta_min", sc.beta_min);
  sc.beta_max = c.get_double("model", "beta_max", sc.beta_max);
  return sc;
}

double effective_bandwidth(const KernelSpec& k, std::size_t n_train) {
  return k.bandwidth > 0.0 ? k.bandwidth : std::pow(static_cast<double>(n_train), -0.25);
}

std::string entity_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "e%04zu", i);
  return buf;
}

std::string date_name(std::size_t t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "d%06zu", t + 1);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_panel_csv(const fs::path& path, const Panel& panel, const Eigen::MatrixXd& values) {
  auto out = open_out(path);
  out << "date";
  for (const auto& label : panel.labels) out << "," << label;
  out << "\n";
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    out << date_name(static_cast<std::size_t>(t));
    for (Eigen::Index u = 0; u < values.cols(); ++u) out << "," << format_double(values(t, u));
    out << "\n";
  }
}

void write_locations_csv(const fs::path& path, const std::vector<std::string>& labels,
                         const std::vector<Location>& locations) {
  auto out = open_out(path);
  out << "entity,x,y\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels[i] << "," << format_double(locations[i].x) << ","
        << format_double(locations[i].y) << "\n";
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

json fit_to_json(const LocalFit& fit) {
  json j;
  j["x"] = fit.target.x;
  j["y"] = fit.target.y;
  j["omega"] = fit.estimate.omega;
  j["alpha"] = fit.estimate.alpha;
  j["beta"] = fit.estimate.beta;
  j["std_errors"] = fit.std_errors;
  j["neg_loglik"] = fit.neg_loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  return j;
}

// Returns panel without a locations file: entities placed on a line, for
// flows (search) that substitute coordinates afterwards.
Panel read_returns_only(const std::string& returns_path) {
  std::ifstream in(returns_path);
  if (!in) throw std::runtime_error("cannot open file: " + returns_path);
  std::string header;
  std::getline(in, header);
  std::stringstream locs;
  locs << "entity,x,y\n";
  std::stringstream hs(header);
  std::string cell;
  bool first = true;
  std::size_t i = 0;
  while (std::getline(hs, cell, ',')) {
    if (first) {
      first = false;
      continue;
    }
    locs << cell << "," << static_cast<double>(i++) << ",0\n";
  }
  std::ifstream again(returns_path);
  return ingest_panel_streams(again, locs);
}

CVConfig cv_config_from(const ConfigFile& c, const CommonArgs& args) {
  CVConfig cv;
  cv.folds = c.get_int("cv", "folds", cv.folds);
  cv.seed = static_cast<std::uint64_t>(c.get_double("cv", "seed", 1.0));
  if (args.seed_given) cv.seed = args.seed;
  cv.order = order_from(c);
  const KernelSpec k = kernel_from(c);
  cv.kernel = k.family;
  cv.bandwidth = k.bandwidth;
  cv.cov_family = covariance_family_from(c.get_string("covariance", "family", "exponential"));
  cv.cov_field = c.get_string("covariance", "field", "zeta") == "eta" ? ResidualField::eta
                                                                      : ResidualField::zeta;
  cv.map_eta_to_zeta = c.get_int("covariance", "map_eta_to_zeta", 0) != 0;
  cv.score = c.get_string("cv", "score", "vol") == "squared" ? CVScore::squared_vs_squared
                                                             : CVScore::vol_vs_absreturn;
  cv.opt = optimizer_from(c);
  return cv;
}

int cmd_simulate(const ConfigFile& config, const CommonArgs& args) {
  const std::uint64_t seed =
      args.seed_given ? args.seed : static_cast<std::uint64_t>(config.get_double("simulate", "seed", 1.0));
  const int n = config.get_int("simulate", "n_sites", 50);
  const int T = config.get_int("simulate", "T", 300);
  const int burn_in = config.get_int("simulate", "burn_in", 500);
  const GarchOrder order = order_from(config);
  const CovarianceModel model = covariance_from(config);
  const SurfaceConfig sc = surface_from(config);

  std::mt19937_64 rng(split_seed(seed, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Panel panel;
  for (int i = 0; i < n; ++i) {
    panel.locations.push_back({unif(rng), unif(rng)});
    panel.labels.push_back(entity_name(static_cast<std::size_t>(i)));
  }
  const ParameterSurface surface = random_bspline_surface(order, split_seed(seed, 1), sc);
  const FieldSampler sampler(panel.locations, model, split_seed(seed, 2));
  const Eigen::MatrixXd eta = sampler.sample(T + burn_in);
  const Panel sim = simulate_stgarch(surface, eta, panel.locations, burn_in);

  const fs::path out(args.out_dir);
  Panel named = sim;
  named.labels = panel.labels;
  write_panel_csv(out / "returns.csv", named, named.values);
  write_locations_csv(out / "locations.csv", named.labels, named.locations);
  if (named.volatility) write_panel_csv(out / "volatility.csv", named, *named.volatility);

  json report;
  report["config"] = config_to_json(config);
  report["seed"] = seed;
  report["n_sites"] = n;
  report["T"] = T;
  json truth = json::array();
  for (std::size_t i = 0; i < named.locations.size(); ++i) {
    const ParameterPoint p = surface.at(named.locations[i]);
    truth.push_back({{"entity", named.labels[i]},
                     {"omega", p.omega},
                     {"alpha", p.alpha},
                     {"beta", p.beta},
                     {"unconditional_variance", unconditional_variance(p)}});
  }
  report["true_parameters"] = truth;
  write_json(out / "simulate_report.json", report);
  std::cout << "wrote returns.csv, locations.csv, volatility.csv, simulate_report.json to "
            << out.string() << "\n";
  return 0;
}

int cmd_fit(const ConfigFile& config, const CommonArgs& args) {
  const Panel panel = ingest_panel(config.get_string("data", "returns", "returns.csv"),
                                   config.get_string("data", "locations", "locations.csv"));
  const GarchOrder order = order_from(config);
  KernelSpec kernel = kernel_from(config);
  kernel.bandwidth = effective_bandwidth(kernel, panel.locations.size());
  const OptimizerConfig opt = optimizer_from(config);

  const SurfaceFit fit = fit_surface(panel, panel.locations, kernel, order, opt);

  const fs::path out(args.out_dir);
  auto csv = open_out(out / "fits.csv");
  csv << "entity,x,y,omega";
  for (int i = 0; i < order.q; ++i) csv << ",alpha" << (i + 1);
  for (int j = 0; j < order.p; ++j) csv << ",beta" << (j + 1);
  csv << ",neg_loglik,converged\n";
  for (std::size_t u = 0; u < panel.locations.size(); ++u) {
    const LocalFit& f = fit.fits[u];
    csv << panel.labels[u] << "," << format_double(f.target.x) << "," << format_double(f.target.y)
        << "," << format_double(f.estimate.omega);
    for (double a : f.estimate.alpha) csv << "," << format_double(a);
    for (double b : f.estimate.beta) csv << "," << format_double(b);
    csv << "," << format_double(f.neg_loglik) << "," << (f.converged ? 1 : 0) << "\n";
  }

  json report;
  report["config"] = config_to_json(config);
  report["bandwidth"] = kernel.bandwidth;
  report["n_failed"] = fit.n_failed();
  json fits = json::array();
  for (std::size_t u = 0; u < fit.fits.size(); ++u) {
    json j = fit_to_json(fit.fits[u]);
    j["entity"] = panel.labels[u];
    if (!fit.errors[u].empty()) j["error"] = fit.errors[u];
    fits.push_back(j);
  }
  report["fits"] = fits;

  // covariance stage on converged sites
  std::vector<Eigen::Index> keep;
  for (Eigen::Index u = 0; u < panel.m(); ++u) {
    if (fit.errors[static_cast<std::size_t>(u)].empty() &&
        fit.fits[static_cast<std::size_t>(u)].converged) {
      keep.push_back(u);
    }
  }
  if (keep.size() >= 3) {
    Panel sub;
    std::vector<LocalFit> fits_kept;
    sub.values.resize(panel.T(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      sub.values.col(static_cast<Eigen::Index>(k)) = panel.values.col(keep[k]);
      sub.locations.push_back(panel.locations[static_cast<std::size_t>(keep[k])]);
      fits_kept.push_back(fit.fits[static_cast<std::size_t>(keep[k])]);
    }
    try {
      const ResidualPanel res = extract_residuals(sub, fits_kept);
      const auto field = config.get_string("covariance", "field", "zeta") == "eta"
                             ? ResidualField::eta
                             : ResidualField::zeta;
      const auto cov = fit_covariance_mle(
          res, field, covariance_family_from(config.get_string("covariance", "family", "exponential")));
      report["covariance"] = {{"family", family_name(cov.model.family)},
                              {"sill", cov.model.sill},
                              {"range", cov.model.range},
                              {"nugget", cov.model.nugget},
                              {"smoothness", cov.model.smoothness},
                              {"std_errors", cov.std_errors},
                              {"z_scores", cov.z_scores},
                              {"neg_loglik", cov.neg_loglik},
                              {"converged", cov.converged}};
    } catch (const std::exception& e) {
      report["covariance_error"] = e.what();
    }
  }
  write_json(out / "fit_report.json", report);
  std::cout << "fit " << panel.m() << " sites, " << fit.n_failed() << " failures; wrote fits.csv, "
            << "fit_report.json to " << out.string() << "\n";
  return 0;
}

int cmd_predict(const ConfigFile& config, const CommonArgs& args) {
  const Panel panel = ingest_panel(config.get_string("data", "returns", "returns.csv"),
                                   config.get_string("data", "locations", "locations.csv"));
  const GarchOrder order = order_from(config);
  KernelSpec kernel = kernel_from(config);
  kernel.bandwidth = effective_bandwidth(kernel, panel.locations.size());
  const OptimizerConfig opt = optimizer_from(config);

  std::vector<Location> targets;
  std::vector<std::string> target_labels;
  const std::string targets_path = config.get_string("data", "targets", "");
  if (targets_path.empty()) {
    targets = panel.locations;
    target_labels = panel.labels;
  } else {
    std::ifstream in(targets_path);
    if (!in) throw std::runtime_error("cannot open file: " + targets_path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string e, xs, ys;
      std::getline(ss, e, ',');
      std::getline(ss, xs, ',');
      std::getline(ss, ys, ',');
      if (e.empty()) continue;
      target_labels.push_back(e);
      targets.push_back({std::strtod(xs.c_str(), nullptr), std::strtod(ys.c_str(), nullptr)});
    }
  }

  const SurfaceFit train = fit_surface(panel, panel.locations, kernel, order, opt);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index u = 0; u < panel.m(); ++u) {
    if (train.errors[static_cast<std::size_t>(u)].empty() &&
        train.fits[static_cast<std::size_t>(u)].converged) {
      keep.push_back(u);
    }
  }
  if (keep.size() < 3) throw std::runtime_error("fewer than 3 converged local fits");
  Panel sub;
  std::vector<LocalFit> fits_kept;
  sub.values.resize(panel.T(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    sub.values.col(static_cast<Eigen::Index>(k)) = panel.values.col(keep[k]);
    sub.locations.push_back(panel.locations[static_cast<std::size_t>(keep[k])]);
    fits_kept.push_back(train.fits[static_cast<std::size_t>(keep[k])]);
  }
  const ResidualPanel res = extract_residuals(sub, fits_kept);
  const auto field = config.get_string("covariance", "field", "zeta") == "eta"
                         ? ResidualField::eta
                         : ResidualField::zeta;
  const auto cov_family = covariance_family_from(config.get_string("covariance", "family", "exponential"));
  const auto cov = fit_covariance_mle(res, field, cov_family);
  CovarianceModel zeta_model = cov.model;
  if (field == ResidualField::eta) {
    double s4 = 0.0;
    std::size_t cnt = 0;
    for (Eigen::Index u = 0; u < sub.m(); ++u) {
      std::vector<double> series(static_cast<std::size_t>(sub.T()));
      Eigen::VectorXd::Map(series.data(), sub.T()) = sub.values.col(u);
      for (double s2 : volatility_filter(fits_kept[static_cast<std::size_t>(u)].estimate, series)) {
        s4 += s2 * s2;
        ++cnt;
      }
    }
    zeta_model = zeta_model_from_eta(cov.model, s4 / static_cast<double>(cnt));
  }
  if (zeta_model.nugget <= 0.0) zeta_model.nugget = 1e-8 * zeta_model.sill;

  const fs::path out(args.out_dir);
  Eigen::MatrixXd vol(res.T(), static_cast<Eigen::Index>(targets.size()));
  json report;
  report["config"] = config_to_json(config);
  report["covariance"] = {{"family", family_name(zeta_model.family)},
                          {"sill", zeta_model.sill},
                          {"range", zeta_model.range},
                          {"nugget", zeta_model.nugget}};
  json preds = json::array();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const LocalFit f = fit_local(panel, targets[i], kernel, order, opt);
    const KrigingSystem system = kriging_weights(res.locations, targets[i], zeta_model);
    const VolatilityPrediction pred = predict_squared_process(targets[i], f.estimate, res, system);
    for (Eigen::Index t = 0; t < res.T(); ++t) {
      vol(t, static_cast<Eigen::Index>(i)) = pred.vol[static_cast<std::size_t>(t)];
    }
    json j = fit_to_json(f);
    j["entity"] = target_labels[i];
    j["unconditional_variance"] = predict_unconditional(f.estimate);
    j["n_floored"] = pred.n_floored;
    preds.push_back(j);
  }
  report["targets"] = preds;

  auto csv = open_out(out / "predicted_vol.csv");
  csv << "date";
  for (const auto& label : target_labels) csv << "," << label;
  csv << "\n";
  for (Eigen::Index t = 0; t < vol.rows(); ++t) {
    csv << date_name(static_cast<std::size_t>(t + order.p));
    for (Eigen::Index i = 0; i < vol.cols(); ++i) csv << "," << format_double(vol(t, i));
    csv << "\n";
  }
  write_json(out / "predict_report.json", report);
  std::cout << "predicted " << targets.size() << " targets; wrote predicted_vol.csv, "
            << "predict_report.json to " << out.string() << "\n";
  return 0;
}

int cmd_mc(const ConfigFile& config, const CommonArgs& args) {
  MCConfig mc;
  mc.replications = config.get_int("mc", "replications", 20);
  mc.n1 = parse_int_list(config.get_string("mc", "n1", ""), {50, 100});
  mc.n2 = config.get_int("mc", "n2", 50);
  mc.T = parse_int_list(config.get_string("mc", "T", ""), {200, 300});
  mc.seed = static_cast<std::uint64_t>(config.get_double("mc", "seed", 1.0));
  if (args.seed_given) mc.seed = args.seed;
  mc.burn_in = config.get_int("mc", "burn_in", 500);
  mc.fit_covariance = config.get_int("mc", "fit_covariance", 1) != 0;
  mc.model = covariance_from(config);
  mc.surface_config = surface_from(config);
  mc.order = order_from(config);
  const KernelSpec k = kernel_from(config);
  mc.kernel = k.family;
  mc.bandwidth = k.bandwidth;
  mc.opt = optimizer_from(config, mc.opt);

  const MCReport report = run_monte_carlo(mc);

  const fs::path out(args.out_dir);
  auto csv = open_out(out / "mc_cells.csv");
  csv << "n1,T,bias_omega,rmse_omega,bias_alpha,rmse_alpha,bias_beta,rmse_beta,"
         "bias_vol,rmse_vol,mean_theta_hat,n_replications,n_failed,n_targets_excluded\n";
  for (const auto& cell : report.cells) {
    csv << cell.n1 << "," << cell.T << "," << format_double(cell.bias_omega) << ","
        << format_double(cell.rmse_omega) << "," << format_double(cell.bias_alpha) << ","
        << format_double(cell.rmse_alpha) << "," << format_double(cell.bias_beta) << ","
        << format_double(cell.rmse_beta) << "," << format_double(cell.bias_vol) << ","
        << format_double(cell.rmse_vol) << "," << format_double(cell.mean_theta_hat) << ","
        << cell.n_replications << "," << cell.n_failed << "," << cell.n_targets_excluded << "\n";
  }

  json j;
  j["config"] = config_to_json(config);
  j["seed"] = mc.seed;
  json cells = json::array();
  for (const auto& cell : report.cells) {
    cells.push_back({{"n1", cell.n1},
                     {"T", cell.T},
                     {"bias_omega", cell.bias_omega},
                     {"rmse_omega", cell.rmse_omega},
                     {"bias_alpha", cell.bias_alpha},
                     {"rmse_alpha", cell.rmse_alpha},
                     {"bias_beta", cell.bias_beta},
                     {"rmse_beta", cell.rmse_beta},
                     {"bias_vol", cell.bias_vol},
                     {"rmse_vol", cell.rmse_vol},
                     {"mean_theta_hat", cell.mean_theta_hat},
                     {"n_replications", cell.n_replications},
                     {"n_failed", cell.n_failed},
                     {"runtime_seconds", cell.runtime_seconds}});
  }
  j["cells"] = cells;
  write_json(out / "mc_report.json", j);
  std::cout << "ran " << report.cells.size() << " cells; wrote mc_cells.csv, mc_report.json to "
            << out.string() << "\n";
  return 0;
}

int cmd_cv(const ConfigFile& config, const CommonArgs& args) {
  const Panel panel = ingest_panel(config.get_string("data", "returns", "returns.csv"),
                                   config.get_string("data", "locations", "locations.csv"));
  const CVConfig cv = cv_config_from(config, args);
  const CVReport report = run_cross_validation(panel, cv.folds, cv);

  const fs::path out(args.out_dir);
  auto folds = open_out(out / "cv_folds.csv");
  folds << "entity,fold\n";
  for (std::size_t u = 0; u < panel.labels.size(); ++u) {
    folds << panel.labels[u] << "," << report.fold_of_entity[u] << "\n";
  }
  auto scores = open_out(out / "cv_scores.csv");
  scores << "fold,rmse\n";
  for (std::size_t f = 0; f < report.fold_rmse.size(); ++f) {
    scores << f << "," << format_double(report.fold_rmse[f]) << "\n";
  }
  scores << "pooled," << format_double(report.pooled_rmse) << "\n";
  scores << "mean_fold," << format_double(report.mean_fold_rmse) << "\n";
  scores << "baseline," << format_double(report.baseline_rmse) << "\n";

  Panel labeled = panel;
  write_panel_csv(out / "cv_predicted_vol.csv", labeled, report.predicted_vol);

  json j;
  j["config"] = config_to_json(config);
  j["seed"] = cv.seed;
  j["pooled_rmse"] = report.pooled_rmse;
  j["mean_fold_rmse"] = report.mean_fold_rmse;
  j["baseline_rmse"] = report.baseline_rmse;
  j["fold_rmse"] = report.fold_rmse;
  j["partial"] = report.partial;
  j["errors"] = report.errors;
  write_json(out / "cv_report.json", j);
  std::cout << "pooled RMSE " << format_double(report.pooled_rmse) << " vs baseline "
            << format_double(report.baseline_rmse) << "; wrote cv_folds.csv, cv_scores.csv, "
            << "cv_predicted_vol.csv, cv_report.json to " << out.string() << "\n";
  return 0;
}

int cmd_search(const ConfigFile& config, const CommonArgs& args) {
  const Panel panel = read_returns_only(config.get_string("data", "returns", "returns.csv"));
  FeatureTable table = read_features(config.get_string("data", "features", "features.csv"));
  table = preprocess_features(table);
  const CVConfig cv = cv_config_from(config, args);
  const SearchReport report = proxy_space_search(table, panel, cv);

  const fs::path out(args.out_dir);
  auto csv = open_out(out / "search_ranking.csv");
  csv << "rank,feature1,feature2,pooled_rmse,error\n";
  for (std::size_t i = 0; i < report.ranking.size(); ++i) {
    const auto& e = report.ranking[i];
    csv << (i + 1) << "," << e.feature_pair.first << "," << e.feature_pair.second << ","
        << (e.error.empty() ? format_double(e.pooled_rmse) : "") << "," << e.error << "\n";
  }

  json j;
  j["config"] = config_to_json(config);
  j["seed"] = cv.seed;
  j["n_pairs"] = report.ranking.size();
  json ranking = json::array();
  for (const auto& e : report.ranking) {
    json r = {{"feature1", e.feature_pair.first}, {"feature2", e.feature_pair.second}};
    if (e.error.empty()) {
      r["pooled_rmse"] = e.pooled_rmse;
    } else {
      r["error"] = e.error;
    }
    ranking.push_back(r);
  }
  j["ranking"] = ranking;
  write_json(out / "search_report.json", j);
  std::cout << "ranked " << report.ranking.size() << " pairs; wrote search_ranking.csv, "
            << "search_report.json to " << out.string() << "\n";
  return 0;
}

int cmd_approx(const ConfigFile& config, const CommonArgs& args) {
  ApproxConfig ac;
  ac.replications = config.get_int("approx", "replications", ac.replications);
  ac.T = config.get_int("approx", "T", ac.T);
  ac.burn_in = config.get_int("approx", "burn_in", ac.burn_in);
  ac.seed = static_cast<std::uint64_t>(config.get_double("approx", "seed", 7.0));
  if (args.seed_given) ac.seed = args.seed;
  ac.model = covariance_from(config);

  const GarchOrder order = order_from(config);
  const SurfaceConfig sc = surface_from(config);
  const ParameterSurface surface = random_bspline_surface(order, split_seed(ac.seed, 99), sc);
  const Location anchor{config.get_double("approx", "anchor_x", 0.1),
                        config.get_double("approx", "anchor_y", 0.5)};
  const std::vector<double> distances = parse_double_list(
      config.get_string("approx", "distances", ""), {0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8});

  const ApproxReport report = run_approximation_study(surface, anchor, distances, ac);

  const fs::path out(args.out_dir);
  auto csv = open_out(out / "approx_deviation.csv");
  csv << "distance,mean_abs_deviation\n";
  for (std::size_t i = 0; i < report.distances.size(); ++i) {
    csv << format_double(report.distances[i]) << "," << format_double(report.mean_deviation[i])
        << "\n";
  }
  json j;
  j["config"] = config_to_json(config);
  j["seed"] = ac.seed;
  j["slope"] = report.slope;
  j["spearman"] = report.spearman;
  j["distances"] = report.distances;
  j["mean_deviation"] = report.mean_deviation;
  write_json(out / "approx_report.json", j);
  std::cout << "spearman " << format_double(report.spearman) << ", slope "
            << format_double(report.slope) << "; wrote approx_deviation.csv, approx_report.json to "
            << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heterogeneous spatiotemporal GARCH toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string subcmd;
  for (const char* name :
       {"simulate", "fit", "predict", "mc", "cv", "search", "approx-study"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "config file (sectioned key=value)");
    sub->add_option("--seed", args.seed, "override the run seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--threads", args.threads, "worker threads (number or 'auto')");
    sub->callback([&subcmd, name] { subcmd = name; });
  }

  CLI11_PARSE(app, argc, argv);
  apply_threads(args.threads);

  try {
    fs::create_directories(args.out_dir);
    const ConfigFile config =
        args.config_path.empty() ? ConfigFile{} : ConfigFile::load(args.config_path);
    if (subcmd == "simulate") return cmd_simulate(config, args);
    if (subcmd == "fit") return cmd_fit(config, args);
    if (subcmd == "predict") return cmd_predict(config, args);
    if (subcmd == "mc") return cmd_mc(config, args);
    if (subcmd == "cv") return cmd_cv(config, args);
    if (subcmd == "search") return cmd_search(config, args);
    if (subcmd == "approx-study") return cmd_approx(config, args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
