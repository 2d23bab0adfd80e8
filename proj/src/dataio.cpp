#include "stgarch/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "stgarch/krige.hpp"
#include "stgarch/simulate.hpp"

namespace stgarch {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return in;
}

}  // namespace

Panel ingest_panel_streams(std::istream& returns, std::istream& locations) {
  const auto ret_rows = read_csv(returns);
  if (ret_rows.size() < 2 || ret_rows.front().size() < 2) {
    throw std::runtime_error("returns file: need a header row and at least one data row");
  }
  const auto& header = ret_rows.front();
  const std::size_t n_entities = header.size() - 1;

  const auto loc_rows = read_csv(locations);
  std::map<std::string, Location> loc_by_entity;
  for (std::size_t i = 0; i < loc_rows.size(); ++i) {
    const auto& row = loc_rows[i];
    if (row.size() != 3) {
      throw std::runtime_error("locations file: row " + std::to_string(i + 1) +
                               " does not have 3 columns");
    }
    const auto x = parse_double(row[1]);
    const auto y = parse_double(row[2]);
    if (i == 0 && (!x || !y)) continue;  // header row
    if (!x || !y) {
      throw std::runtime_error("locations file: non-numeric coordinate at row " +
                               std::to_string(i + 1));
    }
    loc_by_entity[row[0]] = Location{*x, *y};
  }

  Panel panel;
  for (std::size_t j = 1; j <= n_entities; ++j) {
    const std::string& entity = header[j];
    auto it = loc_by_entity.find(entity);
    if (it == loc_by_entity.end()) {
      throw std::runtime_error("entity '" + entity + "' present in returns but not in locations");
    }
    panel.labels.push_back(entity);
    panel.locations.push_back(it->second);
  }

  const std::size_t T = ret_rows.size() - 1;
  panel.values.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n_entities));
  std::string prev_date;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& row = ret_rows[t + 1];
    if (row.size() != header.size()) {
      throw std::runtime_error("returns file: row " + std::to_string(t + 2) +
                               " has " + std::to_string(row.size()) + " cells, expected " +
                               std::to_string(header.size()));
    }
    if (t > 0 && row[0] <= prev_date) {
      throw std::runtime_error("returns file: dates not strictly increasing at row " +
                               std::to_string(t + 2) + " ('" + row[0] + "' after '" + prev_date +
                               "')");
    }
    prev_date = row[0];
    for (std::size_t j = 1; j <= n_entities; ++j) {
      const auto v = parse_double(row[j]);
      if (!v) {
        throw std::runtime_error("returns file: non-numeric cell at row " + std::to_string(t + 2) +
                                 ", column " + std::to_string(j + 1));
      }
      panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j - 1)) = *v;
    }
  }
  panel.check();
  return panel;
}

Panel ingest_panel(const std::string& returns_path, const std::string& locations_path) {
  auto r = open_or_throw(returns_path);
  auto l = open_or_throw(locations_path);
  return ingest_panel_streams(r, l);
}

FeatureTable read_features_stream(std::istream& in) {
  const auto rows = read_csv(in);
  if (rows.size() < 2 || rows.front().size() < 2) {
    throw std::runtime_error("features file: need a header row and at least one data row");
  }
  FeatureTable table;
  for (std::size_t j = 1; j < rows.front().size(); ++j) {
    table.feature_names.push_back(rows.front()[j]);
  }
  const std::size_t n = rows.size() - 1;
  const std::size_t F = table.feature_names.size();
  table.features.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(F));
  table.missing.assign(n, std::vector<bool>(F, false));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = rows[i + 1];
    if (row.size() != F + 1) {
      throw std::runtime_error("features file: row " + std::to_string(i + 2) +
                               " has the wrong number of cells");
    }
    table.entities.push_back(row[0]);
    for (std::size_t j = 0; j < F; ++j) {
      const auto v = parse_double(row[j + 1]);
      if (v) {
        table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
      } else if (row[j + 1].empty()) {
        table.missing[i][j] = true;
      } else {
        throw std::runtime_error("features file: non-numeric cell at row " +
                                 std::to_string(i + 2) + ", column " + std::to_string(j + 2));
      }
    }
  }
  return table;
}

FeatureTable read_features(const std::string& path) {
  auto in = open_or_throw(path);
  return read_features_stream(in);
}

FeatureTable preprocess_features(const FeatureTable& table, double max_missing_fraction) {
  const auto n = static_cast<std::size_t>(table.features.rows());
  const auto F = static_cast<std::size_t>(table.features.cols());
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < F; ++j) {
    std::size_t miss = 0;
    for (std::size_t i = 0; i < n; ++i) miss += table.missing[i][j];
    if (static_cast<double>(miss) / static_cast<double>(n) < max_missing_fraction) keep.push_back(j);
  }

  FeatureTable out;
  out.entities = table.entities;
  out.preprocessed = true;
  out.features.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(keep.size()));
  out.missing.assign(n, std::vector<bool>(keep.size(), false));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t j = keep[k];
    out.feature_names.push_back(table.feature_names[j]);
    double sum = 0.0, sq = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (table.missing[i][j]) continue;
      const double v = table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      sum += v;
      sq += v * v;
      ++cnt;
    }
    const double mean = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
    double var = cnt > 1 ? (sq - static_cast<double>(cnt) * mean * mean) / static_cast<double>(cnt)
                         : 0.0;
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (table.missing[i][j]) {
        out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 0.0;  // imputed
        out.missing[i][k] = true;
      } else {
        const double v = table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (v - mean) / sd;
      }
    }
  }
  return out;
}

ProxySpace build_proxy_space(const FeatureTable& table,
                             const std::pair<std::string, std::string>& feature_pair) {
  auto col_of = [&](const std::string& name) {
    const auto it = std::find(table.feature_names.begin(), table.feature_names.end(), name);
    if (it == table.feature_names.end()) {
      throw std::invalid_argument("build_proxy_space: unknown feature '" + name + "'");
    }
    return static_cast<Eigen::Index>(it - table.feature_names.begin());
  };
  const Eigen::VectorXd f1 = table.features.col(col_of(feature_pair.first));
  const Eigen::VectorXd f2 = table.features.col(col_of(feature_pair.second));
  auto variance = [](const Eigen::VectorXd& v) {
    return (v.array() - v.mean()).square().sum() / std::max<double>(1.0, v.size() - 1);
  };
  if (variance(f1) <= 0.0 || variance(f2) <= 0.0) {
    throw std::invalid_argument("build_proxy_space: zero variance in feature pair (" +
                                feature_pair.first + ", " + feature_pair.second + ")");
  }
  if (variance(f1 - f2) <= 0.0) {
    throw std::invalid_argument("build_proxy_space: degenerate pair, features are duplicates (" +
                                feature_pair.first + ", " + feature_pair.second + ")");
  }

  ProxySpace space;
  space.feature_pair = feature_pair;
  const double min1 = f1.minCoeff(), max1 = f1.maxCoeff();
  const double min2 = f2.minCoeff(), max2 = f2.maxCoeff();
  space.scale_x = max1 - min1;
  space.offset_x = min1;
  space.scale_y = max2 - min2;
  space.offset_y = min2;
  for (Eigen::Index i = 0; i < f1.size(); ++i) {
    space.locations.push_back({(f1[i] - min1) / space.scale_x, (f2[i] - min2) / space.scale_y});
  }
  return space;
}

std::vector<std::pair<std::string, std::string>> enumerate_feature_pairs(
    const FeatureTable& table) {
  std::vector<std::string> names = table.feature_names;
  std::sort(names.begin(), names.end());
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      pairs.emplace_back(names[i], names[j]);
    }
  }
  return pairs;
}

std::vector<int> assign_folds(const std::vector<std::string>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("assign_folds: need k >= 2");
  if (static_cast<int>(labels.size()) < k) {
    throw std::invalid_argument("assign_folds: fewer entities than folds");
  }
  // canonical order: sorted labels; the shuffle depends only on (seed, labels)
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  std::vector<std::size_t> shuffled = order;
  std::mt19937_64 rng(seed);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(shuffled[i - 1], shuffled[j]);
  }
  std::vector<int> fold(labels.size(), -1);
  for (std::size_t pos = 0; pos < shuffled.size(); ++pos) {
    fold[shuffled[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return fold;
}

namespace {

Panel subset_panel(const Panel& panel, const std::vector<Eigen::Index>& cols) {
  Panel sub;
  sub.values.resize(panel.T(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    sub.values.col(static_cast<Eigen::Index>(k)) = panel.values.col(cols[k]);
    sub.locations.push_back(panel.locations[static_cast<std::size_t>(cols[k])]);
    if (!panel.labels.empty()) sub.labels.push_back(panel.labels[static_cast<std::size_t>(cols[k])]);
  }
  return sub;
}

double mean_sigma4_of(const Panel& panel, const std::vector<LocalFit>& fits) {
  double acc = 0.0;
  std::size_t n = 0;
  for (Eigen::Index u = 0; u < panel.m(); ++u) {
    std::vector<double> series(static_cast<std::size_t>(panel.T()));
    Eigen::VectorXd::Map(series.data(), panel.T()) = panel.values.col(u);
    const auto sigma2 = volatility_filter(fits[static_cast<std::size_t>(u)].estimate, series);
    for (double s2 : sigma2) {
      acc += s2 * s2;
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

}  // namespace

CVReport run_cross_validation(const Panel& panel, int k, const CVConfig& config) {
  panel.check();
  std::vector<std::string> labels = panel.labels;
  if (labels.empty()) {
    for (Eigen::Index u = 0; u < panel.m(); ++u) labels.push_back("entity" + std::to_string(u));
  }
  CVReport report;
  report.fold_of_entity = assign_folds(labels, k, config.seed);
  report.fold_rmse.assign(static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());

  const int p = config.order.p;
  const Eigen::Index T = panel.T();
  report.predicted_vol.setConstant(T - p, panel.m(), std::numeric_limits<double>::quiet_NaN());

  double pooled_sq = 0.0, base_sq = 0.0;
  std::size_t pooled_n = 0;
  std::vector<double> fold_means;

  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train_cols, test_cols;
    for (Eigen::Index u = 0; u < panel.m(); ++u) {
      (report.fold_of_entity[static_cast<std::size_t>(u)] == f ? test_cols : train_cols)
          .push_back(u);
    }
    if (test_cols.empty()) continue;
    try {
      const Panel train = subset_panel(panel, train_cols);
      KernelSpec kernel;
      kernel.family = config.kernel;
      kernel.bandwidth = config.bandwidth > 0.0
                             ? config.bandwidth
                             : std::pow(static_cast<double>(train.m()), -0.25);

      const SurfaceFit train_fit =
          fit_surface(train, train.locations, kernel, config.order, config.opt);
      std::vector<Eigen::Index> keep;
      for (Eigen::Index u = 0; u < train.m(); ++u) {
        if (train_fit.errors[static_cast<std::size_t>(u)].empty() &&
            train_fit.fits[static_cast<std::size_t>(u)].converged) {
          keep.push_back(u);
        }
      }
      if (keep.size() < 3) throw std::runtime_error("fewer than 3 converged training fits");
      Panel kept = subset_panel(train, keep);
      std::vector<LocalFit> kept_fits;
      for (Eigen::Index u : keep) kept_fits.push_back(train_fit.fits[static_cast<std::size_t>(u)]);
      const ResidualPanel res = extract_residuals(kept, kept_fits);

      CovarianceModel zeta_model;
      if (config.map_eta_to_zeta) {
        const auto eta_fit = fit_covariance_mle(res, ResidualField::eta, config.cov_family);
        zeta_model = zeta_model_from_eta(eta_fit.model, mean_sigma4_of(kept, kept_fits));
      } else {
        zeta_model = fit_covariance_mle(res, config.cov_field, config.cov_family).model;
      }
      if (zeta_model.nugget <= 0.0) zeta_model.nugget = 1e-8 * zeta_model.sill;

      // constant baseline: mean absolute return over the training panel
      const double base_pred = panel.values(Eigen::all, train_cols).array().abs().mean();

      double fold_sq = 0.0;
      std::size_t fold_n = 0;
      for (Eigen::Index col : test_cols) {
        const Location target = panel.locations[static_cast<std::size_t>(col)];
        const LocalFit target_fit = fit_local(train, target, kernel, config.order, config.opt);
        const KrigingSystem system = kriging_weights(res.locations, target, zeta_model);
        const VolatilityPrediction pred =
            predict_squared_process(target, target_fit.estimate, res, system);
        for (Eigen::Index t = 0; t < res.T(); ++t) {
          const double z = panel.values(t + p, col);
          double err;
          if (config.score == CVScore::vol_vs_absreturn) {
            // folded-Gaussian mean: the point forecast of |Z_t| is
            // sqrt(2/pi) * predicted conditional volatility
            constexpr double kFoldedMean = 0.79788456080286541;  // sqrt(2/pi)
            err = kFoldedMean * pred.vol[static_cast<std::size_t>(t)] - std::abs(z);
            report.predicted_vol(t, col) = pred.vol[static_cast<std::size_t>(t)];
            base_sq += (base_pred - std::abs(z)) * (base_pred - std::abs(z));
          } else {
            err = pred.sigma2[static_cast<std::size_t>(t)] - z * z;
            report.predicted_vol(t, col) = pred.sigma2[static_cast<std::size_t>(t)];
            base_sq += (base_pred * base_pred - z * z) * (base_pred * base_pred - z * z);
          }
          fold_sq += err * err;
          ++fold_n;
        }
      }
      report.fold_rmse[static_cast<std::size_t>(f)] =
          std::sqrt(fold_sq / static_cast<double>(fold_n));
      fold_means.push_back(report.fold_rmse[static_cast<std::size_t>(f)]);
      pooled_sq += fold_sq;
      pooled_n += fold_n;
    } catch (const std::exception& e) {
      report.partial = true;
      report.errors.push_back("fold " + std::to_string(f) + ": " + e.what());
    }
  }

  if (pooled_n == 0) {
    report.partial = true;
    report.pooled_rmse = std::numeric_limits<double>::quiet_NaN();
    report.baseline_rmse = std::numeric_limits<double>::quiet_NaN();
  } else {
    report.pooled_rmse = std::sqrt(pooled_sq / static_cast<double>(pooled_n));
    report.baseline_rmse = std::sqrt(base_sq / static_cast<double>(pooled_n));
  }
  report.mean_fold_rmse =
      fold_means.empty()
          ? std::numeric_limits<double>::quiet_NaN()
          : std::accumulate(fold_means.begin(), fold_means.end(), 0.0) /
                static_cast<double>(fold_means.size());
  return report;
}

SearchReport proxy_space_search(const FeatureTable& table, const Panel& returns,
                                const CVConfig& config) {
  if (!table.preprocessed) {
    throw std::invalid_argument("proxy_space_search: feature table must be preprocessed");
  }
  if (returns.labels.empty()) {
    throw std::invalid_argument("proxy_space_search: returns panel must carry entity labels");
  }
  // match entity rows to panel columns once
  std::vector<Eigen::Index> row_of_col;
  for (const auto& label : returns.labels) {
    const auto it = std::find(table.entities.begin(), table.entities.end(), label);
    if (it == table.entities.end()) {
      throw std::invalid_argument("proxy_space_search: entity '" + label +
                                  "' missing from the feature table");
    }
    row_of_col.push_back(static_cast<Eigen::Index>(it - table.entities.begin()));
  }

  const auto pairs = enumerate_feature_pairs(table);
  SearchReport report;
  report.fold_of_entity = assign_folds(returns.labels, config.folds, config.seed);
  report.ranking.resize(pairs.size());

  const auto n_pairs = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n_pairs; ++i) {
    SearchEntry entry;
    entry.feature_pair = pairs[static_cast<std::size_t>(i)];
    try {
      const ProxySpace space = build_proxy_space(table, entry.feature_pair);
      Panel embedded = returns;
      for (std::size_t u = 0; u < row_of_col.size(); ++u) {
        embedded.locations[u] = space.locations[static_cast<std::size_t>(row_of_col[u])];
      }
      const CVReport cv = run_cross_validation(embedded, config.folds, config);
      if (!std::isfinite(cv.pooled_rmse)) throw std::runtime_error("all folds failed");
      entry.pooled_rmse = cv.pooled_rmse;
    } catch (const std::exception& e) {
      entry.error = e.what();
      entry.pooled_rmse = std::numeric_limits<double>::infinity();
    }
    report.ranking[static_cast<std::size_t>(i)] = std::move(entry);
  }

  std::sort(report.ranking.begin(), report.ranking.end(),
            [](const SearchEntry& a, const SearchEntry& b) {
              if (a.error.empty() != b.error.empty()) return a.error.empty();
              if (a.pooled_rmse != b.pooled_rmse) return a.pooled_rmse < b.pooled_rmse;
              return a.feature_pair < b.feature_pair;
            });
  return report;
}

std::optional<std::string> ConfigFile::get(const std::string& section,
                                           const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const auto v = get(section, key);
  return v ? std::strtod(v->c_str(), nullptr) : fallback;
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  const auto v = get(section, key);
  return v ? std::atoi(v->c_str()) : fallback;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  const auto v = get(section, key);
  return v ? *v : fallback;
}

ConfigFile ConfigFile::parse(std::istream& in) {
  ConfigFile config;
  std::string line, section;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      config.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: expected key=value, got '" + line + "'");
    }
    config.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return config;
}

ConfigFile ConfigFile::load(const std::string& path) {
  auto in = open_or_throw(path);
  return parse(in);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace stgarch
