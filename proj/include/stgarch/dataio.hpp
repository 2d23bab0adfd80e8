#ifndef STGARCH_DATAIO_HPP
#define STGARCH_DATAIO_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stgarch/core.hpp"
#include "stgarch/covfit.hpp"
#include "stgarch/estimate.hpp"

namespace stgarch {

/// Returns CSV (header: date, one column per entity) plus locations CSV
/// (entity,x,y) -> Panel with columns matched by entity label. Throws
/// std::runtime_error naming the offending entity or (row, column) cell.
Panel ingest_panel(const std::string& returns_path, const std::string& locations_path);
Panel ingest_panel_streams(std::istream& returns, std::istream& locations);

/// Entity-by-feature matrix with a missing-value mask.
struct FeatureTable {
  std::vector<std::string> entities;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;                    // n x F
  std::vector<std::vector<bool>> missing;      // n x F mask
  bool preprocessed = false;
};

FeatureTable read_features(const std::string& path);
FeatureTable read_features_stream(std::istream& in);

/// Drops features with >= 5% missing raw values, standardises each retained
/// feature to mean 0 / variance 1 over entities, imputes missing entries as 0.
/// Idempotent.
FeatureTable preprocess_features(const FeatureTable& table, double max_missing_fraction = 0.05);

struct ProxySpace {
  std::pair<std::string, std::string> feature_pair;
  std::vector<Location> locations;  // rescaled to [0,1]^2
  // affine maps back to the standardised feature scale: value = scale * coord + offset
  double scale_x = 1.0, offset_x = 0.0;
  double scale_y = 1.0, offset_y = 0.0;
};

/// Embeds entities at (feature1, feature2), rescaled per axis to [0,1].
/// Throws std::invalid_argument for a pair with zero variance in either axis.
ProxySpace build_proxy_space(const FeatureTable& table,
                             const std::pair<std::string, std::string>& feature_pair);

/// All C(F,2) feature pairs in lexicographic order of (name1, name2).
std::vector<std::pair<std::string, std::string>> enumerate_feature_pairs(
    const FeatureTable& table);

enum class CVScore { vol_vs_absreturn, squared_vs_squared };

struct CVConfig {
  int folds = 5;
  std::uint64_t seed = 1;
  GarchOrder order{1, 1};
  KernelFamily kernel = KernelFamily::gaussian;
  double bandwidth = 0.0;  // 0 selects the n_train^{-1/4} rule
  CovarianceFamily cov_family = CovarianceFamily::exponential;
  ResidualField cov_field = ResidualField::zeta;  // field used for the kriging system R
  bool map_eta_to_zeta = false;  // fit on eta, map to the zeta covariance
  CVScore score = CVScore::vol_vs_absreturn;
  OptimizerConfig opt;
};

struct CVReport {
  std::vector<int> fold_of_entity;     // aligned with panel columns
  std::vector<double> fold_rmse;       // per fold; NaN when the fold failed
  double pooled_rmse = 0.0;            // per-observation pooled
  double mean_fold_rmse = 0.0;         // per-fold average, reported alongside
  double baseline_rmse = 0.0;          // constant |return| predictor
  Eigen::MatrixXd predicted_vol;       // T' x m, NaN where unavailable
  bool partial = false;
  std::vector<std::string> errors;
};

/// Seed-keyed fold assignment over sorted entity labels; a pure function of
/// (seed, labels), independent of column order.
std::vector<int> assign_folds(const std::vector<std::string>& labels, int k, std::uint64_t seed);

/// Leave-entities-out cross-validation of the full estimation-kriging
/// pipeline; scores predicted conditional volatility against |Z_t|.
CVReport run_cross_validation(const Panel& panel, int k, const CVConfig& config);

struct SearchEntry {
  std::pair<std::string, std::string> feature_pair;
  double pooled_rmse = 0.0;
  std::string error;  // nonempty when the pair was excluded
};

struct SearchReport {
  std::vector<SearchEntry> ranking;   // ascending RMSE, failures at the end
  std::vector<int> fold_of_entity;    // shared assignment, sorted-label order
};

/// Scores every candidate feature pair with a shared fold assignment.
SearchReport proxy_space_search(const FeatureTable& table, const Panel& returns,
                                const CVConfig& config);

/// Flat sectioned key=value config file; every value is a string.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

  static ConfigFile parse(std::istream& in);
  static ConfigFile load(const std::string& path);
};

/// Floating-point formatting used by every serialised report (17 significant digits).
std::string format_double(double v);

}  // namespace stgarch

#endif
