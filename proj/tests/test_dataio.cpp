#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "stgarch/dataio.hpp"
#include "stgarch/simulate.hpp"

using namespace stgarch;

namespace {

Panel ingest(const std::string& returns, const std::string& locations) {
  std::istringstream r(returns), l(locations);
  return ingest_panel_streams(r, l);
}

const std::string kLocs = "entity,x,y\nAAA,0.1,0.2\nBBB,0.6,0.7\n";

FeatureTable table_from(const std::string& csv) {
  std::istringstream in(csv);
  return read_features_stream(in);
}

// panel simulated on locations derived from two of the feature columns, so the
// pair (f1, f2) is the true proxy space
struct Planted {
  Panel panel;
  FeatureTable table;
};

Planted make_planted(int n, int T, int n_features, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Planted out;
  std::ostringstream feat;
  feat << "entity";
  for (int f = 1; f <= n_features; ++f) feat << ",f" << f;
  feat << "\n";
  for (int i = 0; i < n; ++i) {
    std::ostringstream name;
    name << "c" << i;
    out.panel.labels.push_back(name.str());
    feat << name.str();
    double x = 0.0, y = 0.0;
    for (int f = 1; f <= n_features; ++f) {
      const double v = unif(rng);
      if (f == 1) x = v;
      if (f == 2) y = v;
      feat << "," << v;
    }
    feat << "\n";
    out.panel.locations.push_back({x, y});
  }
  out.table = preprocess_features(table_from(feat.str()));

  ParameterSurface surface;
  surface.order = {1, 1};
  Eigen::MatrixXd omega(4, 4), alpha(4, 4), beta(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      omega(i, j) = 0.03 + 0.25 * static_cast<double>(i) / 3.0;
      alpha(i, j) = 0.05 + 0.2 * static_cast<double>(j) / 3.0;
      beta(i, j) = 0.15 + 0.4 * static_cast<double>(i) / 3.0;
    }
  }
  surface.omega = TensorSurface::uniform(omega);
  surface.alpha = {TensorSurface::uniform(alpha)};
  surface.beta = {TensorSurface::uniform(beta)};
  const CovarianceModel model{CovarianceFamily::exponential, 1.0, 0.5, 0.0, 1.5};
  const FieldSampler sampler(out.panel.locations, model, split_seed(seed, 1));
  const Panel sim = simulate_stgarch(surface, sampler.sample(T + 300), out.panel.locations, 300);
  out.panel.values = sim.values;
  return out;
}

}  // namespace

TEST_CASE("ingest happy path: 2 entities x 3 dates") {
  const Panel p = ingest("date,AAA,BBB\n2024-01-01,0.1,0.2\n2024-01-02,-0.3,0.4\n"
                         "2024-01-03,0.5,-0.6\n",
                         kLocs);
  CHECK(p.T() == 3);
  CHECK(p.m() == 2);
  CHECK(p.values(1, 0) == doctest::Approx(-0.3));
  CHECK(p.labels[1] == "BBB");
  CHECK(p.locations[1].x == doctest::Approx(0.6));
}

TEST_CASE("ingest errors name the offending entity or cell") {
  CHECK_THROWS_WITH_AS(
      ingest("date,AAA,CCC\n2024-01-01,0.1,0.2\n", kLocs),
      doctest::Contains("CCC"), std::runtime_error);
  // blank cell with row/column coordinates
  try {
    ingest("date,AAA,BBB\n2024-01-01,0.1,\n", kLocs);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 3") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(
      ingest("date,AAA,BBB\n2024-01-02,0.1,0.2\n2024-01-01,0.1,0.2\n", kLocs),
      doctest::Contains("strictly increasing"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      ingest("date,AAA,BBB\n2024-01-01,0.1,0.2\n2024-01-01,0.1,0.2\n", kLocs),
      doctest::Contains("strictly increasing"), std::runtime_error);
}

TEST_CASE("feature pair enumeration counts") {
  std::ostringstream csv;
  csv << "entity";
  for (int f = 0; f < 44; ++f) csv << ",feat" << f;
  csv << "\ne1";
  for (int f = 0; f < 44; ++f) csv << "," << f;
  csv << "\n";
  CHECK(enumerate_feature_pairs(table_from(csv.str())).size() == 946);

  const auto small = table_from("entity,a,b,c,d\ne1,1,2,3,4\ne2,5,6,7,8\n");
  const auto pairs = enumerate_feature_pairs(small);
  CHECK(pairs.size() == 6);
  CHECK(std::is_sorted(pairs.begin(), pairs.end()));
}

TEST_CASE("preprocessing drops missing-heavy features, standardises, imputes") {
  // feature 'gappy' is 50% missing -> dropped; 'kept' has one missing cell in
  // 21 entities (< 5%) -> retained with zero imputation
  std::ostringstream csv;
  csv << "entity,gappy,kept\n";
  for (int i = 0; i < 21; ++i) {
    csv << "e" << i << "," << (i % 2 == 0 ? std::to_string(i) : "") << ","
        << (i == 7 ? "" : std::to_string(i)) << "\n";
  }
  const auto cooked = preprocess_features(table_from(csv.str()));
  REQUIRE(cooked.feature_names == std::vector<std::string>{"kept"});
  CHECK(cooked.preprocessed);
  CHECK(cooked.features(7, 0) == 0.0);  // imputed
  double mean = 0.0, var = 0.0;
  int n = 0;
  for (int i = 0; i < 21; ++i) {
    if (i == 7) continue;
    mean += cooked.features(i, 0);
    ++n;
  }
  mean /= n;
  for (int i = 0; i < 21; ++i) {
    if (i == 7) continue;
    var += std::pow(cooked.features(i, 0) - mean, 2);
  }
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(var / n == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("preprocessing is idempotent") {
  const auto raw = table_from("entity,a,b\ne1,1,5\ne2,2,6\ne3,3,9\ne4,4,2\n");
  const auto once = preprocess_features(raw);
  const auto twice = preprocess_features(once);
  CHECK((once.features - twice.features).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(once.feature_names == twice.feature_names);
}

TEST_CASE("proxy space rescales to the unit square and records the map") {
  const auto t = preprocess_features(table_from("entity,a,b\ne1,1,5\ne2,2,6\ne3,3,9\ne4,4,2\n"));
  const auto space = build_proxy_space(t, {"a", "b"});
  REQUIRE(space.locations.size() == 4);
  double min_x = 1.0, max_x = 0.0;
  for (const auto& s : space.locations) {
    CHECK(s.x >= 0.0);
    CHECK(s.x <= 1.0);
    min_x = std::min(min_x, s.x);
    max_x = std::max(max_x, s.x);
  }
  CHECK(min_x == doctest::Approx(0.0));
  CHECK(max_x == doctest::Approx(1.0));
  // affine map recovers the standardised feature value
  const double back = space.scale_x * space.locations[2].x + space.offset_x;
  CHECK(back == doctest::Approx(t.features(2, 0)).epsilon(1e-12));
}

TEST_CASE("proxy space rejects degenerate pairs") {
  const auto t = table_from("entity,a,const,dup\ne1,1,5,1\ne2,2,5,2\ne3,3,5,3\n");
  CHECK_THROWS_AS(build_proxy_space(t, {"a", "const"}), std::invalid_argument);
  CHECK_THROWS_AS(build_proxy_space(t, {"a", "dup"}), std::invalid_argument);
  CHECK_THROWS_AS(build_proxy_space(t, {"a", "missing"}), std::invalid_argument);
}

TEST_CASE("fold assignment partitions, is label-canonical, leave-one-out works") {
  const std::vector<std::string> labels{"e", "d", "a", "b", "c"};
  const auto folds = assign_folds(labels, 5, 3);
  std::vector<int> sorted = folds;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4});  // k = m: singleton folds

  // permuting entity order permutes assignments consistently (same label ->
  // same fold)
  const std::vector<std::string> permuted{"a", "b", "c", "d", "e"};
  const auto folds2 = assign_folds(permuted, 5, 3);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto j = static_cast<std::size_t>(
        std::find(permuted.begin(), permuted.end(), labels[i]) - permuted.begin());
    CHECK(folds[i] == folds2[j]);
  }
  CHECK_THROWS_AS(assign_folds(labels, 1, 3), std::invalid_argument);
  CHECK_THROWS_AS(assign_folds({"a"}, 2, 3), std::invalid_argument);
}

TEST_CASE("cross-validation is deterministic and reports complete folds") {
  Planted planted = make_planted(12, 100, 2, 77);
  CVConfig config;
  config.folds = 3;
  config.seed = 5;
  const CVReport a = run_cross_validation(planted.panel, 3, config);
  const CVReport b = run_cross_validation(planted.panel, 3, config);
  CHECK(a.pooled_rmse == b.pooled_rmse);
  CHECK(a.fold_rmse == b.fold_rmse);
  CHECK(a.fold_of_entity == b.fold_of_entity);
  CHECK(a.baseline_rmse > 0.0);
  CHECK(std::isfinite(a.pooled_rmse));
  // predicted volatility covers the held-out columns
  CHECK(a.predicted_vol.rows() == planted.panel.T() - 1);
  int n_filled = 0;
  for (Eigen::Index u = 0; u < a.predicted_vol.cols(); ++u) {
    n_filled += std::isfinite(a.predicted_vol(0, u));
  }
  CHECK(n_filled == static_cast<int>(planted.panel.m()));
}

TEST_CASE("search ranks the planted feature pair near the top") {
  int hits = 0;
  const int reps = 6;
  for (int rep = 0; rep < reps; ++rep) {
    Planted planted = make_planted(18, 200, 5, 100 + static_cast<std::uint64_t>(rep));
    CVConfig config;
    config.folds = 3;
    config.seed = 11;
    const SearchReport report = proxy_space_search(planted.table, planted.panel, config);
    REQUIRE(report.ranking.size() == 10);
    std::size_t rank = report.ranking.size();
    for (std::size_t i = 0; i < report.ranking.size(); ++i) {
      if (report.ranking[i].feature_pair == std::make_pair(std::string("f1"), std::string("f2"))) {
        rank = i;
      }
    }
    hits += rank < 3;
  }
  CHECK(hits >= reps - 2);
}

TEST_CASE("search output is a permutation of the pair set and stable under tiny noise") {
  Planted planted = make_planted(10, 80, 4, 55);
  CVConfig config;
  config.folds = 2;
  config.seed = 9;
  const SearchReport base = proxy_space_search(planted.table, planted.panel, config);
  CHECK(base.ranking.size() == 6);
  std::vector<std::pair<std::string, std::string>> seen;
  for (const auto& e : base.ranking) seen.push_back(e.feature_pair);
  std::sort(seen.begin(), seen.end());
  CHECK(seen == enumerate_feature_pairs(planted.table));

  Planted jittered = planted;
  jittered.panel.values.array() += 1e-13;
  const SearchReport moved = proxy_space_search(jittered.table, jittered.panel, config);
  for (std::size_t i = 0; i < base.ranking.size(); ++i) {
    CHECK(base.ranking[i].feature_pair == moved.ranking[i].feature_pair);
  }
}

TEST_CASE("config files parse sections, comments and overrides") {
  std::istringstream in("# comment\n[data]\nreturns = a.csv\n\n[mc]\nreplications = 20\n"
                        "seed=7\n; another comment\n");
  const ConfigFile c = ConfigFile::parse(in);
  CHECK(c.get_string("data", "returns", "") == "a.csv");
  CHECK(c.get_int("mc", "replications", 0) == 20);
  CHECK(c.get_double("mc", "seed", 0.0) == 7.0);
  CHECK(c.get_int("mc", "missing", 42) == 42);
  CHECK_FALSE(c.get("nope", "x").has_value());
}

TEST_CASE("doubles are serialised with 17 significant digits") {
  const double v = 0.1234567890123456789;
  const std::string s = format_double(v);
  CHECK(std::stod(s) == v);  // round trip
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}
