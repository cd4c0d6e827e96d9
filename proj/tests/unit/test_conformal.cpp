#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "shiftconf/conformal.hpp"
#include "shiftconf/weighted_ecdf.hpp"

using namespace shiftconf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x[0] = v;
  return x;
}

Dataset dataset1d(const std::vector<double>& xs, const std::vector<double>& ys, double b,
                  double y_bound) {
  std::vector<Sample> samples(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) samples[i] = {vec1(xs[i]), ys[i]};
  return Dataset(std::move(samples), 1, b, y_bound);
}

Dataset random_dataset(int n, double b, double y_bound, RngStream& rng) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  std::vector<double> ys(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    xs[static_cast<std::size_t>(i)] = rng.uniform(-b, b);
    ys[static_cast<std::size_t>(i)] = rng.uniform(-y_bound, y_bound);
  }
  return dataset1d(xs, ys, b, y_bound);
}

// equal endpoints (including matching infinities) or within tolerance
bool endpoint_close(double a, double b, double tol) {
  return a == b || std::abs(a - b) <= tol;
}

}  // namespace

TEST_SUITE("conformal") {

TEST_CASE("split conformal quantile accounting") {
  const Dataset trainset = dataset1d({0.1, -0.2, 0.3}, {0.0, 0.0, 0.0}, 1.0, 10.0);
  const LikelihoodRatio one = LikelihoodRatio::unweighted();
  {
    // zero calibration scores collapse the interval onto the prediction
    const Dataset calset = dataset1d({0.5, -0.5, 0.2}, {0.0, 0.0, 0.0}, 1.0, 10.0);
    const PredictionInterval iv =
        split_conformal(trainset, calset, vec1(0.4), {1.0, 1, 1.0, 10.0}, 0.5, one);
    CHECK(iv.lower == doctest::Approx(0.0));
    CHECK(iv.upper == doctest::Approx(0.0));
  }
  {
    // m = 9, alpha = 0.5: the threshold is the 5th smallest score
    const std::vector<double> ys = {3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0, 3.5, 8.0};
    const Dataset calset = dataset1d(std::vector<double>(9, 0.25), ys, 1.0, 10.0);
    const PredictionInterval iv =
        split_conformal(trainset, calset, vec1(0.0), {1.0, 1, 1.0, 10.0}, 0.5, one);
    CHECK(iv.upper == doctest::Approx(3.5).epsilon(1e-12));  // 5th smallest of |y|
    CHECK(iv.lower == doctest::Approx(-3.5).epsilon(1e-12));
  }
  {
    // alpha so small that (1 - alpha)(m + 1) > m: the +inf atom is reached
    const Dataset calset = dataset1d(std::vector<double>(9, 0.25),
                                     {1, 2, 3, 4, 5, 6, 7, 8, 9}, 1.0, 10.0);
    const PredictionInterval iv =
        split_conformal(trainset, calset, vec1(0.0), {1.0, 1, 1.0, 10.0}, 0.01, one);
    CHECK(iv.lower == -kInf);
    CHECK(iv.upper == kInf);
  }
}

TEST_CASE("full conformal small-case enumeration") {
  const LikelihoodRatio one = LikelihoodRatio::unweighted();
  {
    // n = 1, alpha = 0.4: rank ceil(0.6 * 2) = 2 reaches the +inf atom
    const Dataset data = dataset1d({0.5}, {0.25}, 1.0, 1.0);
    const auto grid = default_grid(1.0, 9);
    const PredictionSet set = full_conformal(data, vec1(0.0), {1.0, 1, 1.0, 1.0}, 0.4, one, grid);
    CHECK(set.member_count() == 9);
    for (const auto& t : set.trace) CHECK(t.threshold == kInf);
  }
  {
    // enormous lambda pins the model at zero: membership is |y| <= q with
    // q the ceil(0.6 * 6) = 4th smallest |y_i|
    const Dataset data = dataset1d({0.1, -0.4, 0.2, 0.5, -0.3},
                                   {0.6, -0.2, 0.9, -0.5, 0.3}, 1.0, 1.0);
    const std::vector<double> grid = {-0.95, -0.61, -0.45, -0.1, 0.0, 0.35, 0.49, 0.62, 0.8};
    const PredictionSet set =
        full_conformal(data, vec1(0.0), {1e9, 1, 1.0, 1.0}, 0.4, one, grid);
    // |y| sorted: {0.2, 0.3, 0.5, 0.6, 0.9}; rank ceil(0.6 * 6) = 4 -> q = 0.6
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(set.member[i] == (std::abs(grid[i]) <= 0.6));
  }
  {
    // candidates beyond the response bound are rejected with a warning
    const Dataset data = dataset1d({0.1, 0.2}, {0.3, -0.1}, 1.0, 0.5);
    const std::vector<double> grid = {-0.8, 0.0, 0.8};
    const PredictionSet set = full_conformal(data, vec1(0.0), {1.0, 1, 1.0, 0.5}, 0.2, one, grid);
    CHECK(set.warnings.size() == 2);
    CHECK_FALSE(set.member[0]);
    CHECK_FALSE(set.trace[0].evaluated);
    CHECK(set.trace[1].evaluated);
  }
  const Dataset data = dataset1d({0.1}, {0.1}, 1.0, 1.0);
  CHECK_THROWS_AS(full_conformal(data, vec1(0.0), {1.0, 1, 1.0, 1.0}, 0.4, one, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(full_conformal(data, vec1(0.0), {1.0, 1, 1.0, 1.0}, 0.4, one, {0.2, 0.2}),
                  std::invalid_argument);
}

TEST_CASE("full conformal with the infinity atom contains the exact-rank set") {
  RngStream rng(21, 0);
  const LikelihoodRatio one = LikelihoodRatio::unweighted();
  for (int instance = 0; instance < 20; ++instance) {
    const int n = 3 + static_cast<int>(rng.uniform_index(10));
    const Dataset data = random_dataset(n, 1.0, 1.0, rng);
    const RidgeConfig config{rng.uniform(0.2, 2.0), 1, 1.0, 1.0};
    const double alpha = rng.uniform(0.05, 0.5);
    const auto grid = default_grid(1.0, 33);
    const PredictionSet superset = full_conformal(data, vec1(0.3), config, alpha, one, grid);

    // exact-rank oracle: quantile over all n+1 scores, own score included
    const FullConformalPredictor predictor(data, config, alpha, one);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double y = grid[g];
      const Dataset augmented = data.with_appended({vec1(0.3), y});
      const RidgeModel model = fit(augmented, config);
      std::vector<double> scores;
      for (const Sample& s : augmented.samples())
        scores.push_back(abs_residual_score(s.y, model.predict(s.x)));
      const auto ecdf = WeightedEcdf::from_hat(scores, std::vector<double>(scores.size(), 1.0));
      const bool exact_rank_member = scores.back() <= ecdf.quantile(1.0 - alpha);
      if (exact_rank_member) CHECK(superset.member[g]);
    }
  }
}

TEST_CASE("jackknife+ order-statistic enumeration") {
  {
    // zero-feature rows force every held-out model to zero, so the residuals
    // are |y_i| = {1, 2, 3, 4} and mu^{-i}(x) = 0
    const Dataset data = dataset1d({0.0, 0.0, 0.0, 0.0}, {1.0, -2.0, 3.0, -4.0}, 1.0, 5.0);
    const PredictionInterval iv = jackknife_plus(data, vec1(0.5), {1.0, 1, 1.0, 5.0}, 0.4);
    CHECK(iv.upper == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(iv.lower == doctest::Approx(-3.0).epsilon(1e-12));

    const PredictionInterval inflated =
        jackknife_plus_inflated(data, vec1(0.5), {1.0, 1, 1.0, 5.0}, 0.4, 1.0);
    CHECK(inflated.upper == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(inflated.lower == doctest::Approx(-4.0).epsilon(1e-12));

    const PredictionInterval no_inflation =
        jackknife_plus_inflated(data, vec1(0.5), {1.0, 1, 1.0, 5.0}, 0.4, 0.0);
    CHECK(no_inflation.lower == iv.lower);
    CHECK(no_inflation.upper == iv.upper);
  }
  {
    // all residuals zero and equal held-out predictions collapse the interval
    const Dataset data = dataset1d({0.3, 0.4, -0.2, 0.1}, {0.0, 0.0, 0.0, 0.0}, 1.0, 1.0);
    const PredictionInterval iv = jackknife_plus(data, vec1(0.2), {1.0, 1, 1.0, 1.0}, 0.4);
    CHECK(iv.lower == doctest::Approx(0.0));
    CHECK(iv.upper == doctest::Approx(0.0));
  }
  {
    // tiny alpha reaches both infinity atoms
    const Dataset data = dataset1d({0.1, -0.2, 0.3}, {0.5, -0.5, 0.25}, 1.0, 1.0);
    const PredictionInterval iv = jackknife_plus(data, vec1(0.0), {1.0, 1, 1.0, 1.0}, 0.01);
    CHECK(iv.lower == -kInf);
    CHECK(iv.upper == kInf);
  }
  const Dataset single = dataset1d({0.1}, {0.1}, 1.0, 1.0);
  CHECK_THROWS_AS(jackknife_plus(single, vec1(0.0), {1.0, 1, 1.0, 1.0}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("jaw reduces to jackknife+ under a unit ratio and reweights otherwise") {
  RngStream rng(22, 0);
  {
    const LikelihoodRatio unit =
        LikelihoodRatio::bounded([](const Eigen::VectorXd&) { return 1.0; }, 1.0);
    for (int instance = 0; instance < 10; ++instance) {
      const int n = 3 + static_cast<int>(rng.uniform_index(12));
      const Dataset data = random_dataset(n, 1.0, 1.0, rng);
      const RidgeConfig config{0.8, 1, 1.0, 1.0};
      const double alpha = rng.uniform(0.05, 0.45);
      const PredictionInterval weighted = jaw(data, vec1(0.25), config, alpha, unit);
      const PredictionInterval plain = jackknife_plus(data, vec1(0.25), config, alpha);
      CHECK(weighted.lower == plain.lower);  // identical arithmetic, bit for bit
      CHECK(weighted.upper == plain.upper);
    }
  }
  {
    // a huge test ratio sends w_test -> 1 and the interval to the whole line
    const LikelihoodRatio spiked = LikelihoodRatio::bounded(
        [](const Eigen::VectorXd& x) { return x[0] > 0.4 ? 1e9 : 1.0; }, 1e9);
    const Dataset data = dataset1d({0.1, -0.2, 0.3}, {0.5, -0.5, 0.25}, 1.0, 1.0);
    const PredictionInterval iv = jaw(data, vec1(0.5), {1.0, 1, 1.0, 1.0}, 0.2, spiked);
    CHECK(iv.lower == -kInf);
    CHECK(iv.upper == kInf);
  }
  {
    // three-point cumulative-weight enumeration: ratios (1, 1, 2), test
    // ratio 2 -> atom weights (1/6, 1/6, 2/6) and w_test = 1/3; at
    // alpha = 0.4 the upper quantile lands on the third residual
    const LikelihoodRatio step = LikelihoodRatio::bounded(
        [](const Eigen::VectorXd& x) { return x[0] >= 0.25 ? 2.0 : 1.0; }, 2.0);
    const Dataset data = dataset1d({-0.5, 0.0, 0.5}, {1.0, -2.0, 3.0}, 1.0, 5.0);
    const PredictionInterval iv = jaw(data, vec1(0.5), {1e12, 1, 1.0, 5.0}, 0.4, step);
    CHECK(iv.upper == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(iv.lower == doctest::Approx(-3.0).epsilon(1e-8));
  }
}

TEST_CASE("cv+ fold accounting") {
  RngStream rng(23, 0);
  {
    // K = n reduces CV+ to jackknife+
    const Dataset data = random_dataset(6, 1.0, 1.0, rng);
    const RidgeConfig config{0.5, 1, 1.0, 1.0};
    const PredictionInterval cv = cv_plus(data, vec1(0.2), config, 0.3, 6, RngStream(1, 2));
    const PredictionInterval jk = jackknife_plus(data, vec1(0.2), config, 0.3);
    CHECK(cv.lower == doctest::Approx(jk.lower).epsilon(1e-9));
    CHECK(cv.upper == doctest::Approx(jk.upper).epsilon(1e-9));
  }
  {
    // n = 6, K = 2: enumerate the weighted order statistics by hand
    const Dataset data = random_dataset(6, 1.0, 1.0, rng);
    const RidgeConfig config{0.5, 1, 1.0, 1.0};
    const double alpha = 0.4;
    const RngStream fold_rng(9, 9);
    const PredictionInterval cv = cv_plus(data, vec1(0.1), config, alpha, 2, fold_rng);

    const auto assignment = cv_fold_assignment(6, 2, fold_rng);
    std::vector<RidgeModel> fold_models;
    for (int k = 0; k < 2; ++k) {
      std::vector<int> keep;
      for (int i = 0; i < 6; ++i)
        if (assignment[static_cast<std::size_t>(i)] != k) keep.push_back(i);
      fold_models.push_back(fit(data.subset(keep), config));
    }
    std::vector<double> upper_atoms, lower_atoms;
    for (int i = 0; i < 6; ++i) {
      const RidgeModel& m = fold_models[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
      const double r = abs_residual_score(data[i].y, m.predict(data[i].x));
      const double v = m.predict(vec1(0.1));
      upper_atoms.push_back(v + r);
      lower_atoms.push_back(v - r);
    }
    std::sort(upper_atoms.begin(), upper_atoms.end());
    std::sort(lower_atoms.begin(), lower_atoms.end());
    // ceil(0.6 * 7) = 5th smallest upper atom; floor(0.4 * 7) = 2nd smallest lower
    CHECK(cv.upper == doctest::Approx(upper_atoms[4]).epsilon(1e-12));
    CHECK(cv.lower == doctest::Approx(lower_atoms[1]).epsilon(1e-12));
  }
  {
    const Dataset data = random_dataset(6, 1.0, 1.0, rng);
    CHECK_THROWS_AS(cv_plus(data, vec1(0.0), {0.5, 1, 1.0, 1.0}, 0.3, 4, RngStream(0, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(cv_plus(data, vec1(0.0), {0.5, 1, 1.0, 1.0}, 0.3, 1, RngStream(0, 0)),
                    std::invalid_argument);
  }
}

TEST_CASE("plain jackknife quantile accounting") {
  {
    const Dataset data = dataset1d({0.3, 0.4, -0.2, 0.1}, {0.0, 0.0, 0.0, 0.0}, 1.0, 1.0);
    const PredictionInterval iv = jackknife_plain(data, vec1(0.2), {1.0, 1, 1.0, 1.0}, 0.4);
    CHECK(iv.lower == doctest::Approx(0.0));
    CHECK(iv.upper == doctest::Approx(0.0));
  }
  {
    // zero-feature rows: LOO residuals are |y_i|, the full model predicts 0
    std::vector<double> ys = {3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0, 3.5, 8.0};
    const Dataset data = dataset1d(std::vector<double>(9, 0.0), ys, 1.0, 10.0);
    const PredictionInterval iv = jackknife_plain(data, vec1(0.5), {1.0, 1, 1.0, 10.0}, 0.5);
    CHECK(iv.upper == doctest::Approx(3.5).epsilon(1e-12));  // 5th smallest residual
    CHECK(iv.lower == doctest::Approx(-3.5).epsilon(1e-12));
  }
}

TEST_CASE("intervals grow as alpha shrinks") {
  RngStream rng(24, 0);
  for (int instance = 0; instance < 10; ++instance) {
    const Dataset data = random_dataset(12, 1.0, 1.0, rng);
    const Dataset train = random_dataset(10, 1.0, 1.0, rng);
    const RidgeConfig config{0.7, 1, 1.0, 1.0};
    const Eigen::VectorXd x = vec1(rng.uniform(-1.0, 1.0));
    double alpha_small = rng.uniform(0.05, 0.4);
    double alpha_large = alpha_small + rng.uniform(0.05, 0.3);

    const auto one = LikelihoodRatio::unweighted();
    const PredictionInterval wide_split = split_conformal(train, data, x, config, alpha_small, one);
    const PredictionInterval narrow_split = split_conformal(train, data, x, config, alpha_large, one);
    CHECK(wide_split.lower <= narrow_split.lower + 1e-12);
    CHECK(wide_split.upper >= narrow_split.upper - 1e-12);

    const PredictionInterval wide_jk = jackknife_plus(data, x, config, alpha_small);
    const PredictionInterval narrow_jk = jackknife_plus(data, x, config, alpha_large);
    if (!narrow_jk.empty) {
      CHECK(wide_jk.lower <= narrow_jk.lower + 1e-12);
      CHECK(wide_jk.upper >= narrow_jk.upper - 1e-12);
    }
  }
}

TEST_CASE("permuting the rows leaves every construction unchanged") {
  RngStream rng(25, 0);
  const int n = 14;
  const Dataset data = random_dataset(n, 1.0, 1.0, rng);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = n - 1 - i;
  const Dataset reversed = data.subset(order);
  const RidgeConfig config{0.6, 1, 1.0, 1.0};
  const Eigen::VectorXd x = vec1(0.15);
  const auto one = LikelihoodRatio::unweighted();

  const PredictionInterval jk_a = jackknife_plus(data, x, config, 0.25);
  const PredictionInterval jk_b = jackknife_plus(reversed, x, config, 0.25);
  CHECK(jk_a.lower == doctest::Approx(jk_b.lower).epsilon(1e-10));
  CHECK(jk_a.upper == doctest::Approx(jk_b.upper).epsilon(1e-10));

  const auto grid = default_grid(1.0, 17);
  const PredictionSet full_a = full_conformal(data, x, config, 0.25, one, grid);
  const PredictionSet full_b = full_conformal(reversed, x, config, 0.25, one, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) CHECK(full_a.member[g] == full_b.member[g]);
}

TEST_CASE("weighted methods with a unit ratio equal their unweighted forms") {
  RngStream rng(26, 0);
  const LikelihoodRatio unit =
      LikelihoodRatio::bounded([](const Eigen::VectorXd&) { return 1.0; }, 1.0);
  const auto one = LikelihoodRatio::unweighted();
  for (int instance = 0; instance < 10; ++instance) {
    const int n = 4 + static_cast<int>(rng.uniform_index(12));
    const Dataset data = random_dataset(n, 1.0, 1.0, rng);
    const Dataset cal = random_dataset(n, 1.0, 1.0, rng);
    const RidgeConfig config{0.9, 1, 1.0, 1.0};
    const double alpha = rng.uniform(0.05, 0.45);
    const Eigen::VectorXd x = vec1(rng.uniform(-1.0, 1.0));

    const PredictionInterval sw = split_conformal(data, cal, x, config, alpha, unit);
    const PredictionInterval su = split_conformal(data, cal, x, config, alpha, one);
    CHECK(endpoint_close(sw.lower, su.lower, 1e-10));
    CHECK(endpoint_close(sw.upper, su.upper, 1e-10));

    const auto grid = default_grid(1.0, 33);
    const PredictionSet fw = full_conformal(data, x, config, alpha, unit, grid);
    const PredictionSet fu = full_conformal(data, x, config, alpha, one, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      CHECK(fw.member[g] == fu.member[g]);
      CHECK(std::abs(fw.trace[g].score - fu.trace[g].score) <= 1e-10);
    }

    const PredictionInterval jw = jaw(data, x, config, alpha, unit);
    const PredictionInterval ju = jackknife_plus(data, x, config, alpha);
    CHECK(endpoint_close(jw.lower, ju.lower, 1e-10));
    CHECK(endpoint_close(jw.upper, ju.upper, 1e-10));
  }
}

TEST_CASE("interval envelope behaves at the edges") {
  const PredictionInterval empty = PredictionInterval::make(2.0, 1.0);
  CHECK(empty.empty);
  CHECK_FALSE(empty.contains(1.5));
  CHECK(empty.width() == 0.0);

  const PredictionInterval whole{};
  CHECK(whole.contains(1e308));
  CHECK(whole.width() == kInf);
}

}  // TEST_SUITE
