#include "shiftconf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <boost/math/special_functions/beta.hpp>

namespace shiftconf {

namespace {

// Stream salts for the independent random uses inside one trial.
constexpr std::uint64_t kDataSalt = 0x64617461;
constexpr std::uint64_t kSplitSalt = 0x73706c74;
constexpr std::uint64_t kTestSalt = 0x74657374;

int guarded_ceil(double value) {
  // ceil with a tiny guard so that binary round-off of exact integers
  // (e.g. 0.9 * 100) does not bump the rank
  return static_cast<int>(std::ceil(value - 1e-9));
}

}  // namespace

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(level > 0.0 && level <= 1.0))
    throw std::invalid_argument("empirical_quantile: level must be in (0, 1]");
  std::sort(values.begin(), values.end());
  const int n = static_cast<int>(values.size());
  const int rank = std::clamp(guarded_ceil(level * n), 1, n);
  return values[static_cast<std::size_t>(rank - 1)];
}

FittedPredictor fit_method_predictor(const MethodConfig& method, const Dataset& data,
                                     int n_train, const RidgeConfig& ridge_config,
                                     const LikelihoodRatio& ratio, int full_grid_points,
                                     RngStream split_rng) {
  const LikelihoodRatio effective =
      method.weighted ? ratio : LikelihoodRatio::unweighted();

  switch (method.method) {
    case Method::split: {
      const SplitSpec spec = split(data, n_train, split_rng);
      auto predictor = std::make_shared<SplitConformalPredictor>(
          data.subset(spec.train_indices), data.subset(spec.cal_indices), ridge_config,
          method.alpha, effective);
      return {[predictor](const Eigen::VectorXd& x, double y) {
        const PredictionInterval iv = predictor->interval(x);
        return std::make_pair(iv.contains(y), iv.width());
      }};
    }
    case Method::jackknife: {
      auto predictor = std::make_shared<JackknifeFamilyPredictor>(
          data, ridge_config, method.alpha, effective, JackknifeFamilyPredictor::Kind::plain);
      return {[predictor](const Eigen::VectorXd& x, double y) {
        const PredictionInterval iv = predictor->interval(x);
        return std::make_pair(iv.contains(y), iv.width());
      }};
    }
    case Method::jackknife_plus:
    case Method::jaw:
    case Method::jackknife_plus_inflated: {
      const double inflation =
          method.method == Method::jackknife_plus_inflated ? method.inflation_epsilon : 0.0;
      auto predictor = std::make_shared<JackknifeFamilyPredictor>(
          data, ridge_config, method.alpha, effective, JackknifeFamilyPredictor::Kind::plus,
          inflation);
      return {[predictor](const Eigen::VectorXd& x, double y) {
        const PredictionInterval iv = predictor->interval(x);
        return std::make_pair(iv.contains(y), iv.width());
      }};
    }
    case Method::cv_plus: {
      auto predictor = std::make_shared<JackknifeFamilyPredictor>(
          data, ridge_config, method.alpha, method.folds, split_rng);
      return {[predictor](const Eigen::VectorXd& x, double y) {
        const PredictionInterval iv = predictor->interval(x);
        return std::make_pair(iv.contains(y), iv.width());
      }};
    }
    case Method::full: {
      auto predictor = std::make_shared<FullConformalPredictor>(data, ridge_config,
                                                                method.alpha, effective);
      const auto grid = default_grid(ridge_config.y_abs_bound, full_grid_points);
      const double spacing = grid.size() > 1 ? grid[1] - grid[0] : 0.0;
      return {[predictor, grid, spacing](const Eigen::VectorXd& x, double y) {
        const bool covered = predictor->contains(x, y);
        const PredictionSet set = predictor->set(x, grid);
        return std::make_pair(covered, spacing * set.member_count());
      }};
    }
  }
  throw std::invalid_argument("fit_method_predictor: unknown method");
}

TrialResult estimate_pe(const FittedPredictor& predictor, const ShiftScenario& scenario,
                        int n_test, RngStream rng) {
  if (n_test < 1) throw std::invalid_argument("estimate_pe: n_test must be positive");
  const auto xs = scenario.sample_Q_x(rng, n_test);
  int misses = 0;
  std::vector<double> widths;
  widths.reserve(xs.size());
  for (const auto& x : xs) {
    const double y = scenario.sample_y_given_x(rng, x);
    const auto [covered, width] = predictor.evaluate(x, y);
    if (!covered) ++misses;
    widths.push_back(width);
  }
  TrialResult out;
  out.pe_estimate = static_cast<double>(misses) / static_cast<double>(n_test);
  out.pe_stderr =
      std::sqrt(out.pe_estimate * (1.0 - out.pe_estimate) / static_cast<double>(n_test));
  std::sort(widths.begin(), widths.end());
  out.median_width = widths[(widths.size() - 1) / 2];
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ShiftScenario& scenario,
                                const std::vector<BoundResult>& bound_results) {
  if (config.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.config = config;
  report.bounds = bound_results;
  report.trials.resize(static_cast<std::size_t>(config.trials));

  const RidgeConfig ridge_config = config.ridge_config(scenario);

  std::atomic<int> next{0};
  std::vector<std::string> failures(static_cast<std::size_t>(config.trials));
  const auto run_trial = [&](int trial) {
    RngStream base(config.master_seed, static_cast<std::uint64_t>(trial));
    RngStream data_rng = base.derived(kDataSalt);
    RngStream split_rng = base.derived(kSplitSalt);
    RngStream test_rng = base.derived(kTestSalt);
    const Dataset data = scenario.make_dataset(data_rng, config.n);
    const FittedPredictor predictor =
        fit_method_predictor(config.method, data, config.n_train, ridge_config, scenario.ratio,
                             config.full_grid_points, split_rng);
    TrialResult result = estimate_pe(predictor, scenario, config.n_test, test_rng);
    result.trial_id = trial;
    result.seed = base.engine_seed();
    report.trials[static_cast<std::size_t>(trial)] = result;
  };

  const int workers = std::clamp(config.threads, 1, config.trials);
  if (workers <= 1) {
    for (int trial = 0; trial < config.trials; ++trial) {
      try {
        run_trial(trial);
      } catch (const std::exception& e) {
        throw std::runtime_error("run_experiment: trial " + std::to_string(trial) + " (seed " +
                                 std::to_string(RngStream(config.master_seed,
                                                          static_cast<std::uint64_t>(trial))
                                                    .engine_seed()) +
                                 ") failed: " + e.what());
      }
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int trial = next.fetch_add(1); trial < config.trials; trial = next.fetch_add(1)) {
          try {
            run_trial(trial);
          } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(trial)] = e.what();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (int trial = 0; trial < config.trials; ++trial) {
      if (!failures[static_cast<std::size_t>(trial)].empty())
        throw std::runtime_error("run_experiment: trial " + std::to_string(trial) + " (seed " +
                                 std::to_string(RngStream(config.master_seed,
                                                          static_cast<std::uint64_t>(trial))
                                                    .engine_seed()) +
                                 ") failed: " + failures[static_cast<std::size_t>(trial)]);
    }
  }

  std::vector<double> pes;
  pes.reserve(report.trials.size());
  for (const TrialResult& t : report.trials) pes.push_back(t.pe_estimate);

  const std::array<double, 5> levels = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (std::size_t i = 0; i < levels.size(); ++i)
    report.pe_deciles[i] = {levels[i], empirical_quantile(pes, levels[i])};

  for (const BoundResult& bound : bound_results) {
    int exceed = 0;
    for (double pe : pes)
      if (pe > bound.miscoverage_threshold) ++exceed;
    report.exceedance.emplace_back(bound.name,
                                   static_cast<double>(exceed) / static_cast<double>(pes.size()));
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::pair<double, bool> beta_oracle_check(const ExperimentReport& report, double alpha, int m) {
  if (report.config.method.method != Method::split || report.config.method.weighted)
    throw std::invalid_argument("beta_oracle_check: oracle applies to unweighted split only");
  if (report.config.scenario.kind != ScenarioConfig::Kind::bounded ||
      report.config.scenario.gamma != 0.0)
    throw std::invalid_argument("beta_oracle_check: oracle needs an unshifted scenario");
  if (report.config.n - report.config.n_train != m)
    throw std::invalid_argument("beta_oracle_check: m does not match the report's calibration size");
  if (report.config.n_test < 100 * m)
    throw std::invalid_argument("beta_oracle_check: needs n_test >= 100 m so that the Monte "
                                "Carlo error is negligible against the oracle law");

  const int k = guarded_ceil((1.0 - alpha) * (m + 1));
  const double a = static_cast<double>(k);
  const double b = static_cast<double>(m + 1 - k);

  std::vector<double> coverages;
  coverages.reserve(report.trials.size());
  for (const TrialResult& t : report.trials) coverages.push_back(1.0 - t.pe_estimate);
  std::sort(coverages.begin(), coverages.end());

  const double r = static_cast<double>(coverages.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < coverages.size(); ++i) {
    const double cdf = boost::math::ibeta(a, b, std::clamp(coverages[i], 0.0, 1.0));
    const double hi = static_cast<double>(i + 1) / r - cdf;
    const double lo = cdf - static_cast<double>(i) / r;
    ks = std::max(ks, std::max(hi, lo));
  }
  // asymptotic 0.01-level critical value: sqrt(log(2/0.01)/2) / sqrt(R)
  const double critical = 1.6276236115189504 / std::sqrt(r);
  return {ks, ks < critical};
}

double DkwStudyResult::exceedance_fraction(double threshold) const {
  if (deviations.empty()) return 0.0;
  int count = 0;
  for (double d : deviations)
    if (d > threshold) ++count;
  return static_cast<double>(count) / static_cast<double>(deviations.size());
}

DkwStudyResult run_dkw_study(const DkwStudyConfig& config) {
  if (config.replications < 1 || config.n < 1)
    throw std::invalid_argument("run_dkw_study: n and replications must be positive");
  const ShiftScenario scenario =
      make_scenario_bounded(config.gamma, 1, config.x_norm_bound, config.noise_scale);
  if (!scenario.true_score_cdf_Q)
    throw std::runtime_error("run_dkw_study: scenario lacks a closed-form score CDF");
  const auto& reference = *scenario.true_score_cdf_Q;

  DkwStudyResult result;
  result.sup_ratio_bound = scenario.ratio.bound_value();
  result.deviations.resize(static_cast<std::size_t>(config.replications));

  const auto run_replication = [&](int rep) {
    RngStream rng(config.master_seed, static_cast<std::uint64_t>(rep));
    const auto samples = scenario.sample_P(rng, config.n);
    std::vector<double> scores(samples.size());
    std::vector<double> ratios(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      scores[i] = std::abs(samples[i].y);  // zero-model score
      ratios[i] = scenario.ratio(samples[i].x);
    }
    const WeightedEcdf ecdf = WeightedEcdf::from_hat(scores, ratios);
    result.deviations[static_cast<std::size_t>(rep)] = ecdf.sup_deviation(reference);
  };

  const int workers = std::clamp(config.threads, 1, config.replications);
  if (workers <= 1) {
    for (int rep = 0; rep < config.replications; ++rep) run_replication(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < config.replications; rep = next.fetch_add(1))
          run_replication(rep);
      });
    for (auto& t : pool) t.join();
  }

  std::vector<double> sorted = result.deviations;
  result.median_deviation = empirical_quantile(std::move(sorted), 0.5);
  return result;
}

double estimate_nu(const Dataset& data, const RidgeConfig& config, const ShiftScenario& scenario,
                   double epsilon, int n_mc, RngStream rng) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("estimate_nu: epsilon must be >= 0");
  if (n_mc < 1) throw std::invalid_argument("estimate_nu: n_mc must be positive");
  const LooRefitter refitter(data, config);
  const auto xs = scenario.sample_Q_x(rng, n_mc);

  double worst = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const RidgeModel loo = refitter.model(i);
    int count = 0;
    for (const auto& x : xs)
      if (std::abs(refitter.full_model().predict(x) - loo.predict(x)) > epsilon) ++count;
    worst = std::max(worst, static_cast<double>(count) / static_cast<double>(n_mc));
  }
  return worst;
}

}  // namespace shiftconf
