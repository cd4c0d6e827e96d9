#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "shiftconf/bounds.hpp"
#include "shiftconf/conformal.hpp"
#include "shiftconf/core.hpp"
#include "shiftconf/ridge.hpp"
#include "shiftconf/scenario.hpp"

namespace shiftconf {

/// Per-trial Monte Carlo estimate of the training-conditional miscoverage.
struct TrialResult {
  int trial_id = 0;
  std::uint64_t seed = 0;
  double pe_estimate = 0.0;
  double pe_stderr = 0.0;
  double median_width = 0.0;  // extended real
};

struct ExperimentConfig {
  MethodConfig method;
  ScenarioConfig scenario;
  int n = 100;        // samples drawn per trial
  int n_train = 50;   // split methods: training part, calibration gets n - n_train
  int trials = 100;   // independent datasets (R)
  int n_test = 10000; // fresh Q-draws per trial
  double lambda = 1.0;
  std::uint64_t master_seed = 0;
  int full_grid_points = 257;

  /// Worker cap. Execution detail: it is not echoed into reports, which
  /// must be identical for every thread count.
  int threads = 1;

  RidgeConfig ridge_config(const ShiftScenario& s) const {
    return RidgeConfig{lambda, s.config.dim, s.config.x_norm_bound, s.y_abs_bound};
  }
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialResult> trials;
  std::array<std::pair<double, double>, 5> pe_deciles{};  // (level, value)
  std::vector<std::pair<std::string, double>> exceedance;  // bound name -> freq(pe > thr)
  std::vector<BoundResult> bounds;
  double wall_time_s = 0.0;
};

/// A trained set-valued predictor reduced to what the miscoverage estimator
/// needs: one evaluation returns coverage of y and the set width at x.
struct FittedPredictor {
  std::function<std::pair<bool, double>(const Eigen::VectorXd&, double)> evaluate;
};

/// Builds the configured method's predictor on one dataset. Split methods
/// consume split_rng for the train/calibration partition; CV+ uses fold_rng
/// for fold assignment.
FittedPredictor fit_method_predictor(const MethodConfig& method, const Dataset& data,
                                     int n_train, const RidgeConfig& ridge_config,
                                     const LikelihoodRatio& ratio, int full_grid_points,
                                     RngStream split_rng);

/// Monte Carlo miscoverage of a fixed predictor over fresh Q-draws.
TrialResult estimate_pe(const FittedPredictor& predictor, const ShiftScenario& scenario,
                        int n_test, RngStream rng);

/// R independent trials (dataset from P, fit, estimate), parallelized over
/// trials with per-trial derived streams; the report is identical for every
/// thread count. Bounds passed in are echoed and turned into exceedance
/// frequencies.
ExperimentReport run_experiment(const ExperimentConfig& config, const ShiftScenario& scenario,
                                const std::vector<BoundResult>& bound_results = {});

/// Kolmogorov-Smirnov check of {1 - pe_i} against the classical split
/// conformal coverage law Beta(k, m + 1 - k), k = ceil((1 - alpha)(m + 1)).
/// Applies only to unweighted split reports on an unshifted scenario with
/// n_test >= 100 m. Pass/fail at the 0.01 level.
std::pair<double, bool> beta_oracle_check(const ExperimentReport& report, double alpha, int m);

/// Monte Carlo estimate of nu = max_i P(|mu_hat(X) - mu_hat^{-i}(X)| > eps)
/// over Q-draws of X, for the inflated jackknife+ condition.
double estimate_nu(const Dataset& data, const RidgeConfig& config, const ShiftScenario& scenario,
                   double epsilon, int n_mc, RngStream rng);

/// Left-continuous empirical quantile of a sample (helper shared by the
/// report aggregation and the calibration studies).
double empirical_quantile(std::vector<double> values, double level);

/// Replicated sup-deviation study for the weighted CDF machinery: draws n
/// points from the one-dimensional bounded scenario, forms the
/// self-normalized weighted ECDF of the zero-model scores |y|, and measures
/// its sup-distance to the closed-form score CDF under Q.
struct DkwStudyConfig {
  double gamma = 0.5;
  int n = 400;
  int replications = 500;
  double x_norm_bound = 1.0;
  double noise_scale = 1.0;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct DkwStudyResult {
  std::vector<double> deviations;  // one per replication, in replication order
  double median_deviation = 0.0;
  double sup_ratio_bound = 1.0;  // the scenario's declared B

  double exceedance_fraction(double threshold) const;
};

DkwStudyResult run_dkw_study(const DkwStudyConfig& config);

}  // namespace shiftconf
