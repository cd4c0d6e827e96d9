#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "shiftconf/core.hpp"
#include "shiftconf/rng.hpp"
#include "shiftconf/scenario.hpp"

namespace shiftconf {

struct RidgeConfig {
  double lambda = 1.0;  // must stay > 0: the stability constant diverges at 0
  int dim = 1;
  double x_norm_bound = 1.0;
  double y_abs_bound = 1.0;
};

class RidgeModel {
 public:
  explicit RidgeModel(Eigen::VectorXd beta);
  double predict(const Eigen::VectorXd& x) const { return beta_.dot(x); }
  const Eigen::VectorXd& coefficients() const noexcept { return beta_; }

 private:
  Eigen::VectorXd beta_;
};

/// Minimizer of (1/n) sum (y_i - beta' x_i)^2 + lambda ||beta||^2. This is
/// the normalization under which the uniform-stability constant scales as
/// 1/(lambda n).
RidgeModel fit(const Dataset& data, const RidgeConfig& config);

/// Leave-one-out refit via a rank-one downdate of the normal equations;
/// agrees with a naive refit to high accuracy.
RidgeModel fit_loo(const Dataset& data, const RidgeConfig& config, int leave_out);

/// Factorized normal equations for a fixed dataset, for repeated
/// leave-one-out refits. Pure after construction.
class LooRefitter {
 public:
  LooRefitter(const Dataset& data, const RidgeConfig& config);
  RidgeModel model(int leave_out) const;
  const RidgeModel& full_model() const noexcept { return full_model_; }
  int n() const noexcept { return n_; }

 private:
  Eigen::MatrixXd inverse_loo_base_;  // (X'X + (n-1) lambda I)^{-1}
  Eigen::VectorXd xty_;
  std::vector<Eigen::VectorXd> xs_;
  std::vector<double> ys_;
  RidgeModel full_model_;
  int n_;
};

/// Analytic stability and bi-Lipschitz constants for ridge on the bounded
/// domain: c_n = 16 b^2 I^2 / (lambda n), kappa1 = b, kappa2 = sqrt(p) b.
struct StabilityProfile {
  std::function<double(int)> c_fn;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
};

StabilityProfile stability_profile(const RidgeConfig& config);

/// Max over sampled single-point removals and probe points of the change in
/// the fitted predictor. Compare against c_fn(n) / 2.
double audit_uniform_stability(const Dataset& data, const RidgeConfig& config, int n_swaps,
                               const std::vector<Eigen::VectorXd>& probe_points, RngStream rng);

/// Min and max over model pairs of max_x |mu_beta(x) - mu_beta'(x)| divided
/// by ||beta - beta'||_inf. The upper ratio is checked against kappa2; the
/// lower one is reported for comparison with kappa1.
std::pair<double, double> audit_bilipschitz(const RidgeConfig& config,
                                            const std::vector<std::pair<RidgeModel, RidgeModel>>& model_pairs,
                                            const std::vector<Eigen::VectorXd>& probe_points);

/// Monte Carlo finite-difference estimate of the residual-CDF slope bounds
/// of the bounded-density assumption, at the mean model (averaged over many
/// independent fits). A pragmatic stand-in: the slopes are assumption
/// parameters, not estimands, so reports carry the grid step used.
struct DensityBounds {
  double L_n = 0.0;        // slope bound under P
  double L_Qn = 0.0;       // slope bound under Q
  double grid_step = 0.0;
  int mean_fit_replications = 0;
};

DensityBounds estimate_density_bounds(const RidgeConfig& config, const ShiftScenario& scenario,
                                      int n, int n_mc, RngStream rng);

}  // namespace shiftconf
