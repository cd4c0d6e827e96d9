#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shiftconf/core.hpp"
#include "shiftconf/rng.hpp"

namespace shiftconf {

/// Generator parameters for the synthetic covariate-shift scenarios. The
/// tilts are chosen so that dQ/dP and its regime bound are exact by
/// construction, never estimated.
struct ScenarioConfig {
  enum class Kind { bounded, second_moment };
  Kind kind = Kind::bounded;
  double gamma = 0.0;     // bounded regime: tilt strength in [0, 1)
  double k_target = 1.5;  // second-moment regime: target L2 norm of dQ/dP (> 1)
  int dim = 1;
  double x_norm_bound = 1.0;
  double noise_scale = 1.0;
};

/// Covariate-shift sampling bundle. The response sampler is a single shared
/// object used by both the P and Q paths, so only the covariate law changes.
struct ShiftScenario {
  ScenarioConfig config;
  double y_abs_bound = 0.0;
  Eigen::VectorXd theta;  // true linear signal

  std::function<std::vector<Eigen::VectorXd>(RngStream&, int)> sample_P_x;
  std::function<std::vector<Eigen::VectorXd>(RngStream&, int)> sample_Q_x;
  std::function<double(RngStream&, const Eigen::VectorXd&)> sample_y_given_x;
  LikelihoodRatio ratio = LikelihoodRatio::unweighted();

  /// CDF of the zero-model score |Y| under Q; available in closed form for
  /// one-dimensional bounded scenarios.
  std::optional<std::function<double(double)>> true_score_cdf_Q;

  std::vector<Sample> sample_P(RngStream& rng, int count) const;
  std::vector<Sample> sample_Q(RngStream& rng, int count) const;
  Dataset make_dataset(RngStream& rng, int count) const;
};

/// P_X uniform on the centered cube scaled to ||x||_2 <= b; Q_X tilts the
/// first coordinate with an affine density factor 1 + gamma * x1 / a and
/// records the regime bound B = (1 + gamma) / (1 - gamma). The response is
/// theta' x plus bounded noise whose half-width grows with x1, so the score
/// distribution genuinely changes under the shift.
ShiftScenario make_scenario_bounded(double gamma, int dim, double x_norm_bound,
                                    double noise_scale);

/// Same covariate cube, but the first coordinate is tilted by an unbounded
/// power-law ratio with exactly computed second moment k_target^2.
ShiftScenario make_scenario_second_moment(double k_target, int dim, double x_norm_bound,
                                          double noise_scale);

ShiftScenario make_scenario(const ScenarioConfig& config);

}  // namespace shiftconf
