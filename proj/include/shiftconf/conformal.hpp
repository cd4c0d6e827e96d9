#pragma once

#include <Eigen/Core>
#include <limits>
#include <string>
#include <vector>

#include "shiftconf/core.hpp"
#include "shiftconf/ridge.hpp"
#include "shiftconf/rng.hpp"
#include "shiftconf/weighted_ecdf.hpp"

namespace shiftconf {

/// Extended-real interval; an empty interval is an explicit variant rather
/// than a crossed pair of endpoints.
struct PredictionInterval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool empty = false;

  static PredictionInterval make(double lo, double hi) {
    if (lo > hi) return empty_interval();
    return {lo, hi, false};
  }
  static PredictionInterval empty_interval() {
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
            true};
  }

  bool contains(double y) const { return !empty && lower <= y && y <= upper; }
  double width() const { return empty ? 0.0 : upper - lower; }
};

/// Grid membership for full conformal, with the per-point score/threshold
/// pair that decided it. Grid values outside the declared response range
/// are never refit; they show up as warnings.
struct PredictionSet {
  struct PointTrace {
    double score = 0.0;
    double threshold = 0.0;
    bool evaluated = false;
  };

  std::vector<double> grid;
  std::vector<bool> member;
  std::vector<PointTrace> trace;
  std::vector<std::string> warnings;

  int member_count() const;
};

enum class Method {
  split,
  full,
  jackknife,
  jackknife_plus,
  jackknife_plus_inflated,
  cv_plus,
  jaw,
};

struct MethodConfig {
  Method method = Method::split;
  double alpha = 0.1;
  bool weighted = false;
  double inflation_epsilon = 0.0;  // jackknife_plus_inflated
  int folds = 0;                   // cv_plus; must divide n
};

std::string method_name(Method method);
Method method_from_name(const std::string& name);

/// Uniform candidate grid over [-y_bound, y_bound].
std::vector<double> default_grid(double y_bound, int points = 513);

// ---------------------------------------------------------------------------
// Reusable fitted predictors. Construction does all model fitting; queries
// are pure and safe to run concurrently.
// ---------------------------------------------------------------------------

class SplitConformalPredictor {
 public:
  SplitConformalPredictor(const Dataset& trainset, const Dataset& calset,
                          const RidgeConfig& config, double alpha, LikelihoodRatio ratio);
  PredictionInterval interval(const Eigen::VectorXd& x) const;
  const RidgeModel& model() const noexcept { return model_; }

 private:
  RidgeModel model_;
  std::vector<double> sorted_scores_;
  std::vector<double> ratio_prefix_;  // prefix sums of ratios in score order
  LikelihoodRatio ratio_;
  double alpha_;
};

/// Shared machinery for jackknife+, JAW, the inflated variant, CV+ and the
/// plain jackknife: per-sample held-out models plus their residuals.
class JackknifeFamilyPredictor {
 public:
  enum class Kind { plus, plain };

  /// Leave-one-out models (jackknife+, JAW, plain jackknife).
  JackknifeFamilyPredictor(const Dataset& data, const RidgeConfig& config, double alpha,
                           LikelihoodRatio ratio, Kind kind, double inflation = 0.0);

  /// Fold-out models (CV+). folds must divide n; assignment is a seeded
  /// permutation.
  JackknifeFamilyPredictor(const Dataset& data, const RidgeConfig& config, double alpha,
                           int folds, RngStream rng);

  PredictionInterval interval(const Eigen::VectorXd& x) const;

 private:
  std::vector<RidgeModel> holdout_models_;  // model used for sample i
  std::vector<double> residuals_;
  std::vector<double> ratios_;
  LikelihoodRatio ratio_ = LikelihoodRatio::unweighted();
  RidgeModel full_model_;
  double alpha_ = 0.1;
  double inflation_ = 0.0;
  Kind kind_ = Kind::plus;
};

class FullConformalPredictor {
 public:
  FullConformalPredictor(const Dataset& data, const RidgeConfig& config, double alpha,
                         LikelihoodRatio ratio);
  bool contains(const Eigen::VectorXd& x, double y) const;
  PredictionSet set(const Eigen::VectorXd& x, const std::vector<double>& grid) const;

 private:
  struct Decision {
    double score;
    double threshold;
  };
  struct XContext {
    std::vector<double> pred_const;  // predictions at the training points, split
    std::vector<double> pred_slope;  // into the constant and per-unit-y parts
    double test_pred_const = 0.0;
    double test_pred_slope = 0.0;
    double ratio_at_test = 1.0;
  };
  XContext prepare(const Eigen::VectorXd& x) const;
  Decision decide(const XContext& ctx, double y) const;

  std::vector<Eigen::VectorXd> xs_;
  std::vector<double> ys_;
  std::vector<double> sample_ratios_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  LikelihoodRatio ratio_;
  RidgeConfig config_;
  double alpha_;
};

// ---------------------------------------------------------------------------
// One-shot constructions.
// ---------------------------------------------------------------------------

PredictionInterval split_conformal(const Dataset& trainset, const Dataset& calset,
                                   const Eigen::VectorXd& x, const RidgeConfig& config,
                                   double alpha, const LikelihoodRatio& ratio);

PredictionSet full_conformal(const Dataset& data, const Eigen::VectorXd& x,
                             const RidgeConfig& config, double alpha,
                             const LikelihoodRatio& ratio, const std::vector<double>& grid);

PredictionInterval jackknife_plus(const Dataset& data, const Eigen::VectorXd& x,
                                  const RidgeConfig& config, double alpha);

PredictionInterval jaw(const Dataset& data, const Eigen::VectorXd& x, const RidgeConfig& config,
                       double alpha, const LikelihoodRatio& ratio);

PredictionInterval jackknife_plus_inflated(const Dataset& data, const Eigen::VectorXd& x,
                                           const RidgeConfig& config, double alpha,
                                           double epsilon);

PredictionInterval cv_plus(const Dataset& data, const Eigen::VectorXd& x,
                           const RidgeConfig& config, double alpha, int folds, RngStream rng);

PredictionInterval jackknife_plain(const Dataset& data, const Eigen::VectorXd& x,
                                   const RidgeConfig& config, double alpha);

/// Fold labels for CV+: a seeded permutation chopped into folds of size n/K.
std::vector<int> cv_fold_assignment(int n, int folds, RngStream rng);

}  // namespace shiftconf
