#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shiftconf/rng.hpp"

namespace shiftconf {

struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;
};

/// Ordered labeled points with declared domain bounds: every sample must
/// satisfy ||x||_2 <= x_norm_bound and |y| <= y_abs_bound. Violating rows
/// are rejected at construction. Immutable afterwards.
class Dataset {
 public:
  Dataset(std::vector<Sample> samples, int dim, double x_norm_bound, double y_abs_bound);

  int n() const noexcept { return static_cast<int>(samples_.size()); }
  int dim() const noexcept { return dim_; }
  double x_norm_bound() const noexcept { return x_norm_bound_; }
  double y_abs_bound() const noexcept { return y_abs_bound_; }

  const Sample& operator[](int i) const { return samples_[static_cast<std::size_t>(i)]; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  Dataset subset(const std::vector<int>& indices) const;
  Dataset without(int index) const;
  Dataset with_appended(Sample extra) const;

 private:
  std::vector<Sample> samples_;
  int dim_;
  double x_norm_bound_;
  double y_abs_bound_;
};

struct SplitSpec {
  std::vector<int> train_indices;
  std::vector<int> cal_indices;
};

/// Seeded random train/calibration partition of [0, n). Deterministic for
/// equal streams.
SplitSpec split(const Dataset& data, int n_train, RngStream rng);

/// First n_train rows as training, remainder as calibration.
SplitSpec split_ordered(const Dataset& data, int n_train);

/// dQ/dP evaluator tagged with its declared regime. In the bounded regime
/// every evaluation is checked against the declared sup bound.
class LikelihoodRatio {
 public:
  enum class Regime { unweighted, bounded, second_moment };

  static LikelihoodRatio unweighted();
  static LikelihoodRatio bounded(std::function<double(const Eigen::VectorXd&)> eval,
                                 double sup_bound);
  static LikelihoodRatio second_moment(std::function<double(const Eigen::VectorXd&)> eval,
                                       double moment_bound);

  double operator()(const Eigen::VectorXd& x) const;

  Regime regime() const noexcept { return regime_; }
  double bound_value() const noexcept { return bound_value_; }
  bool is_weighted() const noexcept { return regime_ != Regime::unweighted; }

 private:
  LikelihoodRatio(Regime regime, std::function<double(const Eigen::VectorXd&)> eval,
                  double bound_value);

  Regime regime_;
  std::function<double(const Eigen::VectorXd&)> eval_;
  double bound_value_;
};

/// Reads a dataset from a CSV file: one header row, columns x1,...,xp,y,
/// decimal-point floats. Malformed rows and bound violations raise with
/// the offending row number.
Dataset load_csv(const std::string& path, int dim, double x_norm_bound, double y_abs_bound);

inline double abs_residual_score(double y, double prediction) {
  return std::abs(y - prediction);
}

}  // namespace shiftconf
