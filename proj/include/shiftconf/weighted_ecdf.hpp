#pragma once

#include <functional>
#include <span>
#include <vector>

namespace shiftconf {

enum class InfinitySide { none, positive, negative };

/// Normalized weighted step function over scores, with an optional point
/// mass at +inf or -inf carrying the test weight. Quantiles use the
/// left-continuous generalized inverse inf{t : F(t) >= level}; cumulative
/// weights are compared against level - kLevelSlack so that exact rational
/// levels (k/(n+1) and friends) select the intended atom despite binary
/// rounding.
class WeightedEcdf {
 public:
  struct Atom {
    double score;
    double weight;
  };

  /// Self-normalized weights w_i = r_i / sum_j r_j, no infinity mass.
  static WeightedEcdf from_hat(std::span<const double> scores, std::span<const double> ratios);

  /// Test-weighted form: w_i = r_i / (r_test + sum_j r_j) on the atoms and
  /// w_test = r_test / (r_test + sum_j r_j) on the requested infinite side.
  static WeightedEcdf with_test_mass(std::span<const double> scores,
                                     std::span<const double> ratios, double ratio_at_test,
                                     InfinitySide side);

  /// F(t) = total weight at scores <= t; a -inf mass counts everywhere,
  /// a +inf mass only at t = +inf (where the result is exactly 1).
  double cdf(double t) const;

  /// inf{t : F(t) >= level} as an extended real; requires 0 < level <= 1.
  double quantile(double level) const;

  /// sup_t |F(t) - reference(t)| for a nondecreasing CDF reference, computed
  /// from both one-sided limits at every atom plus the limits beyond each end.
  double sup_deviation(const std::function<double(double)>& reference) const;

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  double infinity_mass() const noexcept { return infinity_mass_; }
  InfinitySide infinity_side() const noexcept { return side_; }
  double total_mass() const noexcept;

  static constexpr double kLevelSlack = 1e-12;

 private:
  WeightedEcdf() = default;
  void build(std::vector<Atom> raw);

  std::vector<Atom> atoms_;         // sorted by score, duplicate scores merged
  std::vector<double> cumulative_;  // prefix sums, seeded with any -inf mass
  double infinity_mass_ = 0.0;
  InfinitySide side_ = InfinitySide::none;
};

struct DkwBoundResult {
  double deviation_threshold;
  double failure_probability;
};

/// Bounded-ratio deviation bound inverted to threshold form: the sup
/// deviation exceeds sqrt(2 B^2 log(4/delta_prob) / n) + 3 C sqrt(B/n) with
/// probability at most delta_prob.
DkwBoundResult dkw_bounded_ratio(int n, double sup_bound, double delta_prob, double c_const);

/// Second-moment regime: failure probability for a given deviation level,
/// 6 C K / (dev sqrt(n)) + 4 (K^2 - 1) / (n dev^2), clamped to [0, 1].
DkwBoundResult dkw_second_moment(int n, double moment_bound, double deviation, double c_const);

/// Constant-free alternative: (72/dev) e^{-n dev^2 / (4B)} + 2 e^{-n dev^2 / (2B^2)}.
DkwBoundResult dkw_alternative(int n, double sup_bound, double deviation);

}  // namespace shiftconf
