#include "shiftconf/weighted_ecdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shiftconf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(std::span<const double> scores, std::span<const double> ratios) {
  if (scores.empty()) throw std::invalid_argument("WeightedEcdf: needs at least one score");
  if (scores.size() != ratios.size())
    throw std::invalid_argument("WeightedEcdf: scores and ratios must have equal length");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("WeightedEcdf: scores must be finite");
  for (double r : ratios)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw std::invalid_argument("WeightedEcdf: ratios must be finite and nonnegative");
}

}  // namespace

void WeightedEcdf::build(std::vector<Atom> raw) {
  std::stable_sort(raw.begin(), raw.end(),
                   [](const Atom& a, const Atom& b) { return a.score < b.score; });
  atoms_.clear();
  atoms_.reserve(raw.size());
  for (const Atom& a : raw) {
    if (!atoms_.empty() && atoms_.back().score == a.score)
      atoms_.back().weight += a.weight;
    else
      atoms_.push_back(a);
  }
  cumulative_.resize(atoms_.size());
  double cum = (side_ == InfinitySide::negative) ? infinity_mass_ : 0.0;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    cum += atoms_[k].weight;
    cumulative_[k] = cum;
  }
}

WeightedEcdf WeightedEcdf::from_hat(std::span<const double> scores,
                                    std::span<const double> ratios) {
  check_inputs(scores, ratios);
  double denom = 0.0;
  for (double r : ratios) denom += r;
  if (!(denom > 0.0))
    throw std::invalid_argument("WeightedEcdf::from_hat: all ratios are zero, "
                                "self-normalization is undefined");
  WeightedEcdf ecdf;
  std::vector<Atom> raw(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) raw[i] = {scores[i], ratios[i] / denom};
  ecdf.build(std::move(raw));
  return ecdf;
}

WeightedEcdf WeightedEcdf::with_test_mass(std::span<const double> scores,
                                          std::span<const double> ratios, double ratio_at_test,
                                          InfinitySide side) {
  check_inputs(scores, ratios);
  if (!(ratio_at_test >= 0.0) || !std::isfinite(ratio_at_test))
    throw std::invalid_argument("WeightedEcdf::with_test_mass: test ratio must be finite and >= 0");
  if (side == InfinitySide::none)
    throw std::invalid_argument("WeightedEcdf::with_test_mass: an infinity side is required");
  double denom = ratio_at_test;
  for (double r : ratios) denom += r;
  if (!(denom > 0.0))
    throw std::invalid_argument("WeightedEcdf::with_test_mass: zero denominator");

  WeightedEcdf ecdf;
  ecdf.infinity_mass_ = ratio_at_test / denom;
  ecdf.side_ = (ecdf.infinity_mass_ > 0.0) ? side : InfinitySide::none;
  std::vector<Atom> raw(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) raw[i] = {scores[i], ratios[i] / denom};
  ecdf.build(std::move(raw));
  return ecdf;
}

double WeightedEcdf::total_mass() const noexcept {
  const double atom_mass = cumulative_.empty()
                               ? ((side_ == InfinitySide::negative) ? infinity_mass_ : 0.0)
                               : cumulative_.back();
  return atom_mass + ((side_ == InfinitySide::positive) ? infinity_mass_ : 0.0);
}

double WeightedEcdf::cdf(double t) const {
  if (t == kInf) return 1.0;  // normalization: everything lies at or below +inf
  const double base = (side_ == InfinitySide::negative) ? infinity_mass_ : 0.0;
  if (t == -kInf) return base;
  // first atom with score > t
  const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), t,
                                   [](double v, const Atom& a) { return v < a.score; });
  if (it == atoms_.begin()) return base;
  return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

double WeightedEcdf::quantile(double level) const {
  if (!(level > 0.0) || !(level <= 1.0))
    throw std::invalid_argument("WeightedEcdf::quantile: level must be in (0, 1]");
  const double target = level - kLevelSlack;
  if (side_ == InfinitySide::negative && infinity_mass_ >= target) return -kInf;
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it != cumulative_.end())
    return atoms_[static_cast<std::size_t>(it - cumulative_.begin())].score;
  return kInf;  // only the +inf mass (or exact normalization) reaches the level
}

double WeightedEcdf::sup_deviation(const std::function<double(double)>& reference) const {
  const double base = (side_ == InfinitySide::negative) ? infinity_mass_ : 0.0;
  const double top = cumulative_.empty() ? base : cumulative_.back();
  // limits beyond each end: reference -> 0 on the left, 1 on the right
  double dev = std::max(std::abs(base), std::abs(top - 1.0));
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    const double left = (k == 0) ? base : cumulative_[k - 1];
    const double right = cumulative_[k];
    const double at = reference(atoms_[k].score);
    const double just_below = reference(std::nextafter(atoms_[k].score, -kInf));
    dev = std::max(dev, std::abs(right - at));
    dev = std::max(dev, std::abs(left - just_below));
  }
  return dev;
}

DkwBoundResult dkw_bounded_ratio(int n, double sup_bound, double delta_prob, double c_const) {
  if (n < 1) throw std::invalid_argument("dkw_bounded_ratio: n must be positive");
  if (!(sup_bound >= 1.0))
    throw std::invalid_argument("dkw_bounded_ratio: the sup bound B must be >= 1 "
                                "(the ratio integrates to 1, so B < 1 is impossible)");
  if (!(delta_prob > 0.0) || !(delta_prob < 1.0))
    throw std::invalid_argument("dkw_bounded_ratio: delta_prob must be in (0, 1)");
  if (!(c_const >= 0.0)) throw std::invalid_argument("dkw_bounded_ratio: C must be >= 0");
  const double nd = static_cast<double>(n);
  const double threshold = std::sqrt(2.0 * sup_bound * sup_bound * std::log(4.0 / delta_prob) / nd) +
                           3.0 * c_const * std::sqrt(sup_bound / nd);
  return {threshold, delta_prob};
}

DkwBoundResult dkw_second_moment(int n, double moment_bound, double deviation, double c_const) {
  if (n < 1) throw std::invalid_argument("dkw_second_moment: n must be positive");
  if (!(moment_bound >= 1.0))
    throw std::invalid_argument("dkw_second_moment: the moment bound K must be >= 1");
  if (!(deviation > 0.0)) throw std::invalid_argument("dkw_second_moment: deviation must be > 0");
  if (!(c_const >= 0.0)) throw std::invalid_argument("dkw_second_moment: C must be >= 0");
  const double nd = static_cast<double>(n);
  const double fail = 6.0 * c_const * moment_bound / (deviation * std::sqrt(nd)) +
                      4.0 * (moment_bound * moment_bound - 1.0) / (nd * deviation * deviation);
  return {deviation, std::min(1.0, fail)};
}

DkwBoundResult dkw_alternative(int n, double sup_bound, double deviation) {
  if (n < 1) throw std::invalid_argument("dkw_alternative: n must be positive");
  if (!(sup_bound >= 1.0)) throw std::invalid_argument("dkw_alternative: the sup bound B must be >= 1");
  if (!(deviation > 0.0)) throw std::invalid_argument("dkw_alternative: deviation must be > 0");
  const double nd = static_cast<double>(n);
  const double d2 = deviation * deviation;
  const double fail = (72.0 / deviation) * std::exp(-nd * d2 / (4.0 * sup_bound)) +
                      2.0 * std::exp(-nd * d2 / (2.0 * sup_bound * sup_bound));
  return {deviation, std::min(1.0, fail)};
}

}  // namespace shiftconf
