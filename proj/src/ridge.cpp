#include "shiftconf/ridge.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shiftconf {

namespace {

void check_config(const RidgeConfig& config) {
  if (!(config.lambda > 0.0)) throw std::invalid_argument("ridge: lambda must be > 0");
  if (config.dim < 1) throw std::invalid_argument("ridge: dim must be positive");
  if (!(config.x_norm_bound > 0.0) || !(config.y_abs_bound > 0.0))
    throw std::invalid_argument("ridge: domain bounds must be positive");
}

void check_match(const Dataset& data, const RidgeConfig& config) {
  if (data.dim() != config.dim)
    throw std::invalid_argument("ridge: dataset dimension does not match the config");
}

}  // namespace

RidgeModel::RidgeModel(Eigen::VectorXd beta) : beta_(std::move(beta)) {
  if (!beta_.allFinite()) throw std::invalid_argument("RidgeModel: coefficients must be finite");
}

RidgeModel fit(const Dataset& data, const RidgeConfig& config) {
  check_config(config);
  check_match(data, config);
  const int p = config.dim;
  const double n = static_cast<double>(data.n());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  for (const Sample& s : data.samples()) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(s.x);
    xty += s.y * s.x;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += n * config.lambda;
  return RidgeModel(Eigen::LLT<Eigen::MatrixXd>(gram).solve(xty));
}

RidgeModel fit_loo(const Dataset& data, const RidgeConfig& config, int leave_out) {
  return LooRefitter(data, config).model(leave_out);
}

LooRefitter::LooRefitter(const Dataset& data, const RidgeConfig& config)
    : full_model_(Eigen::VectorXd::Zero(config.dim)), n_(data.n()) {
  check_config(config);
  check_match(data, config);
  if (n_ < 2) throw std::invalid_argument("LooRefitter: needs at least two samples");
  const int p = config.dim;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  xty_ = Eigen::VectorXd::Zero(p);
  xs_.reserve(static_cast<std::size_t>(n_));
  ys_.reserve(static_cast<std::size_t>(n_));
  for (const Sample& s : data.samples()) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(s.x);
    xty_ += s.y * s.x;
    xs_.push_back(s.x);
    ys_.push_back(s.y);
  }
  gram = gram.selfadjointView<Eigen::Lower>();

  Eigen::MatrixXd full = gram;
  full.diagonal().array() += static_cast<double>(n_) * config.lambda;
  full_model_ = RidgeModel(Eigen::LLT<Eigen::MatrixXd>(full).solve(xty_));

  Eigen::MatrixXd loo_base = gram;
  loo_base.diagonal().array() += static_cast<double>(n_ - 1) * config.lambda;
  inverse_loo_base_ =
      Eigen::LLT<Eigen::MatrixXd>(loo_base).solve(Eigen::MatrixXd::Identity(p, p));
}

RidgeModel LooRefitter::model(int leave_out) const {
  if (leave_out < 0 || leave_out >= n_)
    throw std::invalid_argument("LooRefitter::model: index out of range");
  const Eigen::VectorXd& xi = xs_[static_cast<std::size_t>(leave_out)];
  const double yi = ys_[static_cast<std::size_t>(leave_out)];
  // Sherman-Morrison downdate of M = X'X + (n-1) lambda I by x_i x_i'.
  const Eigen::VectorXd u = inverse_loo_base_.selfadjointView<Eigen::Lower>() * xi;
  const double denom = 1.0 - xi.dot(u);
  const Eigen::VectorXd r = xty_ - yi * xi;
  const Eigen::VectorXd base = inverse_loo_base_.selfadjointView<Eigen::Lower>() * r;
  return RidgeModel(base + u * (u.dot(r) / denom));
}

StabilityProfile stability_profile(const RidgeConfig& config) {
  check_config(config);
  StabilityProfile profile;
  const double b = config.x_norm_bound;
  const double iy = config.y_abs_bound;
  const double numerator = 16.0 * b * b * iy * iy / config.lambda;
  profile.c_fn = [numerator](int n) {
    if (n < 1) throw std::invalid_argument("stability c_fn: n must be positive");
    return numerator / static_cast<double>(n);
  };
  profile.kappa1 = b;
  profile.kappa2 = std::sqrt(static_cast<double>(config.dim)) * b;
  return profile;
}

double audit_uniform_stability(const Dataset& data, const RidgeConfig& config, int n_swaps,
                               const std::vector<Eigen::VectorXd>& probe_points, RngStream rng) {
  check_config(config);
  check_match(data, config);
  if (data.n() < 2) throw std::invalid_argument("audit_uniform_stability: needs n >= 2");
  if (n_swaps < 1) throw std::invalid_argument("audit_uniform_stability: n_swaps must be positive");
  for (const auto& x : probe_points)
    if (x.size() != config.dim || x.norm() > config.x_norm_bound * (1.0 + 1e-9))
      throw std::invalid_argument("audit_uniform_stability: probe point outside the domain");

  const int n = data.n();
  std::vector<int> removals(static_cast<std::size_t>(n));
  std::iota(removals.begin(), removals.end(), 0);
  if (n_swaps < n) {
    for (int i = 0; i < n_swaps; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + rng.uniform_index(static_cast<std::size_t>(n - i));
      std::swap(removals[static_cast<std::size_t>(i)], removals[j]);
    }
    removals.resize(static_cast<std::size_t>(n_swaps));
  }

  const LooRefitter refitter(data, config);
  double worst = 0.0;
  for (int i : removals) {
    const RidgeModel loo = refitter.model(i);
    for (const auto& x : probe_points)
      worst = std::max(worst, std::abs(refitter.full_model().predict(x) - loo.predict(x)));
  }
  return worst;
}

std::pair<double, double> audit_bilipschitz(
    const RidgeConfig& config, const std::vector<std::pair<RidgeModel, RidgeModel>>& model_pairs,
    const std::vector<Eigen::VectorXd>& probe_points) {
  check_config(config);
  if (model_pairs.empty()) throw std::invalid_argument("audit_bilipschitz: empty pair list");
  if (probe_points.empty()) throw std::invalid_argument("audit_bilipschitz: no probe points");

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& [first, second] : model_pairs) {
    const Eigen::VectorXd delta = first.coefficients() - second.coefficients();
    const double denom = delta.lpNorm<Eigen::Infinity>();
    if (denom == 0.0)
      throw std::invalid_argument("audit_bilipschitz: model pair is not distinct");
    double num = 0.0;
    for (const auto& x : probe_points) num = std::max(num, std::abs(delta.dot(x)));
    const double ratio = num / denom;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return {lo, hi};
}

namespace {

double max_cdf_slope(std::vector<double> residuals, double step, int cells) {
  std::sort(residuals.begin(), residuals.end());
  const double count = static_cast<double>(residuals.size());
  double max_slope = 0.0;
  for (int k = 0; k < cells; ++k) {
    const double lo = step * static_cast<double>(k);
    const double hi = step * static_cast<double>(k + 1);
    const auto lo_it = std::upper_bound(residuals.begin(), residuals.end(), lo);
    const auto hi_it = std::upper_bound(residuals.begin(), residuals.end(), hi);
    const double mass = static_cast<double>(hi_it - lo_it) / count;
    max_slope = std::max(max_slope, mass / step);
  }
  return max_slope;
}

}  // namespace

DensityBounds estimate_density_bounds(const RidgeConfig& config, const ShiftScenario& scenario,
                                      int n, int n_mc, RngStream rng) {
  check_config(config);
  if (n < 1 || n_mc < 1)
    throw std::invalid_argument("estimate_density_bounds: n and n_mc must be positive");

  constexpr int kMeanFits = 200;
  constexpr int kGridCells = 16;

  // Mean model: average coefficients over independent fits on fresh P-data.
  Eigen::VectorXd beta_bar = Eigen::VectorXd::Zero(config.dim);
  RngStream fit_rng = rng.derived(0x6d65616e);
  for (int rep = 0; rep < kMeanFits; ++rep) {
    RngStream rep_rng = fit_rng.derived(static_cast<std::uint64_t>(rep));
    const Dataset data = scenario.make_dataset(rep_rng, n);
    beta_bar += fit(data, config).coefficients();
  }
  beta_bar /= static_cast<double>(kMeanFits);
  const RidgeModel mean_model{beta_bar};

  RngStream p_rng = rng.derived(0x70);
  RngStream q_rng = rng.derived(0x71);
  std::vector<double> res_p(static_cast<std::size_t>(n_mc));
  std::vector<double> res_q(static_cast<std::size_t>(n_mc));
  {
    const auto samples = scenario.sample_P(p_rng, n_mc);
    for (std::size_t i = 0; i < samples.size(); ++i)
      res_p[i] = abs_residual_score(samples[i].y, mean_model.predict(samples[i].x));
  }
  {
    const auto samples = scenario.sample_Q(q_rng, n_mc);
    for (std::size_t i = 0; i < samples.size(); ++i)
      res_q[i] = abs_residual_score(samples[i].y, mean_model.predict(samples[i].x));
  }

  const auto [p_lo, p_hi] = std::minmax_element(res_p.begin(), res_p.end());
  const auto [q_lo, q_hi] = std::minmax_element(res_q.begin(), res_q.end());
  const double hi = std::max(*p_hi, *q_hi);
  const double range = hi - std::min(*p_lo, *q_lo);
  if (!(range > 1e-12 * std::max(1.0, hi)))
    throw std::runtime_error("estimate_density_bounds: density unbounded or degenerate "
                             "(residuals are constant)");
  const double step = hi / static_cast<double>(kGridCells);

  DensityBounds out;
  out.L_n = max_cdf_slope(std::move(res_p), step, kGridCells);
  out.L_Qn = max_cdf_slope(std::move(res_q), step, kGridCells);
  out.grid_step = step;
  out.mean_fit_replications = kMeanFits;
  return out;
}

}  // namespace shiftconf
