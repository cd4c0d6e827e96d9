#include "shiftconf/conformal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shiftconf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("conformal: alpha must be in (0, 1)");
}

void check_test_point(const Eigen::VectorXd& x, const RidgeConfig& config) {
  if (x.size() != config.dim)
    throw std::invalid_argument("conformal: test point has the wrong dimension");
  if (!x.allFinite() || x.norm() > config.x_norm_bound * (1.0 + 1e-9))
    throw std::invalid_argument("conformal: test point lies outside the feature domain");
}

}  // namespace

int PredictionSet::member_count() const {
  int count = 0;
  for (bool m : member) count += m ? 1 : 0;
  return count;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::split: return "split";
    case Method::full: return "full";
    case Method::jackknife: return "jackknife";
    case Method::jackknife_plus: return "jackknife_plus";
    case Method::jackknife_plus_inflated: return "jackknife_plus_inflated";
    case Method::cv_plus: return "cv_plus";
    case Method::jaw: return "jaw";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "split") return Method::split;
  if (name == "full") return Method::full;
  if (name == "jackknife") return Method::jackknife;
  if (name == "jackknife_plus") return Method::jackknife_plus;
  if (name == "jackknife_plus_inflated") return Method::jackknife_plus_inflated;
  if (name == "cv_plus") return Method::cv_plus;
  if (name == "jaw") return Method::jaw;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<double> default_grid(double y_bound, int points) {
  if (points < 2) throw std::invalid_argument("default_grid: needs at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double step = 2.0 * y_bound / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = -y_bound + step * i;
  grid.back() = y_bound;
  return grid;
}

// ---------------------------------------------------------------------------
// Split conformal
// ---------------------------------------------------------------------------

SplitConformalPredictor::SplitConformalPredictor(const Dataset& trainset, const Dataset& calset,
                                                 const RidgeConfig& config, double alpha,
                                                 LikelihoodRatio ratio)
    : model_(fit(trainset, config)), ratio_(std::move(ratio)), alpha_(alpha) {
  check_alpha(alpha);
  const int m = calset.n();
  std::vector<std::pair<double, double>> scored(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const Sample& s = calset[i];
    scored[static_cast<std::size_t>(i)] = {abs_residual_score(s.y, model_.predict(s.x)),
                                           ratio_(s.x)};
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  sorted_scores_.resize(scored.size());
  ratio_prefix_.resize(scored.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    sorted_scores_[i] = scored[i].first;
    cum += scored[i].second;
    ratio_prefix_[i] = cum;
  }
}

PredictionInterval SplitConformalPredictor::interval(const Eigen::VectorXd& x) const {
  const double r_test = ratio_(x);
  const double denom = r_test + ratio_prefix_.back();
  if (!(denom > 0.0)) return PredictionInterval{};  // no usable weight: whole line
  // smallest score whose cumulative weight reaches 1 - alpha
  const double target = (1.0 - alpha_ - WeightedEcdf::kLevelSlack) * denom;
  const auto it = std::lower_bound(ratio_prefix_.begin(), ratio_prefix_.end(), target);
  const double center = model_.predict(x);
  if (it == ratio_prefix_.end()) return PredictionInterval{};  // threshold at +inf
  const double q = sorted_scores_[static_cast<std::size_t>(it - ratio_prefix_.begin())];
  return PredictionInterval::make(center - q, center + q);
}

PredictionInterval split_conformal(const Dataset& trainset, const Dataset& calset,
                                   const Eigen::VectorXd& x, const RidgeConfig& config,
                                   double alpha, const LikelihoodRatio& ratio) {
  check_test_point(x, config);
  return SplitConformalPredictor(trainset, calset, config, alpha, ratio).interval(x);
}

// ---------------------------------------------------------------------------
// Jackknife family
// ---------------------------------------------------------------------------

JackknifeFamilyPredictor::JackknifeFamilyPredictor(const Dataset& data, const RidgeConfig& config,
                                                   double alpha, LikelihoodRatio ratio, Kind kind,
                                                   double inflation)
    : ratio_(std::move(ratio)),
      full_model_(Eigen::VectorXd::Zero(config.dim)),
      alpha_(alpha),
      inflation_(inflation),
      kind_(kind) {
  check_alpha(alpha);
  if (data.n() < 2) throw std::invalid_argument("jackknife: needs at least two samples");
  if (!(inflation >= 0.0)) throw std::invalid_argument("jackknife: inflation must be >= 0");
  const LooRefitter refitter(data, config);
  full_model_ = refitter.full_model();
  const int n = data.n();
  holdout_models_.reserve(static_cast<std::size_t>(n));
  residuals_.resize(static_cast<std::size_t>(n));
  ratios_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    holdout_models_.push_back(refitter.model(i));
    const Sample& s = data[i];
    residuals_[static_cast<std::size_t>(i)] =
        abs_residual_score(s.y, holdout_models_.back().predict(s.x));
    ratios_[static_cast<std::size_t>(i)] = ratio_(s.x);
  }
}

JackknifeFamilyPredictor::JackknifeFamilyPredictor(const Dataset& data, const RidgeConfig& config,
                                                   double alpha, int folds, RngStream rng)
    : full_model_(Eigen::VectorXd::Zero(config.dim)), alpha_(alpha), kind_(Kind::plus) {
  check_alpha(alpha);
  const int n = data.n();
  if (folds < 2) throw std::invalid_argument("cv_plus: folds must be >= 2");
  if (n % folds != 0) throw std::invalid_argument("cv_plus: folds must divide n");
  const std::vector<int> assignment = cv_fold_assignment(n, folds, rng);

  std::vector<RidgeModel> fold_models;
  fold_models.reserve(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(n - n / folds));
    for (int i = 0; i < n; ++i)
      if (assignment[static_cast<std::size_t>(i)] != k) keep.push_back(i);
    fold_models.push_back(fit(data.subset(keep), config));
  }
  full_model_ = fit(data, config);

  holdout_models_.reserve(static_cast<std::size_t>(n));
  residuals_.resize(static_cast<std::size_t>(n));
  ratios_.assign(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    const RidgeModel& model = fold_models[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
    holdout_models_.push_back(model);
    const Sample& s = data[i];
    residuals_[static_cast<std::size_t>(i)] = abs_residual_score(s.y, model.predict(s.x));
  }
}

PredictionInterval JackknifeFamilyPredictor::interval(const Eigen::VectorXd& x) const {
  const std::size_t n = residuals_.size();
  const double r_test = ratio_(x);

  if (kind_ == Kind::plain) {
    const WeightedEcdf ecdf = WeightedEcdf::with_test_mass(residuals_, ratios_, r_test,
                                                           InfinitySide::positive);
    const double q = ecdf.quantile(1.0 - alpha_);
    const double center = full_model_.predict(x);
    return PredictionInterval::make(center - q, center + q);
  }

  std::vector<double> upper_atoms(n);
  std::vector<double> mirrored_lower_atoms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = holdout_models_[i].predict(x);
    upper_atoms[i] = v + residuals_[i];
    // the lower end is the mirrored upper quantile, which reproduces the
    // floor(alpha (n+1)) order statistic of the held-out lower scores
    mirrored_lower_atoms[i] = residuals_[i] - v;
  }
  const WeightedEcdf upper_ecdf =
      WeightedEcdf::with_test_mass(upper_atoms, ratios_, r_test, InfinitySide::positive);
  const WeightedEcdf lower_ecdf =
      WeightedEcdf::with_test_mass(mirrored_lower_atoms, ratios_, r_test, InfinitySide::positive);
  const double upper = upper_ecdf.quantile(1.0 - alpha_) + inflation_;
  const double lower = -lower_ecdf.quantile(1.0 - alpha_) - inflation_;
  return PredictionInterval::make(lower, upper);
}

std::vector<int> cv_fold_assignment(int n, int folds, RngStream rng) {
  if (folds < 2 || n % folds != 0)
    throw std::invalid_argument("cv_fold_assignment: folds must be >= 2 and divide n");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < n - 1; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) + rng.uniform_index(static_cast<std::size_t>(n - i));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }
  const int fold_size = n / folds;
  std::vector<int> assignment(static_cast<std::size_t>(n));
  for (int pos = 0; pos < n; ++pos)
    assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos / fold_size;
  return assignment;
}

PredictionInterval jackknife_plus(const Dataset& data, const Eigen::VectorXd& x,
                                  const RidgeConfig& config, double alpha) {
  check_test_point(x, config);
  return JackknifeFamilyPredictor(data, config, alpha, LikelihoodRatio::unweighted(),
                                  JackknifeFamilyPredictor::Kind::plus)
      .interval(x);
}

PredictionInterval jaw(const Dataset& data, const Eigen::VectorXd& x, const RidgeConfig& config,
                       double alpha, const LikelihoodRatio& ratio) {
  check_test_point(x, config);
  return JackknifeFamilyPredictor(data, config, alpha, ratio,
                                  JackknifeFamilyPredictor::Kind::plus)
      .interval(x);
}

PredictionInterval jackknife_plus_inflated(const Dataset& data, const Eigen::VectorXd& x,
                                           const RidgeConfig& config, double alpha,
                                           double epsilon) {
  check_test_point(x, config);
  return JackknifeFamilyPredictor(data, config, alpha, LikelihoodRatio::unweighted(),
                                  JackknifeFamilyPredictor::Kind::plus, epsilon)
      .interval(x);
}

PredictionInterval cv_plus(const Dataset& data, const Eigen::VectorXd& x,
                           const RidgeConfig& config, double alpha, int folds, RngStream rng) {
  check_test_point(x, config);
  return JackknifeFamilyPredictor(data, config, alpha, folds, rng).interval(x);
}

PredictionInterval jackknife_plain(const Dataset& data, const Eigen::VectorXd& x,
                                   const RidgeConfig& config, double alpha) {
  check_test_point(x, config);
  return JackknifeFamilyPredictor(data, config, alpha, LikelihoodRatio::unweighted(),
                                  JackknifeFamilyPredictor::Kind::plain)
      .interval(x);
}

// ---------------------------------------------------------------------------
// Full conformal
// ---------------------------------------------------------------------------

FullConformalPredictor::FullConformalPredictor(const Dataset& data, const RidgeConfig& config,
                                               double alpha, LikelihoodRatio ratio)
    : ratio_(std::move(ratio)), config_(config), alpha_(alpha) {
  check_alpha(alpha);
  if (data.dim() != config.dim)
    throw std::invalid_argument("full_conformal: dataset dimension does not match the config");
  const int p = config.dim;
  gram_ = Eigen::MatrixXd::Zero(p, p);
  xty_ = Eigen::VectorXd::Zero(p);
  xs_.reserve(static_cast<std::size_t>(data.n()));
  ys_.reserve(static_cast<std::size_t>(data.n()));
  sample_ratios_.reserve(static_cast<std::size_t>(data.n()));
  for (const Sample& s : data.samples()) {
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(s.x);
    xty_ += s.y * s.x;
    xs_.push_back(s.x);
    ys_.push_back(s.y);
    sample_ratios_.push_back(ratio_(s.x));
  }
  gram_ = gram_.selfadjointView<Eigen::Lower>();
}

FullConformalPredictor::XContext FullConformalPredictor::prepare(const Eigen::VectorXd& x) const {
  const std::size_t n = xs_.size();
  // The augmented coefficient vector is affine in the candidate response:
  // beta(y) = beta_const + y * beta_slope. One factorization per test point
  // then covers every grid candidate.
  Eigen::MatrixXd augmented = gram_;
  augmented.selfadjointView<Eigen::Lower>().rankUpdate(x);
  augmented = augmented.selfadjointView<Eigen::Lower>();
  augmented.diagonal().array() += static_cast<double>(n + 1) * config_.lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(augmented);
  const Eigen::VectorXd beta_const = llt.solve(xty_);
  const Eigen::VectorXd beta_slope = llt.solve(x);

  XContext ctx;
  ctx.pred_const.resize(n);
  ctx.pred_slope.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ctx.pred_const[i] = beta_const.dot(xs_[i]);
    ctx.pred_slope[i] = beta_slope.dot(xs_[i]);
  }
  ctx.test_pred_const = beta_const.dot(x);
  ctx.test_pred_slope = beta_slope.dot(x);
  ctx.ratio_at_test = ratio_(x);
  return ctx;
}

FullConformalPredictor::Decision FullConformalPredictor::decide(const XContext& ctx,
                                                                double y) const {
  const std::size_t n = xs_.size();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i)
    scores[i] = abs_residual_score(ys_[i], ctx.pred_const[i] + y * ctx.pred_slope[i]);
  const WeightedEcdf ecdf = WeightedEcdf::with_test_mass(scores, sample_ratios_,
                                                         ctx.ratio_at_test,
                                                         InfinitySide::positive);
  const double own_score =
      abs_residual_score(y, ctx.test_pred_const + y * ctx.test_pred_slope);
  return {own_score, ecdf.quantile(1.0 - alpha_)};
}

bool FullConformalPredictor::contains(const Eigen::VectorXd& x, double y) const {
  const Decision d = decide(prepare(x), y);
  return d.score <= d.threshold;
}

PredictionSet FullConformalPredictor::set(const Eigen::VectorXd& x,
                                          const std::vector<double>& grid) const {
  if (grid.empty()) throw std::invalid_argument("full_conformal: empty candidate grid");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw std::invalid_argument("full_conformal: grid must be strictly increasing");

  const XContext ctx = prepare(x);
  PredictionSet out;
  out.grid = grid;
  out.member.resize(grid.size(), false);
  out.trace.resize(grid.size());
  const double y_bound = config_.y_abs_bound;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double y = grid[i];
    if (std::abs(y) > y_bound * (1.0 + 1e-12)) {
      out.warnings.push_back("candidate y = " + std::to_string(y) +
                             " outside [-" + std::to_string(y_bound) + ", " +
                             std::to_string(y_bound) + "]; not evaluated");
      continue;
    }
    const Decision d = decide(ctx, y);
    out.trace[i] = {d.score, d.threshold, true};
    out.member[i] = d.score <= d.threshold;
  }
  return out;
}

PredictionSet full_conformal(const Dataset& data, const Eigen::VectorXd& x,
                             const RidgeConfig& config, double alpha,
                             const LikelihoodRatio& ratio, const std::vector<double>& grid) {
  check_test_point(x, config);
  return FullConformalPredictor(data, config, alpha, ratio).set(x, grid);
}

}  // namespace shiftconf
