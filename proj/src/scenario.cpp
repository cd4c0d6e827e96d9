#include "shiftconf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shiftconf {

namespace {

// Adaptive Simpson on a smooth segment; the integrands below are piecewise
// rational once split at their breakpoints, so this converges quickly.
double simpson_segment(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_segment(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         simpson_segment(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return simpson_segment(f, a, b, fa, fm, fb, tol, 40);
}

}  // namespace

std::vector<Sample> ShiftScenario::sample_P(RngStream& rng, int count) const {
  const auto xs = sample_P_x(rng, count);
  std::vector<Sample> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i].x = xs[i];
    out[i].y = sample_y_given_x(rng, xs[i]);
  }
  return out;
}

std::vector<Sample> ShiftScenario::sample_Q(RngStream& rng, int count) const {
  const auto xs = sample_Q_x(rng, count);
  std::vector<Sample> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i].x = xs[i];
    out[i].y = sample_y_given_x(rng, xs[i]);
  }
  return out;
}

Dataset ShiftScenario::make_dataset(RngStream& rng, int count) const {
  return Dataset(sample_P(rng, count), config.dim, config.x_norm_bound, y_abs_bound);
}

namespace {

struct GeometrySetup {
  double half_width;         // a: cube half-width, a * sqrt(d) = b
  Eigen::VectorXd theta;     // unit-norm signal aligned with the cube diagonal
  double y_abs_bound;
};

GeometrySetup cube_geometry(int dim, double x_norm_bound, double noise_scale) {
  if (dim < 1) throw std::invalid_argument("scenario: dim must be positive");
  if (!(x_norm_bound > 0.0)) throw std::invalid_argument("scenario: x_norm_bound must be > 0");
  if (!(noise_scale > 0.0)) throw std::invalid_argument("scenario: noise_scale must be > 0");
  GeometrySetup g;
  g.half_width = x_norm_bound / std::sqrt(static_cast<double>(dim));
  g.theta = Eigen::VectorXd::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  // |theta' x| <= b and the noise half-width never exceeds noise_scale
  g.y_abs_bound = x_norm_bound + noise_scale;
  return g;
}

// Noise half-width at x: noise_scale * (3 + x1/a) / 4, in
// [noise_scale/2, noise_scale]. Larger first coordinate means noisier
// responses, which is what makes an uncorrected method miscover under a
// tilt toward large x1.
double noise_half_width(double noise_scale, double half_width, double x1) {
  return noise_scale * (3.0 + x1 / half_width) / 4.0;
}

std::function<double(RngStream&, const Eigen::VectorXd&)> make_conditional(
    double noise_scale, double half_width, Eigen::VectorXd theta, double y_abs_bound) {
  return [noise_scale, half_width, theta = std::move(theta), y_abs_bound](
             RngStream& rng, const Eigen::VectorXd& x) {
    const double w = noise_half_width(noise_scale, half_width, x[0]);
    const double y = theta.dot(x) + rng.uniform(-w, w);
    return std::clamp(y, -y_abs_bound, y_abs_bound);
  };
}

// Zero-model score CDF under Q for dim == 1: F(t) = P_Q(|X + U| <= t) with
// U | x uniform on [-w(x), w(x)]. The integrand is piecewise rational in x,
// so we split at the breakpoints and integrate each smooth piece.
std::function<double(double)> make_zero_model_score_cdf(double gamma, double a,
                                                        double noise_scale) {
  return [gamma, a, noise_scale](double t) -> double {
    if (!(t > 0.0)) return 0.0;
    const double c0 = 0.75 * noise_scale;
    const double c1 = 0.25 * noise_scale / a;
    const auto density_q = [gamma, a](double x) { return (1.0 + gamma * x / a) / (2.0 * a); };
    const auto coverage = [t, c0, c1](double x) {
      const double w = c0 + c1 * x;
      const double hi = std::min(t - x, w);
      const double lo = std::max(-t - x, -w);
      return (hi > lo) ? (hi - lo) / (2.0 * w) : 0.0;
    };
    const auto integrand = [&](double x) { return density_q(x) * coverage(x); };

    std::vector<double> cuts = {-a, a};
    const auto add_cut = [&](double num, double den) {
      if (den == 0.0) return;
      const double x = num / den;
      if (x > -a && x < a) cuts.push_back(x);
    };
    add_cut(t - c0, 1.0 + c1);   // t - x = w(x)
    add_cut(t + c0, 1.0 - c1);   // t - x = -w(x)
    add_cut(-t - c0, 1.0 + c1);  // -t - x = w(x)
    add_cut(c0 - t, 1.0 - c1);   // -t - x = -w(x)
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      total += integrate(integrand, cuts[k], cuts[k + 1], 1e-13);
    return std::clamp(total, 0.0, 1.0);
  };
}

}  // namespace

ShiftScenario make_scenario_bounded(double gamma, int dim, double x_norm_bound,
                                    double noise_scale) {
  if (!(gamma >= 0.0) || !(gamma < 1.0))
    throw std::invalid_argument("make_scenario_bounded: gamma must be in [0, 1)");
  const GeometrySetup g = cube_geometry(dim, x_norm_bound, noise_scale);
  const double a = g.half_width;

  ShiftScenario s;
  s.config = {ScenarioConfig::Kind::bounded, gamma, 1.0, dim, x_norm_bound, noise_scale};
  s.y_abs_bound = g.y_abs_bound;
  s.theta = g.theta;
  s.sample_y_given_x = make_conditional(noise_scale, a, g.theta, g.y_abs_bound);

  s.sample_P_x = [dim, a](RngStream& rng, int count) {
    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(count));
    for (auto& x : xs) {
      x.resize(dim);
      for (int j = 0; j < dim; ++j) x[j] = rng.uniform(-a, a);
    }
    return xs;
  };

  const auto ratio_eval = [gamma, a](const Eigen::VectorXd& x) {
    return 1.0 + gamma * x[0] / a;
  };
  const double sup_ratio_bound = (gamma == 0.0) ? 1.0 : (1.0 + gamma) / (1.0 - gamma);
  s.ratio = LikelihoodRatio::bounded(ratio_eval, sup_ratio_bound);

  // Exact rejection sampling from P_X with acceptance ratio/B.
  s.sample_Q_x = [dim, a, ratio_eval, sup_ratio_bound](RngStream& rng, int count) {
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(static_cast<std::size_t>(count));
    Eigen::VectorXd x(dim);
    while (static_cast<int>(xs.size()) < count) {
      for (int j = 0; j < dim; ++j) x[j] = rng.uniform(-a, a);
      if (rng.uniform01() * sup_ratio_bound < ratio_eval(x)) xs.push_back(x);
    }
    return xs;
  };

  if (dim == 1) s.true_score_cdf_Q = make_zero_model_score_cdf(gamma, a, noise_scale);
  return s;
}

ShiftScenario make_scenario_second_moment(double k_target, int dim, double x_norm_bound,
                                          double noise_scale) {
  if (!(k_target > 1.0) || !std::isfinite(k_target))
    throw std::invalid_argument(
        "make_scenario_second_moment: k_target must be finite and > 1");
  const GeometrySetup g = cube_geometry(dim, x_norm_bound, noise_scale);
  const double a = g.half_width;

  // Power-law tilt on t = (x1 + a) / (2a) ~ U(0, 1): ratio = (1 - e) t^{-e}
  // with the exponent solving (1 - e)^2 / (1 - 2e) = k^2. Always e < 1/2, so
  // the ratio is square-integrable yet unbounded near t = 0.
  const double excess = k_target * k_target - 1.0;
  const double exponent = std::sqrt(excess * (excess + 1.0)) - excess;

  ShiftScenario s;
  s.config = {ScenarioConfig::Kind::second_moment, 0.0, k_target, dim, x_norm_bound, noise_scale};
  s.y_abs_bound = g.y_abs_bound;
  s.theta = g.theta;
  s.sample_y_given_x = make_conditional(noise_scale, a, g.theta, g.y_abs_bound);

  s.sample_P_x = [dim, a](RngStream& rng, int count) {
    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(count));
    for (auto& x : xs) {
      x.resize(dim);
      // 1 - u keeps the tilted coordinate strictly inside (-a, a]
      x[0] = (2.0 * (1.0 - rng.uniform01()) - 1.0) * a;
      for (int j = 1; j < dim; ++j) x[j] = rng.uniform(-a, a);
    }
    return xs;
  };

  const auto ratio_eval = [exponent, a](const Eigen::VectorXd& x) {
    const double t = std::max((x[0] / a + 1.0) / 2.0, 1e-300);
    return (1.0 - exponent) * std::pow(t, -exponent);
  };
  s.ratio = LikelihoodRatio::second_moment(ratio_eval, k_target);

  // Inverse-CDF sampling of the tilted coordinate: F(t) = t^{1-e}.
  s.sample_Q_x = [dim, a, exponent](RngStream& rng, int count) {
    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(count));
    for (auto& x : xs) {
      x.resize(dim);
      const double v = 1.0 - rng.uniform01();  // (0, 1]
      const double t = std::pow(v, 1.0 / (1.0 - exponent));
      x[0] = (2.0 * t - 1.0) * a;
      for (int j = 1; j < dim; ++j) x[j] = rng.uniform(-a, a);
    }
    return xs;
  };

  return s;
}

ShiftScenario make_scenario(const ScenarioConfig& config) {
  switch (config.kind) {
    case ScenarioConfig::Kind::bounded:
      return make_scenario_bounded(config.gamma, config.dim, config.x_norm_bound,
                                   config.noise_scale);
    case ScenarioConfig::Kind::second_moment:
      return make_scenario_second_moment(config.k_target, config.dim, config.x_norm_bound,
                                         config.noise_scale);
  }
  throw std::invalid_argument("make_scenario: unknown scenario kind");
}

}  // namespace shiftconf
