#include "shiftconf/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace shiftconf {

namespace {

void check_prob(double v, const char* name) {
  if (!(v > 0.0) || !(v < 1.0))
    throw std::invalid_argument(std::string("bounds: ") + name + " must be in (0, 1)");
}

void check_common(const BoundInputs& in) {
  check_prob(in.alpha, "alpha");
  if (!(in.C >= 0.0)) throw std::invalid_argument("bounds: C must be >= 0");
}

void check_stability(const BoundInputs& in) {
  if (!in.c_fn) throw std::invalid_argument("bounds: c_fn is required for this bound");
  if (!(in.kappa1 > 0.0) || !(in.kappa2 > 0.0) || in.kappa1 > in.kappa2 * (1.0 + 1e-12))
    throw std::invalid_argument("bounds: need 0 < kappa1 <= kappa2");
  if (in.p < 1) throw std::invalid_argument("bounds: p must be positive");
  check_prob(in.epsilon, "epsilon");
}

BoundResult assemble(std::string name, double alpha, std::vector<BoundTerm> terms,
                     double failure_raw) {
  BoundResult out;
  out.name = std::move(name);
  out.terms = std::move(terms);
  double threshold = alpha;
  for (const BoundTerm& t : out.terms) threshold += t.value;
  out.miscoverage_threshold = threshold;
  out.failure_probability = std::min(1.0, std::max(0.0, failure_raw));
  out.vacuous = threshold >= 1.0 || failure_raw >= 1.0;
  return out;
}

double bounded_ratio_slack(double B, double delta, double C, int count) {
  if (!(B >= 1.0)) throw std::invalid_argument("bounds: B must be >= 1");
  if (count < 1) throw std::invalid_argument("bounds: sample count must be positive");
  return (std::sqrt(2.0 * B * std::log(4.0 / delta)) + 3.0 * C) *
         std::sqrt(B / static_cast<double>(count));
}

double exchangeable_dkw_slack(double delta, int n) {
  if (n < 1) throw std::invalid_argument("bounds: n must be positive");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

}  // namespace

BoundInputs& BoundInputs::with_ridge_profile(const RidgeConfig& config) {
  const StabilityProfile profile = stability_profile(config);
  c_fn = profile.c_fn;
  kappa1 = profile.kappa1;
  kappa2 = profile.kappa2;
  p = config.dim;
  return *this;
}

double shorthand_A(const BoundInputs& in) {
  check_stability(in);
  if (in.n < 2) throw std::invalid_argument("shorthand_A: needs n >= 2");
  const double n = static_cast<double>(in.n);
  const double log_term = std::log(2.0 * static_cast<double>(in.p) / in.epsilon);
  return 2.0 * in.kappa2 * in.c_fn(in.n - 1) *
         (1.0 / in.kappa1 + std::sqrt(n / (2.0 * in.kappa1 * in.kappa1) * log_term));
}

double shorthand_E(const BoundInputs& in) {
  check_stability(in);
  if (in.n < 1) throw std::invalid_argument("shorthand_E: needs n >= 1");
  const double n = static_cast<double>(in.n);
  const double log_term = std::log(2.0 * static_cast<double>(in.p) / in.epsilon);
  return in.c_fn(in.n + 1) +
         std::sqrt(2.0 * n * log_term) * in.kappa2 * in.c_fn(in.n) / in.kappa1;
}

BoundResult split_bound(const BoundInputs& in) {
  check_common(in);
  check_prob(in.delta, "delta");
  const double slack = bounded_ratio_slack(in.B, in.delta, in.C, in.m);
  return assemble("split_bounded", in.alpha, {{"dkw_slack", slack}}, in.delta);
}

BoundResult split_bound_second_moment(const BoundInputs& in) {
  check_common(in);
  if (!(in.delta > 0.0) || !(in.delta <= 1.0))
    throw std::invalid_argument("split_bound_second_moment: delta must be in (0, 1]");
  if (!(in.K2 >= 1.0)) throw std::invalid_argument("bounds: K2 must be >= 1");
  if (in.m < 1) throw std::invalid_argument("bounds: m must be positive");
  const double slack =
      2.0 * in.K2 * (3.0 * in.C + 1.0) / (in.delta * std::sqrt(static_cast<double>(in.m)));
  return assemble("split_second_moment", in.alpha, {{"dkw_slack", slack}}, in.delta);
}

BoundResult jackknife_bound_exch(const BoundInputs& in) {
  check_common(in);
  check_prob(in.delta, "delta");
  if (!(in.L > 0.0)) throw std::invalid_argument("bounds: L must be positive");
  return assemble("jackknife_plus_exch", in.alpha,
                  {{"dkw_slack", exchangeable_dkw_slack(in.delta, in.n)},
                   {"stability_slack", in.L * shorthand_A(in)}},
                  in.epsilon + in.delta);
}

BoundResult jackknife_bound_shift(const BoundInputs& in) {
  check_common(in);
  check_prob(in.delta, "delta");
  if (!(in.L_Q > 0.0)) throw std::invalid_argument("bounds: L_Q must be positive");
  return assemble("jackknife_plus_shift", in.alpha,
                  {{"dkw_slack", bounded_ratio_slack(in.B, in.delta, in.C, in.n)},
                   {"stability_slack", in.L_Q * shorthand_A(in)}},
                  in.epsilon + in.delta);
}

BoundResult cv_plus_bound(const BoundInputs& in) {
  check_common(in);
  check_prob(in.delta, "delta");
  check_stability(in);
  if (!(in.L > 0.0)) throw std::invalid_argument("bounds: L must be positive");
  if (in.m < 1 || in.m >= in.n)
    throw std::invalid_argument("cv_plus_bound: fold size m must satisfy 1 <= m < n");
  const double n = static_cast<double>(in.n);
  const double log_term = std::log(2.0 * static_cast<double>(in.p) / in.epsilon);
  const double stability =
      2.0 * static_cast<double>(in.m) * in.L * in.kappa2 * in.c_fn(in.n - in.m) *
      (1.0 / in.kappa1 + std::sqrt(n / (2.0 * in.kappa1 * in.kappa1) * log_term));
  return assemble("cv_plus", in.alpha,
                  {{"dkw_slack", exchangeable_dkw_slack(in.delta, in.n)},
                   {"stability_slack", stability}},
                  in.epsilon + in.delta);
}

BoundResult full_bound_exch(const BoundInputs& in) {
  check_common(in);
  check_prob(in.delta, "delta");
  if (!(in.L > 0.0)) throw std::invalid_argument("bounds: L must be positive");
  return assemble("full_exch", in.alpha,
                  {{"dkw_slack", exchangeable_dkw_slack(in.delta, in.n)},
                   {"stability_slack", in.L * shorthand_E(in)}},
                  in.epsilon + in.delta);
}

BoundResult full_bound_shift(const BoundInputs& in) {
  check_common(in);
  check_prob(in.delta, "delta");
  if (!(in.L_Q > 0.0)) throw std::invalid_argument("bounds: L_Q must be positive");
  return assemble("full_shift", in.alpha,
                  {{"dkw_slack", bounded_ratio_slack(in.B, in.delta, in.C, in.n)},
                   {"stability_slack", in.L_Q * shorthand_E(in)}},
                  in.epsilon + in.delta);
}

BoundResult bian_cv_bound(double alpha, double delta, int folds, int fold_size) {
  check_prob(alpha, "alpha");
  check_prob(delta, "delta");
  if (folds < 1) throw std::invalid_argument("bian_cv_bound: folds must be >= 1");
  if (fold_size < 1) throw std::invalid_argument("bian_cv_bound: fold size must be positive");
  const double slack =
      std::sqrt(2.0 * std::log(static_cast<double>(folds) / delta) / static_cast<double>(fold_size));
  return assemble("bian_cv", alpha, {{"extra_alpha", alpha}, {"fold_slack", slack}}, delta);
}

BoundResult liang_comparison_bound(const BoundInputs& in, double psi_constant) {
  check_common(in);
  check_prob(in.delta, "delta");
  if (!in.c_fn) throw std::invalid_argument("liang_comparison_bound: c_fn is required");
  if (in.n < 2) throw std::invalid_argument("liang_comparison_bound: needs n >= 2");
  if (in.m < 1) throw std::invalid_argument("liang_comparison_bound: m must be positive");
  if (!(in.gamma > 0.0)) throw std::invalid_argument("liang_comparison_bound: gamma must be > 0");
  if (!(psi_constant > 0.0))
    throw std::invalid_argument("liang_comparison_bound: psi_constant must be > 0");
  const double min_mn = static_cast<double>(std::min(in.m, in.n));
  const double dkw = 3.0 * std::sqrt(std::log(1.0 / in.delta) / min_mn);
  const double psi = psi_constant * static_cast<double>(in.m) * in.c_fn(in.n - 1);
  const double cube = std::cbrt(psi / in.gamma);
  return assemble("liang_inflated_jackknife", in.alpha,
                  {{"dkw_slack", dkw}, {"stability_slack", 2.0 * cube}},
                  3.0 * in.delta + cube);
}

int liang_balanced_m(int n) {
  if (n < 1) throw std::invalid_argument("liang_balanced_m: n must be positive");
  const double m = std::pow(static_cast<double>(n), 0.4);
  return std::max(1, static_cast<int>(std::llround(m)));
}

std::vector<BoundResult> all_bounds(const BoundInputs& in) {
  std::vector<BoundResult> out;
  out.push_back(split_bound(in));
  out.push_back(split_bound_second_moment(in));
  if (in.c_fn) {
    out.push_back(jackknife_bound_exch(in));
    out.push_back(jackknife_bound_shift(in));
    if (in.m >= 1 && in.m < in.n) out.push_back(cv_plus_bound(in));
    out.push_back(full_bound_exch(in));
    out.push_back(full_bound_shift(in));
    out.push_back(liang_comparison_bound(in));
  }
  out.push_back(bian_cv_bound(in.alpha, in.delta, std::max(1, in.n / std::max(1, in.m)), in.m));
  return out;
}

}  // namespace shiftconf
