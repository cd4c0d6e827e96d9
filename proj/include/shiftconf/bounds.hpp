#pragma once

#include <functional>
#include <string>
#include <vector>

#include "shiftconf/ridge.hpp"

namespace shiftconf {

/// Every scalar the coverage bounds consume. The universal constant C is
/// not pinned anywhere in the theory, so it stays an explicit input
/// (default 1) and is echoed in every result.
struct BoundInputs {
  double alpha = 0.1;
  double delta = 0.1;    // tail probability of the CDF-deviation event
  double epsilon = 0.1;  // tail probability of the model-concentration event
  int n = 100;           // training size
  int m = 50;            // calibration or fold size
  int p = 1;             // parameter dimension
  double B = 1.0;        // sup bound on dQ/dP (>= 1)
  double K2 = 1.0;       // second-moment bound on dQ/dP (>= 1)
  double C = 1.0;        // universal constant
  std::function<double(int)> c_fn;  // uniform-stability constant n -> c_n
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double L = 1.0;      // residual-density bound under P (index per theorem)
  double L_Q = 1.0;    // residual-density bound under Q
  double gamma = 1.0;  // inflation, comparison bound only

  /// Fills c_fn, kappa1, kappa2, p from the ridge instantiation.
  BoundInputs& with_ridge_profile(const RidgeConfig& config);
};

struct BoundTerm {
  std::string name;
  double value;
};

struct BoundResult {
  std::string name;
  double miscoverage_threshold = 0.0;  // alpha + sum of terms, exactly
  double failure_probability = 0.0;    // clamped to [0, 1]
  bool vacuous = false;                // threshold >= 1 or raw failure >= 1
  std::vector<BoundTerm> terms;
};

/// A(n, p, eps) = 2 kappa2 c_{n-1} (1/kappa1 + sqrt(n/(2 kappa1^2) log(2p/eps))).
double shorthand_A(const BoundInputs& in);

/// E(n, p, eps) = c_{n+1} + sqrt(2 n log(2p/eps)) kappa2 c_n / kappa1.
double shorthand_E(const BoundInputs& in);

/// Split conformal, bounded ratio: alpha + (sqrt(2B log(4/delta)) + 3C) sqrt(B/m).
BoundResult split_bound(const BoundInputs& in);

/// Split conformal, second-moment ratio: alpha + 2 K (3C+1) / (delta sqrt(m)).
BoundResult split_bound_second_moment(const BoundInputs& in);

/// Jackknife+ under exchangeability: alpha + sqrt(log(2/delta)/(2n)) + L A.
BoundResult jackknife_bound_exch(const BoundInputs& in);

/// Jackknife+ under covariate shift: the bounded-ratio slack plus L_Q A.
BoundResult jackknife_bound_shift(const BoundInputs& in);

/// CV+ with m samples per fold: stability slack scales linearly in m.
BoundResult cv_plus_bound(const BoundInputs& in);

/// Full conformal under exchangeability: alpha + sqrt(log(2/delta)/(2n)) + L E.
BoundResult full_bound_exch(const BoundInputs& in);

/// Full conformal under covariate shift: bounded-ratio slack plus L_Q E.
BoundResult full_bound_shift(const BoundInputs& in);

/// K-fold comparison bound: 2 alpha + sqrt(2 log(K/delta) / m).
BoundResult bian_cv_bound(double alpha, double delta, int folds, int fold_size);

/// Inflated-jackknife+ comparison bound built from (m, n)-stability:
/// alpha + 3 sqrt(log(1/delta)/min(m, n)) + 2 (psi/gamma)^{1/3} with
/// psi = psi_constant * m * c_{n-1}; fails with probability
/// 3 delta + (psi/gamma)^{1/3}. psi_constant defaults to the only constant
/// the derivation fixes (1/2, from the one-step stability bound).
BoundResult liang_comparison_bound(const BoundInputs& in, double psi_constant = 0.5);

/// Fold size n^{2/5} that balances the two slack terms above.
int liang_balanced_m(int n);

/// All bounds at shared inputs, for table/JSON display.
std::vector<BoundResult> all_bounds(const BoundInputs& in);

}  // namespace shiftconf
