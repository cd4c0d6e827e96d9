#include <doctest.h>

#include <cmath>
#include <vector>

#include "shiftconf/bounds.hpp"

using namespace shiftconf;

namespace {

BoundInputs shorthand_example_inputs() {
  // n=100, p=2, eps=0.1, kappa1=1, kappa2=2, c_99=0.01, c_100=0.01, c_101=0.0099
  BoundInputs in;
  in.n = 100;
  in.p = 2;
  in.epsilon = 0.1;
  in.kappa1 = 1.0;
  in.kappa2 = 2.0;
  in.c_fn = [](int n) {
    if (n == 99 || n == 100) return 0.01;
    if (n == 101) return 0.0099;
    return 0.99 / static_cast<double>(n);
  };
  return in;
}

double term_sum(const BoundResult& r) {
  double s = 0.0;
  for (const auto& t : r.terms) s += t.value;
  return s;
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("shorthand A") {
  BoundInputs in = shorthand_example_inputs();
  CHECK(shorthand_A(in) == doctest::Approx(0.5832406062962479).epsilon(1e-12));

  BoundInputs zero = in;
  zero.c_fn = [](int) { return 0.0; };
  zero.kappa1 = zero.kappa2 = 1.0;
  CHECK(shorthand_A(zero) == 0.0);

  BoundInputs doubled = in;
  doubled.c_fn = [](int n) { return n == 99 ? 0.02 : 0.99 / n; };
  CHECK(shorthand_A(doubled) == doctest::Approx(2.0 * shorthand_A(in)).epsilon(1e-12));
}

TEST_CASE("shorthand E") {
  BoundInputs in = shorthand_example_inputs();
  CHECK(shorthand_E(in) == doctest::Approx(0.5531406062962478).epsilon(1e-12));

  BoundInputs zero = in;
  zero.c_fn = [](int) { return 0.0; };
  CHECK(shorthand_E(zero) == 0.0);

  BoundInputs tighter = in;
  tighter.epsilon = 0.01;
  CHECK(shorthand_E(tighter) > shorthand_E(in));  // grows as epsilon shrinks
}

TEST_CASE("split bound reproduces the hand arithmetic") {
  BoundInputs in;
  in.alpha = 0.1;
  in.delta = 0.1;
  in.m = 10000;
  in.B = 1.2;
  in.C = 1.0;
  const BoundResult r = split_bound(in);
  CHECK(r.miscoverage_threshold == doctest::Approx(0.16545778982808484).epsilon(1e-12));
  CHECK(r.failure_probability == 0.1);
  CHECK_FALSE(r.vacuous);
  CHECK(r.miscoverage_threshold == doctest::Approx(in.alpha + term_sum(r)).epsilon(1e-15));

  // B = 1, C = 0, delta = 4 e^{-2}: the slack collapses to 2 / sqrt(m)
  BoundInputs simple;
  simple.alpha = 0.1;
  simple.delta = 4.0 * std::exp(-2.0);
  simple.m = 100;
  simple.B = 1.0;
  simple.C = 0.0;
  CHECK(split_bound(simple).miscoverage_threshold ==
        doctest::Approx(0.1 + 2.0 / 10.0).epsilon(1e-12));

  BoundInputs huge = in;
  huge.m = 1000000000;
  CHECK(split_bound(huge).miscoverage_threshold == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("second-moment split bound") {
  BoundInputs in;
  in.alpha = 0.1;
  in.delta = 1.0;  // allowed: the statement covers 0 < delta <= 1
  in.m = 64;
  in.K2 = 1.0;
  in.C = 1.0;
  const BoundResult r = split_bound_second_moment(in);
  CHECK(term_sum(r) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.vacuous);

  BoundInputs quad = in;
  quad.m = 256;
  CHECK(term_sum(split_bound_second_moment(quad)) == doctest::Approx(0.5).epsilon(1e-12));

  BoundInputs half_delta = in;
  half_delta.delta = 0.5;
  CHECK(term_sum(split_bound_second_moment(half_delta)) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("jackknife+ bound under exchangeability") {
  // with zero stability constant and delta = 2 e^{-2 n t^2}, slack = t
  BoundInputs in;
  in.alpha = 0.1;
  in.n = 100;
  in.p = 1;
  in.epsilon = 0.05;
  in.kappa1 = in.kappa2 = 1.0;
  in.L = 1.0;
  in.c_fn = [](int) { return 0.0; };
  const double t = 0.1;
  in.delta = 2.0 * std::exp(-2.0 * 100.0 * t * t);
  const BoundResult r = jackknife_bound_exch(in);
  CHECK(r.miscoverage_threshold == doctest::Approx(0.1 + t).epsilon(1e-12));
  CHECK(r.failure_probability == doctest::Approx(in.epsilon + in.delta).epsilon(1e-15));
}

TEST_CASE("jackknife+ bound under shift decomposes into its two slacks") {
  BoundInputs in;
  in.alpha = 0.1;
  in.delta = 0.1;
  in.epsilon = 0.1;
  in.n = 10000;
  in.m = 10000;
  in.p = 2;
  in.B = 1.2;
  in.C = 1.0;
  in.kappa1 = 1.0;
  in.kappa2 = 2.0;
  in.L = 1.0;
  in.L_Q = 1.0;
  in.c_fn = [](int) { return 0.01; };
  const BoundResult shift = jackknife_bound_shift(in);
  const BoundResult split = split_bound(in);  // same B, C, delta, count
  BoundInputs a_in = in;
  const double stability = in.L_Q * shorthand_A(a_in);
  CHECK(shift.terms.size() == 2);
  CHECK(shift.terms[0].value == doctest::Approx(split.terms[0].value).epsilon(1e-15));
  CHECK(shift.terms[1].value == doctest::Approx(stability).epsilon(1e-15));
  CHECK(shift.failure_probability == doctest::Approx(0.2).epsilon(1e-15));

  // with B = 1, C = 0 and L_Q = L the stability term matches the
  // exchangeable bound; only the CDF-deviation slack differs
  BoundInputs iid = in;
  iid.B = 1.0;
  iid.C = 0.0;
  const BoundResult exch = jackknife_bound_exch(iid);
  const BoundResult shift_iid = jackknife_bound_shift(iid);
  CHECK(exch.terms[1].value == doctest::Approx(shift_iid.terms[1].value).epsilon(1e-15));
  CHECK(exch.terms[0].value != shift_iid.terms[0].value);
}

TEST_CASE("cv+ bound matches jackknife+ at fold size one and scales linearly in m") {
  BoundInputs in;
  in.alpha = 0.1;
  in.delta = 0.1;
  in.epsilon = 0.1;
  in.n = 200;
  in.p = 3;
  in.kappa1 = 1.0;
  in.kappa2 = 2.0;
  in.L = 0.8;
  in.c_fn = [](int n) { return 1.0 / static_cast<double>(n); };

  BoundInputs m1 = in;
  m1.m = 1;
  CHECK(cv_plus_bound(m1).miscoverage_threshold ==
        doctest::Approx(jackknife_bound_exch(in).miscoverage_threshold).epsilon(1e-12));

  // constant c keeps the fold term exactly linear in m
  BoundInputs const_c = in;
  const_c.c_fn = [](int) { return 0.005; };
  BoundInputs m2 = const_c;
  m2.m = 2;
  BoundInputs m4 = const_c;
  m4.m = 4;
  const double slack2 = cv_plus_bound(m2).terms[1].value;
  const double slack4 = cv_plus_bound(m4).terms[1].value;
  CHECK(slack4 == doctest::Approx(2.0 * slack2).epsilon(1e-12));

  // ridge profile: the fold term vanishes when m grows slowly against n
  const RidgeConfig ridge{1.0, 3, 1.0, 1.0};
  double prev = 1e300;
  for (const int n : {1000, 10000, 100000}) {
    BoundInputs r = in;
    r.with_ridge_profile(ridge);
    r.n = n;
    r.m = std::max(1, static_cast<int>(std::round(std::pow(n, 0.25))));
    const double term = cv_plus_bound(r).terms[1].value;
    CHECK(term < prev);
    prev = term;
  }
}

TEST_CASE("full conformal bounds") {
  BoundInputs in = shorthand_example_inputs();
  in.alpha = 0.1;
  in.delta = 0.1;
  in.L = 1.0;
  in.L_Q = 1.0;
  in.B = 1.2;
  in.C = 1.0;
  in.m = 100;
  const BoundResult exch = full_bound_exch(in);
  const double dkw = std::sqrt(std::log(20.0) / 200.0);
  CHECK(exch.miscoverage_threshold ==
        doctest::Approx(0.1 + dkw + 0.5531406062962478).epsilon(1e-9));
  CHECK(exch.failure_probability == doctest::Approx(0.2).epsilon(1e-15));

  const BoundResult shifted = full_bound_shift(in);
  CHECK(shifted.terms[1].value == doctest::Approx(exch.terms[1].value).epsilon(1e-15));
  CHECK(shifted.terms[0].value > exch.terms[0].value);  // B > 1 inflates the DKW slack
  CHECK(shifted.vacuous);  // both already exceed 1 at these inputs
}

TEST_CASE("k-fold comparison bound") {
  const BoundResult r = bian_cv_bound(0.05, 0.1, 10, 200);
  CHECK(r.miscoverage_threshold == doctest::Approx(0.31459660262893474).epsilon(1e-12));
  CHECK(r.failure_probability == 0.1);

  const BoundResult single = bian_cv_bound(0.05, 0.1, 1, 200);
  CHECK(single.miscoverage_threshold ==
        doctest::Approx(0.1 + std::sqrt(2.0 * std::log(10.0) / 200.0)).epsilon(1e-12));

  const BoundResult large = bian_cv_bound(0.05, 0.1, 10, 2000000000);
  CHECK(large.miscoverage_threshold == doctest::Approx(0.1).epsilon(1e-4));
}

TEST_CASE("inflated-jackknife comparison bound") {
  const RidgeConfig ridge{1.0, 1, 1.0, 1.0};
  BoundInputs in;
  in.alpha = 0.1;
  in.delta = 0.1;
  in.n = 1000000;
  in.m = liang_balanced_m(1000000);
  in.gamma = 1.0;
  in.with_ridge_profile(ridge);
  CHECK(in.m == 251);

  const BoundResult r = liang_comparison_bound(in);
  const double psi = 0.5 * 251.0 * 16.0 / 999999.0;
  CHECK(r.terms[0].value == doctest::Approx(3.0 * std::sqrt(std::log(10.0) / 251.0)).epsilon(1e-12));
  CHECK(r.terms[1].value == doctest::Approx(2.0 * std::cbrt(psi)).epsilon(1e-12));
  CHECK(r.failure_probability == doctest::Approx(0.3 + std::cbrt(psi)).epsilon(1e-12));

  // at the same n the uniform-stability route is far tighter
  BoundInputs jk = in;
  jk.epsilon = 0.1;
  jk.L = 1.0;
  const BoundResult exch = jackknife_bound_exch(jk);
  CHECK(term_sum(r) > term_sum(exch));

  // gamma -> infinity leaves only the concentration slack
  BoundInputs loose = in;
  loose.gamma = 1e18;
  const BoundResult limit = liang_comparison_bound(loose);
  CHECK(limit.terms[1].value == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(limit.failure_probability == doctest::Approx(0.3).epsilon(1e-5));
}

TEST_CASE("every result keeps lossless term bookkeeping") {
  const RidgeConfig ridge{0.5, 2, 1.0, 1.0};
  BoundInputs in;
  in.alpha = 0.17;
  in.delta = 0.07;
  in.epsilon = 0.03;
  in.n = 5000;
  in.m = 100;
  in.B = 2.0;
  in.K2 = 1.5;
  in.L = 0.9;
  in.L_Q = 1.1;
  in.with_ridge_profile(ridge);
  for (const BoundResult& r : all_bounds(in)) {
    CHECK(r.miscoverage_threshold ==
          doctest::Approx(in.alpha + term_sum(r)).epsilon(1e-15));
    CHECK(r.failure_probability >= 0.0);
    CHECK(r.failure_probability <= 1.0);
  }
}

TEST_CASE("monotonicity across the parameter grid") {
  BoundInputs base;
  base.alpha = 0.1;
  base.delta = 0.1;
  base.m = 400;
  base.B = 1.5;
  base.C = 1.0;

  double prev = 1e300;
  for (const int m : {100, 200, 400, 800, 1600}) {
    BoundInputs in = base;
    in.m = m;
    const double v = split_bound(in).miscoverage_threshold;
    CHECK(v < prev);
    prev = v;
  }
  prev = 0.0;
  for (const double B : {1.0, 1.5, 2.0, 3.0, 5.0}) {
    BoundInputs in = base;
    in.B = B;
    const double v = split_bound(in).miscoverage_threshold;
    CHECK(v > prev);
    prev = v;
  }
  prev = 0.0;
  for (const double C : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    BoundInputs in = base;
    in.C = C;
    const double v = split_bound(in).miscoverage_threshold;
    CHECK(v > prev);
    prev = v;
  }
  prev = 1e300;
  for (const double delta : {0.01, 0.05, 0.1, 0.2, 0.4}) {
    BoundInputs in = base;
    in.delta = delta;
    const double v = split_bound(in).miscoverage_threshold;
    CHECK(v < prev);
    prev = v;
  }

  // theorems 2-5 with the ridge profile shrink as n grows
  const RidgeConfig ridge{1.0, 2, 1.0, 1.0};
  const auto sweep = [&](auto&& bound_fn) {
    double last = 1e300;
    for (const int n : {1000, 3000, 10000, 30000, 100000}) {
      BoundInputs in = base;
      in.n = n;
      in.m = 10;
      in.epsilon = 0.1;
      in.L = 1.0;
      in.L_Q = 1.0;
      in.with_ridge_profile(ridge);
      const double v = bound_fn(in).miscoverage_threshold;
      CHECK(v < last);
      last = v;
    }
  };
  sweep([](const BoundInputs& in) { return jackknife_bound_exch(in); });
  sweep([](const BoundInputs& in) { return jackknife_bound_shift(in); });
  sweep([](const BoundInputs& in) { return full_bound_exch(in); });
  sweep([](const BoundInputs& in) { return full_bound_shift(in); });
  sweep([](const BoundInputs& in) { return cv_plus_bound(in); });
}

TEST_CASE("ridge-profile slacks decay at the root-n rate") {
  const RidgeConfig ridge{1.0, 2, 1.0, 1.0};
  const auto scaled_slack = [&](auto&& bound_fn, int n) {
    BoundInputs in;
    in.alpha = 0.1;
    in.delta = 0.1;
    in.epsilon = 0.1;
    in.n = n;
    in.m = 10;
    in.L = 1.0;
    in.L_Q = 1.0;
    in.B = 1.5;
    in.with_ridge_profile(ridge);
    const BoundResult r = bound_fn(in);
    return (r.miscoverage_threshold - in.alpha) * std::sqrt(static_cast<double>(n));
  };
  const std::vector<int> grid = {1000, 10000, 100000, 1000000};
  const auto check_bounded = [&](auto&& bound_fn) {
    double lo = 1e300, hi = 0.0;
    for (const int n : grid) {
      const double v = scaled_slack(bound_fn, n);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi / lo < 2.5);
  };
  check_bounded([](const BoundInputs& in) { return jackknife_bound_exch(in); });
  check_bounded([](const BoundInputs& in) { return jackknife_bound_shift(in); });
  check_bounded([](const BoundInputs& in) { return full_bound_exch(in); });
  check_bounded([](const BoundInputs& in) { return full_bound_shift(in); });

  // the comparison bound at its balanced fold size decays like n^{-1/5}
  double lo = 1e300, hi = 0.0;
  for (const int n : grid) {
    BoundInputs in;
    in.alpha = 0.1;
    in.delta = 0.1;
    in.n = n;
    in.m = liang_balanced_m(n);
    in.gamma = 1.0;
    in.with_ridge_profile(ridge);
    const BoundResult r = liang_comparison_bound(in);
    const double v =
        (r.miscoverage_threshold - in.alpha) * std::pow(static_cast<double>(n), 0.2);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo < 2.5);
}

TEST_CASE("input validation") {
  BoundInputs in;
  in.alpha = 0.1;
  in.delta = 0.1;
  in.m = 100;
  in.B = 0.5;  // impossible: the ratio integrates to one
  CHECK_THROWS_AS(split_bound(in), std::invalid_argument);
  in.B = 1.0;
  in.delta = 0.0;
  CHECK_THROWS_AS(split_bound(in), std::invalid_argument);
  in.delta = 0.1;
  in.m = 0;
  CHECK_THROWS_AS(split_bound(in), std::invalid_argument);
  BoundInputs no_c;
  CHECK_THROWS_AS(jackknife_bound_exch(no_c), std::invalid_argument);
}

}  // TEST_SUITE
