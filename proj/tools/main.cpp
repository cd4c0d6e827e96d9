// shiftconf: conformal prediction under covariate shift.
// Subcommands: predict, bounds, simulate, dkw, stability-audit.
// Exit codes: 0 ok, 1 runtime failure, 2 configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftconf/bounds.hpp"
#include "shiftconf/conformal.hpp"
#include "shiftconf/core.hpp"
#include "shiftconf/harness.hpp"
#include "shiftconf/report.hpp"
#include "shiftconf/ridge.hpp"
#include "shiftconf/scenario.hpp"

namespace sc = shiftconf;
using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + token + "'");
    }
  }
  if (values.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return values;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> values;
  for (double v : parse_double_list(text, what)) values.push_back(static_cast<int>(v));
  return values;
}

struct CsvShape {
  int dim = 0;
  double max_norm = 0.0;
  double max_abs_y = 0.0;
};

// Pre-scan used only to default p/b/I when the caller does not declare them.
CsvShape scan_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file '" + path + "'");
  CsvShape shape;
  shape.dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (shape.dim < 1) throw std::runtime_error("header must name at least one feature column");
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = parse_double_list(line, "csv row");
    if (static_cast<int>(fields.size()) != shape.dim + 1)
      throw std::runtime_error("row with wrong arity in '" + path + "'");
    double norm_sq = 0.0;
    for (int j = 0; j < shape.dim; ++j)
      norm_sq += fields[static_cast<std::size_t>(j)] * fields[static_cast<std::size_t>(j)];
    shape.max_norm = std::max(shape.max_norm, std::sqrt(norm_sq));
    shape.max_abs_y = std::max(shape.max_abs_y, std::abs(fields.back()));
  }
  return shape;
}

std::string format_endpoint(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

void print_interval(const sc::PredictionInterval& iv, bool as_json) {
  if (as_json) {
    std::cout << sc::interval_to_json(iv).dump() << "\n";
  } else if (iv.empty) {
    std::cout << "interval: empty\n";
  } else {
    std::cout << "interval: [" << format_endpoint(iv.lower) << ", " << format_endpoint(iv.upper)
              << "]\n";
  }
}

sc::LikelihoodRatio make_affine_ratio(double gamma, double scale) {
  if (gamma == 0.0) return sc::LikelihoodRatio::unweighted();
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw std::invalid_argument("--gamma must lie in [0, 1)");
  return sc::LikelihoodRatio::bounded(
      [gamma, scale](const Eigen::VectorXd& x) { return 1.0 + gamma * x[0] / scale; },
      (1.0 + gamma) / (1.0 - gamma));
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string data_path;
  std::string method = "split";
  double alpha = 0.0;
  std::string x_text;
  int dim = 0;
  double b = 0.0;
  double y_bound = 0.0;
  double lambda = 1.0;
  int n_train = 0;
  std::string split_mode = "random";
  std::uint64_t seed = 0;
  int folds = 0;
  double inflation = 0.0;
  bool weighted = false;
  double gamma = 0.0;
  int grid_points = 513;
  bool json = false;
  std::string set_csv;
};

int run_predict(const PredictArgs& args) {
  const CsvShape shape = scan_csv(args.data_path);
  const int dim = args.dim > 0 ? args.dim : shape.dim;
  const double b = args.b > 0.0 ? args.b : std::max(shape.max_norm, 1e-12);
  const double y_bound = args.y_bound > 0.0 ? args.y_bound : std::max(shape.max_abs_y, 1e-12);
  const sc::Dataset data = sc::load_csv(args.data_path, dim, b, y_bound);

  const auto x_values = parse_double_list(args.x_text, "--x");
  if (static_cast<int>(x_values.size()) != dim)
    throw std::invalid_argument("--x must list exactly " + std::to_string(dim) + " values");
  Eigen::VectorXd x(dim);
  for (int j = 0; j < dim; ++j) x[j] = x_values[static_cast<std::size_t>(j)];

  const sc::RidgeConfig config{args.lambda, dim, b, y_bound};
  const sc::LikelihoodRatio ratio = args.weighted ? make_affine_ratio(args.gamma, b)
                                                  : sc::LikelihoodRatio::unweighted();
  const sc::Method method = sc::method_from_name(args.method);

  if (method == sc::Method::cv_plus && (args.folds < 2 || data.n() % args.folds != 0))
    throw std::invalid_argument("folds must divide n (n = " + std::to_string(data.n()) + ")");

  switch (method) {
    case sc::Method::split: {
      const int n_train = args.n_train > 0 ? args.n_train : data.n() / 2;
      const sc::SplitSpec spec = args.split_mode == "ordered"
                                     ? sc::split_ordered(data, n_train)
                                     : sc::split(data, n_train, sc::RngStream(args.seed, 0));
      print_interval(sc::split_conformal(data.subset(spec.train_indices),
                                         data.subset(spec.cal_indices), x, config, args.alpha,
                                         ratio),
                     args.json);
      return 0;
    }
    case sc::Method::jackknife:
      print_interval(sc::jackknife_plain(data, x, config, args.alpha), args.json);
      return 0;
    case sc::Method::jackknife_plus:
      print_interval(sc::jackknife_plus(data, x, config, args.alpha), args.json);
      return 0;
    case sc::Method::jackknife_plus_inflated:
      print_interval(sc::jackknife_plus_inflated(data, x, config, args.alpha, args.inflation),
                     args.json);
      return 0;
    case sc::Method::jaw:
      print_interval(sc::jaw(data, x, config, args.alpha, ratio), args.json);
      return 0;
    case sc::Method::cv_plus:
      print_interval(
          sc::cv_plus(data, x, config, args.alpha, args.folds, sc::RngStream(args.seed, 1)),
          args.json);
      return 0;
    case sc::Method::full: {
      const auto grid = sc::default_grid(y_bound, args.grid_points);
      const sc::PredictionSet set = sc::full_conformal(data, x, config, args.alpha, ratio, grid);
      if (!args.set_csv.empty()) sc::write_text_file(args.set_csv, sc::set_to_csv(set));
      if (args.json) {
        std::cout << sc::set_to_json(set).dump() << "\n";
      } else {
        double lo = std::numeric_limits<double>::quiet_NaN();
        double hi = lo;
        for (std::size_t i = 0; i < set.grid.size(); ++i)
          if (set.member[i]) {
            if (std::isnan(lo)) lo = set.grid[i];
            hi = set.grid[i];
          }
        std::cout << "set: " << set.member_count() << " of " << set.grid.size()
                  << " grid points";
        if (!std::isnan(lo)) std::cout << "; members span [" << lo << ", " << hi << "]";
        std::cout << "\n";
        for (const auto& w : set.warnings) std::cerr << "warning: " << w << "\n";
      }
      return 0;
    }
  }
  throw std::invalid_argument("unhandled method");
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsArgs {
  std::string theorem = "split";
  bool all = false;
  double alpha = 0.1;
  double delta = 0.1;
  double epsilon = 0.1;
  int n = 1000;
  int m = 100;
  int p = 1;
  double B = 1.0;
  double K2 = 1.0;
  double C = 1.0;
  double L = 1.0;
  double L_Q = 1.0;
  double gamma = 1.0;
  double lambda = 1.0;
  double b = 1.0;
  double y_bound = 1.0;
  double psi_constant = 0.5;
  bool json = false;
};

void print_bound_table(const std::vector<sc::BoundResult>& results) {
  for (const auto& r : results) {
    std::ostringstream line;
    line.precision(6);
    line << r.name << ": threshold=" << r.miscoverage_threshold
         << " failure=" << r.failure_probability;
    if (r.vacuous) line << " VACUOUS";
    line << "  [";
    bool first = true;
    for (const auto& t : r.terms) {
      if (!first) line << ", ";
      line << t.name << "=" << t.value;
      first = false;
    }
    line << "]";
    std::cout << line.str() << "\n";
  }
}

int run_bounds(const BoundsArgs& args) {
  sc::BoundInputs in;
  in.alpha = args.alpha;
  in.delta = args.delta;
  in.epsilon = args.epsilon;
  in.n = args.n;
  in.m = args.m;
  in.B = args.B;
  in.K2 = args.K2;
  in.C = args.C;
  in.L = args.L;
  in.L_Q = args.L_Q;
  in.gamma = args.gamma;
  const sc::RidgeConfig ridge{args.lambda, args.p, args.b, args.y_bound};
  in.with_ridge_profile(ridge);

  std::vector<sc::BoundResult> results;
  if (args.all) {
    results = sc::all_bounds(in);
  } else if (args.theorem == "split") {
    results.push_back(sc::split_bound(in));
  } else if (args.theorem == "split-second-moment") {
    results.push_back(sc::split_bound_second_moment(in));
  } else if (args.theorem == "jackknife-exch") {
    results.push_back(sc::jackknife_bound_exch(in));
  } else if (args.theorem == "jackknife-shift") {
    results.push_back(sc::jackknife_bound_shift(in));
  } else if (args.theorem == "cv-plus") {
    results.push_back(sc::cv_plus_bound(in));
  } else if (args.theorem == "full-exch") {
    results.push_back(sc::full_bound_exch(in));
  } else if (args.theorem == "full-shift") {
    results.push_back(sc::full_bound_shift(in));
  } else if (args.theorem == "bian-cv") {
    results.push_back(
        sc::bian_cv_bound(args.alpha, args.delta, std::max(1, args.n / args.m), args.m));
  } else if (args.theorem == "liang") {
    results.push_back(sc::liang_comparison_bound(in, args.psi_constant));
    sc::BoundInputs balanced = in;
    balanced.m = sc::liang_balanced_m(args.n);
    sc::BoundResult at_balanced = sc::liang_comparison_bound(balanced, args.psi_constant);
    at_balanced.name += "_balanced_m" + std::to_string(balanced.m);
    results.push_back(at_balanced);
  } else {
    throw std::invalid_argument("unknown theorem '" + args.theorem + "'");
  }

  if (args.json) {
    ordered_json out = ordered_json::array();
    for (const auto& r : results) out.push_back(sc::bound_to_json(r));
    std::cout << out.dump(2) << "\n";
  } else {
    print_bound_table(results);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario = "bounded";
  double gamma = 0.5;
  double k_target = 1.5;
  int dim = 1;
  double b = 1.0;
  double noise_scale = 1.0;
  std::string methods = "split";
  bool weighted = false;
  double alpha = 0.1;
  double inflation = 0.0;
  int folds = 0;
  int n = 400;
  int n_train = 200;
  int trials = 100;
  int n_test = 10000;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  int grid_points = 257;
  double bounds_delta = 0.1;
  double c_const = 1.0;
  std::string out_dir;
};

std::vector<sc::BoundResult> default_bounds(const SimulateArgs& args,
                                            const sc::ShiftScenario& scenario,
                                            sc::Method method) {
  std::vector<sc::BoundResult> bounds;
  if (method != sc::Method::split) return bounds;
  sc::BoundInputs in;
  in.alpha = args.alpha;
  in.delta = args.bounds_delta;
  in.m = args.n - args.n_train;
  in.C = args.c_const;
  if (scenario.config.kind == sc::ScenarioConfig::Kind::bounded) {
    in.B = scenario.ratio.bound_value();
    bounds.push_back(sc::split_bound(in));
  } else {
    in.K2 = scenario.ratio.bound_value();
    bounds.push_back(sc::split_bound_second_moment(in));
  }
  return bounds;
}

int run_simulate(const SimulateArgs& args) {
  sc::ScenarioConfig scenario_config;
  if (args.scenario == "bounded") {
    scenario_config.kind = sc::ScenarioConfig::Kind::bounded;
  } else if (args.scenario == "second-moment") {
    scenario_config.kind = sc::ScenarioConfig::Kind::second_moment;
  } else {
    throw std::invalid_argument("unknown scenario '" + args.scenario + "'");
  }
  scenario_config.gamma = args.gamma;
  scenario_config.k_target = args.k_target;
  scenario_config.dim = args.dim;
  scenario_config.x_norm_bound = args.b;
  scenario_config.noise_scale = args.noise_scale;
  const sc::ShiftScenario scenario = sc::make_scenario(scenario_config);

  std::string out_dir = args.out_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("SHIFTCONF_OUT_DIR");
    out_dir = env != nullptr ? env : ".";
  }
  std::filesystem::create_directories(out_dir);

  std::stringstream method_stream(args.methods);
  std::string method_token;
  bool any = false;
  while (std::getline(method_stream, method_token, ',')) {
    any = true;
    const sc::Method method = sc::method_from_name(method_token);
    if (method == sc::Method::cv_plus && (args.folds < 2 || args.n % args.folds != 0))
      throw std::invalid_argument("folds must divide n");

    sc::ExperimentConfig config;
    config.method = {method, args.alpha, args.weighted, args.inflation, args.folds};
    config.scenario = scenario_config;
    config.n = args.n;
    config.n_train = args.n_train;
    config.trials = args.trials;
    config.n_test = args.n_test;
    config.lambda = args.lambda;
    config.master_seed = args.seed;
    config.threads = args.threads;
    config.full_grid_points = args.grid_points;

    const auto bounds = default_bounds(args, scenario, method);
    const sc::ExperimentReport report = sc::run_experiment(config, scenario, bounds);

    const auto stem = (std::filesystem::path(out_dir) / method_token).string();
    sc::write_text_file(stem + "_report.json", sc::report_to_json(report).dump(2) + "\n");
    sc::write_text_file(stem + "_trials.csv", sc::trials_to_csv(report));
    sc::write_text_file(stem + "_pe_hist.csv", sc::pe_histogram_csv(report));

    double mean = 0.0;
    for (const auto& t : report.trials) mean += t.pe_estimate;
    mean /= static_cast<double>(report.trials.size());
    std::cout.precision(4);
    std::cout << method_token << ": mean_pe=" << mean
              << " q90_pe=" << report.pe_deciles[4].second << " trials=" << config.trials
              << " wall=" << report.wall_time_s << "s -> " << stem << "_report.json\n";
  }
  if (!any) throw std::invalid_argument("--methods lists no methods");
  return 0;
}

// ---------------------------------------------------------------------------
// dkw
// ---------------------------------------------------------------------------

struct DkwArgs {
  std::string lemma = "a1";
  std::string n_list = "400,1600";
  int replications = 500;
  double gamma = 0.5;
  double B = 0.0;  // 0: derive from gamma
  double delta = 0.1;
  double deviation = 0.1;
  double c_const = 1.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

int run_dkw(const DkwArgs& args) {
  const auto ns = parse_int_list(args.n_list, "--n-list");
  const double derived_bound = (1.0 + args.gamma) / (1.0 - args.gamma);
  const double sup_bound = args.B > 0.0 ? args.B : derived_bound;

  std::cout.precision(5);
  std::vector<double> medians;
  for (const int n : ns) {
    sc::DkwStudyConfig config;
    config.gamma = args.gamma;
    config.n = n;
    config.replications = args.replications;
    config.noise_scale = args.noise_scale;
    config.master_seed = args.seed;
    config.threads = args.threads;
    const sc::DkwStudyResult study = sc::run_dkw_study(config);
    medians.push_back(study.median_deviation);

    sc::DkwBoundResult bound{};
    if (args.lemma == "a1") {
      bound = sc::dkw_bounded_ratio(n, sup_bound, args.delta, args.c_const);
    } else if (args.lemma == "a2") {
      bound = sc::dkw_second_moment(n, sup_bound, args.deviation, args.c_const);
    } else if (args.lemma == "a3") {
      bound = sc::dkw_alternative(n, sup_bound, args.deviation);
    } else {
      throw std::invalid_argument("unknown lemma '" + args.lemma + "' (a1, a2, a3)");
    }
    std::cout << "n=" << n << " median_sup_dev=" << study.median_deviation
              << " bound_threshold=" << bound.deviation_threshold
              << " bound_failure=" << bound.failure_probability
              << " exceedance=" << study.exceedance_fraction(bound.deviation_threshold) << "\n";
  }
  for (std::size_t k = 0; k + 1 < medians.size(); ++k)
    std::cout << "median_ratio n=" << ns[k] << "/" << ns[k + 1] << ": "
              << medians[k] / medians[k + 1] << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stability-audit
// ---------------------------------------------------------------------------

struct AuditArgs {
  int n = 50;
  int dim = 2;
  double lambda = 1.0;
  double b = 1.0;
  double y_bound = 1.0;
  int datasets = 50;
  int n_swaps = 0;  // 0: all removals
  int probes = 32;
  std::uint64_t seed = 0;
  std::string data_path;
};

int run_stability_audit(const AuditArgs& args) {
  const sc::RidgeConfig config{args.lambda, args.dim, args.b, args.y_bound};
  const sc::StabilityProfile profile = sc::stability_profile(config);

  double worst_ratio = 0.0;
  double worst_loo_gap = 0.0;
  int violations = 0;

  const auto audit_one = [&](const sc::Dataset& data, sc::RngStream rng) {
    const int n = data.n();
    std::vector<Eigen::VectorXd> probes;
    const double a = args.b / std::sqrt(static_cast<double>(args.dim));
    probes.push_back(Eigen::VectorXd::Constant(args.dim, a));
    probes.push_back(Eigen::VectorXd::Constant(args.dim, -a));
    for (int k = 0; k < args.probes; ++k) {
      Eigen::VectorXd x(args.dim);
      for (int j = 0; j < args.dim; ++j) x[j] = rng.uniform(-a, a);
      probes.push_back(x);
    }
    const int swaps = args.n_swaps > 0 ? args.n_swaps : n;
    const double audited =
        sc::audit_uniform_stability(data, config, swaps, probes, rng.derived(2));
    const double bound = profile.c_fn(n) / 2.0;
    worst_ratio = std::max(worst_ratio, audited / bound);
    if (audited > bound) ++violations;

    const sc::LooRefitter refitter(data, config);
    for (int i = 0; i < n; ++i) {
      const auto naive = sc::fit(data.without(i), config);
      const double gap = (refitter.model(i).coefficients() - naive.coefficients())
                             .lpNorm<Eigen::Infinity>();
      worst_loo_gap = std::max(worst_loo_gap, gap);
    }
  };

  if (!args.data_path.empty()) {
    audit_one(sc::load_csv(args.data_path, args.dim, args.b, args.y_bound),
              sc::RngStream(args.seed, 0));
  } else {
    const double a = args.b / std::sqrt(static_cast<double>(args.dim));
    for (int d = 0; d < args.datasets; ++d) {
      sc::RngStream rng(args.seed, static_cast<std::uint64_t>(d));
      std::vector<sc::Sample> samples(static_cast<std::size_t>(args.n));
      for (auto& s : samples) {
        s.x.resize(args.dim);
        for (int j = 0; j < args.dim; ++j) s.x[j] = rng.uniform(-a, a);
        s.y = rng.uniform(-args.y_bound, args.y_bound);
      }
      audit_one(sc::Dataset(std::move(samples), args.dim, args.b, args.y_bound),
                rng.derived(1));
    }
  }

  std::cout.precision(6);
  std::cout << "uniform-stability audit: worst audited/bound ratio = " << worst_ratio
            << " (bound c_n/2 = " << profile.c_fn(args.n) / 2.0 << " at n=" << args.n << ")\n";
  std::cout << "violations: " << violations << "\n";
  std::cout << "max |fast - naive| leave-one-out coefficient gap = " << worst_loo_gap << "\n";
  return violations == 0 && worst_loo_gap <= 1e-8 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal prediction under covariate shift: prediction sets, coverage "
               "bounds, and seeded verification experiments"};
  app.set_config("--config", "", "INI config file; sections mirror subcommand names");
  app.require_subcommand(1);

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "prediction interval or set for one test point");
  predict->add_option("--data", predict_args.data_path, "dataset CSV (x1..xp,y)")->required();
  predict->add_option("--method", predict_args.method,
                      "split|full|jackknife|jackknife_plus|jackknife_plus_inflated|cv_plus|jaw")
      ->required();
  predict->add_option("--alpha", predict_args.alpha, "miscoverage level in (0,1)")->required();
  predict->add_option("--x", predict_args.x_text, "test point, comma-separated")->required();
  predict->add_option("--p", predict_args.dim, "feature count (default: from header)");
  predict->add_option("--b", predict_args.b, "feature norm bound (default: data max)");
  predict->add_option("--y-bound", predict_args.y_bound, "response bound (default: data max)");
  predict->add_option("--lambda", predict_args.lambda, "ridge regularization");
  predict->add_option("--n-train", predict_args.n_train, "split methods: training size");
  predict->add_option("--split", predict_args.split_mode, "random|ordered")
      ->check(CLI::IsMember({"random", "ordered"}));
  predict->add_option("--seed", predict_args.seed, "master seed");
  predict->add_option("--folds", predict_args.folds, "cv_plus fold count");
  predict->add_option("--inflation", predict_args.inflation, "inflated jackknife+ epsilon");
  predict->add_flag("--weighted", predict_args.weighted, "use the affine-tilt likelihood ratio");
  predict->add_option("--gamma", predict_args.gamma, "tilt strength of the ratio");
  predict->add_option("--grid-points", predict_args.grid_points, "full conformal grid size");
  predict->add_flag("--json", predict_args.json, "machine output");
  predict->add_option("--set-csv", predict_args.set_csv, "write full-conformal membership CSV");

  BoundsArgs bounds_args;
  auto* bounds = app.add_subcommand("bounds", "closed-form training-conditional coverage bounds");
  bounds->add_option("--theorem", bounds_args.theorem,
                     "split|split-second-moment|jackknife-exch|jackknife-shift|cv-plus|"
                     "full-exch|full-shift|bian-cv|liang");
  bounds->add_flag("--all", bounds_args.all, "evaluate every bound at shared inputs");
  bounds->add_option("--alpha", bounds_args.alpha);
  bounds->add_option("--delta", bounds_args.delta);
  bounds->add_option("--epsilon", bounds_args.epsilon);
  bounds->add_option("--n", bounds_args.n);
  bounds->add_option("--m", bounds_args.m);
  bounds->add_option("--p", bounds_args.p);
  bounds->add_option("--B", bounds_args.B);
  bounds->add_option("--K2", bounds_args.K2);
  bounds->add_option("--C", bounds_args.C);
  bounds->add_option("--L", bounds_args.L);
  bounds->add_option("--LQ", bounds_args.L_Q);
  bounds->add_option("--gamma", bounds_args.gamma, "comparison-bound inflation");
  bounds->add_option("--lambda", bounds_args.lambda, "ridge profile lambda");
  bounds->add_option("--b", bounds_args.b, "ridge profile feature bound");
  bounds->add_option("--y-bound", bounds_args.y_bound, "ridge profile response bound");
  bounds->add_option("--psi-constant", bounds_args.psi_constant);
  bounds->add_flag("--json", bounds_args.json);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "replicated miscoverage experiments");
  simulate->add_option("--scenario", sim_args.scenario, "bounded|second-moment");
  simulate->add_option("--gamma", sim_args.gamma);
  simulate->add_option("--k-target", sim_args.k_target);
  simulate->add_option("--d", sim_args.dim);
  simulate->add_option("--b", sim_args.b);
  simulate->add_option("--noise-scale", sim_args.noise_scale);
  simulate->add_option("--methods", sim_args.methods, "comma-separated method list");
  simulate->add_flag("--weighted", sim_args.weighted);
  simulate->add_option("--alpha", sim_args.alpha);
  simulate->add_option("--inflation", sim_args.inflation);
  simulate->add_option("--folds", sim_args.folds);
  simulate->add_option("--n", sim_args.n);
  simulate->add_option("--n-train", sim_args.n_train);
  simulate->add_option("--R", sim_args.trials);
  simulate->add_option("--n-test", sim_args.n_test);
  simulate->add_option("--lambda", sim_args.lambda);
  simulate->add_option("--seed", sim_args.seed);
  simulate->add_option("--threads", sim_args.threads);
  simulate->add_option("--grid-points", sim_args.grid_points);
  simulate->add_option("--bounds-delta", sim_args.bounds_delta);
  simulate->add_option("--C", sim_args.c_const);
  simulate->add_option("--out-dir", sim_args.out_dir,
                       "output directory (default: $SHIFTCONF_OUT_DIR or .)");

  DkwArgs dkw_args;
  auto* dkw = app.add_subcommand("dkw", "weighted-CDF sup-deviation replication study");
  dkw->add_option("--lemma", dkw_args.lemma, "a1|a2|a3");
  dkw->add_option("--n-list", dkw_args.n_list, "comma-separated sample sizes");
  dkw->add_option("--R", dkw_args.replications);
  dkw->add_option("--gamma", dkw_args.gamma);
  dkw->add_option("--B", dkw_args.B, "ratio bound override (default derives from gamma)");
  dkw->add_option("--delta", dkw_args.delta);
  dkw->add_option("--deviation", dkw_args.deviation);
  dkw->add_option("--C", dkw_args.c_const);
  dkw->add_option("--noise-scale", dkw_args.noise_scale);
  dkw->add_option("--seed", dkw_args.seed);
  dkw->add_option("--threads", dkw_args.threads);

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("stability-audit", "uniform-stability and LOO fast-path audit");
  audit->add_option("--n", audit_args.n);
  audit->add_option("--p", audit_args.dim);
  audit->add_option("--lambda", audit_args.lambda);
  audit->add_option("--b", audit_args.b);
  audit->add_option("--y-bound", audit_args.y_bound);
  audit->add_option("--datasets", audit_args.datasets);
  audit->add_option("--n-swaps", audit_args.n_swaps);
  audit->add_option("--probes", audit_args.probes);
  audit->add_option("--seed", audit_args.seed);
  audit->add_option("--data", audit_args.data_path, "audit this CSV instead of synthetic data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (predict->parsed()) return run_predict(predict_args);
    if (bounds->parsed()) return run_bounds(bounds_args);
    if (simulate->parsed()) return run_simulate(sim_args);
    if (dkw->parsed()) return run_dkw(dkw_args);
    if (audit->parsed()) return run_stability_audit(audit_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
