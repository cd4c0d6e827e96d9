#include "shiftconf/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace shiftconf {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json extended_real(double v) {
  if (std::isinf(v)) return v > 0 ? ordered_json("inf") : ordered_json("-inf");
  return ordered_json(v);
}

std::string format_extended(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

ordered_json scenario_to_json(const ScenarioConfig& s) {
  ordered_json j;
  j["kind"] = s.kind == ScenarioConfig::Kind::bounded ? "bounded" : "second_moment";
  if (s.kind == ScenarioConfig::Kind::bounded)
    j["gamma"] = s.gamma;
  else
    j["k_target"] = s.k_target;
  j["dim"] = s.dim;
  j["x_norm_bound"] = s.x_norm_bound;
  j["noise_scale"] = s.noise_scale;
  return j;
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["method"] = method_name(c.method.method);
  j["alpha"] = c.method.alpha;
  j["weighted"] = c.method.weighted;
  if (c.method.method == Method::jackknife_plus_inflated)
    j["inflation_epsilon"] = c.method.inflation_epsilon;
  if (c.method.method == Method::cv_plus) j["folds"] = c.method.folds;
  if (c.method.method == Method::full) j["full_grid_points"] = c.full_grid_points;
  j["scenario"] = scenario_to_json(c.scenario);
  j["n"] = c.n;
  j["n_train"] = c.n_train;
  j["R"] = c.trials;
  j["n_test"] = c.n_test;
  j["lambda"] = c.lambda;
  j["master_seed"] = c.master_seed;
  return j;
}

}  // namespace

ordered_json bound_to_json(const BoundResult& bound) {
  ordered_json j;
  j["name"] = bound.name;
  j["miscoverage_threshold"] = bound.miscoverage_threshold;
  j["failure_probability"] = bound.failure_probability;
  j["vacuous"] = bound.vacuous;
  ordered_json terms;
  for (const BoundTerm& t : bound.terms) terms[t.name] = t.value;
  j["terms"] = terms;
  return j;
}

ordered_json interval_to_json(const PredictionInterval& interval) {
  ordered_json j;
  j["empty"] = interval.empty;
  if (!interval.empty) {
    j["lower"] = extended_real(interval.lower);
    j["upper"] = extended_real(interval.upper);
    j["width"] = extended_real(interval.width());
  }
  return j;
}

ordered_json set_to_json(const PredictionSet& set) {
  ordered_json j;
  j["grid_points"] = set.grid.size();
  j["member_count"] = set.member_count();
  ordered_json members = ordered_json::array();
  for (std::size_t i = 0; i < set.grid.size(); ++i)
    if (set.member[i]) members.push_back(set.grid[i]);
  j["members"] = members;
  j["warnings"] = set.warnings;
  return j;
}

ordered_json report_to_json(const ExperimentReport& report) {
  ordered_json j;
  j["config"] = config_to_json(report.config);
  ordered_json trials = ordered_json::array();
  for (const TrialResult& t : report.trials) {
    ordered_json row;
    row["trial_id"] = t.trial_id;
    row["seed"] = t.seed;
    row["pe"] = t.pe_estimate;
    row["pe_stderr"] = t.pe_stderr;
    row["median_width"] = extended_real(t.median_width);
    trials.push_back(row);
  }
  j["trials"] = trials;
  ordered_json deciles;
  for (const auto& [level, value] : report.pe_deciles) {
    std::ostringstream key;
    key << level;
    deciles[key.str()] = value;
  }
  j["pe_deciles"] = deciles;
  ordered_json exceedance;
  for (const auto& [name, freq] : report.exceedance) exceedance[name] = freq;
  j["exceedance"] = exceedance;
  ordered_json bounds = ordered_json::array();
  for (const BoundResult& b : report.bounds) bounds.push_back(bound_to_json(b));
  j["bounds"] = bounds;
  j["wall_time_s"] = report.wall_time_s;
  return j;
}

std::string report_to_comparable_string(const ExperimentReport& report) {
  ordered_json j = report_to_json(report);
  j["wall_time_s"] = 0.0;
  return j.dump(2);
}

std::string trials_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "trial_id,seed,pe,pe_stderr,median_width\n";
  out.precision(17);
  for (const TrialResult& t : report.trials)
    out << t.trial_id << ',' << t.seed << ',' << t.pe_estimate << ',' << t.pe_stderr << ','
        << format_extended(t.median_width) << '\n';
  return out.str();
}

std::string pe_histogram_csv(const ExperimentReport& report, int bins) {
  if (bins < 1) throw std::invalid_argument("pe_histogram_csv: bins must be positive");
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (const TrialResult& t : report.trials) {
    int k = static_cast<int>(t.pe_estimate * bins);
    k = std::min(std::max(k, 0), bins - 1);
    ++counts[static_cast<std::size_t>(k)];
  }
  std::ostringstream out;
  out << "bin_left,bin_right,count\n";
  out.precision(17);
  for (int k = 0; k < bins; ++k)
    out << static_cast<double>(k) / bins << ',' << static_cast<double>(k + 1) / bins << ','
        << counts[static_cast<std::size_t>(k)] << '\n';
  return out.str();
}

std::string set_to_csv(const PredictionSet& set) {
  std::ostringstream out;
  out << "y,member\n";
  out.precision(17);
  for (std::size_t i = 0; i < set.grid.size(); ++i)
    out << set.grid[i] << ',' << (set.member[i] ? 1 : 0) << '\n';
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace shiftconf
