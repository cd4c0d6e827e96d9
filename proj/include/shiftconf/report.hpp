#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "shiftconf/conformal.hpp"
#include "shiftconf/harness.hpp"

namespace shiftconf {

/// JSON form of a report with stable key order: config, trials, pe_deciles,
/// exceedance, bounds, wall_time_s. Infinite widths serialize as the strings
/// "inf" / "-inf"; everything else is a plain decimal double.
nlohmann::ordered_json report_to_json(const ExperimentReport& report);

nlohmann::ordered_json bound_to_json(const BoundResult& bound);
nlohmann::ordered_json interval_to_json(const PredictionInterval& interval);
nlohmann::ordered_json set_to_json(const PredictionSet& set);

/// Serialized report with wall_time_s zeroed, for byte comparisons across
/// runs and thread counts.
std::string report_to_comparable_string(const ExperimentReport& report);

/// One row per trial: trial_id,seed,pe,pe_stderr,median_width.
std::string trials_to_csv(const ExperimentReport& report);

/// Fixed-width histogram of the per-trial miscoverage over [0, 1]:
/// bin_left,bin_right,count.
std::string pe_histogram_csv(const ExperimentReport& report, int bins = 20);

/// Two-column membership export for a full-conformal set: y,member.
std::string set_to_csv(const PredictionSet& set);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace shiftconf
