#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "vendor_json.hpp"

#include "examiner/diagnostics.hpp"
#include "examiner/estimator.hpp"
#include "examiner/ingest.hpp"
#include "examiner/panel.hpp"

namespace examiner {

nlohmann::ordered_json to_json(const EstimateReport& report);
nlohmann::ordered_json to_json(const DiagnosticReport& report);
nlohmann::ordered_json to_json(const SampleAccounting& accounting);
nlohmann::ordered_json to_json(const std::vector<FilterStage>& stages);

// "***" at p < 0.01, "**" at 0.05, "*" at 0.10.
std::string significance_stars(double p_value);

// Coefficient with stars, fixed decimals.
std::string format_coefficient(double coef, double p_value, int decimals = 4);

// Columns of estimates side by side: coefficient row with stars,
// parenthesized SE, then controls, observations, instrument and F rows.
struct TableColumn {
  std::string header;
  const EstimateReport* report = nullptr;
};

std::string render_estimate_table(const std::string& title, const std::vector<TableColumn>& columns);

std::string render_waiting_table(const DiagnosticReport& no_time, const DiagnosticReport& with_time);

std::string render_balance_table(const std::vector<const DiagnosticReport*>& columns,
                                 const std::vector<std::string>& headers);

}  // namespace examiner
