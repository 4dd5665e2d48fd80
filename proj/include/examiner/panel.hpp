#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "examiner/call_record.hpp"
#include "examiner/ingest.hpp"

namespace examiner {

class FamilyPartition;

// Half-open spans [origin + k*w, origin + (k+1)*w).
struct TimeSpanIndex {
  int window_minutes = 20;
  EpochSeconds origin = 0;
  std::unordered_map<std::string, std::int64_t> span_of;
  std::size_t nonempty_spans = 0;
  double mean_calls_per_span = 0.0;

  std::int64_t span_for(EpochSeconds t) const;
};

// Throws ConfigError for a non-positive window and DataError for a call that
// starts before the origin.
TimeSpanIndex assign_spans(std::span<const CallRecord> calls, int window_minutes, EpochSeconds origin);

// Midnight UTC of the earliest start time (0 for an empty list).
EpochSeconds default_origin(std::span<const CallRecord> calls);

enum class Score { Csat, Fcr };

std::string to_string(Score score);
Score parse_score(const std::string& text);

struct DesignOptions {
  std::string outcome = "recontact";
  Score score = Score::Csat;
  std::optional<std::string> queue;
  // Rows whose label window would extend past this instant are left out.
  std::optional<EpochSeconds> label_window_end;
  int label_horizon_hours = 24;
  // Length of the clustering time period; 0 uses the span itself.
  int cluster_period_minutes = 0;
};

// Row counts at each sample restriction inside build_design.
struct SampleAccounting {
  std::size_t candidates = 0;
  std::size_t other_queue = 0;
  std::size_t agency = 0;
  std::size_t unsurveyed = 0;
  std::size_t missing_outcome = 0;
  std::size_t censored = 0;
  std::size_t rows = 0;
};

// Estimation-ready arrays. Ids are dense 0-based integers.
struct DesignMatrix {
  std::string outcome;
  Score score = Score::Csat;
  Eigen::VectorXd y;
  Eigen::VectorXd sat;
  Eigen::VectorXd waiting_time;
  Eigen::MatrixXd w_baseline;
  std::vector<std::string> covariate_names;
  std::vector<std::string> reference_levels;
  std::vector<int> span_ids;
  std::vector<std::int64_t> span_ordinals;  // original ordinal per dense id
  std::vector<int> agent_ids;
  std::vector<std::string> agent_names;  // per dense id
  std::vector<int> cluster_a;
  std::vector<int> cluster_t;
  std::vector<std::string> row_call_ids;
  SampleAccounting accounting;

  std::size_t rows() const noexcept { return row_call_ids.size(); }
  int n_spans() const noexcept { return static_cast<int>(span_ordinals.size()); }
  int n_agents() const noexcept { return static_cast<int>(agent_names.size()); }
  int n_time_clusters() const;

  // Rows in the given order with every id vector renumbered densely.
  DesignMatrix subset(std::span<const std::size_t> rows) const;
};

// Rows: calls in the filtered list that are surveyed with a non-missing score,
// outside flagged agency families, with a known outcome. Categorical
// covariates (market, ffp_tier) are one-hot encoded against their most
// frequent level (ties go to the lexicographically smallest). Throws
// ConfigError for an unknown outcome, listing the available ones.
DesignMatrix build_design(std::span<const CallRecord> calls, std::span<const OutcomeLabel> labels,
                          const TimeSpanIndex& spans, const FamilyPartition& partition,
                          const std::set<std::string>& agency_families, const DesignOptions& options);

// Outcome names accepted by build_design for this call list.
std::vector<std::string> available_outcomes(std::span<const CallRecord> calls);

void write_design(std::ostream& out, const DesignMatrix& design, char delimiter);

}  // namespace examiner
