#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "examiner/call_record.hpp"
#include "examiner/diagnostics.hpp"
#include "examiner/estimator.hpp"
#include "examiner/family_graph.hpp"
#include "examiner/ingest.hpp"
#include "examiner/instrument.hpp"
#include "examiner/panel.hpp"

namespace examiner {

// Defaults: 24-hour recontact, 20-minute spans,
// two-way clustering by agent and time span.
struct PipelineOptions {
  std::string outcome = "recontact";
  Score score = Score::Csat;
  int window_minutes = 20;
  int horizon_hours = 24;
  ClusterChoice cluster = ClusterChoice::TwoWay;
  std::size_t agency_threshold = 25;
  std::optional<std::string> queue;
  std::optional<EpochSeconds> origin;
  // Drop rows whose label window runs past the end of the data.
  bool censor_guard = true;
  // Horizon used by the guard; 0 means horizon_hours. Sweeps set it to the
  // longest horizon so every cell shares one sample.
  int guard_horizon_hours = 0;
  std::optional<EpochSeconds> window_end;
  bool time_controls = true;
  bool residualize_on_baseline = true;
  int cluster_period_minutes = 0;
  double weak_instrument_threshold = 10.0;
  AbsorptionOptions absorption;
};

struct PreparedSample {
  DesignMatrix design;         // every eligible row
  Eigen::VectorXd residuals;   // residualized score, aligned with design
  InstrumentVector instrument;
  DesignMatrix iv_design;      // rows with a defined instrument; OLS and 2SLS both use these
  std::size_t nonempty_spans = 0;
  double mean_calls_per_span = 0.0;
};

struct PipelineResult {
  EstimateReport ols;
  EstimateReport tsls;
  SampleAccounting accounting;
  std::size_t dropped_singletons = 0;
  double outcome_mean = 0.0;
};

struct DiagnosticsBundle {
  DiagnosticReport waiting_no_time;
  DiagnosticReport waiting_time;
  DiagnosticReport balance_sat_no_time;
  DiagnosticReport balance_z_no_time;
  DiagnosticReport balance_sat_time;
  DiagnosticReport balance_z_time;
};

// Raw calls -> filtered sample, families and labels. Labels are computed per
// horizon on demand and cached; everything else is fixed at construction.
class Pipeline {
 public:
  explicit Pipeline(std::vector<CallRecord> calls, std::size_t agency_threshold = 25);

  const std::vector<CallRecord>& raw_calls() const noexcept { return raw_; }
  const FilterResult& filtered() const noexcept { return filtered_; }
  const FamilyPartition& partition() const noexcept { return partition_; }
  const std::set<std::string>& agencies() const noexcept { return agencies_; }
  CoverageStats coverage_stats() const;
  EpochSeconds data_end() const noexcept { return data_end_; }

  const std::vector<OutcomeLabel>& labels(int horizon_hours);

  PreparedSample prepare(const PipelineOptions& options);
  PipelineResult estimate(const PipelineOptions& options);
  DiagnosticsBundle diagnose(const PipelineOptions& options);

 private:
  std::vector<CallRecord> raw_;
  std::vector<CallRecord> identified_;
  FilterResult filtered_;
  FamilyPartition partition_;
  std::set<std::string> agencies_;
  std::size_t agency_threshold_;
  EpochSeconds data_end_ = 0;
  std::map<int, std::vector<OutcomeLabel>> labels_;
};

FitSpec fit_spec_for(const PipelineOptions& options, Method method);

}  // namespace examiner
