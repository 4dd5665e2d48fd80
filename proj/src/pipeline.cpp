#include "examiner/pipeline.hpp"

#include <algorithm>

namespace examiner {

Pipeline::Pipeline(std::vector<CallRecord> calls, std::size_t agency_threshold)
    : raw_(std::move(calls)), agency_threshold_(agency_threshold) {
  identified_ = identified_calls(raw_);
  partition_ = build_partition(identified_);
  agencies_ = flag_agencies(partition_, agency_threshold_);
  filtered_ = filter_calls(raw_);
  for (const auto& c : raw_) data_end_ = std::max(data_end_, c.start_time + 1);
}

CoverageStats Pipeline::coverage_stats() const { return coverage(filtered_.calls, partition_); }

const std::vector<OutcomeLabel>& Pipeline::labels(int horizon_hours) {
  auto it = labels_.find(horizon_hours);
  if (it == labels_.end()) {
    it = labels_.emplace(horizon_hours, label_recontact(identified_, partition_, horizon_hours)).first;
  }
  return it->second;
}

PreparedSample Pipeline::prepare(const PipelineOptions& options) {
  const EpochSeconds origin = options.origin ? *options.origin : default_origin(raw_);
  auto spans = assign_spans(filtered_.calls, options.window_minutes, origin);

  DesignOptions d;
  d.outcome = options.outcome;
  d.score = options.score;
  d.queue = options.queue;
  if (options.censor_guard) d.label_window_end = options.window_end ? *options.window_end : data_end_;
  d.label_horizon_hours = options.guard_horizon_hours > 0 ? options.guard_horizon_hours : options.horizon_hours;
  d.cluster_period_minutes = options.cluster_period_minutes;

  PreparedSample s;
  s.design = build_design(filtered_.calls, labels(options.horizon_hours), spans, partition_, agencies_, d);
  s.residuals = residualize(s.design, ResidualizeOptions{options.time_controls, options.residualize_on_baseline});
  s.instrument = leave_one_out(s.design, s.residuals);
  s.iv_design = s.design.subset(s.instrument.kept_rows);
  s.nonempty_spans = spans.nonempty_spans;
  s.mean_calls_per_span = spans.mean_calls_per_span;
  return s;
}

FitSpec fit_spec_for(const PipelineOptions& options, Method method) {
  FitSpec spec;
  spec.method = method;
  spec.absorb_spans = options.time_controls;
  spec.include_covariates = true;
  spec.cluster = options.cluster;
  spec.weak_instrument_threshold = options.weak_instrument_threshold;
  spec.absorption = options.absorption;
  return spec;
}

PipelineResult Pipeline::estimate(const PipelineOptions& options) {
  auto s = prepare(options);
  PipelineResult r;
  r.ols = fit_ols(s.iv_design, fit_spec_for(options, Method::Ols));
  r.tsls = fit_tsls(s.iv_design, s.instrument.z, fit_spec_for(options, Method::Tsls));
  r.accounting = s.design.accounting;
  r.dropped_singletons = s.instrument.dropped_rows.size();
  r.accounting.rows = s.iv_design.rows();
  if (s.iv_design.rows()) r.outcome_mean = s.iv_design.y.mean();
  return r;
}

DiagnosticsBundle Pipeline::diagnose(const PipelineOptions& options) {
  PipelineOptions with = options;
  with.time_controls = true;
  PipelineOptions without = options;
  without.time_controls = false;
  auto s_time = prepare(with);
  auto s_plain = prepare(without);

  // Agent dummies cannot be tested with agent clusters, and with dozens of
  // them a time-clustered covariance over-rejects, so the waiting-time check
  // uses robust errors. Balance tests use the estimation clustering.
  DiagnosticOptions wait_plain{false, ClusterChoice::Robust};
  DiagnosticOptions wait_time{true, ClusterChoice::Robust};
  DiagnosticOptions plain{false, options.cluster};
  DiagnosticOptions time{true, options.cluster};
  DiagnosticsBundle b;
  b.waiting_no_time = waiting_time_check(s_time.iv_design, wait_plain);
  b.waiting_time = waiting_time_check(s_time.iv_design, wait_time);
  b.balance_sat_no_time = balance_test(s_plain.iv_design, s_plain.iv_design.sat, "sat", plain);
  b.balance_z_no_time = balance_test(s_plain.iv_design, s_plain.instrument.z, "z", plain);
  b.balance_sat_time = balance_test(s_time.iv_design, s_time.iv_design.sat, "sat", time);
  b.balance_z_time = balance_test(s_time.iv_design, s_time.instrument.z, "z", time);
  return b;
}

}  // namespace examiner
