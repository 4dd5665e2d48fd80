#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "examiner/pipeline.hpp"
#include "examiner/simulator.hpp"

namespace examiner {

struct ReplicationOutcome {
  std::uint64_t seed = 0;
  std::size_t calls = 0;
  EstimateReport ols;
  EstimateReport tsls;
  std::optional<DiagnosticsBundle> diagnostics;
  std::optional<EstimateReport> tsls_no_time;
};

struct MonteCarloOptions {
  std::size_t replications = 200;
  std::uint64_t base_seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  bool diagnostics = false;
  bool no_time_fit = false;
  PipelineOptions pipeline;
};

// Seed of replication r; independent of thread scheduling.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t r);

// Simulates and estimates each replication. Results are ordered by
// replication index regardless of thread count.
std::vector<ReplicationOutcome> run_monte_carlo(const sim::SimConfig& config,
                                                const MonteCarloOptions& options);

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double mc_se = 0.0;  // sd / sqrt(n)
  std::size_t n = 0;
};

SummaryStats summarize(const std::vector<double>& values);

// Largest distance between the empirical CDF of the values and U(0,1).
double ks_distance_uniform(std::vector<double> values);

}  // namespace examiner
