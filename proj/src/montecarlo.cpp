#include "examiner/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace examiner {

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t r) {
  std::uint64_t x = base_seed * 0x9e3779b97f4a7c15ULL + r + 1;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return (x ^ (x >> 31)) & 0x7fffffffffffffffULL;
}

namespace {

ReplicationOutcome replicate(const sim::SimConfig& base, const MonteCarloOptions& options, std::size_t r) {
  sim::SimConfig config = base;
  config.seed = replication_seed(options.base_seed, r);
  auto result = sim::run(config);
  ReplicationOutcome out;
  out.seed = config.seed;
  out.calls = result.calls.size();
  PipelineOptions popts = options.pipeline;
  if (!popts.window_end) popts.window_end = result.window_end;
  if (!popts.origin) popts.origin = result.window_start;
  Pipeline pipeline(std::move(result.calls), popts.agency_threshold);
  auto fit = pipeline.estimate(popts);
  out.ols = fit.ols;
  out.tsls = fit.tsls;
  if (options.diagnostics) out.diagnostics = pipeline.diagnose(popts);
  if (options.no_time_fit) {
    auto plain = popts;
    plain.time_controls = false;
    out.tsls_no_time = pipeline.estimate(plain).tsls;
  }
  return out;
}

}  // namespace

std::vector<ReplicationOutcome> run_monte_carlo(const sim::SimConfig& config, const MonteCarloOptions& options) {
  config.validate();
  std::vector<ReplicationOutcome> results(options.replications);
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(options.replications, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      auto r = next.fetch_add(1);
      if (r >= options.replications) return;
      try {
        results[r] = replicate(config, options, r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.replications;
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return results;
}

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.mc_se = s.sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

double ks_distance_uniform(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double u = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace examiner
