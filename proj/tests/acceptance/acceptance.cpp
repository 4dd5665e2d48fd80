// Runs the acceptance criteria end to end and prints one PASS/FAIL line per
// criterion. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "examiner/estimator.hpp"
#include "examiner/family_graph.hpp"
#include "examiner/fixed_effects.hpp"
#include "examiner/ingest.hpp"
#include "examiner/instrument.hpp"
#include "examiner/montecarlo.hpp"
#include "examiner/pipeline.hpp"
#include "examiner/simulator.hpp"
#include "oracles.hpp"

using namespace examiner;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

template <typename F>
double fraction(const std::vector<ReplicationOutcome>& runs, F pred) {
  std::size_t hits = 0;
  for (const auto& r : runs) hits += pred(r) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(runs.size());
}

PipelineOptions studied_queue() {
  PipelineOptions p;
  p.queue = "Q1";
  return p;
}

// ---------------------------------------------------------------------------
// Monte Carlo on the biased multi-queue scenario

void monte_carlo_bias() {
  const auto config = sim::scenario_multiqueue_bias();
  MonteCarloOptions mc;
  mc.replications = 200;
  mc.base_seed = 1;
  mc.diagnostics = true;
  mc.pipeline = studied_queue();

  const auto t0 = std::chrono::steady_clock::now();
  auto runs = run_monte_carlo(config, mc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double beta = config.beta_true;
  std::vector<double> tsls, ols, f;
  for (const auto& r : runs) {
    tsls.push_back(r.tsls.coef);
    ols.push_back(r.ols.coef);
    f.push_back(r.tsls.first_stage_F.value_or(0.0));
  }
  const auto st = summarize(tsls);
  const auto so = summarize(ols);
  const double coverage = fraction(runs, [&](const auto& r) { return r.tsls.ci_low <= beta && beta <= r.tsls.ci_high; });

  verdict("monte_carlo_2sls_recovers_beta", std::abs(st.mean - beta) <= 2.0 * st.mc_se,
          fmt("mean %.4f, true %.2f, MC SE %.4f, |bias|/SE %.2f (limit 2), mean first-stage F %.1f", st.mean, beta,
              st.mc_se, std::abs(st.mean - beta) / st.mc_se, summarize(f).mean));
  verdict("monte_carlo_2sls_coverage", coverage >= 0.91 && coverage <= 0.99,
          fmt("95%% interval covers the true value in %.3f of %zu replications (band 0.91-0.99)", coverage, runs.size()));
  verdict("monte_carlo_runtime", seconds < 900.0, fmt("%zu replications in %.1f s (limit 900 s)", runs.size(), seconds));
  verdict("ols_attenuated", so.mean - beta > 5.0 * so.mc_se,
          fmt("OLS mean %.4f, MC SE %.4f, attenuation %.1f MC SE (need > 5)", so.mean, so.mc_se,
              (so.mean - beta) / so.mc_se));

  const double reject_plain =
      fraction(runs, [](const auto& r) { return r.diagnostics->waiting_no_time.p_value < 0.01; });
  const double accept_fe = fraction(runs, [](const auto& r) { return r.diagnostics->waiting_time.p_value >= 0.10; });
  verdict("waiting_time_rejects_without_time_controls", reject_plain >= 0.80,
          fmt("rejected at 1%% in %.3f of replications (need >= 0.80)", reject_plain));
  verdict("waiting_time_accepts_with_time_controls", accept_fe >= 0.90,
          fmt("not rejected at 10%% in %.3f of replications (need >= 0.90)", accept_fe));

  // supplementary
  const double z_imbalance =
      fraction(runs, [](const auto& r) { return r.diagnostics->balance_z_no_time.p_value < 0.05; });
  verdict("supplementary_instrument_imbalanced_without_time_controls", z_imbalance >= 0.80,
          fmt("instrument balance rejected at 5%% in %.3f of replications (need >= 0.80)", z_imbalance));
}

// ---------------------------------------------------------------------------
// Null and no-confounding scenarios

void monte_carlo_random_routing() {
  MonteCarloOptions mc;
  mc.replications = 200;
  mc.base_seed = 11;
  mc.diagnostics = true;
  auto runs = run_monte_carlo(sim::scenario_random_routing(), mc);
  std::vector<double> p;
  for (const auto& r : runs) p.push_back(r.diagnostics->balance_z_time.p_value);
  const double ks = ks_distance_uniform(p);
  verdict("supplementary_random_routing_balance_p_uniform", ks < 0.1,
          fmt("KS distance of %zu instrument balance p-values from U(0,1) is %.4f (need < 0.1)", p.size(), ks));
}

void monte_carlo_no_confounding() {
  auto config = sim::scenario_multiqueue_bias();
  config.confounder_strength = 0.0;
  MonteCarloOptions mc;
  mc.replications = 200;
  mc.base_seed = 21;
  mc.pipeline = studied_queue();
  auto runs = run_monte_carlo(config, mc);
  std::vector<double> ols, tsls;
  for (const auto& r : runs) {
    ols.push_back(r.ols.coef);
    tsls.push_back(r.tsls.coef);
  }
  const auto so = summarize(ols);
  const auto st = summarize(tsls);
  const double beta = config.beta_true;
  verdict("supplementary_no_confounding_unbiased",
          std::abs(so.mean - beta) <= 2.0 * so.mc_se && std::abs(st.mean - beta) <= 2.0 * st.mc_se,
          fmt("OLS %.4f (MC SE %.4f), 2SLS %.4f (MC SE %.4f), true %.2f", so.mean, so.mc_se, st.mean, st.mc_se, beta));
}

// ---------------------------------------------------------------------------
// Oracle equivalences

void fwl_oracle() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 200 + 50 * static_cast<std::size_t>(rep);
    const auto rows = static_cast<Eigen::Index>(n);
    const int la = 10 + rep, lb = 5 + rep / 2;
    auto a = make_factor("span", testing::random_groups(rng, n, la));
    auto b = make_factor("agent", testing::random_groups(rng, n, lb));
    Eigen::MatrixXd x = testing::random_matrix(rng, rows, 3);
    Eigen::VectorXd y = x * Eigen::Vector3d(1.0, -2.0, 0.5) + testing::random_vector(rng, rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto s = static_cast<std::size_t>(i);
      y(i) += 0.7 * a.ids[s] - 0.3 * b.ids[s];
      x(i, 0) += 0.2 * a.ids[s] + 0.1 * b.ids[s];
    }
    auto oracle = testing::dense_two_factor(y, x, a.ids, a.levels, b.ids, b.levels);
    Eigen::MatrixXd cols(rows, 4);
    cols << y, x;
    std::vector<Factor> fs{a, b};
    absorb_fixed_effects(cols, fs);
    auto fit = least_squares(cols.col(0), cols.rightCols(3), {"x0", "x1", "x2"}, Clustering::robust());
    worst = std::max(worst, (fit.coef - oracle).cwiseAbs().maxCoeff());
  }
  verdict("oracle_fixed_effect_absorption", worst <= 1e-6,
          fmt("two-factor absorption vs dense dummies, max |diff| %.3g over 20 designs (limit 1e-6)", worst));
}

void tsls_ratio_oracle() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 300 + 40 * rep;
    Eigen::MatrixXd w(n, 3);
    w << testing::random_matrix(rng, n, 2), Eigen::VectorXd::Ones(n);
    Eigen::VectorXd z = testing::random_vector(rng, n);
    Eigen::VectorXd conf = testing::random_vector(rng, n);
    Eigen::VectorXd sat = 0.8 * z + conf + 0.3 * w.col(0) + testing::random_vector(rng, n);
    Eigen::VectorXd y = -0.65 * sat + conf - 0.2 * w.col(1) + testing::random_vector(rng, n);
    Eigen::MatrixXd zw(n, 4);
    zw << z, w;
    const double ratio = testing::normal_equations(zw, y)(0) / testing::normal_equations(zw, sat)(0);
    auto iv = two_stage_least_squares(y, sat, z, w, {"sat", "w0", "w1", "c"}, Clustering::robust());
    worst = std::max(worst, std::abs(iv.second_stage.coef(0) - ratio));
  }
  verdict("oracle_2sls_ratio", worst <= 1e-10,
          fmt("2SLS vs reduced form / first stage, max |diff| %.3g over 20 designs (limit 1e-10)", worst));
}

void loo_oracle() {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  bool rows_ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 1 + rep * 3;
    const std::size_t n = 100 + 50 * static_cast<std::size_t>(rep);
    std::uniform_int_distribution<int> pick(0, m - 1);
    std::vector<int> ids(n);
    for (auto& a : ids) a = pick(rng);
    Eigen::VectorXd r = testing::random_vector(rng, static_cast<Eigen::Index>(n));
    auto iv = leave_one_out(r, ids);
    auto oracle = testing::brute_force_loo(r, ids);
    std::size_t expected_kept = 0;
    for (const auto& o : oracle) expected_kept += o.has_value();
    rows_ok = rows_ok && expected_kept == iv.kept_rows.size();
    for (std::size_t j = 0; j < iv.kept_rows.size(); ++j) {
      const auto& o = oracle[iv.kept_rows[j]];
      if (!o) {
        rows_ok = false;
        continue;
      }
      worst = std::max(worst, std::abs(iv.z(static_cast<Eigen::Index>(j)) - *o));
    }
  }
  verdict("oracle_leave_one_out", rows_ok && worst <= 1e-12,
          fmt("jackknife means vs brute force, max |diff| %.3g, kept rows %s (limit 1e-12)", worst,
              rows_ok ? "agree" : "disagree"));
}

void sandwich_oracle() {
  std::mt19937_64 rng(104);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 60 + 20 * static_cast<std::size_t>(rep);
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x(rows, 3);
    x << testing::random_matrix(rng, rows, 2), Eigen::VectorXd::Ones(rows);
    Eigen::VectorXd y = x * Eigen::Vector3d(0.5, -1.0, 2.0) + testing::random_vector(rng, rows);
    auto g = testing::random_groups(rng, n, 4 + rep);
    auto robust = least_squares(y, x, {"a", "b", "c"}, Clustering::robust());
    worst = std::max(worst, testing::max_rel_diff(robust.vcov, testing::oracle_vcov(x, y, testing::iota_groups(n))));
    auto clustered = least_squares(y, x, {"a", "b", "c"}, Clustering::one_way(make_factor("g", g)));
    worst = std::max(worst, testing::max_rel_diff(clustered.vcov, testing::oracle_vcov(x, y, g)));
  }
  verdict("oracle_cluster_sandwich", worst <= 1e-10,
          fmt("robust and clustered sandwich vs explicit pairwise sums, max relative diff %.3g (limit 1e-10)", worst));
}

void partition_and_label_oracles() {
  auto config = sim::scenario_multiqueue_bias();
  config.horizon_days = 2;
  config.seed = 105;
  auto result = sim::run(config);
  auto calls = identified_calls(result.calls);

  auto partition = build_partition(calls);
  auto comps = testing::bfs_components(calls);
  bool same = comps.size() == partition.family_count();
  for (const auto& [min_node, members] : comps) {
    for (const auto& node : members) {
      auto fam = partition.family_of_node(node);
      same = same && fam && *fam == min_node;
    }
  }
  verdict("oracle_family_partition", same,
          fmt("%zu families from %zu simulated calls, union-find %s breadth-first search", partition.family_count(),
              calls.size(), same ? "matches" : "differs from"));

  std::vector<std::string> family;
  for (const auto& c : calls) family.emplace_back(*partition.family_of_call(c.call_id));
  std::size_t mismatches = 0, checked = 0;
  for (int h : {24, 48}) {
    auto oracle = testing::brute_force_labels(calls, family, h);
    for (const auto& l : label_recontact(calls, partition, h)) {
      mismatches += l.recontact != oracle.at(l.call_id);
      ++checked;
    }
  }
  verdict("oracle_recontact_labels", mismatches == 0,
          fmt("%zu mismatches in %zu labels vs the all-pairs scan (24 h and 48 h)", mismatches, checked));
}

// ---------------------------------------------------------------------------

void first_stage_identity() {
  std::mt19937_64 rng(106);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 150 + 25 * static_cast<std::size_t>(rep);
    const int spans = 12;
    auto d = testing::random_design(rng, n, spans, 9, 2);
    Eigen::VectorXd z = 0.3 * d.sat + testing::random_vector(rng, static_cast<Eigen::Index>(n));
    FitSpec spec;
    spec.cluster = ClusterChoice::Robust;
    spec.absorb_spans = rep % 2 == 0;
    const double f = first_stage_f(d, z, spec);
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x;
    if (spec.absorb_spans) {
      x.resize(rows, 3 + spans);
      x << z, d.w_baseline, testing::dummies(d.span_ids, spans);
    } else {
      x.resize(rows, 4);
      x << z, d.w_baseline, Eigen::VectorXd::Ones(rows);
    }
    Eigen::MatrixXd v = testing::oracle_vcov(x, d.sat, testing::iota_groups(n));
    const double b = testing::normal_equations(x, d.sat)(0);
    const double t2 = b * b / v(0, 0);
    worst = std::max(worst, std::abs(f - t2) / std::max(1.0, t2));
  }
  verdict("first_stage_f_identity", worst <= 1e-10,
          fmt("first-stage F vs squared robust t, max relative diff %.3g over 20 designs (limit 1e-10)", worst));
}

void window_sweep() {
  auto config = sim::scenario_multiqueue_bias();
  config.seed = 107;
  auto result = sim::run(config);
  const auto origin = result.window_start;
  const auto end = result.window_end;
  Pipeline pipeline(std::move(result.calls));
  std::vector<int> windows{15, 20, 30, 45, 60};
  std::vector<EstimateReport> fits;
  for (int w : windows) {
    auto p = studied_queue();
    p.window_minutes = w;
    p.origin = origin;
    p.window_end = end;
    fits.push_back(pipeline.estimate(p).tsls);
  }
  double worst_ratio = 0.0;
  std::string pair;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (std::size_t j = i + 1; j < fits.size(); ++j) {
      const double diff = std::abs(fits[i].coef - fits[j].coef);
      const double bound = 2.0 * std::hypot(fits[i].se, fits[j].se);
      if (diff / bound > worst_ratio) {
        worst_ratio = diff / bound;
        pair = std::to_string(windows[i]) + " vs " + std::to_string(windows[j]) + " min";
      }
    }
  }
  std::ostringstream coefs;
  for (std::size_t i = 0; i < fits.size(); ++i) coefs << (i ? ", " : "") << windows[i] << "m " << fmt("%.4f", fits[i].coef);
  verdict("window_sweep_stable", worst_ratio < 1.0,
          "2SLS " + coefs.str() + fmt("; largest gap %.2f of its bound (%s)", worst_ratio, pair.c_str()));
}

std::string slurp(const fs::path& p) { return testing::slurp(p); }

int run(const std::string& command) {
  return std::system((command + " > /dev/null 2>&1").c_str());
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / ("examiner_acceptance_" + std::to_string(std::random_device{}()));
  const std::string cli = EXAMINER_CLI;
  bool ok = true;
  std::vector<std::string> compared;
  for (const char* run_name : {"a", "b"}) {
    const fs::path dir = root / run_name;
    ok = ok && run(cli + " simulate --preset multiqueue_bias --seed 42 --out " + (dir / "sim").string()) == 0;
    ok = ok && run(cli + " estimate --data " + (dir / "sim" / "calls.csv").string() + " --queue Q1 --out " +
                   (dir / "est").string()) == 0;
  }
  std::size_t files = 0;
  if (ok) {
    for (const auto* sub : {"sim", "est"}) {
      for (const auto& entry : fs::directory_iterator(root / "a" / sub)) {
        const auto name = entry.path().filename().string();
        if (name == "manifest.json") continue;  // carries timestamps and paths
        const auto other = root / "b" / sub / name;
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
          ok = false;
          compared.push_back(std::string(sub) + "/" + name);
        }
        ++files;
      }
    }
  }
  fs::remove_all(root);
  verdict("end_to_end_determinism", ok && files > 0,
          ok ? fmt("%zu output files byte-identical across two simulate + estimate runs", files)
             : "runs differ or failed" + (compared.empty() ? std::string() : ": " + compared.front()));
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  const std::vector<std::function<void()>> steps{fwl_oracle,       tsls_ratio_oracle,
                                                 loo_oracle,       sandwich_oracle,
                                                 partition_and_label_oracles, first_stage_identity,
                                                 window_sweep,     determinism,
                                                 monte_carlo_bias, monte_carlo_random_routing,
                                                 monte_carlo_no_confounding};
  for (const auto& step : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      verdict("unexpected_error", false, e.what());
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
