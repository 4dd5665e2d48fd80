#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "examiner/errors.hpp"
#include "examiner/family_graph.hpp"
#include "examiner/ingest.hpp"
#include "examiner/manifest.hpp"
#include "examiner/montecarlo.hpp"
#include "examiner/pipeline.hpp"
#include "examiner/report.hpp"
#include "examiner/simulator.hpp"

namespace fs = std::filesystem;
using namespace examiner;
using json = nlohmann::ordered_json;

namespace {

struct DataArgs {
  std::string data;
  std::string schema;
  std::string out = "out";
};

struct EstimationArgs {
  std::string outcome = "recontact";
  std::string scores = "fcr,csat";
  int window_minutes = 20;
  int horizon_hours = 24;
  std::string cluster = "two-way";
  std::size_t agency_threshold = 25;
  std::string queue;
  int cluster_period = 0;
  bool no_censor_guard = false;
  bool no_time_controls = false;
  std::optional<std::uint64_t> seed;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "Call log in the ingest schema")->required();
  cmd->add_option("--schema", a.schema, "Key-value schema mapping (column.<field> = name)");
  cmd->add_option("--out", a.out, "Output directory")->capture_default_str();
}

void add_estimation_options(CLI::App* cmd, EstimationArgs& a) {
  cmd->add_option("--outcome", a.outcome, "recontact or an outcome flag column")->capture_default_str();
  cmd->add_option("--score", a.scores, "Comma list of csat, fcr")->capture_default_str();
  cmd->add_option("--window-minutes", a.window_minutes, "Time-span length")->capture_default_str();
  cmd->add_option("--horizon-hours", a.horizon_hours, "Recontact horizon")->capture_default_str();
  cmd->add_option("--cluster", a.cluster, "robust, agent, time or two-way")->capture_default_str();
  cmd->add_option("--agency-threshold", a.agency_threshold, "Distinct customers above which a family is an agency")
      ->capture_default_str();
  cmd->add_option("--queue", a.queue, "Restrict the sample to one queue");
  cmd->add_option("--cluster-period-minutes", a.cluster_period, "Time cluster length (0: the span)");
  cmd->add_flag("--no-censor-guard", a.no_censor_guard, "Keep rows whose recontact window runs past the data");
  cmd->add_flag("--no-time-controls", a.no_time_controls, "Do not absorb time-span effects");
  cmd->add_option("--seed", a.seed, "Recorded in the manifest");
}

std::vector<Score> parse_scores(const std::string& text) {
  std::vector<Score> out;
  for (const auto& s : split_list(text)) out.push_back(parse_score(s));
  if (out.empty()) throw ConfigError("--score needs at least one of csat, fcr");
  return out;
}

PipelineOptions pipeline_options(const EstimationArgs& a) {
  PipelineOptions p;
  p.outcome = a.outcome;
  p.window_minutes = a.window_minutes;
  p.horizon_hours = a.horizon_hours;
  p.cluster = parse_cluster(a.cluster);
  p.agency_threshold = a.agency_threshold;
  if (!a.queue.empty()) p.queue = a.queue;
  p.cluster_period_minutes = a.cluster_period;
  p.censor_guard = !a.no_censor_guard;
  p.time_controls = !a.no_time_controls;
  if (a.window_minutes <= 0) throw ConfigError("--window-minutes must be positive");
  if (a.horizon_hours <= 0) throw ConfigError("--horizon-hours must be positive");
  return p;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

Schema load_schema(const std::string& path) {
  if (path.empty()) return Schema::canonical();
  return Schema::from_config(KeyValueConfig::load(path));
}

ParseResult read_calls(const DataArgs& a) {
  std::ifstream in(a.data, std::ios::binary);
  if (!in) throw DataError("cannot open " + a.data);
  return parse_calls(in, load_schema(a.schema));
}

class ManifestScope {
 public:
  ManifestScope(std::string command, const DataArgs* data) {
    m_.command = std::move(command);
    m_.started_at = utc_now_iso8601();
    if (data) {
      m_.inputs.push_back({data->data, sha256_file(data->data)});
      if (!data->schema.empty()) m_.inputs.push_back({data->schema, sha256_file(data->schema)});
    }
  }
  RunManifest& get() { return m_; }
  void finish(const fs::path& dir, const std::vector<std::string>& outputs) {
    for (const auto& o : outputs) m_.outputs.push_back({o, sha256_file(dir / o)});
    m_.finished_at = utc_now_iso8601();
    m_.write(dir / "manifest.json");
  }

 private:
  RunManifest m_;
};

std::string options_fingerprint(const EstimationArgs& a, const std::string& extra = "") {
  std::ostringstream s;
  s << "outcome=" << a.outcome << ";score=" << a.scores << ";window=" << a.window_minutes
    << ";horizon=" << a.horizon_hours << ";cluster=" << a.cluster << ";agency=" << a.agency_threshold
    << ";queue=" << a.queue << ";period=" << a.cluster_period << ";guard=" << !a.no_censor_guard
    << ";time=" << !a.no_time_controls << extra;
  return sha256_hex(s.str());
}

int cmd_simulate(const std::string& config_path, const std::string& preset_name, std::optional<std::uint64_t> seed,
                 const std::string& out) {
  ManifestScope manifest("simulate", nullptr);
  sim::SimConfig config;
  if (!config_path.empty()) {
    auto kv = KeyValueConfig::load(config_path);
    manifest.get().inputs.push_back({config_path, sha256_file(config_path)});
    config = sim::load_config(kv);
  } else {
    config = sim::preset(preset_name.empty() ? "multiqueue_bias" : preset_name);
  }
  if (seed) config.seed = *seed;
  config.validate();
  const fs::path dir(out);
  ensure_dir(dir);
  auto result = sim::run(config);

  std::ostringstream calls;
  write_calls(calls, result.calls, Schema::canonical());
  write_text(dir / "calls.csv", calls.str());
  std::ostringstream truth;
  sim::write_ground_truth(truth, result);
  write_text(dir / "ground_truth.csv", truth.str());
  const auto effective = sim::to_key_values(config).to_string();
  write_text(dir / "config.kv", effective);

  manifest.get().config_hash = sha256_hex(effective);
  manifest.get().seed = config.seed;
  manifest.finish(dir, {"calls.csv", "ground_truth.csv", "config.kv"});
  std::cout << "simulated " << result.calls.size() << " calls (" << result.stats.served << " served, "
            << result.stats.abandoned << " abandoned, " << result.stats.clamp_events << " clamped draws) -> "
            << (dir / "calls.csv").string() << "\n";
  return 0;
}

int cmd_ingest(const DataArgs& data, std::size_t agency_threshold) {
  ManifestScope manifest("ingest", &data);
  const fs::path dir(data.out);
  ensure_dir(dir);
  auto parsed = read_calls(data);
  auto schema = load_schema(data.schema);
  Pipeline pipeline(parsed.records, agency_threshold);

  std::ostringstream filtered, rejects, families;
  write_calls(filtered, pipeline.filtered().calls, schema);
  write_rejects(rejects, parsed, schema.delimiter);
  write_family_assignments(families, pipeline.partition(), ',');
  write_text(dir / "filtered_calls.csv", filtered.str());
  write_text(dir / "rejects.csv", rejects.str());
  write_text(dir / "families.csv", families.str());

  auto cov = pipeline.coverage_stats();
  json funnel;
  funnel["rows_read"] = parsed.records.size() + parsed.rejects.size();
  funnel["rows_rejected"] = parsed.rejects.size();
  funnel["stages"] = to_json(pipeline.filtered().stages);
  funnel["families"] = pipeline.partition().family_count();
  funnel["agencies"] = pipeline.agencies();
  funnel["coverage"] = {{"calls", cov.calls},
                        {"with_customer_id", cov.with_customer_id},
                        {"with_family", cov.with_family},
                        {"customer_id_fraction", cov.customer_id_fraction},
                        {"family_fraction", cov.family_fraction},
                        {"gain", cov.gain}};
  write_text(dir / "funnel.json", funnel.dump(2) + "\n");
  manifest.get().config_hash = sha256_hex("agency=" + std::to_string(agency_threshold));
  manifest.finish(dir, {"filtered_calls.csv", "rejects.csv", "families.csv", "funnel.json"});
  std::cout << funnel.dump(2) << "\n";
  return 0;
}

int cmd_estimate(const DataArgs& data, const EstimationArgs& args) {
  ManifestScope manifest("estimate", &data);
  auto scores = parse_scores(args.scores);
  auto base = pipeline_options(args);
  const fs::path dir(data.out);
  ensure_dir(dir);
  auto parsed = read_calls(data);
  Pipeline pipeline(std::move(parsed.records), args.agency_threshold);

  std::vector<PipelineResult> fits;
  json records;
  records["funnel"] = to_json(pipeline.filtered().stages);
  records["fits"] = json::array();
  for (auto score : scores) {
    auto opts = base;
    opts.score = score;
    fits.push_back(pipeline.estimate(opts));
    const auto& f = fits.back();
    records["fits"].push_back({{"score", to_string(score)},
                               {"ols", to_json(f.ols)},
                               {"tsls", to_json(f.tsls)},
                               {"accounting", to_json(f.accounting)},
                               {"dropped_singleton_rows", f.dropped_singletons}});
  }
  std::vector<TableColumn> columns;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto name = to_string(scores[i]);
    for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    columns.push_back({name + " OLS", &fits[i].ols});
    columns.push_back({name + " 2SLS", &fits[i].tsls});
  }
  auto table = render_estimate_table("Effect of satisfaction on " + args.outcome + " (" +
                                         std::to_string(args.horizon_hours) + "h, " +
                                         std::to_string(args.window_minutes) + "-minute spans)",
                                     columns);
  for (const auto& f : fits) {
    for (const auto& w : f.tsls.warnings) table += "warning: " + w + "\n";
  }
  write_text(dir / "estimate.txt", table);
  write_text(dir / "estimate.json", records.dump(2) + "\n");
  manifest.get().config_hash = options_fingerprint(args);
  manifest.get().seed = args.seed;
  manifest.finish(dir, {"estimate.txt", "estimate.json"});
  std::cout << table;
  return 0;
}

int cmd_sweep(const DataArgs& data, const EstimationArgs& args, const std::string& kind,
              const std::optional<std::string>& points) {
  ManifestScope manifest("sweep", &data);
  auto scores = parse_scores(args.scores);
  std::vector<int> values;
  std::string list;
  if (kind == "windows") {
    list = points.value_or("15,20,30,45,60");
  } else if (kind == "horizons") {
    list = points.value_or("24,48,72,168");
  } else {
    throw ConfigError("--sweep must be windows or horizons");
  }
  for (const auto& p : split_list(list)) {
    KeyValueConfig one;
    one.set("v", p);
    long long v = one.get_int("v", 0);
    if (v <= 0) throw ConfigError("sweep points must be positive integers");
    values.push_back(static_cast<int>(v));
  }
  if (values.empty()) throw ConfigError("empty sweep list");
  auto base = pipeline_options(args);
  if (kind == "horizons") base.guard_horizon_hours = *std::max_element(values.begin(), values.end());
  const fs::path dir(data.out);
  ensure_dir(dir);
  auto parsed = read_calls(data);
  Pipeline pipeline(std::move(parsed.records), args.agency_threshold);

  json records;
  records["sweep"] = kind;
  records["cells"] = json::array();
  std::string text;
  for (auto score : scores) {
    std::vector<PipelineResult> fits;
    std::vector<std::string> headers;
    for (int v : values) {
      auto opts = base;
      opts.score = score;
      if (kind == "windows") opts.window_minutes = v;
      else opts.horizon_hours = v;
      fits.push_back(pipeline.estimate(opts));
      headers.push_back(kind == "windows" ? std::to_string(v) + " min" : std::to_string(v) + " h");
      records["cells"].push_back({{"score", to_string(score)},
                                  {kind == "windows" ? "window_minutes" : "horizon_hours", v},
                                  {"outcome_mean", fits.back().outcome_mean},
                                  {"ols", to_json(fits.back().ols)},
                                  {"tsls", to_json(fits.back().tsls)},
                                  {"accounting", to_json(fits.back().accounting)}});
    }
    std::vector<TableColumn> columns;
    for (std::size_t i = 0; i < fits.size(); ++i) columns.push_back({headers[i], &fits[i].tsls});
    text += render_estimate_table("2SLS, " + to_string(score) + ", " + kind + " sweep", columns) + "\n";
  }
  write_text(dir / "sweep.txt", text);
  write_text(dir / "sweep.json", records.dump(2) + "\n");
  manifest.get().config_hash = options_fingerprint(args, ";sweep=" + kind + ":" + list);
  manifest.get().seed = args.seed;
  manifest.finish(dir, {"sweep.txt", "sweep.json"});
  std::cout << text;
  return 0;
}

int cmd_diagnose(const DataArgs& data, const EstimationArgs& args) {
  ManifestScope manifest("diagnose", &data);
  auto scores = parse_scores(args.scores);
  auto opts = pipeline_options(args);
  opts.score = scores.front();
  const fs::path dir(data.out);
  ensure_dir(dir);
  auto parsed = read_calls(data);
  Pipeline pipeline(std::move(parsed.records), args.agency_threshold);
  auto d = pipeline.diagnose(opts);

  std::string text = render_waiting_table(d.waiting_no_time, d.waiting_time) + "\n" +
                     render_balance_table({&d.balance_sat_no_time, &d.balance_z_no_time, &d.balance_sat_time,
                                           &d.balance_z_time},
                                          {"Sat", "Z", "Sat", "Z"});
  json records{{"score", to_string(opts.score)},
               {"waiting_no_time", to_json(d.waiting_no_time)},
               {"waiting_time", to_json(d.waiting_time)},
               {"balance_sat_no_time", to_json(d.balance_sat_no_time)},
               {"balance_z_no_time", to_json(d.balance_z_no_time)},
               {"balance_sat_time", to_json(d.balance_sat_time)},
               {"balance_z_time", to_json(d.balance_z_time)}};
  write_text(dir / "diagnostics.txt", text);
  write_text(dir / "diagnostics.json", records.dump(2) + "\n");
  manifest.get().config_hash = options_fingerprint(args);
  manifest.get().seed = args.seed;
  manifest.finish(dir, {"diagnostics.txt", "diagnostics.json"});
  std::cout << text;
  return 0;
}

int cmd_montecarlo(const std::string& config_path, const std::string& preset_name, std::uint64_t seed,
                   std::size_t replications, unsigned threads, const EstimationArgs& args, const std::string& out) {
  ManifestScope manifest("montecarlo", nullptr);
  sim::SimConfig config = config_path.empty() ? sim::preset(preset_name)
                                              : sim::load_config(KeyValueConfig::load(config_path));
  MonteCarloOptions mc;
  mc.replications = replications;
  mc.base_seed = seed;
  mc.threads = threads;
  mc.pipeline = pipeline_options(args);
  mc.pipeline.score = parse_scores(args.scores).front();
  const fs::path dir(out);
  ensure_dir(dir);
  auto results = run_monte_carlo(config, mc);

  std::vector<double> ols, tsls;
  std::size_t covered = 0;
  json reps = json::array();
  for (const auto& r : results) {
    ols.push_back(r.ols.coef);
    tsls.push_back(r.tsls.coef);
    if (r.tsls.ci_low <= config.beta_true && config.beta_true <= r.tsls.ci_high) ++covered;
    reps.push_back({{"seed", r.seed}, {"calls", r.calls}, {"ols", r.ols.coef}, {"tsls", r.tsls.coef},
                    {"tsls_se", r.tsls.se}, {"first_stage_F", r.tsls.first_stage_F.value_or(0.0)}});
  }
  auto o = summarize(ols);
  auto t = summarize(tsls);
  json summary{{"beta_true", config.beta_true},
               {"replications", results.size()},
               {"ols", {{"mean", o.mean}, {"sd", o.sd}, {"mc_se", o.mc_se}}},
               {"tsls", {{"mean", t.mean}, {"sd", t.sd}, {"mc_se", t.mc_se}}},
               {"tsls_coverage", results.empty() ? 0.0 : static_cast<double>(covered) / results.size()},
               {"replication_results", reps}};
  write_text(dir / "montecarlo.json", summary.dump(2) + "\n");
  manifest.get().config_hash = sha256_hex(sim::to_key_values(config).to_string());
  manifest.get().seed = seed;
  manifest.finish(dir, {"montecarlo.json"});
  std::cout << "OLS mean " << o.mean << " (MC SE " << o.mc_se << "), 2SLS mean " << t.mean << " (MC SE " << t.mc_se
            << "), 2SLS coverage " << summary["tsls_coverage"].get<double>() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Examiner-design estimation of the effect of satisfaction on recontact"};
  app.require_subcommand(1);

  std::string sim_config, sim_preset, sim_out = "out";
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic call log");
  auto* cfg_opt = simulate->add_option("--config", sim_config, "Key-value simulator config");
  simulate->add_option("--preset", sim_preset, "multiqueue_bias or random_routing")->excludes(cfg_opt);
  simulate->add_option("--seed", sim_seed, "Override the config seed");
  simulate->add_option("--out", sim_out, "Output directory")->capture_default_str();

  DataArgs ingest_data;
  std::size_t ingest_agency = 25;
  auto* ingest = app.add_subcommand("ingest", "Parse, filter and resolve families");
  add_data_options(ingest, ingest_data);
  ingest->add_option("--agency-threshold", ingest_agency, "Distinct customers above which a family is an agency")
      ->capture_default_str();

  DataArgs est_data;
  EstimationArgs est_args;
  auto* estimate = app.add_subcommand("estimate", "OLS and 2SLS side by side");
  add_data_options(estimate, est_data);
  add_estimation_options(estimate, est_args);

  DataArgs sweep_data;
  EstimationArgs sweep_args;
  std::string sweep_kind = "windows";
  std::optional<std::string> sweep_points;
  auto* sweep = app.add_subcommand("sweep", "Re-estimate over span lengths or recontact horizons");
  add_data_options(sweep, sweep_data);
  add_estimation_options(sweep, sweep_args);
  sweep->add_option("--sweep", sweep_kind, "windows or horizons")->capture_default_str();
  sweep->add_option("--points", sweep_points, "Comma list of sweep values");

  DataArgs diag_data;
  EstimationArgs diag_args;
  auto* diagnose = app.add_subcommand("diagnose", "Waiting-time and balance checks");
  add_data_options(diagnose, diag_data);
  add_estimation_options(diagnose, diag_args);

  std::string mc_config, mc_preset = "multiqueue_bias", mc_out = "out";
  std::uint64_t mc_seed = 1;
  std::size_t mc_reps = 200;
  unsigned mc_threads = 0;
  EstimationArgs mc_args;
  mc_args.scores = "csat";
  auto* montecarlo = app.add_subcommand("montecarlo", "Repeat simulate + estimate over many seeds");
  montecarlo->add_option("--config", mc_config, "Key-value simulator config");
  montecarlo->add_option("--preset", mc_preset, "Simulator preset")->capture_default_str();
  montecarlo->add_option("--seed", mc_seed, "Base seed")->capture_default_str();
  montecarlo->add_option("--replications", mc_reps, "Number of replications")->capture_default_str();
  montecarlo->add_option("--threads", mc_threads, "Worker threads (0: all cores)")->capture_default_str();
  montecarlo->add_option("--out", mc_out, "Output directory")->capture_default_str();
  montecarlo->add_option("--window-minutes", mc_args.window_minutes, "Time-span length")->capture_default_str();
  montecarlo->add_option("--horizon-hours", mc_args.horizon_hours, "Recontact horizon")->capture_default_str();
  montecarlo->add_option("--cluster", mc_args.cluster, "robust, agent, time or two-way")->capture_default_str();
  montecarlo->add_option("--score", mc_args.scores, "csat or fcr")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim_config, sim_preset, sim_seed, sim_out);
    if (*ingest) return cmd_ingest(ingest_data, ingest_agency);
    if (*estimate) return cmd_estimate(est_data, est_args);
    if (*sweep) return cmd_sweep(sweep_data, sweep_args, sweep_kind, sweep_points);
    if (*diagnose) return cmd_diagnose(diag_data, diag_args);
    if (*montecarlo) return cmd_montecarlo(mc_config, mc_preset, mc_seed, mc_reps, mc_threads, mc_args, mc_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
