#include "examiner/panel.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <unordered_set>

#include "examiner/csv.hpp"
#include "examiner/errors.hpp"
#include "examiner/family_graph.hpp"

namespace examiner {

namespace {

// Dense ids in ascending key order.
template <typename Key>
std::vector<int> densify(const std::vector<Key>& keys, std::vector<Key>* levels_out = nullptr) {
  std::vector<Key> levels(keys.begin(), keys.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<int> ids(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ids[i] = static_cast<int>(std::lower_bound(levels.begin(), levels.end(), keys[i]) - levels.begin());
  }
  if (levels_out) *levels_out = std::move(levels);
  return ids;
}

struct CategoricalEncoding {
  std::string reference;
  std::vector<std::string> levels;  // non-reference, sorted
};

CategoricalEncoding encode(const std::vector<std::string>& values) {
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  CategoricalEncoding enc;
  std::size_t best = 0;
  for (const auto& [level, count] : counts) {
    if (count > best) {
      best = count;
      enc.reference = level;
    }
  }
  for (const auto& [level, count] : counts) {
    if (level != enc.reference) enc.levels.push_back(level);
  }
  return enc;
}

}  // namespace

std::int64_t TimeSpanIndex::span_for(EpochSeconds t) const {
  const EpochSeconds w = static_cast<EpochSeconds>(window_minutes) * 60;
  return (t - origin) / w;
}

TimeSpanIndex assign_spans(std::span<const CallRecord> calls, int window_minutes, EpochSeconds origin) {
  if (window_minutes <= 0) throw ConfigError("window_minutes must be positive");
  TimeSpanIndex index;
  index.window_minutes = window_minutes;
  index.origin = origin;
  std::unordered_set<std::int64_t> nonempty;
  index.span_of.reserve(calls.size());
  for (const auto& c : calls) {
    if (c.start_time < origin) {
      throw DataError("call " + c.call_id + " starts at " + format_iso8601(c.start_time) +
                      ", before the span origin " + format_iso8601(origin));
    }
    auto span = index.span_for(c.start_time);
    index.span_of[c.call_id] = span;
    nonempty.insert(span);
  }
  index.nonempty_spans = nonempty.size();
  if (!nonempty.empty()) {
    index.mean_calls_per_span = static_cast<double>(calls.size()) / static_cast<double>(nonempty.size());
  }
  return index;
}

EpochSeconds default_origin(std::span<const CallRecord> calls) {
  if (calls.empty()) return 0;
  EpochSeconds first = calls.front().start_time;
  for (const auto& c : calls) first = std::min(first, c.start_time);
  return floor_to_midnight(first);
}

std::string to_string(Score score) { return score == Score::Csat ? "csat" : "fcr"; }

Score parse_score(const std::string& text) {
  if (text == "csat") return Score::Csat;
  if (text == "fcr") return Score::Fcr;
  throw ConfigError("unknown score `" + text + "` (expected csat or fcr)");
}

int DesignMatrix::n_time_clusters() const {
  int m = 0;
  for (int c : cluster_t) m = std::max(m, c + 1);
  return m;
}

std::vector<std::string> available_outcomes(std::span<const CallRecord> calls) {
  std::set<std::string> flags;
  for (const auto& c : calls) {
    for (const auto& [name, value] : c.outcome_flags) flags.insert(name);
  }
  std::vector<std::string> out{"recontact"};
  out.insert(out.end(), flags.begin(), flags.end());
  return out;
}

DesignMatrix build_design(std::span<const CallRecord> calls, std::span<const OutcomeLabel> labels,
                          const TimeSpanIndex& spans, const FamilyPartition& partition,
                          const std::set<std::string>& agency_families, const DesignOptions& options) {
  const bool is_recontact = options.outcome == "recontact";
  if (!is_recontact) {
    auto names = available_outcomes(calls);
    if (std::find(names.begin(), names.end(), options.outcome) == names.end()) {
      std::string msg = "unknown outcome `" + options.outcome + "`; available:";
      for (const auto& n : names) msg += " " + n;
      throw ConfigError(msg);
    }
  }
  std::unordered_map<std::string_view, bool> label_of;
  if (is_recontact) {
    for (const auto& l : labels) label_of.emplace(l.call_id, l.recontact);
  }

  DesignMatrix d;
  d.outcome = options.outcome;
  d.score = options.score;
  auto& acc = d.accounting;

  std::vector<double> y, sat, wait, log_hours, bookings;
  std::vector<std::string> markets, tiers, agents;
  std::vector<std::int64_t> span_ord, period_ord;
  const int period = options.cluster_period_minutes > 0 ? options.cluster_period_minutes : spans.window_minutes;

  for (const auto& c : calls) {
    ++acc.candidates;
    if (options.queue && c.queue_id != *options.queue) {
      ++acc.other_queue;
      continue;
    }
    auto family = partition.family_of_call(c.call_id);
    if (!family) throw DataError("call " + c.call_id + " has no family in the partition");
    if (agency_families.count(std::string(*family))) {
      ++acc.agency;
      continue;
    }
    std::optional<double> score;
    if (c.surveyed) {
      if (options.score == Score::Csat && c.csat) score = *c.csat / 5.0;
      if (options.score == Score::Fcr && c.fcr) score = *c.fcr ? 1.0 : 0.0;
    }
    if (!score) {
      ++acc.unsurveyed;
      continue;
    }
    std::optional<double> outcome;
    if (is_recontact) {
      auto it = label_of.find(c.call_id);
      if (it != label_of.end()) outcome = it->second ? 1.0 : 0.0;
    } else {
      auto it = c.outcome_flags.find(options.outcome);
      if (it != c.outcome_flags.end()) outcome = it->second ? 1.0 : 0.0;
    }
    if (!outcome) {
      ++acc.missing_outcome;
      continue;
    }
    if (is_recontact && options.label_window_end &&
        c.start_time + static_cast<EpochSeconds>(options.label_horizon_hours) * 3600 > *options.label_window_end) {
      ++acc.censored;
      continue;
    }
    auto span_it = spans.span_of.find(c.call_id);
    if (span_it == spans.span_of.end()) throw DataError("call " + c.call_id + " has no time span");

    y.push_back(*outcome);
    sat.push_back(*score);
    wait.push_back(c.waiting_time);
    log_hours.push_back(c.log_hours_from_last_call);
    bookings.push_back(static_cast<double>(c.bookings_past_12m));
    markets.push_back(c.market);
    tiers.push_back(c.ffp_tier);
    agents.push_back(c.agent_id);
    span_ord.push_back(span_it->second);
    period_ord.push_back((c.start_time - spans.origin) / (static_cast<EpochSeconds>(period) * 60));
    d.row_call_ids.push_back(c.call_id);
  }
  const std::size_t n = y.size();
  acc.rows = n;

  d.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  d.sat = Eigen::Map<Eigen::VectorXd>(sat.data(), static_cast<Eigen::Index>(n));
  d.waiting_time = Eigen::Map<Eigen::VectorXd>(wait.data(), static_cast<Eigen::Index>(n));

  auto market_enc = encode(markets);
  auto tier_enc = encode(tiers);
  const std::size_t k = market_enc.levels.size() + tier_enc.levels.size() + 2;
  d.w_baseline = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::size_t col = 0;
  for (const auto& level : market_enc.levels) {
    d.covariate_names.push_back("market=" + level);
    for (std::size_t i = 0; i < n; ++i) {
      if (markets[i] == level) d.w_baseline(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = 1.0;
    }
    ++col;
  }
  for (const auto& level : tier_enc.levels) {
    d.covariate_names.push_back("ffp_tier=" + level);
    for (std::size_t i = 0; i < n; ++i) {
      if (tiers[i] == level) d.w_baseline(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = 1.0;
    }
    ++col;
  }
  d.covariate_names.push_back("log_hours_from_last_call");
  d.covariate_names.push_back("bookings_past_12m");
  for (std::size_t i = 0; i < n; ++i) {
    d.w_baseline(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = log_hours[i];
    d.w_baseline(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col + 1)) = bookings[i];
  }
  d.reference_levels = {"market=" + market_enc.reference, "ffp_tier=" + tier_enc.reference};

  d.span_ids = densify(span_ord, &d.span_ordinals);
  d.agent_ids = densify(agents, &d.agent_names);
  d.cluster_a = d.agent_ids;
  d.cluster_t = densify(period_ord);
  return d;
}

DesignMatrix DesignMatrix::subset(std::span<const std::size_t> rows) const {
  DesignMatrix s;
  s.outcome = outcome;
  s.score = score;
  s.covariate_names = covariate_names;
  s.reference_levels = reference_levels;
  s.accounting = accounting;
  const auto n = static_cast<Eigen::Index>(rows.size());
  s.y.resize(n);
  s.sat.resize(n);
  s.waiting_time.resize(n);
  s.w_baseline.resize(n, w_baseline.cols());
  std::vector<int> span_old, agent_old, ct_old;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    s.y(i) = y(r);
    s.sat(i) = sat(r);
    s.waiting_time(i) = waiting_time(r);
    s.w_baseline.row(i) = w_baseline.row(r);
    span_old.push_back(span_ids[static_cast<std::size_t>(r)]);
    agent_old.push_back(agent_ids[static_cast<std::size_t>(r)]);
    ct_old.push_back(cluster_t[static_cast<std::size_t>(r)]);
    s.row_call_ids.push_back(row_call_ids[static_cast<std::size_t>(r)]);
  }
  std::vector<int> span_levels, agent_levels;
  s.span_ids = densify(span_old, &span_levels);
  for (int old : span_levels) s.span_ordinals.push_back(span_ordinals[static_cast<std::size_t>(old)]);
  s.agent_ids = densify(agent_old, &agent_levels);
  for (int old : agent_levels) s.agent_names.push_back(agent_names[static_cast<std::size_t>(old)]);
  s.cluster_a = s.agent_ids;
  s.cluster_t = densify(ct_old);
  s.accounting.rows = rows.size();
  return s;
}

void write_design(std::ostream& out, const DesignMatrix& d, char delimiter) {
  std::vector<std::string> row{"call_id", "y", "sat", "waiting_time", "span", "agent", "cluster_a", "cluster_t"};
  row.insert(row.end(), d.covariate_names.begin(), d.covariate_names.end());
  csv::write_row(out, row, delimiter);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    row = {d.row_call_ids[i],
           csv::format_double(d.y(r)),
           csv::format_double(d.sat(r)),
           csv::format_double(d.waiting_time(r)),
           std::to_string(d.span_ordinals[static_cast<std::size_t>(d.span_ids[i])]),
           d.agent_names[static_cast<std::size_t>(d.agent_ids[i])],
           std::to_string(d.cluster_a[i]),
           std::to_string(d.cluster_t[i])};
    for (Eigen::Index c = 0; c < d.w_baseline.cols(); ++c) row.push_back(csv::format_double(d.w_baseline(r, c)));
    csv::write_row(out, row, delimiter);
  }
}

}  // namespace examiner
