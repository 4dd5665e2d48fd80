#include "examiner/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

#include "examiner/csv.hpp"
#include "examiner/errors.hpp"
#include "examiner/family_graph.hpp"

namespace examiner {

namespace {

const std::vector<std::string> kLeadingFields = {
    "call_id", "customer_id", "phone",   "agent_id", "queue_id", "start_time",
    "waiting_time", "transferred", "surveyed", "csat", "fcr", "market",
    "ffp_tier", "log_hours_from_last_call", "bookings_past_12m"};

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  return std::nullopt;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct RowError {
  std::string reason;
};

}  // namespace

const std::vector<std::string>& Schema::mandatory_fields() {
  static const std::vector<std::string> fields = {"call_id",      "agent_id",    "queue_id", "start_time",
                                                  "waiting_time", "transferred", "surveyed"};
  return fields;
}

const std::vector<std::string>& Schema::default_outcome_flags() {
  static const std::vector<std::string> flags = {"claims_7d", "claims_28d", "refund_request",
                                                 "regulatory_claim", "high_priority_claim"};
  return flags;
}

Schema Schema::canonical(char delimiter) {
  Schema s;
  s.delimiter = delimiter;
  for (const auto& f : kLeadingFields) s.columns.emplace_back(f, f);
  for (const auto& f : default_outcome_flags()) s.columns.emplace_back(f, f);
  s.columns.emplace_back("abandoned", "abandoned");
  s.outcome_flags = default_outcome_flags();
  return s;
}

Schema Schema::from_config(const KeyValueConfig& config) {
  Schema s;
  auto delim = config.get_or("delimiter", ",");
  if (delim == "tab" || delim == "\\t") {
    s.delimiter = '\t';
  } else if (delim.size() == 1) {
    s.delimiter = delim[0];
  } else {
    throw ConfigError("delimiter must be a single character or `tab`, got `" + delim + "`");
  }
  if (auto flags = config.get("outcome_flags")) {
    s.outcome_flags = split_list(*flags);
  } else {
    s.outcome_flags = default_outcome_flags();
  }
  std::vector<std::string> fields = kLeadingFields;
  fields.insert(fields.end(), s.outcome_flags.begin(), s.outcome_flags.end());
  fields.push_back("abandoned");
  for (const auto& f : fields) s.columns.emplace_back(f, config.get_or("column." + f, f));
  for (const auto& key : config.keys_with_prefix("column.")) {
    auto field = key.substr(7);
    if (std::find(fields.begin(), fields.end(), field) == fields.end()) {
      throw ConfigError("schema maps unknown field `" + field + "`");
    }
  }
  return s;
}

const std::string& Schema::column_for(const std::string& field) const {
  for (const auto& [f, c] : columns) {
    if (f == field) return c;
  }
  throw ConfigError("schema has no field `" + field + "`");
}

ParseResult parse_calls(std::istream& in, const Schema& schema) {
  ParseResult result;
  csv::Reader reader(in, schema.delimiter);
  if (!reader.next(result.header)) {
    throw SchemaError("input has no header row");
  }
  std::unordered_map<std::string, std::size_t> column_index;
  for (std::size_t i = 0; i < result.header.size(); ++i) column_index.emplace(result.header[i], i);

  // field -> column position (absent optional fields are skipped)
  std::unordered_map<std::string, std::size_t> pos;
  std::vector<std::string> missing;
  for (const auto& [field, column] : schema.columns) {
    auto it = column_index.find(column);
    if (it != column_index.end()) {
      pos.emplace(field, it->second);
    } else if (std::find(Schema::mandatory_fields().begin(), Schema::mandatory_fields().end(), field) !=
               Schema::mandatory_fields().end()) {
      missing.push_back(column);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing mandatory column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw SchemaError(msg);
  }

  std::unordered_set<std::string> seen_ids;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    auto reject = [&](std::string reason) {
      result.rejects.push_back(RejectedRow{reader.line(), fields, std::move(reason)});
    };
    if (fields.size() != result.header.size()) {
      reject("expected " + std::to_string(result.header.size()) + " fields, got " +
             std::to_string(fields.size()));
      continue;
    }
    auto get = [&](const std::string& field) -> std::optional<std::string_view> {
      auto it = pos.find(field);
      if (it == pos.end()) return std::nullopt;
      return std::string_view(fields[it->second]);
    };

    try {
      CallRecord r;
      r.call_id = std::string(*get("call_id"));
      if (r.call_id.empty()) throw RowError{"empty call_id"};
      if (auto v = get("customer_id"); v && !v->empty()) r.customer_id = std::string(*v);
      if (auto v = get("phone"); v && !v->empty()) r.phone = std::string(*v);
      r.queue_id = std::string(*get("queue_id"));
      auto ts = parse_iso8601(*get("start_time"));
      if (!ts) throw RowError{"unparseable timestamp `" + std::string(*get("start_time")) + "`"};
      r.start_time = *ts;
      auto wait = parse_real(*get("waiting_time"));
      if (!wait || *wait < 0) throw RowError{"invalid waiting_time"};
      r.waiting_time = *wait;
      auto transferred = parse_bool(*get("transferred"));
      if (!transferred) throw RowError{"invalid transferred flag"};
      r.transferred = *transferred;
      auto surveyed = parse_bool(*get("surveyed"));
      if (!surveyed) throw RowError{"invalid surveyed flag"};
      r.surveyed = *surveyed;
      if (auto v = get("abandoned"); v && !v->empty()) {
        auto b = parse_bool(*v);
        if (!b) throw RowError{"invalid abandoned flag"};
        r.abandoned = *b;
      }
      r.agent_id = std::string(*get("agent_id"));
      if (r.agent_id.empty() && !r.abandoned) throw RowError{"empty agent_id on a served call"};
      if (auto v = get("csat"); v && !v->empty()) {
        auto c = parse_integer(*v);
        if (!c) throw RowError{"invalid csat `" + std::string(*v) + "`"};
        if (*c < 0 || *c > 5) throw RowError{"csat out of range 0-5"};
        if (!r.surveyed) throw RowError{"csat present on an unsurveyed call"};
        r.csat = static_cast<int>(*c);
      }
      if (auto v = get("fcr"); v && !v->empty()) {
        auto b = parse_bool(*v);
        if (!b) throw RowError{"invalid fcr"};
        if (!r.surveyed) throw RowError{"fcr present on an unsurveyed call"};
        r.fcr = *b;
      }
      if (auto v = get("market")) r.market = std::string(*v);
      if (auto v = get("ffp_tier")) r.ffp_tier = std::string(*v);
      if (auto v = get("log_hours_from_last_call")) {
        auto d = parse_real(*v);
        if (!d) throw RowError{"invalid log_hours_from_last_call"};
        r.log_hours_from_last_call = *d;
      }
      if (auto v = get("bookings_past_12m")) {
        auto b = parse_integer(*v);
        if (!b || *b < 0) throw RowError{"invalid bookings_past_12m"};
        r.bookings_past_12m = *b;
      }
      for (const auto& flag : schema.outcome_flags) {
        auto v = get(flag);
        if (!v || v->empty()) continue;
        auto b = parse_bool(*v);
        if (!b) throw RowError{"invalid outcome flag " + flag};
        r.outcome_flags[flag] = *b;
      }
      if (!seen_ids.insert(r.call_id).second) throw RowError{"duplicate call_id"};
      result.records.push_back(std::move(r));
    } catch (const RowError& e) {
      reject(e.reason);
    }
  }
  return result;
}

void write_calls(std::ostream& out, std::span<const CallRecord> calls, const Schema& schema) {
  std::vector<std::string> row;
  for (const auto& [field, column] : schema.columns) row.push_back(column);
  csv::write_row(out, row, schema.delimiter);
  for (const auto& c : calls) {
    row.clear();
    for (const auto& [field, column] : schema.columns) {
      if (field == "call_id") row.push_back(c.call_id);
      else if (field == "customer_id") row.push_back(c.customer_id.value_or(""));
      else if (field == "phone") row.push_back(c.phone.value_or(""));
      else if (field == "agent_id") row.push_back(c.agent_id);
      else if (field == "queue_id") row.push_back(c.queue_id);
      else if (field == "start_time") row.push_back(format_iso8601(c.start_time));
      else if (field == "waiting_time") row.push_back(csv::format_double(c.waiting_time));
      else if (field == "transferred") row.push_back(c.transferred ? "1" : "0");
      else if (field == "surveyed") row.push_back(c.surveyed ? "1" : "0");
      else if (field == "csat") row.push_back(c.csat ? std::to_string(*c.csat) : "");
      else if (field == "fcr") row.push_back(c.fcr ? (*c.fcr ? "1" : "0") : "");
      else if (field == "market") row.push_back(c.market);
      else if (field == "ffp_tier") row.push_back(c.ffp_tier);
      else if (field == "log_hours_from_last_call") row.push_back(csv::format_double(c.log_hours_from_last_call));
      else if (field == "bookings_past_12m") row.push_back(std::to_string(c.bookings_past_12m));
      else if (field == "abandoned") row.push_back(c.abandoned ? "1" : "0");
      else {
        auto it = c.outcome_flags.find(field);
        row.push_back(it == c.outcome_flags.end() ? "" : (it->second ? "1" : "0"));
      }
    }
    csv::write_row(out, row, schema.delimiter);
  }
}

void write_rejects(std::ostream& out, const ParseResult& parsed, char delimiter) {
  std::vector<std::string> header = parsed.header;
  header.push_back("reject_reason");
  csv::write_row(out, header, delimiter);
  for (const auto& r : parsed.rejects) {
    std::vector<std::string> row = r.fields;
    row.resize(parsed.header.size());
    row.push_back("line " + std::to_string(r.line) + ": " + r.reason);
    csv::write_row(out, row, delimiter);
  }
}

FilterResult filter_calls(std::span<const CallRecord> calls) {
  FilterResult result;
  std::size_t remaining = calls.size();
  std::size_t transferred = 0, unidentified = 0, abandoned = 0;
  result.calls.reserve(calls.size());
  for (const auto& c : calls) {
    if (c.transferred) {
      ++transferred;
    } else if (!c.identified()) {
      ++unidentified;
    } else if (c.abandoned) {
      ++abandoned;
    } else {
      result.calls.push_back(c);
    }
  }
  result.stages.push_back({"input", 0, remaining});
  remaining -= transferred;
  result.stages.push_back({"transferred", transferred, remaining});
  remaining -= unidentified;
  result.stages.push_back({"unidentified", unidentified, remaining});
  remaining -= abandoned;
  result.stages.push_back({"abandoned", abandoned, remaining});
  return result;
}

std::vector<CallRecord> identified_calls(std::span<const CallRecord> calls) {
  std::vector<CallRecord> out;
  out.reserve(calls.size());
  for (const auto& c : calls) {
    if (c.identified()) out.push_back(c);
  }
  return out;
}

std::vector<OutcomeLabel> label_recontact(std::span<const CallRecord> calls,
                                          const FamilyPartition& partition, int horizon_hours) {
  if (horizon_hours <= 0) throw ConfigError("horizon_hours must be positive");
  const EpochSeconds horizon = static_cast<EpochSeconds>(horizon_hours) * 3600;

  std::unordered_map<std::string_view, std::vector<EpochSeconds>> family_times;
  std::vector<std::string_view> family_of(calls.size());
  for (std::size_t i = 0; i < calls.size(); ++i) {
    auto fam = partition.family_of_call(calls[i].call_id);
    if (!fam) throw DataError("call " + calls[i].call_id + " has no family in the partition");
    family_of[i] = *fam;
    family_times[*fam].push_back(calls[i].start_time);
  }
  for (auto& [fam, times] : family_times) std::sort(times.begin(), times.end());

  std::vector<OutcomeLabel> labels;
  labels.reserve(calls.size());
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const auto& times = family_times[family_of[i]];
    const EpochSeconds t = calls[i].start_time;
    auto next = std::upper_bound(times.begin(), times.end(), t);
    bool recontact = next != times.end() && *next < t + horizon;
    labels.push_back(OutcomeLabel{calls[i].call_id, recontact, horizon_hours});
  }
  return labels;
}

}  // namespace examiner
