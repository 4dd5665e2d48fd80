#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "examiner/call_record.hpp"
#include "examiner/kv_config.hpp"

namespace examiner {

class FamilyPartition;

// Maps canonical field names to source column names.
//
// Canonical fields: call_id, customer_id, phone, agent_id, queue_id,
// start_time, waiting_time, transferred, surveyed, csat, fcr, market,
// ffp_tier, log_hours_from_last_call, bookings_past_12m, abandoned, and one
// entry per outcome flag.
struct Schema {
  char delimiter = ',';
  std::vector<std::pair<std::string, std::string>> columns;  // field -> column
  std::vector<std::string> outcome_flags;

  static const std::vector<std::string>& mandatory_fields();
  static const std::vector<std::string>& default_outcome_flags();

  // Identity mapping over every canonical field and the default flags.
  static Schema canonical(char delimiter = ',');

  // Keys: `delimiter`, `column.<field> = <source name>`, and
  // `outcome_flags = a,b,c` (flag columns default to their own names).
  // Unlisted fields fall back to the canonical name.
  static Schema from_config(const KeyValueConfig& config);

  const std::string& column_for(const std::string& field) const;
};

struct RejectedRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
  std::string reason;
};

struct ParseResult {
  std::vector<std::string> header;
  std::vector<CallRecord> records;
  std::vector<RejectedRow> rejects;
};

// Reads a delimited call log. Throws SchemaError when a mandatory column is
// missing from the header; malformed rows land in `rejects`.
ParseResult parse_calls(std::istream& in, const Schema& schema);

// Writes records using the schema's column names and field order. Canonical
// formatting: timestamps as UTC `Z`, booleans as 0/1, reals in shortest
// round-trip form, absent optionals as empty fields.
void write_calls(std::ostream& out, std::span<const CallRecord> calls, const Schema& schema);

// Original header plus a trailing `reject_reason` column.
void write_rejects(std::ostream& out, const ParseResult& parsed, char delimiter);

struct FilterStage {
  std::string name;
  std::size_t removed = 0;
  std::size_t remaining = 0;
};

struct FilterResult {
  std::vector<CallRecord> calls;
  std::vector<FilterStage> stages;
};

// Drops transferred calls, calls with neither customer id nor phone, and
// abandoned calls. Relative order is preserved; per-stage counts are kept so
// sample sizes can be audited.
FilterResult filter_calls(std::span<const CallRecord> calls);

// Calls carrying at least one identifier; the population used to build
// families and recontact labels.
std::vector<CallRecord> identified_calls(std::span<const CallRecord> calls);

struct OutcomeLabel {
  std::string call_id;
  bool recontact = false;
  int horizon_hours = 24;

  friend bool operator==(const OutcomeLabel&, const OutcomeLabel&) = default;
};

// recontact = 1 iff another call of the same family starts in the open
// interval (start_time, start_time + horizon). One chronological sweep per
// family. Throws DataError naming the first call without a family.
std::vector<OutcomeLabel> label_recontact(std::span<const CallRecord> calls,
                                          const FamilyPartition& partition, int horizon_hours);

}  // namespace examiner
