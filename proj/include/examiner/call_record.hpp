#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "examiner/time_util.hpp"

namespace examiner {

// One service call as recorded by the telephony platform.
struct CallRecord {
  std::string call_id;
  std::optional<std::string> customer_id;
  std::optional<std::string> phone;
  std::string agent_id;
  std::string queue_id;
  EpochSeconds start_time = 0;
  double waiting_time = 0.0;  // seconds
  bool transferred = false;
  bool surveyed = false;
  std::optional<int> csat;  // 0..5, present only for surveyed calls
  std::optional<bool> fcr;
  std::string market;
  std::string ffp_tier;
  double log_hours_from_last_call = 0.0;
  std::int64_t bookings_past_12m = 0;
  // claims_7d, claims_28d, refund_request, regulatory_claim,
  // high_priority_claim, plus any extra flag columns the schema names.
  std::map<std::string, bool> outcome_flags;
  // Never reached an agent before the end of the observation window.
  bool abandoned = false;

  bool identified() const { return customer_id.has_value() || phone.has_value(); }

  friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

}  // namespace examiner
