#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "examiner/call_record.hpp"
#include "examiner/kv_config.hpp"

namespace examiner::sim {

// Daily cosine profile: multiplier 1 + amplitude * cos(2*pi*(h - peak)/24),
// floored at zero.
struct DailyProfile {
  double amplitude = 0.0;
  double peak_hour = 12.0;

  double at(double hour_of_day) const;
};

struct QueueConfig {
  std::string id;
  double arrival_rate = 0.0;       // fresh calls per hour, daily mean
  double service_time_mean = 6.0;  // minutes
  DailyProfile profile;
};

// Daily on-duty interval in minutes after midnight UTC; end <= start wraps
// past midnight.
struct ShiftInterval {
  int start_minute = 0;
  int end_minute = 1440;
};

struct AgentConfig {
  std::string id;
  std::set<std::string> certifications;
  double skill = 0.5;
  std::vector<ShiftInterval> shift{ShiftInterval{}};
};

struct MarketConfig {
  std::string name;
  double weight = 1.0;
  DailyProfile profile;
  double anger_shift = 0.0;
};

struct TierConfig {
  std::string name;
  double weight = 1.0;
};

enum class Link { Linear, Logistic };

struct SimConfig {
  std::string start_date = "2023-03-01";
  int horizon_days = 7;
  std::vector<QueueConfig> queues;
  std::vector<AgentConfig> agents;
  std::vector<MarketConfig> markets;
  std::vector<TierConfig> tiers;

  // Recontact probability: base + beta_true * score + strength * anger_recontact_loading * anger.
  double beta_true = -0.65;
  double recontact_base = 0.9;
  Link link = Link::Linear;
  std::string causal_score = "csat";  // csat | fcr
  double confounder_strength = 1.0;
  double anger_satisfaction_loading = -2.0;
  double anger_recontact_loading = -0.25;
  DailyProfile anger_profile;  // additive on the latent anger index
  double anger_daily_mean = 0.0;

  // Latent experience: skill_weight * (skill - 0.5) + strength * anger_satisfaction_loading * anger + N(0,1).
  double skill_weight = 1.2;
  std::array<double, 5> csat_thresholds{-0.84, -0.64, -0.58, -0.50, -0.28};
  double fcr_threshold = -0.6;
  double fcr_noise = 0.5;

  double service_skill_scaling = 0.2;  // mean * (1 + scaling * (0.5 - skill))
  double survey_response_rate = 0.4;
  double recontact_delay_mean_hours = 5.0;
  double recontact_delay_max_hours = 24.0;

  double transfer_rate = 0.05;
  double anonymous_rate = 0.01;
  double missing_customer_id_rate = 0.08;
  double missing_phone_rate = 0.05;
  int agency_count = 3;
  double agency_call_share = 0.02;

  std::uint64_t seed = 1;

  // Throws ConfigError describing the first violation.
  void validate() const;
};

enum class EventKind { Arrival, ServiceStart, ServiceEnd, RecontactDraw, ShiftStart, ShiftEnd };

// Simulation time in hours since the start of the study window.
struct SimEvent {
  double time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::Arrival;
  std::size_t subject = 0;  // call index or agent index
};

struct GroundTruth {
  std::string call_id;
  double anger = 0.0;
  double recontact_probability = 0.0;
  double experience = 0.0;
  bool recontact_drawn = false;
  double arrival_hours = 0.0;
  std::optional<double> service_start_hours;
};

struct SimStats {
  std::size_t arrivals = 0;
  std::size_t followups = 0;
  std::size_t served = 0;
  std::size_t abandoned = 0;
  std::size_t service_starts = 0;
  std::size_t service_ends = 0;
  std::size_t clamp_events = 0;
  std::size_t events = 0;
};

struct SimResult {
  std::vector<CallRecord> calls;  // chronological, ingest schema
  std::vector<GroundTruth> truth;  // aligned with calls
  SimStats stats;
  EpochSeconds window_start = 0;
  EpochSeconds window_end = 0;
};

SimResult run(const SimConfig& config);

// Multi-queue preset: multi-certified agents are more skilled and a second
// queue's load peaks during the day, pulling them away from the studied queue
// at the same hours that customer anger and the market mix shift.
SimConfig scenario_multiqueue_bias();

// One queue, every agent certified and on duty around the clock, no
// time-of-day variation: routing is as good as random.
SimConfig scenario_random_routing();

// Preset by name: "multiqueue_bias" or "random_routing". Throws ConfigError.
SimConfig preset(const std::string& name);

// Reads a key-value config. `preset = <name>` (optional) seeds the defaults;
// other keys override. Lists use `queue.<id>.*`, `agent.<id>.*`,
// `market.<name>.*`, `tier.<name>.weight`.
SimConfig load_config(const KeyValueConfig& config);

KeyValueConfig to_key_values(const SimConfig& config);

// call_id, anger, recontact_probability, experience, recontact_drawn
void write_ground_truth(std::ostream& out, const SimResult& result);

}  // namespace examiner::sim
