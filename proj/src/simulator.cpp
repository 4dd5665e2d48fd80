#include "examiner/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <numbers>
#include <queue>
#include <random>

#include "examiner/csv.hpp"
#include "examiner/errors.hpp"

namespace examiner::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(mix(a) ^ (b + 0x632be59bd9b4e019ULL)); }
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix(mix(a, b), c); }

std::string hex_id(char prefix, std::uint64_t key) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%c%012llx", prefix, static_cast<unsigned long long>(key & 0xffffffffffffULL));
  return buf;
}

std::string phone_number(std::uint64_t key) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "+1%010llu", static_cast<unsigned long long>(key % 10000000000ULL));
  return buf;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double hour_of_day(double hours) {
  double h = std::fmod(hours, 24.0);
  return h < 0 ? h + 24.0 : h;
}

double additive(const DailyProfile& p, double hour) {
  return p.amplitude * std::cos(kTwoPi * (hour - p.peak_hour) / 24.0);
}

struct SimCall {
  std::uint64_t key = 0;
  std::size_t queue = 0;
  std::int64_t arrival_sec = 0;  // since window start
  std::optional<std::string> customer_id;
  std::optional<std::string> phone;
  std::string market;
  std::string tier;
  std::int64_t bookings = 0;
  double log_hours = 0.0;
  bool transferred = false;
  bool surveyed = false;
  double anger = 0.0;
  double experience = 0.0;
  int csat = 0;
  bool fcr = false;
  double experience_noise = 0.0;
  double fcr_noise = 0.0;
  double service_units = 1.0;  // unit exponential
  double recontact_u = 0.0;
  double delay_u = 0.0;
  std::map<std::string, bool> flags;

  std::optional<std::size_t> agent;
  std::optional<double> service_start;
  double recontact_p = 0.0;
  bool recontact_drawn = false;
  bool abandoned = false;
  std::uint64_t arrival_order = 0;  // position among processed arrivals

  double arrival_hours() const { return static_cast<double>(arrival_sec) / 3600.0; }
};

struct AgentState {
  bool on_duty = false;
  bool busy = false;
  double idle_since = 0.0;
};

struct EventOrder {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.sequence > b.sequence;
  }
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& config) : cfg_(config), horizon_(24.0 * config.horizon_days) {
    for (const auto& m : cfg_.markets) markets_.push_back(m);
    if (markets_.empty()) markets_.push_back(MarketConfig{"default", 1.0, {}, 0.0});
    for (const auto& t : cfg_.tiers) tiers_.push_back(t);
    if (tiers_.empty()) tiers_.push_back(TierConfig{"none", 1.0});
    for (std::size_t q = 0; q < cfg_.queues.size(); ++q) queue_index_[cfg_.queues[q].id] = q;
    certified_.resize(cfg_.agents.size());
    for (std::size_t a = 0; a < cfg_.agents.size(); ++a) {
      for (const auto& c : cfg_.agents[a].certifications) certified_[a].push_back(queue_index_.at(c));
      std::sort(certified_[a].begin(), certified_[a].end());
    }
    agents_.resize(cfg_.agents.size());
    waiting_.resize(cfg_.queues.size());
  }

  SimResult run();

 private:
  void push(double time, EventKind kind, std::size_t subject) {
    events_.push(SimEvent{time, next_sequence_++, kind, subject});
  }

  void schedule_arrivals();
  void schedule_shifts();
  std::size_t add_fresh_call(std::size_t queue, std::uint64_t key, std::int64_t arrival_sec);
  std::size_t add_followup(const SimCall& parent, std::int64_t arrival_sec);
  void draw_outcomes(SimCall& call, std::mt19937_64& rng);
  void assign(std::size_t agent, std::size_t call, double now);
  void try_serve_waiting(std::size_t agent, double now);
  void on_arrival(std::size_t call, double now);
  void on_service_end(std::size_t call, double now);
  void on_recontact_draw(std::size_t call, double now);
  double recontact_probability(const SimCall& call);

  const SimConfig& cfg_;
  double horizon_;
  std::vector<MarketConfig> markets_;
  std::vector<TierConfig> tiers_;
  std::map<std::string, std::size_t> queue_index_;
  std::vector<std::vector<std::size_t>> certified_;
  std::vector<AgentState> agents_;
  std::vector<std::deque<std::size_t>> waiting_;
  std::vector<SimCall> calls_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, EventOrder> events_;
  std::uint64_t next_sequence_ = 0;
  SimStats stats_;
};

void Simulation::schedule_arrivals() {
  for (std::size_t q = 0; q < cfg_.queues.size(); ++q) {
    const auto& queue = cfg_.queues[q];
    if (queue.arrival_rate <= 0.0) continue;
    std::mt19937_64 rng(mix(cfg_.seed, 0xa441ULL, q));
    const double peak_rate = queue.arrival_rate * (1.0 + std::fabs(queue.profile.amplitude));
    std::exponential_distribution<double> gap(peak_rate);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double t = 0.0;
    std::uint64_t n = 0;
    while (true) {
      t += gap(rng);
      if (t >= horizon_) break;
      double accept = queue.arrival_rate * queue.profile.at(hour_of_day(t)) / peak_rate;
      if (unit(rng) >= accept) continue;
      auto sec = static_cast<std::int64_t>(std::floor(t * 3600.0));
      auto idx = add_fresh_call(q, mix(cfg_.seed, q + 1, n++), sec);
      push(calls_[idx].arrival_hours(), EventKind::Arrival, idx);
    }
  }
}

void Simulation::schedule_shifts() {
  for (std::size_t a = 0; a < cfg_.agents.size(); ++a) {
    std::vector<std::pair<double, double>> spans;
    for (int day = -1; day < cfg_.horizon_days; ++day) {
      for (const auto& s : cfg_.agents[a].shift) {
        double start = 24.0 * day + s.start_minute / 60.0;
        int length = s.end_minute - s.start_minute;
        if (length <= 0) length += 1440;
        double end = start + length / 60.0;
        start = std::max(start, 0.0);
        end = std::min(end, horizon_);
        if (end > start) spans.emplace_back(start, end);
      }
    }
    std::sort(spans.begin(), spans.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& s : spans) {
      if (!merged.empty() && s.first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, s.second);
      } else {
        merged.push_back(s);
      }
    }
    for (const auto& [start, end] : merged) {
      push(start, EventKind::ShiftStart, a);
      if (end < horizon_) push(end, EventKind::ShiftEnd, a);
    }
  }
}

void Simulation::draw_outcomes(SimCall& call, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double hour = hour_of_day(call.arrival_hours());
  double market_shift = 0.0;
  for (const auto& m : markets_) {
    if (m.name == call.market) market_shift = m.anger_shift;
  }
  call.anger = normal_cdf(cfg_.anger_daily_mean + additive(cfg_.anger_profile, hour) + market_shift + normal(rng));
  call.transferred = unit(rng) < cfg_.transfer_rate;
  call.surveyed = unit(rng) < cfg_.survey_response_rate;
  call.experience_noise = normal(rng);
  call.fcr_noise = normal(rng) * cfg_.fcr_noise;
  call.service_units = std::exponential_distribution<double>(1.0)(rng);
  call.recontact_u = unit(rng);
  call.delay_u = unit(rng);
  call.flags["claims_7d"] = unit(rng) < 0.02 + 0.10 * call.anger;
  call.flags["claims_28d"] = call.flags["claims_7d"] || unit(rng) < 0.03 + 0.10 * call.anger;
  call.flags["refund_request"] = unit(rng) < 0.05 + 0.10 * call.anger;
  call.flags["regulatory_claim"] = unit(rng) < 0.005 + 0.01 * call.anger;
  call.flags["high_priority_claim"] = unit(rng) < 0.01 + 0.05 * call.anger;
}

std::size_t Simulation::add_fresh_call(std::size_t queue, std::uint64_t key, std::int64_t arrival_sec) {
  std::mt19937_64 rng(key);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimCall call;
  call.key = key;
  call.queue = queue;
  call.arrival_sec = arrival_sec;

  const double hour = hour_of_day(call.arrival_hours());
  std::vector<double> weights;
  for (const auto& m : markets_) weights.push_back(m.weight * m.profile.at(hour));
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0.0; })) {
    for (std::size_t i = 0; i < markets_.size(); ++i) weights[i] = markets_[i].weight;
  }
  call.market = markets_[std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng)].name;
  std::vector<double> tier_weights;
  for (const auto& t : tiers_) tier_weights.push_back(t.weight);
  auto tier = std::discrete_distribution<std::size_t>(tier_weights.begin(), tier_weights.end())(rng);
  call.tier = tiers_[tier].name;
  call.bookings = std::poisson_distribution<std::int64_t>(1.0 + 3.0 * static_cast<double>(tier))(rng);
  call.log_hours = std::log(1.0 + std::exponential_distribution<double>(1.0 / 500.0)(rng));

  const double identity = unit(rng);
  const double agency_u = unit(rng);
  const double cid_u = unit(rng);
  const double phone_u = unit(rng);
  const auto agency_pick = static_cast<std::uint64_t>(unit(rng) * std::max(cfg_.agency_count, 1));
  if (identity < cfg_.anonymous_rate) {
    // no identifiers at all
  } else if (cfg_.agency_count > 0 && agency_u < cfg_.agency_call_share) {
    call.customer_id = hex_id('A', mix(key, 0xc1d));
    call.phone = phone_number(mix(cfg_.seed, 0xa9e7c1ULL, agency_pick));
  } else {
    if (cid_u >= cfg_.missing_customer_id_rate) call.customer_id = hex_id('U', mix(key, 0xc1d));
    if (phone_u >= cfg_.missing_phone_rate) call.phone = phone_number(mix(key, 0x9403e));
  }
  draw_outcomes(call, rng);
  calls_.push_back(std::move(call));
  return calls_.size() - 1;
}

std::size_t Simulation::add_followup(const SimCall& parent, std::int64_t arrival_sec) {
  const std::uint64_t key = mix(parent.key, 0xf011ULL);
  std::mt19937_64 rng(key);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimCall call;
  call.key = key;
  call.queue = parent.queue;
  call.arrival_sec = arrival_sec;
  call.market = parent.market;
  call.tier = parent.tier;
  call.bookings = parent.bookings;
  call.log_hours = std::log(1.0 + static_cast<double>(arrival_sec - parent.arrival_sec) / 3600.0);
  call.phone = parent.phone;
  const double u = unit(rng);
  if (!parent.phone || u < 0.6) {
    call.customer_id = parent.customer_id;
  } else if (u < 0.85) {
    call.customer_id = hex_id('U', mix(key, 0x2e1));
  }
  draw_outcomes(call, rng);
  calls_.push_back(std::move(call));
  ++stats_.followups;
  return calls_.size() - 1;
}

double Simulation::recontact_probability(const SimCall& call) {
  const double score = cfg_.causal_score == "fcr" ? (call.fcr ? 1.0 : 0.0) : call.csat / 5.0;
  const double index = cfg_.recontact_base + cfg_.beta_true * score +
                       cfg_.confounder_strength * cfg_.anger_recontact_loading * call.anger;
  double p = index;
  if (cfg_.link == Link::Logistic) p = 1.0 / (1.0 + std::exp(-index));
  if (p < 0.0 || p > 1.0) {
    ++stats_.clamp_events;
    p = std::clamp(p, 0.0, 1.0);
  }
  return p;
}

void Simulation::assign(std::size_t agent, std::size_t call, double now) {
  agents_[agent].busy = true;
  calls_[call].agent = agent;
  push(now, EventKind::ServiceStart, call);
}

void Simulation::try_serve_waiting(std::size_t agent, double now) {
  if (now >= horizon_ || !agents_[agent].on_duty || agents_[agent].busy) return;
  std::optional<std::size_t> best_queue;
  for (auto q : certified_[agent]) {
    if (waiting_[q].empty()) continue;
    if (!best_queue || calls_[waiting_[q].front()].arrival_sec < calls_[waiting_[*best_queue].front()].arrival_sec) {
      best_queue = q;
    }
  }
  if (!best_queue) return;
  auto call = waiting_[*best_queue].front();
  waiting_[*best_queue].pop_front();
  assign(agent, call, now);
}

void Simulation::on_arrival(std::size_t call, double now) {
  calls_[call].arrival_order = stats_.arrivals++;
  const auto q = calls_[call].queue;
  std::optional<std::size_t> chosen;
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    const auto& s = agents_[a];
    if (!s.on_duty || s.busy) continue;
    if (!std::binary_search(certified_[a].begin(), certified_[a].end(), q)) continue;
    if (!chosen || s.idle_since < agents_[*chosen].idle_since) chosen = a;
  }
  if (chosen && waiting_[q].empty()) {
    assign(*chosen, call, now);
  } else {
    waiting_[q].push_back(call);
  }
}

void Simulation::on_service_end(std::size_t call, double now) {
  ++stats_.service_ends;
  auto agent = *calls_[call].agent;
  agents_[agent].busy = false;
  agents_[agent].idle_since = now;
  push(now, EventKind::RecontactDraw, call);
  try_serve_waiting(agent, now);
}

void Simulation::on_recontact_draw(std::size_t call, double now) {
  auto& c = calls_[call];
  c.recontact_p = recontact_probability(c);
  c.recontact_drawn = c.recontact_u < c.recontact_p;
  if (!c.recontact_drawn) return;
  const double max_hours = cfg_.recontact_delay_max_hours;
  const std::int64_t lo = c.arrival_sec + 1;
  const std::int64_t hi = c.arrival_sec + static_cast<std::int64_t>(std::llround(max_hours * 3600.0)) - 1;
  const double room = static_cast<double>(hi) / 3600.0 - now;
  if (room <= 0.0) return;
  const double m = cfg_.recontact_delay_mean_hours;
  const double delay = -m * std::log(1.0 - c.delay_u * (1.0 - std::exp(-room / m)));
  auto sec = static_cast<std::int64_t>(std::ceil((now + delay) * 3600.0));
  sec = std::clamp(sec, lo, hi);
  if (static_cast<double>(sec) / 3600.0 >= horizon_) return;
  auto idx = add_followup(calls_[call], sec);
  push(calls_[idx].arrival_hours(), EventKind::Arrival, idx);
}

SimResult Simulation::run() {
  schedule_shifts();
  schedule_arrivals();
  while (!events_.empty()) {
    auto ev = events_.top();
    events_.pop();
    ++stats_.events;
    switch (ev.kind) {
      case EventKind::Arrival: on_arrival(ev.subject, ev.time); break;
      case EventKind::ServiceStart: {
        ++stats_.service_starts;
        auto& c = calls_[ev.subject];
        c.service_start = ev.time;
        const auto& agent = cfg_.agents[*c.agent];
        c.experience = cfg_.skill_weight * (agent.skill - 0.5) +
                       cfg_.confounder_strength * cfg_.anger_satisfaction_loading * c.anger + c.experience_noise;
        c.csat = static_cast<int>(std::count_if(cfg_.csat_thresholds.begin(), cfg_.csat_thresholds.end(),
                                                [&](double t) { return c.experience > t; }));
        c.fcr = c.experience + c.fcr_noise > cfg_.fcr_threshold;
        const double mean_hours = cfg_.queues[c.queue].service_time_mean / 60.0;
        const double duration = c.service_units * mean_hours * (1.0 + cfg_.service_skill_scaling * (0.5 - agent.skill));
        push(ev.time + std::max(duration, 0.0), EventKind::ServiceEnd, ev.subject);
        break;
      }
      case EventKind::ServiceEnd: on_service_end(ev.subject, ev.time); break;
      case EventKind::RecontactDraw: on_recontact_draw(ev.subject, ev.time); break;
      case EventKind::ShiftStart:
        agents_[ev.subject].on_duty = true;
        if (!agents_[ev.subject].busy) agents_[ev.subject].idle_since = ev.time;
        try_serve_waiting(ev.subject, ev.time);
        break;
      case EventKind::ShiftEnd: agents_[ev.subject].on_duty = false; break;
    }
  }
  for (auto& w : waiting_) {
    for (auto idx : w) calls_[idx].abandoned = true;
  }

  std::vector<std::size_t> order(calls_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return calls_[a].arrival_order < calls_[b].arrival_order;
  });

  SimResult result;
  result.window_start = *parse_date(cfg_.start_date);
  result.window_end = result.window_start + static_cast<EpochSeconds>(cfg_.horizon_days) * 86400;
  std::size_t serial = 0;
  for (auto idx : order) {
    const auto& c = calls_[idx];
    char id[32];
    std::snprintf(id, sizeof id, "C%07zu", ++serial);
    CallRecord r;
    r.call_id = id;
    r.customer_id = c.customer_id;
    r.phone = c.phone;
    r.queue_id = cfg_.queues[c.queue].id;
    r.start_time = result.window_start + c.arrival_sec;
    r.market = c.market;
    r.ffp_tier = c.tier;
    r.log_hours_from_last_call = std::round(c.log_hours * 1e6) / 1e6;
    r.bookings_past_12m = c.bookings;
    r.outcome_flags = c.flags;
    GroundTruth t;
    t.call_id = r.call_id;
    t.anger = c.anger;
    t.arrival_hours = c.arrival_hours();
    if (c.abandoned) {
      ++stats_.abandoned;
      r.abandoned = true;
      r.waiting_time = std::round((horizon_ - c.arrival_hours()) * 3600.0);
    } else {
      ++stats_.served;
      r.agent_id = cfg_.agents[*c.agent].id;
      r.waiting_time = std::round((*c.service_start - c.arrival_hours()) * 3600.0);
      r.transferred = c.transferred;
      r.surveyed = c.surveyed;
      if (c.surveyed) {
        r.csat = c.csat;
        r.fcr = c.fcr;
      }
      t.experience = c.experience;
      t.recontact_probability = c.recontact_p;
      t.recontact_drawn = c.recontact_drawn;
      t.service_start_hours = c.service_start;
    }
    result.calls.push_back(std::move(r));
    result.truth.push_back(std::move(t));
  }
  result.stats = stats_;
  return result;
}

std::string format_minutes(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

int parse_minutes(const std::string& text, const std::string& key) {
  int h = 0, m = 0;
  char colon = 0;
  if (std::sscanf(text.c_str(), "%d%c%d", &h, &colon, &m) != 3 || colon != ':' || h < 0 || h > 24 || m < 0 ||
      m > 59 || h * 60 + m > 1440) {
    throw ConfigError(key + ": bad time of day `" + text + "` (expected HH:MM)");
  }
  return h * 60 + m;
}

std::vector<ShiftInterval> parse_shift(const std::string& text, const std::string& key) {
  std::vector<ShiftInterval> out;
  for (const auto& part : split_list(text, ';')) {
    auto dash = part.find('-');
    if (dash == std::string::npos) throw ConfigError(key + ": expected HH:MM-HH:MM, got `" + part + "`");
    out.push_back({parse_minutes(trim(part.substr(0, dash)), key), parse_minutes(trim(part.substr(dash + 1)), key)});
  }
  if (out.empty()) throw ConfigError(key + ": empty shift");
  return out;
}

std::string join(const std::set<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

double DailyProfile::at(double hour_of_day) const {
  return std::max(0.0, 1.0 + amplitude * std::cos(kTwoPi * (hour_of_day - peak_hour) / 24.0));
}

void SimConfig::validate() const {
  auto unit_interval = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  if (!parse_date(start_date)) throw ConfigError("start_date `" + start_date + "` is not YYYY-MM-DD");
  if (horizon_days < 0) throw ConfigError("horizon_days must be non-negative");
  if (queues.empty()) throw ConfigError("at least one queue is required");
  std::set<std::string> ids;
  for (const auto& q : queues) {
    if (q.id.empty()) throw ConfigError("queue with an empty id");
    if (!ids.insert(q.id).second) throw ConfigError("duplicate queue " + q.id);
    if (!(q.arrival_rate >= 0.0)) throw ConfigError("queue " + q.id + ": arrival_rate must be non-negative");
    if (!(q.service_time_mean > 0.0)) throw ConfigError("queue " + q.id + ": service_time_mean must be positive");
  }
  std::set<std::string> agent_ids;
  std::set<std::string> served;
  for (const auto& a : agents) {
    if (a.id.empty()) throw ConfigError("agent with an empty id");
    if (!agent_ids.insert(a.id).second) throw ConfigError("duplicate agent " + a.id);
    if (!(a.skill >= 0.0 && a.skill <= 1.0)) throw ConfigError("agent " + a.id + ": skill must lie in [0, 1]");
    for (const auto& c : a.certifications) {
      if (!ids.count(c)) throw ConfigError("agent " + a.id + " is certified for unknown queue " + c);
      served.insert(c);
    }
    for (const auto& s : a.shift) {
      if (s.start_minute < 0 || s.start_minute > 1440 || s.end_minute < 0 || s.end_minute > 1440) {
        throw ConfigError("agent " + a.id + ": shift minutes must lie in [0, 1440]");
      }
    }
  }
  for (const auto& q : queues) {
    if (!served.count(q.id)) throw ConfigError("queue " + q.id + " has no certified agent");
  }
  double market_weight = 0.0;
  for (const auto& m : markets) {
    if (!(m.weight >= 0.0)) throw ConfigError("market " + m.name + ": weight must be non-negative");
    market_weight += m.weight;
  }
  if (!markets.empty() && market_weight <= 0.0) throw ConfigError("market weights sum to zero");
  double tier_weight = 0.0;
  for (const auto& t : tiers) {
    if (!(t.weight >= 0.0)) throw ConfigError("tier " + t.name + ": weight must be non-negative");
    tier_weight += t.weight;
  }
  if (!tiers.empty() && tier_weight <= 0.0) throw ConfigError("tier weights sum to zero");
  if (causal_score != "csat" && causal_score != "fcr") throw ConfigError("causal_score must be csat or fcr");
  if (!(confounder_strength >= 0.0)) throw ConfigError("confounder_strength must be non-negative");
  if (!std::is_sorted(csat_thresholds.begin(), csat_thresholds.end())) {
    throw ConfigError("csat_thresholds must be ascending");
  }
  unit_interval(survey_response_rate, "survey_response_rate");
  unit_interval(transfer_rate, "transfer_rate");
  unit_interval(anonymous_rate, "anonymous_rate");
  unit_interval(missing_customer_id_rate, "missing_customer_id_rate");
  unit_interval(missing_phone_rate, "missing_phone_rate");
  unit_interval(agency_call_share, "agency_call_share");
  if (agency_count < 0) throw ConfigError("agency_count must be non-negative");
  if (!(fcr_noise >= 0.0)) throw ConfigError("fcr_noise must be non-negative");
  if (!(recontact_delay_mean_hours > 0.0)) throw ConfigError("recontact_delay_mean_hours must be positive");
  if (!(recontact_delay_max_hours > 0.0)) throw ConfigError("recontact_delay_max_hours must be positive");
}

SimResult run(const SimConfig& config) {
  config.validate();
  // Entities are processed in name order so a config read back from a file,
  // whose lists come out sorted, reproduces the same draws.
  SimConfig sorted = config;
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  auto by_name = [](const auto& a, const auto& b) { return a.name < b.name; };
  std::stable_sort(sorted.queues.begin(), sorted.queues.end(), by_id);
  std::stable_sort(sorted.agents.begin(), sorted.agents.end(), by_id);
  std::stable_sort(sorted.markets.begin(), sorted.markets.end(), by_name);
  std::stable_sort(sorted.tiers.begin(), sorted.tiers.end(), by_name);
  Simulation sim(sorted);
  return sim.run();
}

SimConfig scenario_multiqueue_bias() {
  SimConfig c;
  c.start_date = "2023-03-01";
  c.horizon_days = 10;
  c.queues = {QueueConfig{"Q1", 25.0, 8.0, DailyProfile{0.5, 14.0}},
              QueueConfig{"Q2", 15.0, 8.0, DailyProfile{0.8, 14.0}}};
  c.markets = {MarketConfig{"DOM", 0.6, DailyProfile{0.5, 12.0}, 0.0},
               MarketConfig{"EUR", 0.3, DailyProfile{0.8, 9.0}, 0.3},
               MarketConfig{"INT", 0.1, DailyProfile{1.0, 0.0}, -0.3}};
  c.tiers = {TierConfig{"none", 0.6}, TierConfig{"silver", 0.25}, TierConfig{"gold", 0.15}};
  c.anger_profile = DailyProfile{0.5, 14.0};
  c.survey_response_rate = 0.5;

  // Eight-hour shifts start at staggered hours so every time span mixes
  // agents from overlapping shifts. Single-queue agents working around
  // midnight are more skilled; multi-certified agents are the most skilled
  // but get pulled into Q2 during its daytime peak. Skills come from a fixed
  // stream so the roster is the same for every seed.
  std::mt19937_64 rng(0x5eed0a9e7ULL);
  std::uniform_real_distribution<double> base(0.1, 0.5);
  std::uniform_real_distribution<double> high(0.5, 1.0);
  const int single_starts[] = {22, 23, 0, 1, 2, 3, 4, 5, 6, 6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13, 14, 14, 15, 16, 17, 18};
  const int multi_starts[] = {20, 22, 0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
  const int second_starts[] = {6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 0, 2};
  int serial = 0;
  auto add = [&](std::set<std::string> certs, double skill, int start_hour) {
    char id[16];
    std::snprintf(id, sizeof id, "A%03d", ++serial);
    const ShiftInterval shift{start_hour * 60, ((start_hour + 8) % 24) * 60};
    c.agents.push_back(AgentConfig{id, std::move(certs), std::round(skill * 1000.0) / 1000.0, {shift}});
  };
  for (int h : single_starts) {
    const bool night = h >= 20 || h <= 3;
    add({"Q1"}, base(rng) + (night ? 0.25 : 0.0), h);
  }
  for (int h : multi_starts) add({"Q1", "Q2"}, high(rng), h);
  for (int h : second_starts) add({"Q2"}, 0.5, h);
  return c;
}

SimConfig scenario_random_routing() {
  SimConfig c;
  c.start_date = "2023-03-01";
  c.horizon_days = 7;
  c.queues = {QueueConfig{"Q1", 40.0, 8.0, DailyProfile{}}};
  c.markets = {MarketConfig{"DOM", 0.7, {}, 0.0}, MarketConfig{"EUR", 0.3, {}, 0.3}};
  c.tiers = {TierConfig{"none", 0.7}, TierConfig{"gold", 0.3}};
  c.survey_response_rate = 0.5;
  std::mt19937_64 rng(0x5eed0b0bULL);
  std::uniform_real_distribution<double> skill(0.1, 0.9);
  for (int i = 0; i < 12; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "A%03d", i + 1);
    c.agents.push_back(AgentConfig{id, {"Q1"}, std::round(skill(rng) * 1000.0) / 1000.0, {ShiftInterval{}}});
  }
  return c;
}

SimConfig preset(const std::string& name) {
  if (name == "multiqueue_bias") return scenario_multiqueue_bias();
  if (name == "random_routing") return scenario_random_routing();
  throw ConfigError("unknown preset `" + name + "` (expected multiqueue_bias or random_routing)");
}

SimConfig load_config(const KeyValueConfig& kv) {
  SimConfig c = kv.contains("preset") ? preset(*kv.get("preset")) : SimConfig{};

  auto real = [&](const char* key, double& target) { target = kv.get_double(key, target); };
  c.start_date = kv.get_or("start_date", c.start_date);
  c.horizon_days = static_cast<int>(kv.get_int("horizon_days", c.horizon_days));
  real("beta_true", c.beta_true);
  real("recontact_base", c.recontact_base);
  if (auto link = kv.get("link")) {
    if (*link == "linear") c.link = Link::Linear;
    else if (*link == "logistic") c.link = Link::Logistic;
    else throw ConfigError("link must be linear or logistic");
  }
  c.causal_score = kv.get_or("causal_score", c.causal_score);
  real("confounder_strength", c.confounder_strength);
  real("anger_satisfaction_loading", c.anger_satisfaction_loading);
  real("anger_recontact_loading", c.anger_recontact_loading);
  real("anger_profile.amplitude", c.anger_profile.amplitude);
  real("anger_profile.peak_hour", c.anger_profile.peak_hour);
  real("anger_daily_mean", c.anger_daily_mean);
  real("skill_weight", c.skill_weight);
  if (auto t = kv.get("csat_thresholds")) {
    auto parts = split_list(*t);
    if (parts.size() != 5) throw ConfigError("csat_thresholds needs five values");
    for (std::size_t i = 0; i < 5; ++i) {
      KeyValueConfig one;
      one.set("v", parts[i]);
      c.csat_thresholds[i] = one.get_double("v", 0.0);
    }
  }
  real("fcr_threshold", c.fcr_threshold);
  real("fcr_noise", c.fcr_noise);
  real("service_skill_scaling", c.service_skill_scaling);
  real("survey_response_rate", c.survey_response_rate);
  real("recontact_delay_mean_hours", c.recontact_delay_mean_hours);
  real("recontact_delay_max_hours", c.recontact_delay_max_hours);
  real("transfer_rate", c.transfer_rate);
  real("anonymous_rate", c.anonymous_rate);
  real("missing_customer_id_rate", c.missing_customer_id_rate);
  real("missing_phone_rate", c.missing_phone_rate);
  c.agency_count = static_cast<int>(kv.get_int("agency_count", c.agency_count));
  real("agency_call_share", c.agency_call_share);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));

  // entity lists given in the file replace the preset's list wholesale
  auto entity_names = [&](const std::string& prefix) {
    std::set<std::string> names;
    for (const auto& key : kv.keys_with_prefix(prefix)) {
      auto rest = key.substr(prefix.size());
      auto dot = rest.rfind('.');
      if (dot == std::string::npos || dot == 0) throw ConfigError("malformed key `" + key + "`");
      names.insert(rest.substr(0, dot));
    }
    return names;
  };
  std::set<std::string> known = {"preset", "start_date", "horizon_days", "beta_true", "recontact_base", "link",
                                 "causal_score", "confounder_strength", "anger_satisfaction_loading",
                                 "anger_recontact_loading", "anger_profile.amplitude", "anger_profile.peak_hour",
                                 "anger_daily_mean", "skill_weight", "csat_thresholds", "fcr_threshold",
                                 "fcr_noise", "service_skill_scaling", "survey_response_rate",
                                 "recontact_delay_mean_hours", "recontact_delay_max_hours", "transfer_rate",
                                 "anonymous_rate", "missing_customer_id_rate", "missing_phone_rate",
                                 "agency_count", "agency_call_share", "seed"};
  auto note = [&](const std::string& prefix, const std::string& name, std::initializer_list<const char*> fields) {
    for (const char* f : fields) known.insert(prefix + name + "." + f);
  };

  if (auto names = entity_names("queue."); !names.empty()) {
    c.queues.clear();
    for (const auto& id : names) {
      const std::string p = "queue." + id + ".";
      QueueConfig q{id, kv.get_double(p + "arrival_rate", 0.0), kv.get_double(p + "service_time_mean", 6.0),
                    DailyProfile{kv.get_double(p + "profile_amplitude", 0.0), kv.get_double(p + "profile_peak_hour", 12.0)}};
      c.queues.push_back(q);
      note("queue.", id, {"arrival_rate", "service_time_mean", "profile_amplitude", "profile_peak_hour"});
    }
  }
  if (auto names = entity_names("agent."); !names.empty()) {
    c.agents.clear();
    for (const auto& id : names) {
      const std::string p = "agent." + id + ".";
      AgentConfig a;
      a.id = id;
      for (const auto& q : split_list(kv.get_or(p + "certifications", ""))) a.certifications.insert(q);
      a.skill = kv.get_double(p + "skill", 0.5);
      if (auto s = kv.get(p + "shift")) a.shift = parse_shift(*s, p + "shift");
      c.agents.push_back(std::move(a));
      note("agent.", id, {"certifications", "skill", "shift"});
    }
  }
  if (auto names = entity_names("market."); !names.empty()) {
    c.markets.clear();
    for (const auto& name : names) {
      const std::string p = "market." + name + ".";
      c.markets.push_back(MarketConfig{name, kv.get_double(p + "weight", 1.0),
                                       DailyProfile{kv.get_double(p + "profile_amplitude", 0.0),
                                                    kv.get_double(p + "profile_peak_hour", 12.0)},
                                       kv.get_double(p + "anger_shift", 0.0)});
      note("market.", name, {"weight", "profile_amplitude", "profile_peak_hour", "anger_shift"});
    }
  }
  if (auto names = entity_names("tier."); !names.empty()) {
    c.tiers.clear();
    for (const auto& name : names) {
      c.tiers.push_back(TierConfig{name, kv.get_double("tier." + name + ".weight", 1.0)});
      note("tier.", name, {"weight"});
    }
  }
  for (const auto& [key, value] : kv.values()) {
    if (!known.count(key)) throw ConfigError("unknown config key `" + key + "`");
  }
  c.validate();
  return c;
}

KeyValueConfig to_key_values(const SimConfig& c) {
  KeyValueConfig kv;
  auto real = [&](const std::string& key, double v) { kv.set(key, csv::format_double(v)); };
  kv.set("start_date", c.start_date);
  kv.set("horizon_days", std::to_string(c.horizon_days));
  real("beta_true", c.beta_true);
  real("recontact_base", c.recontact_base);
  kv.set("link", c.link == Link::Linear ? "linear" : "logistic");
  kv.set("causal_score", c.causal_score);
  real("confounder_strength", c.confounder_strength);
  real("anger_satisfaction_loading", c.anger_satisfaction_loading);
  real("anger_recontact_loading", c.anger_recontact_loading);
  real("anger_profile.amplitude", c.anger_profile.amplitude);
  real("anger_profile.peak_hour", c.anger_profile.peak_hour);
  real("anger_daily_mean", c.anger_daily_mean);
  real("skill_weight", c.skill_weight);
  std::string th;
  for (double t : c.csat_thresholds) th += (th.empty() ? "" : ",") + csv::format_double(t);
  kv.set("csat_thresholds", th);
  real("fcr_threshold", c.fcr_threshold);
  real("fcr_noise", c.fcr_noise);
  real("service_skill_scaling", c.service_skill_scaling);
  real("survey_response_rate", c.survey_response_rate);
  real("recontact_delay_mean_hours", c.recontact_delay_mean_hours);
  real("recontact_delay_max_hours", c.recontact_delay_max_hours);
  real("transfer_rate", c.transfer_rate);
  real("anonymous_rate", c.anonymous_rate);
  real("missing_customer_id_rate", c.missing_customer_id_rate);
  real("missing_phone_rate", c.missing_phone_rate);
  kv.set("agency_count", std::to_string(c.agency_count));
  real("agency_call_share", c.agency_call_share);
  kv.set("seed", std::to_string(c.seed));
  for (const auto& q : c.queues) {
    const std::string p = "queue." + q.id + ".";
    real(p + "arrival_rate", q.arrival_rate);
    real(p + "service_time_mean", q.service_time_mean);
    real(p + "profile_amplitude", q.profile.amplitude);
    real(p + "profile_peak_hour", q.profile.peak_hour);
  }
  for (const auto& a : c.agents) {
    const std::string p = "agent." + a.id + ".";
    kv.set(p + "certifications", join(a.certifications));
    real(p + "skill", a.skill);
    std::string shift;
    for (const auto& s : a.shift) {
      shift += (shift.empty() ? "" : ";") + format_minutes(s.start_minute) + "-" + format_minutes(s.end_minute);
    }
    kv.set(p + "shift", shift);
  }
  for (const auto& m : c.markets) {
    const std::string p = "market." + m.name + ".";
    real(p + "weight", m.weight);
    real(p + "profile_amplitude", m.profile.amplitude);
    real(p + "profile_peak_hour", m.profile.peak_hour);
    real(p + "anger_shift", m.anger_shift);
  }
  for (const auto& t : c.tiers) real("tier." + t.name + ".weight", t.weight);
  return kv;
}

void write_ground_truth(std::ostream& out, const SimResult& result) {
  csv::write_row(out, {"call_id", "anger", "recontact_probability", "experience", "recontact_drawn"}, ',');
  for (const auto& t : result.truth) {
    csv::write_row(out,
                   {t.call_id, csv::format_double(t.anger), csv::format_double(t.recontact_probability),
                    csv::format_double(t.experience), t.recontact_drawn ? "1" : "0"},
                   ',');
  }
}

}  // namespace examiner::sim
