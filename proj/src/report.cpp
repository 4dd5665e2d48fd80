#include "examiner/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace examiner {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool right = true) {
  if (s.size() >= width) return s;
  return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

std::string render_grid(const std::string& title, const std::vector<std::string>& headers,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
  std::size_t label_width = 0;
  for (const auto& [label, cells] : rows) label_width = std::max(label_width, label.size());
  std::vector<std::size_t> widths(headers.size());
  for (std::size_t j = 0; j < headers.size(); ++j) {
    widths[j] = headers[j].size();
    for (const auto& [label, cells] : rows) widths[j] = std::max(widths[j], cells[j].size());
  }
  std::ostringstream out;
  std::size_t total = label_width;
  for (auto w : widths) total += w + 3;
  out << title << "\n" << std::string(total, '-') << "\n" << pad("", label_width, false);
  for (std::size_t j = 0; j < headers.size(); ++j) out << "   " << pad(headers[j], widths[j]);
  out << "\n" << std::string(total, '-') << "\n";
  for (const auto& [label, cells] : rows) {
    out << pad(label, label_width, false);
    for (std::size_t j = 0; j < cells.size(); ++j) out << "   " << pad(cells[j], widths[j]);
    out << "\n";
  }
  out << std::string(total, '-') << "\n";
  return out.str();
}

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const EstimateReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["outcome"] = r.outcome;
  j["score"] = r.score;
  j["coef"] = r.coef;
  j["se"] = r.se;
  j["t_stat"] = r.t_stat;
  j["p_value"] = r.p_value;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["first_stage_F"] = optional_number(r.first_stage_F);
  j["first_stage_coef"] = optional_number(r.first_stage_coef);
  j["first_stage_se"] = optional_number(r.first_stage_se);
  j["n_obs"] = r.n_obs;
  j["n_spans"] = r.n_spans;
  j["n_clusters_agent"] = r.n_clusters_a;
  j["n_clusters_time"] = r.n_clusters_t;
  j["cluster"] = r.cluster;
  j["time_controls"] = r.time_controls;
  j["baseline_controls"] = r.baseline_controls;
  j["absorption_iterations"] = r.absorption_iterations;
  j["absorption_delta"] = r.absorption_delta;
  j["variance_truncated"] = r.variance_truncated;
  j["warnings"] = r.warnings;
  return j;
}

nlohmann::ordered_json to_json(const DiagnosticReport& r) {
  nlohmann::ordered_json j;
  j["test"] = r.test_name;
  j["time_controls"] = r.time_controls;
  j["joint_F"] = r.joint_F;
  j["p_value"] = r.p_value;
  j["q"] = r.q;
  j["df2"] = r.df2;
  j["r2_full"] = r.r2_full;
  j["r2_restricted"] = r.r2_restricted;
  j["net_variation"] = r.net_variation;
  j["n_obs"] = r.n_obs;
  j["dropped"] = r.dropped;
  auto& per = j["per_covariate"] = nlohmann::ordered_json::array();
  for (const auto& c : r.per_covariate) per.push_back({{"name", c.name}, {"coef", c.coef}, {"se", c.se}});
  return j;
}

nlohmann::ordered_json to_json(const SampleAccounting& a) {
  return nlohmann::ordered_json{{"candidates", a.candidates}, {"other_queue", a.other_queue},
                                {"agency", a.agency},         {"unsurveyed", a.unsurveyed},
                                {"missing_outcome", a.missing_outcome}, {"censored", a.censored},
                                {"rows", a.rows}};
}

nlohmann::ordered_json to_json(const std::vector<FilterStage>& stages) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& s : stages) j.push_back({{"stage", s.name}, {"removed", s.removed}, {"remaining", s.remaining}});
  return j;
}

std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.10) return "*";
  return "";
}

std::string format_coefficient(double coef, double p_value, int decimals) {
  return fixed(coef, decimals) + significance_stars(p_value);
}

std::string render_estimate_table(const std::string& title, const std::vector<TableColumn>& columns) {
  std::vector<std::string> headers;
  std::vector<std::pair<std::string, std::vector<std::string>>> rows{
      {"Satisfaction", {}}, {"", {}}, {"Time-span controls", {}}, {"Baseline controls", {}},
      {"Instrument", {}},   {"First-stage F", {}}, {"Observations", {}}};
  for (const auto& c : columns) {
    const auto& r = *c.report;
    headers.push_back(c.header);
    rows[0].second.push_back(format_coefficient(r.coef, r.p_value));
    rows[1].second.push_back("(" + fixed(r.se, 4) + ")");
    rows[2].second.push_back(r.time_controls ? "Yes" : "No");
    rows[3].second.push_back(r.baseline_controls ? "Yes" : "No");
    rows[4].second.push_back(r.first_stage_F ? "agent LOO mean" : "-");
    rows[5].second.push_back(r.first_stage_F ? fixed(*r.first_stage_F, 2) : "-");
    rows[6].second.push_back(std::to_string(r.n_obs));
  }
  auto text = render_grid(title, headers, rows);
  return text + "Standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.10\n";
}

std::string render_waiting_table(const DiagnosticReport& no_time, const DiagnosticReport& with_time) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows{
      {"Agent dummies joint F", {format_coefficient(no_time.joint_F, no_time.p_value, 3),
                                 format_coefficient(with_time.joint_F, with_time.p_value, 3)}},
      {"p-value", {fixed(no_time.p_value, 4), fixed(with_time.p_value, 4)}},
      {"Agents tested", {std::to_string(no_time.q), std::to_string(with_time.q)}},
      {"Net R2 from agents", {fixed(no_time.net_variation, 4), fixed(with_time.net_variation, 4)}},
      {"Time-span controls", {"No", "Yes"}},
      {"Observations", {std::to_string(no_time.n_obs), std::to_string(with_time.n_obs)}}};
  return render_grid("Waiting time on agent dummies", {"(1)", "(2)"}, rows);
}

std::string render_balance_table(const std::vector<const DiagnosticReport*>& columns,
                                 const std::vector<std::string>& headers) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  if (!columns.empty()) {
    for (const auto& c : columns.front()->per_covariate) {
      rows.push_back({c.name, {}});
      rows.push_back({"", {}});
    }
  }
  for (const auto* r : columns) {
    for (std::size_t i = 0; i < r->per_covariate.size() && 2 * i + 1 < rows.size(); ++i) {
      const auto& c = r->per_covariate[i];
      double t = c.se > 0 ? c.coef / c.se : 0.0;
      rows[2 * i].second.push_back(format_coefficient(c.coef, student_t_two_sided_p(t, r->df2)));
      rows[2 * i + 1].second.push_back("(" + fixed(c.se, 4) + ")");
    }
  }
  std::pair<std::string, std::vector<std::string>> joint{"Joint F", {}}, pv{"p-value", {}}, tc{"Time-span controls", {}},
      obs{"Observations", {}};
  for (const auto* r : columns) {
    joint.second.push_back(format_coefficient(r->joint_F, r->p_value, 3));
    pv.second.push_back(fixed(r->p_value, 4));
    tc.second.push_back(r->time_controls ? "Yes" : "No");
    obs.second.push_back(std::to_string(r->n_obs));
  }
  rows.push_back(joint);
  rows.push_back(pv);
  rows.push_back(tc);
  rows.push_back(obs);
  return render_grid("Balance on baseline covariates", headers, rows);
}

}  // namespace examiner
