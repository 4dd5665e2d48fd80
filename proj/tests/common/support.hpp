#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "examiner/call_record.hpp"
#include "examiner/panel.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(EXAMINER_FIXTURE_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline examiner::CallRecord call(std::string id, std::optional<std::string> customer,
                                 std::optional<std::string> phone, examiner::EpochSeconds start = 0) {
  examiner::CallRecord c;
  c.call_id = std::move(id);
  c.customer_id = std::move(customer);
  c.phone = std::move(phone);
  c.agent_id = "A1";
  c.queue_id = "Q1";
  c.start_time = start;
  return c;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index rows) {
  return random_matrix(rng, rows, 1).col(0);
}

inline std::vector<int> random_groups(std::mt19937_64& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  std::vector<int> g(n);
  // every level appears at least once
  for (std::size_t i = 0; i < n; ++i) g[i] = i < static_cast<std::size_t>(levels) ? static_cast<int>(i) : u(rng);
  std::shuffle(g.begin(), g.end(), rng);
  return g;
}

// Dense dummy block for a factor, dropping `skip` (or none when skip < 0).
inline Eigen::MatrixXd dummies(const std::vector<int>& ids, int levels, int skip = -1) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, levels - (skip >= 0 ? 1 : 0));
  for (Eigen::Index i = 0; i < n; ++i) {
    int l = ids[static_cast<std::size_t>(i)];
    if (l == skip) continue;
    d(i, skip >= 0 && l > skip ? l - 1 : l) = 1.0;
  }
  return d;
}

// Normal-equations least squares, deliberately different from the library's QR path.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

// A synthetic design with random spans, agents and covariates.
inline examiner::DesignMatrix random_design(std::mt19937_64& rng, std::size_t n, int spans, int agents,
                                            int covariates) {
  examiner::DesignMatrix d;
  d.outcome = "recontact";
  const auto rows = static_cast<Eigen::Index>(n);
  d.span_ids = random_groups(rng, n, spans);
  d.agent_ids = random_groups(rng, n, agents);
  for (int s = 0; s < spans; ++s) d.span_ordinals.push_back(s);
  for (int a = 0; a < agents; ++a) d.agent_names.push_back("A" + std::to_string(a));
  d.cluster_a = d.agent_ids;
  d.cluster_t = d.span_ids;
  d.w_baseline = random_matrix(rng, rows, covariates);
  for (int c = 0; c < covariates; ++c) d.covariate_names.push_back("w" + std::to_string(c));
  Eigen::VectorXd agent_effect = random_vector(rng, agents);
  Eigen::VectorXd span_effect = random_vector(rng, spans);
  std::normal_distribution<double> noise(0.0, 1.0);
  d.sat.resize(rows);
  d.y.resize(rows);
  d.waiting_time.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto a = d.agent_ids[static_cast<std::size_t>(i)];
    const auto s = d.span_ids[static_cast<std::size_t>(i)];
    d.sat(i) = agent_effect(a) + 0.5 * span_effect(s) + 0.3 * d.w_baseline.row(i).sum() + noise(rng);
    d.y(i) = -0.6 * d.sat(i) + span_effect(s) + 0.2 * d.w_baseline.row(i).sum() + noise(rng);
    d.waiting_time(i) = 30.0 * span_effect(s) * span_effect(s) + 10.0 * std::abs(noise(rng));
    d.row_call_ids.push_back("R" + std::to_string(i));
  }
  d.accounting.rows = n;
  return d;
}

}  // namespace testing
