#include <doctest.h>

#include <random>
#include <sstream>

#include "examiner/errors.hpp"
#include "examiner/instrument.hpp"
#include "support.hpp"

using namespace examiner;

namespace {

DesignMatrix tiny_design(std::vector<double> sat) {
  DesignMatrix d;
  const auto n = static_cast<Eigen::Index>(sat.size());
  d.sat = Eigen::Map<Eigen::VectorXd>(sat.data(), n);
  d.y = Eigen::VectorXd::Zero(n);
  d.waiting_time = Eigen::VectorXd::Zero(n);
  d.w_baseline.resize(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.span_ids.push_back(0);
    d.agent_ids.push_back(0);
    d.row_call_ids.push_back("r" + std::to_string(i));
  }
  d.span_ordinals = {0};
  d.agent_names = {"A"};
  d.cluster_a = d.agent_ids;
  d.cluster_t = d.span_ids;
  return d;
}

}  // namespace

TEST_CASE("residualizing on an intercept demeans") {
  auto d = tiny_design({0.2, 0.8});
  auto r = residualize(d, {false, false});
  CHECK(r(0) == doctest::Approx(-0.3).epsilon(1e-14));
  CHECK(r(1) == doctest::Approx(0.3).epsilon(1e-14));
  // a single span absorbed gives the same thing
  auto s = residualize(d, {true, false});
  CHECK((s - r).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("score perfectly explained by the controls leaves a zero residual") {
  std::mt19937_64 rng(60);
  auto d = testing::random_design(rng, 80, 6, 4, 2);
  Eigen::VectorXd span_level = testing::random_vector(rng, 6);
  for (Eigen::Index i = 0; i < 80; ++i) {
    d.sat(i) = span_level(d.span_ids[static_cast<std::size_t>(i)]) + 2.0 * d.w_baseline(i, 0) - d.w_baseline(i, 1);
  }
  auto r = residualize(d);
  CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("residualization matches a dense least-squares oracle on 30 rows") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 5; ++rep) {
    auto d = testing::random_design(rng, 30, 4, 3, 2);
    auto r = residualize(d);
    Eigen::MatrixXd x(30, 2 + 4);
    x << d.w_baseline, testing::dummies(d.span_ids, 4);
    Eigen::VectorXd oracle = d.sat - x * testing::normal_equations(x, d.sat);
    CHECK((r - oracle).cwiseAbs().maxCoeff() <= 1e-10);

    auto no_spans = residualize(d, {false, true});
    Eigen::MatrixXd x2(30, 3);
    x2 << d.w_baseline, Eigen::VectorXd::Ones(30);
    Eigen::VectorXd oracle2 = d.sat - x2 * testing::normal_equations(x2, d.sat);
    CHECK((no_spans - oracle2).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("residuals sum to zero within every span and are orthogonal to the covariates") {
  std::mt19937_64 rng(62);
  auto d = testing::random_design(rng, 500, 25, 10, 3);
  auto r = residualize(d);
  std::vector<double> sums(25, 0.0);
  for (std::size_t i = 0; i < d.rows(); ++i) sums[static_cast<std::size_t>(d.span_ids[i])] += r(static_cast<Eigen::Index>(i));
  for (double s : sums) CHECK(std::abs(s) < 1e-10);
  for (Eigen::Index c = 0; c < d.w_baseline.cols(); ++c) {
    Eigen::VectorXd w = d.w_baseline.col(c).array() - d.w_baseline.col(c).mean();
    CHECK(std::abs(w.dot(r) / 500.0) < 1e-8);
  }
}

TEST_CASE("collinear covariates are named") {
  std::mt19937_64 rng(63);
  auto d = testing::random_design(rng, 50, 5, 3, 2);
  d.w_baseline.col(1) = 3.0 * d.w_baseline.col(0);
  try {
    residualize(d);
    FAIL("expected rank deficiency");
  } catch (const RankDeficientError& e) {
    REQUIRE(e.columns().size() == 1);
    CHECK((e.columns()[0] == "w0" || e.columns()[0] == "w1"));
  }
}

TEST_CASE("too few rows to residualize") {
  auto d = tiny_design({0.5});
  CHECK_THROWS_AS(residualize(d), DataError);
}

TEST_CASE("leave-one-out examples") {
  std::vector<int> one{0, 0};
  auto a = leave_one_out(Eigen::Vector2d(0.5, -0.5), one);
  CHECK(a.z(0) == -0.5);
  CHECK(a.z(1) == 0.5);

  std::vector<int> three{0, 0, 0};
  auto b = leave_one_out(Eigen::Vector3d(1, 2, 3), three);
  CHECK(b.z(0) == 2.5);
  CHECK(b.z(1) == 2.0);
  CHECK(b.z(2) == 1.5);
  CHECK(b.dropped_rows.empty());
}

TEST_CASE("single-call agents are dropped and reported") {
  std::mt19937_64 rng(64);
  auto d = testing::random_design(rng, 40, 4, 5, 1);
  d.agent_ids[7] = 5;
  d.agent_names.push_back("LONE");
  auto r = residualize(d);
  auto iv = leave_one_out(d, r);
  CHECK(iv.dropped_rows == std::vector<std::size_t>{7});
  CHECK(iv.dropped_call_ids == std::vector<std::string>{"R7"});
  CHECK(iv.kept_rows.size() == 39);
  CHECK(static_cast<std::size_t>(iv.z.size()) == 39);
  CHECK(iv.agent_call_counts.at("LONE") == 1);

  std::ostringstream out;
  write_instrument(out, d, iv, ',');
  auto text = out.str();
  CHECK(text.rfind("call_id,agent_id,z\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 40);
}

TEST_CASE("leave-one-out agrees with brute force") {
  std::mt19937_64 rng(65);
  std::uniform_int_distribution<int> agents(1, 30);
  for (int rep = 0; rep < 30; ++rep) {
    const int m = agents(rng);
    const std::size_t n = 50 + 30 * static_cast<std::size_t>(rep);
    std::uniform_int_distribution<int> pick(0, m - 1);
    std::vector<int> ids(n);
    for (auto& a : ids) a = pick(rng);
    Eigen::VectorXd r = testing::random_vector(rng, static_cast<Eigen::Index>(n));
    auto iv = leave_one_out(r, ids);
    double worst = 0.0;
    std::size_t dropped = 0;
    for (std::size_t j = 0; j < iv.kept_rows.size(); ++j) {
      const auto i = iv.kept_rows[j];
      double s = 0.0;
      int c = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != i && ids[k] == ids[i]) {
          s += r(static_cast<Eigen::Index>(k));
          ++c;
        }
      }
      worst = std::max(worst, std::abs(iv.z(static_cast<Eigen::Index>(j)) - s / c));
    }
    for (auto i : iv.dropped_rows) dropped += std::count(ids.begin(), ids.end(), ids[i]) == 1;
    CHECK(worst <= 1e-12);
    CHECK(dropped == iv.dropped_rows.size());
    CHECK(iv.kept_rows.size() + iv.dropped_rows.size() == n);
  }
}

TEST_CASE("shifting one agent's residuals shifts only that agent's instrument") {
  std::mt19937_64 rng(66);
  std::vector<int> ids;
  for (int i = 0; i < 60; ++i) ids.push_back(i % 6);
  Eigen::VectorXd r = testing::random_vector(rng, 60);
  auto base = leave_one_out(r, ids);
  Eigen::VectorXd shifted = r;
  for (int i = 0; i < 60; ++i)
    if (ids[static_cast<std::size_t>(i)] == 2) shifted(i) += 0.75;
  auto moved = leave_one_out(shifted, ids);
  for (Eigen::Index j = 0; j < base.z.size(); ++j) {
    const double expect = ids[base.kept_rows[static_cast<std::size_t>(j)]] == 2 ? 0.75 : 0.0;
    CHECK(moved.z(j) - base.z(j) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("misaligned inputs are rejected") {
  std::vector<int> ids{0, 0, 1};
  CHECK_THROWS_AS(leave_one_out(Eigen::Vector2d(1, 2), ids), DataError);
}
