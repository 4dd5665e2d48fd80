#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "examiner/errors.hpp"
#include "examiner/estimator.hpp"
#include "oracles.hpp"

using namespace examiner;

namespace {

using testing::iota_groups;
using testing::max_rel_diff;
using testing::oracle_vcov;
using testing::pairwise_meat;

std::vector<std::string> names(Eigen::Index k) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < k; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

}  // namespace

TEST_CASE("exact fit y = 2 sat") {
  Eigen::MatrixXd x(4, 1);
  x << 0.2, 0.4, 0.6, 1.0;
  Eigen::VectorXd y = 2.0 * x.col(0);
  auto fit = least_squares(y, x, {"sat"}, Clustering::robust());
  CHECK(fit.coef(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(fit.rss < 1e-25);
}

TEST_CASE("OLS matches the normal-equations oracle on 50 rows") {
  std::mt19937_64 rng(50);
  Eigen::MatrixXd x(50, 4);
  x << testing::random_matrix(rng, 50, 3), Eigen::VectorXd::Ones(50);
  Eigen::VectorXd y = x * Eigen::Vector4d(0.5, -1.0, 2.0, 3.0) + testing::random_vector(rng, 50);
  auto fit = least_squares(y, x, names(4), Clustering::robust());
  CHECK((fit.coef - testing::normal_equations(x, y)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(max_rel_diff(fit.vcov, oracle_vcov(x, y, iota_groups(50))) <= 1e-10);
  CHECK(fit.df == 46.0);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(fit.p_value(j) >= 0.0);
    CHECK(fit.p_value(j) <= 1.0);
  }
}

TEST_CASE("clustered sandwich matches the explicit outer-product oracle (40 rows, 5 clusters)") {
  std::mt19937_64 rng(40);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd x(40, 3);
    x << testing::random_matrix(rng, 40, 2), Eigen::VectorXd::Ones(40);
    Eigen::VectorXd y = x * Eigen::Vector3d(1.0, 0.0, -1.0) + testing::random_vector(rng, 40);
    auto g = testing::random_groups(rng, 40, 5);
    auto fit = least_squares(y, x, names(3), Clustering::one_way(make_factor("g", g)));
    CHECK(max_rel_diff(fit.vcov, oracle_vcov(x, y, g)) <= 1e-10);
    CHECK(fit.covariance.clusters == 5);
    CHECK(fit.df == 4.0);
  }
}

TEST_CASE("every row its own cluster equals the robust sandwich") {
  std::mt19937_64 rng(41);
  Eigen::MatrixXd x(30, 2);
  x << testing::random_matrix(rng, 30, 1), Eigen::VectorXd::Ones(30);
  Eigen::VectorXd y = testing::random_vector(rng, 30);
  auto robust = least_squares(y, x, names(2), Clustering::robust());
  auto own = least_squares(y, x, names(2), Clustering::one_way(make_factor("row", iota_groups(30))));
  CHECK(max_rel_diff(own.vcov, robust.vcov) <= 1e-12);
}

TEST_CASE("two-way clustering on identical factors collapses to one-way") {
  std::mt19937_64 rng(42);
  Eigen::MatrixXd x(80, 3);
  x << testing::random_matrix(rng, 80, 2), Eigen::VectorXd::Ones(80);
  Eigen::VectorXd y = testing::random_vector(rng, 80);
  auto g = make_factor("g", testing::random_groups(rng, 80, 9));
  auto one = least_squares(y, x, names(3), Clustering::one_way(g));
  auto two = least_squares(y, x, names(3), Clustering::two_way(g, g));
  CHECK(max_rel_diff(two.vcov, one.vcov) <= 1e-12);
}

TEST_CASE("two-way clustering matches inclusion-exclusion of pairwise oracles") {
  std::mt19937_64 rng(43);
  const std::size_t n = 60;
  Eigen::MatrixXd x(60, 2);
  x << testing::random_matrix(rng, 60, 1), Eigen::VectorXd::Ones(60);
  Eigen::VectorXd y = testing::random_vector(rng, 60);
  auto a = testing::random_groups(rng, n, 6);
  auto t = testing::random_groups(rng, n, 8);
  std::vector<int> at(n);
  for (std::size_t i = 0; i < n; ++i) at[i] = a[i] * 100 + t[i];
  Eigen::MatrixXd inv = (x.transpose() * x).inverse();
  Eigen::VectorXd u = y - x * (inv * x.transpose() * y);
  const double G = 6.0, nn = 60.0, k = 2.0;
  const double c = G / (G - 1.0) * (nn - 1.0) / (nn - k);
  Eigen::MatrixXd meat = pairwise_meat(x, u, a) + pairwise_meat(x, u, t) - pairwise_meat(x, u, at);
  Eigen::MatrixXd oracle = c * inv * meat * inv;
  auto fit = least_squares(y, x, names(2), Clustering::two_way(make_factor("a", a), make_factor("t", t)));
  if (!fit.covariance.truncated) CHECK(max_rel_diff(fit.vcov, oracle) <= 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.vcov);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-14);
}

TEST_CASE("two-way variance is truncated to positive semidefinite when needed") {
  // Four rows where the intersection term dominates.
  Eigen::MatrixXd bread = Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd scores(4, 1);
  scores << 1, -1, -1, 1;
  auto a = make_factor("a", std::vector<int>{0, 0, 1, 1});
  auto b = make_factor("b", std::vector<int>{0, 1, 0, 1});
  CovarianceInfo info;
  auto v = sandwich_covariance(bread, scores, Clustering::two_way(a, b), 1, &info);
  CHECK(info.truncated);
  CHECK(v(0, 0) == 0.0);
}

TEST_CASE("a cluster factor with a single cluster is rejected") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 1);
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  auto g = make_factor("g", std::vector<int>{0, 0, 0, 0, 0});
  CHECK_THROWS_AS(least_squares(y, x, {"c"}, Clustering::one_way(g)), ConfigError);
}

TEST_CASE("rank deficiency names the collinear columns") {
  std::mt19937_64 rng(44);
  Eigen::MatrixXd x(20, 3);
  x << testing::random_matrix(rng, 20, 2), Eigen::VectorXd::Zero(20);
  x.col(2) = x.col(0) * 2.0 - x.col(1);
  Eigen::VectorXd y = testing::random_vector(rng, 20);
  try {
    least_squares(y, x, {"a", "b", "combo"}, Clustering::robust());
    FAIL("expected rank deficiency");
  } catch (const RankDeficientError& e) {
    REQUIRE(e.columns().size() == 1);
    CHECK(std::string(e.what()).find(e.columns()[0]) != std::string::npos);
  }
}

TEST_CASE("2SLS equals the reduced-form over first-stage ratio") {
  std::mt19937_64 rng(45);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index n = 300;
    Eigen::MatrixXd w(n, 3);
    w << testing::random_matrix(rng, n, 2), Eigen::VectorXd::Ones(n);
    Eigen::VectorXd z = testing::random_vector(rng, n);
    Eigen::VectorXd conf = testing::random_vector(rng, n);
    Eigen::VectorXd sat = 0.8 * z + conf + 0.3 * w.col(0) + testing::random_vector(rng, n);
    Eigen::VectorXd y = -0.65 * sat + conf - 0.2 * w.col(1) + testing::random_vector(rng, n);
    Eigen::MatrixXd zw(n, 4);
    zw << z, w;
    const double reduced = testing::normal_equations(zw, y)(0);
    const double first = testing::normal_equations(zw, sat)(0);
    auto iv = two_stage_least_squares(y, sat, z, w, {"sat", "w0", "w1", "c"}, Clustering::robust());
    CHECK(std::abs(iv.second_stage.coef(0) - reduced / first) <= 1e-10);
    CHECK(std::abs(iv.first_stage.coef(0) - first) <= 1e-10);
    CHECK(iv.first_stage.names[0] == "instrument");
  }
}

TEST_CASE("2SLS uses the structural residuals in its sandwich") {
  std::mt19937_64 rng(46);
  const Eigen::Index n = 200;
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, 1);
  Eigen::VectorXd z = testing::random_vector(rng, n);
  Eigen::VectorXd sat = z + testing::random_vector(rng, n);
  Eigen::VectorXd y = -0.5 * sat + testing::random_vector(rng, n);
  auto iv = two_stage_least_squares(y, sat, z, w, {"sat", "c"}, Clustering::robust());
  Eigen::MatrixXd x(n, 2), xh(n, 2), zz(n, 2);
  x << sat, w;
  zz << z, w;
  xh << zz * testing::normal_equations(zz, sat), w;
  Eigen::VectorXd b = testing::normal_equations(xh, y);
  Eigen::VectorXd u = y - x * b;
  Eigen::MatrixXd inv = (xh.transpose() * xh).inverse();
  const double c = static_cast<double>(n) / static_cast<double>(n - 2);
  Eigen::MatrixXd oracle = c * inv * pairwise_meat(xh, u, iota_groups(static_cast<std::size_t>(n))) * inv;
  CHECK(max_rel_diff(iv.second_stage.vcov, oracle) <= 1e-10);
  CHECK((iv.second_stage.residuals - u).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("instrument equal to the regressor reproduces OLS") {
  std::mt19937_64 rng(47);
  const Eigen::Index n = 120;
  Eigen::MatrixXd w(n, 2);
  w << testing::random_matrix(rng, n, 1), Eigen::VectorXd::Ones(n);
  Eigen::VectorXd sat = testing::random_vector(rng, n);
  Eigen::VectorXd y = 0.4 * sat + testing::random_vector(rng, n);
  Eigen::MatrixXd x(n, 3);
  x << sat, w;
  auto ols = least_squares(y, x, {"sat", "w", "c"}, Clustering::robust());
  auto iv = two_stage_least_squares(y, sat, sat, w, {"sat", "w", "c"}, Clustering::robust());
  CHECK((iv.second_stage.coef - ols.coef).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(max_rel_diff(iv.second_stage.vcov, ols.vcov) <= 1e-10);
}

TEST_CASE("standard errors do not depend on row order") {
  std::mt19937_64 rng(48);
  auto d = testing::random_design(rng, 400, 25, 12, 2);
  FitSpec spec;
  auto base = fit_ols(d, spec);
  std::vector<std::size_t> perm(d.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto shuffled = d.subset(perm);
  auto again = fit_ols(shuffled, spec);
  CHECK(again.coef == doctest::Approx(base.coef).epsilon(1e-10));
  CHECK(again.se == doctest::Approx(base.se).epsilon(1e-9));
  Eigen::VectorXd z = d.sat + testing::random_vector(rng, 400);
  Eigen::VectorXd zp(400);
  for (std::size_t i = 0; i < perm.size(); ++i) zp(static_cast<Eigen::Index>(i)) = z(static_cast<Eigen::Index>(perm[i]));
  auto t1 = fit_tsls(d, z, spec);
  auto t2 = fit_tsls(shuffled, zp, spec);
  CHECK(t2.se == doctest::Approx(t1.se).epsilon(1e-9));
  CHECK(*t2.first_stage_F == doctest::Approx(*t1.first_stage_F).epsilon(1e-9));
}

TEST_CASE("design-level OLS with absorbed spans equals the dense dummy regression") {
  std::mt19937_64 rng(49);
  auto d = testing::random_design(rng, 300, 20, 10, 3);
  FitSpec spec;
  spec.cluster = ClusterChoice::Robust;
  auto r = fit_ols(d, spec);
  Eigen::MatrixXd full(300, 1 + 3 + 20);
  full << d.sat, d.w_baseline, testing::dummies(d.span_ids, 20);
  auto oracle = least_squares(d.y, full, names(full.cols()), Clustering::robust());
  CHECK(std::abs(r.coef - oracle.coef(0)) <= 1e-10);
  CHECK(r.se == doctest::Approx(oracle.se(0)).epsilon(1e-9));
  CHECK(r.n_obs == 300);
  CHECK(r.method == "OLS");
  CHECK_FALSE(r.first_stage_F);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);
  CHECK(r.ci_low < r.coef);
  CHECK(r.ci_high > r.coef);
}

TEST_CASE("spans nested in time clusters are left out of the small-sample k") {
  std::mt19937_64 rng(51);
  auto d = testing::random_design(rng, 200, 10, 8, 1);
  Clustering two = make_clustering(d, ClusterChoice::TwoWay);
  FitSpec spec;
  auto factors = absorb_factors(d, spec);
  CHECK(absorbed_dof(factors, two) == 0);
  CHECK(absorbed_dof(factors, make_clustering(d, ClusterChoice::Agent)) == 10);
  spec.absorb_agents = true;
  auto both = absorb_factors(d, spec);
  CHECK(absorbed_dof(both, Clustering::robust()) == 10 + 8 - 1);
}

TEST_CASE("first_stage_f equals the squared robust t of the instrument") {
  std::mt19937_64 rng(52);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 150 + 20 * static_cast<std::size_t>(rep);
    auto d = testing::random_design(rng, n, 12, 9, 2);
    Eigen::VectorXd z = 0.3 * d.sat + testing::random_vector(rng, static_cast<Eigen::Index>(n));
    FitSpec spec;
    spec.cluster = ClusterChoice::Robust;
    spec.absorb_spans = rep % 2 == 0;
    const double f = first_stage_f(d, z, spec);

    // independent oracle: explicit span dummies (or intercept), HC1 sandwich from scratch
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x;
    if (spec.absorb_spans) {
      x.resize(rows, 1 + 2 + 12);
      x << z, d.w_baseline, testing::dummies(d.span_ids, 12);
    } else {
      x.resize(rows, 1 + 2 + 1);
      x << z, d.w_baseline, Eigen::VectorXd::Ones(rows);
    }
    Eigen::MatrixXd v = oracle_vcov(x, d.sat, iota_groups(n));
    const double b = testing::normal_equations(x, d.sat)(0);
    const double t2 = b * b / v(0, 0);
    CHECK(std::abs(f - t2) <= 1e-10 * std::max(1.0, t2));

    auto iv = fit_tsls(d, z, spec);
    CHECK(std::abs(*iv.first_stage_F - f) <= 1e-10 * std::max(1.0, f));
  }
}

TEST_CASE("first_stage_f under clustering matches the 2SLS first stage") {
  std::mt19937_64 rng(53);
  auto d = testing::random_design(rng, 500, 30, 15, 2);
  Eigen::VectorXd z = 0.5 * d.sat + testing::random_vector(rng, 500);
  for (auto c : {ClusterChoice::Agent, ClusterChoice::Time, ClusterChoice::TwoWay}) {
    FitSpec spec;
    spec.cluster = c;
    auto iv = fit_tsls(d, z, spec);
    const double f = first_stage_f(d, z, spec);
    CHECK(*iv.first_stage_F == doctest::Approx(f).epsilon(1e-12));
    const double t = *iv.first_stage_coef / *iv.first_stage_se;
    CHECK(f == doctest::Approx(t * t).epsilon(1e-10));
  }
}

TEST_CASE("pure-noise instrument rarely produces F above 5") {
  std::mt19937_64 rng(54);
  int below = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    auto d = testing::random_design(rng, 5000, 40, 30, 2);
    Eigen::VectorXd z = testing::random_vector(rng, 5000);
    FitSpec spec;
    spec.cluster = ClusterChoice::Robust;
    below += first_stage_f(d, z, spec) < 5.0;
  }
  CHECK(below >= 95);
}

TEST_CASE("instrument collinear with the regressor reports the capped F") {
  std::mt19937_64 rng(55);
  auto d = testing::random_design(rng, 200, 10, 5, 1);
  FitSpec spec;
  spec.cluster = ClusterChoice::Robust;
  CHECK(first_stage_f(d, d.sat, spec) == kMaxReportedF);
  auto r = fit_tsls(d, 3.0 * d.sat, spec);
  CHECK(*r.first_stage_F == kMaxReportedF);
  CHECK(r.warnings.empty());
}

TEST_CASE("weak instrument attaches a warning, not an error") {
  std::mt19937_64 rng(56);
  auto d = testing::random_design(rng, 400, 10, 5, 1);
  Eigen::VectorXd z = testing::random_vector(rng, 400);
  FitSpec spec;
  spec.cluster = ClusterChoice::Robust;
  spec.weak_instrument_threshold = 1e9;
  auto r = fit_tsls(d, z, spec);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("weak instrument") != std::string::npos);
  CHECK(r.method == "2SLS");
}

TEST_CASE("Wald test with a singular covariance uses its rank") {
  LinearFit fit;
  fit.coef = Eigen::Vector3d(1.0, 2.0, 3.0);
  fit.vcov = Eigen::Matrix3d::Zero();
  fit.vcov(0, 0) = 1.0;
  fit.vcov(1, 1) = 4.0;
  fit.vcov(0, 1) = fit.vcov(1, 0) = 0.0;
  fit.df = 50;
  std::vector<std::size_t> idx{0, 1, 2};
  auto w = wald_test(fit, idx);
  CHECK(w.q == 2);
  CHECK(w.F == doctest::Approx((1.0 + 1.0) / 2.0));
  CHECK(w.p_value > 0.0);
  CHECK(w.p_value < 1.0);

  // a full-rank case against the textbook formula
  fit.vcov = Eigen::Matrix3d::Identity() * 0.5;
  fit.vcov(0, 1) = fit.vcov(1, 0) = 0.1;
  Eigen::Vector3d b = fit.coef;
  const double stat = b.dot(fit.vcov.inverse() * b) / 3.0;
  auto full = wald_test(fit, idx);
  CHECK(full.q == 3);
  CHECK(full.F == doctest::Approx(stat).epsilon(1e-12));

  fit.coef.setZero();
  auto zero = wald_test(fit, idx);
  CHECK(zero.F == 0.0);
  CHECK(zero.p_value == 1.0);
}

TEST_CASE("distribution helpers") {
  CHECK(student_t_two_sided_p(0.0, 10) == doctest::Approx(1.0));
  CHECK(student_t_two_sided_p(1.959964, 1e7) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(student_t_quantile(0.975, 1e7) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(fisher_f_upper_p(0.0, 3, 30) == 1.0);
  CHECK(fisher_f_upper_p(1e9, 3, 30) < 1e-12);
  CHECK(parse_cluster("two-way") == ClusterChoice::TwoWay);
  CHECK(parse_cluster("agent") == ClusterChoice::Agent);
  CHECK_THROWS_AS(parse_cluster("three-way"), ConfigError);
}
