#include "examiner/diagnostics.hpp"

#include <algorithm>
#include <numeric>

#include "examiner/errors.hpp"
#include "examiner/fixed_effects.hpp"

namespace examiner {

namespace {

double total_ss(const Eigen::VectorXd& y) {
  return (y.array() - y.mean()).square().sum();
}

// Fits target on the given regressors with spans absorbed (or an intercept)
// and tests all regressors jointly.
DiagnosticReport joint_test(const DesignMatrix& design, const Eigen::VectorXd& target, const Eigen::MatrixXd& regressors,
                            const std::vector<std::string>& names, const DiagnosticOptions& options,
                            std::string test_name) {
  const auto n = static_cast<Eigen::Index>(design.rows());
  const auto q = regressors.cols();
  const bool intercept = !options.time_controls;
  Eigen::MatrixXd m(n, 1 + q + (intercept ? 1 : 0));
  m.col(0) = target;
  m.middleCols(1, q) = regressors;
  std::vector<std::string> all_names = names;
  if (intercept) {
    m.col(m.cols() - 1).setOnes();
    all_names.push_back("(intercept)");
  }
  auto clustering = make_clustering(design, options.cluster);
  std::size_t dof = 0;
  if (options.time_controls) {
    std::vector<Factor> spans{Factor{"span", design.span_ids, design.n_spans()}};
    absorb_fixed_effects(m, spans);
    dof = absorbed_dof(spans, clustering);
  }
  // Tested columns that are collinear with the rest (an agent seen in a
  // single span, say) are dropped and the test runs on what is left.
  std::vector<Eigen::Index> keep(static_cast<std::size_t>(m.cols() - 1));
  std::iota(keep.begin(), keep.end(), Eigen::Index{1});
  std::vector<std::string> dropped;
  LinearFit fit;
  while (true) {
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(keep.size()));
    std::vector<std::string> kept_names;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      x.col(static_cast<Eigen::Index>(j)) = m.col(keep[j]);
      kept_names.push_back(all_names[static_cast<std::size_t>(keep[j] - 1)]);
    }
    try {
      fit = least_squares(m.col(0), x, kept_names, clustering, dof);
      break;
    } catch (const RankDeficientError& e) {
      bool removed = false;
      for (const auto& name : e.columns()) {
        auto it = std::find(kept_names.begin(), kept_names.end(), name);
        auto pos = static_cast<std::size_t>(it - kept_names.begin());
        if (it == kept_names.end() || keep[pos] > q) continue;
        dropped.push_back(name);
        keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(pos));
        removed = true;
        break;
      }
      if (!removed) throw;
    }
  }
  std::vector<std::size_t> tested;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j] <= q) tested.push_back(j);
  }
  auto wald = wald_test(fit, tested);
  // A target with no variation left to explain: report F = 0 rather than a
  // ratio of rounding errors.
  const double scale = 1.0 + target.cwiseAbs().maxCoeff();
  const double spread = options.time_controls ? m.col(0).cwiseAbs().maxCoeff()
                                              : (target.array() - target.mean()).abs().maxCoeff();
  if (spread <= 1e-12 * scale) {
    wald.F = 0.0;
    wald.p_value = 1.0;
  }

  DiagnosticReport r;
  r.test_name = std::move(test_name);
  r.time_controls = options.time_controls;
  r.joint_F = wald.F;
  r.p_value = wald.p_value;
  r.q = wald.q;
  r.df2 = wald.df2;
  r.n_obs = design.rows();
  const double tss = total_ss(target);
  const double rss_restricted = options.time_controls ? m.col(0).squaredNorm() : tss;
  if (tss > 0.0) {
    r.r2_full = 1.0 - fit.rss / tss;
    r.r2_restricted = 1.0 - rss_restricted / tss;
  }
  r.net_variation = r.r2_full - r.r2_restricted;
  for (auto j : tested) {
    auto col = static_cast<std::size_t>(keep[j] - 1);
    r.per_covariate.push_back({names[col], fit.coef(static_cast<Eigen::Index>(j)), fit.se(j)});
  }
  r.dropped = std::move(dropped);
  return r;
}

}  // namespace

DiagnosticReport waiting_time_check(const DesignMatrix& design, const DiagnosticOptions& options) {
  const int agents = design.n_agents();
  if (agents < 2) throw DataError("waiting-time check needs at least two agents");
  const auto n = static_cast<Eigen::Index>(design.rows());
  // agent with dense id 0 is the reference
  Eigen::MatrixXd dummies = Eigen::MatrixXd::Zero(n, agents - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    int a = design.agent_ids[static_cast<std::size_t>(i)];
    if (a > 0) dummies(i, a - 1) = 1.0;
  }
  std::vector<std::string> names;
  for (int a = 1; a < agents; ++a) names.push_back("agent=" + design.agent_names[static_cast<std::size_t>(a)]);
  return joint_test(design, design.waiting_time, dummies, names, options, "waiting_time~agent");
}

DiagnosticReport balance_test(const DesignMatrix& design, const Eigen::VectorXd& target,
                              const std::string& target_name, const DiagnosticOptions& options) {
  if (static_cast<std::size_t>(target.size()) != design.rows()) {
    throw DataError("balance target is not aligned with the design rows");
  }
  if (design.w_baseline.cols() == 0) throw DataError("balance test needs at least one baseline covariate");
  return joint_test(design, target, design.w_baseline, design.covariate_names, options,
                    target_name + "~baseline");
}

}  // namespace examiner
