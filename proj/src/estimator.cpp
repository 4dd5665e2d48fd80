#include "examiner/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "examiner/errors.hpp"

namespace examiner {

namespace {

constexpr double kRankThreshold = 1e-10;

std::size_t nonempty_levels(const Factor& f) {
  std::vector<char> seen(static_cast<std::size_t>(f.levels), 0);
  std::size_t count = 0;
  for (int id : f.ids) {
    if (!seen[static_cast<std::size_t>(id)]) {
      seen[static_cast<std::size_t>(id)] = 1;
      ++count;
    }
  }
  return count;
}

// sum over groups of (summed scores)(summed scores)'
Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& scores, std::span<const int> ids, int levels) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(levels, scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) sums.row(ids[static_cast<std::size_t>(i)]) += scores.row(i);
  return sums.transpose() * sums;
}

Factor intersect(const Factor& a, const Factor& b) {
  std::vector<long long> codes(a.ids.size());
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    codes[i] = static_cast<long long>(a.ids[i]) * (b.levels + 1LL) + b.ids[i];
  }
  return make_sorted_factor(a.name + "&" + b.name, codes);
}

struct QrSolve {
  Eigen::VectorXd coef;
  Eigen::MatrixXd bread;  // (X'X)^{-1}
};

QrSolve solve_least_squares(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                            const std::vector<std::string>& names) {
  const auto p = x.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p) {
    std::vector<std::string> collinear;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < p; ++j) {
      auto col = static_cast<std::size_t>(perm(j));
      collinear.push_back(col < names.size() ? names[col] : "column " + std::to_string(col));
    }
    std::string msg = "design is rank deficient; collinear column(s):";
    for (const auto& c : collinear) msg += " " + c;
    throw RankDeficientError(msg, collinear);
  }
  QrSolve out;
  out.coef = qr.solve(y);
  Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  out.bread = perm * inner * perm.transpose();
  return out;
}

LinearFit finish_fit(std::vector<std::string> names, Eigen::VectorXd coef, const Eigen::MatrixXd& bread,
                     const Eigen::MatrixXd& score_basis, Eigen::VectorXd residuals, const Clustering& clustering,
                     std::size_t k) {
  LinearFit fit;
  fit.names = std::move(names);
  fit.coef = std::move(coef);
  Eigen::MatrixXd scores = score_basis.array().colwise() * residuals.array();
  fit.vcov = sandwich_covariance(bread, scores, clustering, k, &fit.covariance);
  fit.rss = residuals.squaredNorm();
  fit.residuals = std::move(residuals);
  if (clustering.kind() == Clustering::Kind::Robust) {
    fit.df = static_cast<double>(fit.covariance.n) - static_cast<double>(k);
  } else {
    fit.df = static_cast<double>(fit.covariance.clusters) - 1.0;
  }
  return fit;
}

}  // namespace

Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& bread, const Eigen::MatrixXd& scores,
                                    const Clustering& clustering, std::size_t k, CovarianceInfo* info) {
  const auto n = static_cast<std::size_t>(scores.rows());
  CovarianceInfo local;
  local.n = n;
  local.k = k;
  Eigen::MatrixXd meat;
  for (const auto& f : clustering.factors()) {
    if (f.ids.size() != n) throw DataError("cluster factor " + f.name + " is not aligned with the rows");
    auto g = nonempty_levels(f);
    if (g < 2) throw ConfigError("cluster factor " + f.name + " has a single cluster");
    local.cluster_counts.push_back(g);
  }
  switch (clustering.kind()) {
    case Clustering::Kind::Robust:
      meat = scores.transpose() * scores;
      local.clusters = n;
      break;
    case Clustering::Kind::OneWay: {
      const auto& f = clustering.factors()[0];
      meat = cluster_meat(scores, f.ids, f.levels);
      local.clusters = local.cluster_counts[0];
      break;
    }
    case Clustering::Kind::TwoWay: {
      const auto& a = clustering.factors()[0];
      const auto& b = clustering.factors()[1];
      auto ab = intersect(a, b);
      meat = cluster_meat(scores, a.ids, a.levels) + cluster_meat(scores, b.ids, b.levels) -
             cluster_meat(scores, ab.ids, ab.levels);
      local.clusters = std::min(local.cluster_counts[0], local.cluster_counts[1]);
      break;
    }
  }
  if (n <= k) throw NumericalError("no residual degrees of freedom (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  const double g = static_cast<double>(local.clusters);
  local.scale = g / (g - 1.0) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - static_cast<double>(k));
  Eigen::MatrixXd v = local.scale * bread * meat * bread;
  v = 0.5 * (v + v.transpose());
  if ((v.diagonal().array() < 0.0).any()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
    Eigen::VectorXd values = eig.eigenvalues().cwiseMax(0.0);
    v = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    local.truncated = true;
  }
  if (info) *info = std::move(local);
  return v;
}

double LinearFit::se(std::size_t i) const {
  return std::sqrt(std::max(0.0, vcov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
}

double LinearFit::t_stat(std::size_t i) const {
  const double s = se(i);
  const double b = coef(static_cast<Eigen::Index>(i));
  if (s == 0.0) return b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
  return b / s;
}

double LinearFit::p_value(std::size_t i) const { return student_t_two_sided_p(t_stat(i), df); }

LinearFit least_squares(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                        const Clustering& clustering, std::size_t absorbed_dof) {
  if (y.size() != x.rows()) throw DataError("response and regressors differ in length");
  if (x.rows() <= x.cols()) throw NumericalError("more regressors than observations");
  auto solved = solve_least_squares(y, x, names);
  Eigen::VectorXd residuals = y - x * solved.coef;
  return finish_fit(names, std::move(solved.coef), solved.bread, x, std::move(residuals), clustering,
                    static_cast<std::size_t>(x.cols()) + absorbed_dof);
}

IvFit two_stage_least_squares(const Eigen::VectorXd& y, const Eigen::VectorXd& endogenous,
                              const Eigen::VectorXd& instrument, const Eigen::MatrixXd& exogenous,
                              const std::vector<std::string>& names, const Clustering& clustering,
                              std::size_t absorbed_dof) {
  const auto n = y.size();
  if (endogenous.size() != n || instrument.size() != n || exogenous.rows() != n) {
    throw DataError("2SLS inputs differ in length");
  }
  const auto p = exogenous.cols() + 1;
  std::vector<std::string> fs_names = names;
  fs_names[0] = "instrument";

  Eigen::MatrixXd z(n, p);
  z << instrument, exogenous;
  IvFit out;
  out.first_stage = least_squares(endogenous, z, fs_names, clustering, absorbed_dof);
  out.fitted_endogenous = z * out.first_stage.coef;

  Eigen::MatrixXd x_hat(n, p);
  x_hat << out.fitted_endogenous, exogenous;
  Eigen::MatrixXd x(n, p);
  x << endogenous, exogenous;
  auto solved = solve_least_squares(y, x_hat, names);
  Eigen::VectorXd residuals = y - x * solved.coef;
  out.second_stage = finish_fit(names, std::move(solved.coef), solved.bread, x_hat, std::move(residuals),
                                clustering, static_cast<std::size_t>(p) + absorbed_dof);
  return out;
}

WaldTest wald_test(const LinearFit& fit, std::span<const std::size_t> indices) {
  WaldTest w;
  w.df2 = fit.df;
  const auto q = static_cast<Eigen::Index>(indices.size());
  if (q == 0) return w;
  Eigen::VectorXd b(q);
  Eigen::MatrixXd v(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    b(i) = fit.coef(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < q; ++j) {
      v(i, j) = fit.vcov(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(i)]),
                         static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]));
    }
  }
  if (b.cwiseAbs().maxCoeff() == 0.0) {
    w.q = static_cast<std::size_t>(q);
    return w;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double cutoff = top * 1e-12 * static_cast<double>(q);
  Eigen::VectorXd projected = eig.eigenvectors().transpose() * b;
  double stat = 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (eig.eigenvalues()(i) > cutoff) {
      stat += projected(i) * projected(i) / eig.eigenvalues()(i);
      ++rank;
    }
  }
  w.q = rank;
  if (rank == 0) return w;
  w.F = stat / static_cast<double>(rank);
  w.p_value = fisher_f_upper_p(w.F, static_cast<double>(rank), w.df2);
  return w;
}

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(std::max(df, 1.0));
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))), 0.0, 1.0);
}

double student_t_quantile(double p, double df) {
  boost::math::students_t dist(std::max(df, 1.0));
  return boost::math::quantile(dist, p);
}

double fisher_f_upper_p(double F, double df1, double df2) {
  if (!(F > 0.0)) return 1.0;
  if (std::isinf(F)) return 0.0;
  boost::math::fisher_f dist(df1, std::max(df2, 1.0));
  return std::clamp(boost::math::cdf(boost::math::complement(dist, F)), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

std::string to_string(ClusterChoice c) {
  switch (c) {
    case ClusterChoice::Robust: return "robust";
    case ClusterChoice::Agent: return "agent";
    case ClusterChoice::Time: return "time";
    case ClusterChoice::TwoWay: return "two-way";
  }
  return "?";
}

ClusterChoice parse_cluster(const std::string& text) {
  if (text == "robust" || text == "none") return ClusterChoice::Robust;
  if (text == "agent") return ClusterChoice::Agent;
  if (text == "time") return ClusterChoice::Time;
  if (text == "two-way" || text == "twoway") return ClusterChoice::TwoWay;
  throw ConfigError("unknown cluster choice `" + text + "` (expected robust, agent, time or two-way)");
}

Clustering make_clustering(const DesignMatrix& design, ClusterChoice choice) {
  Factor agent{"agent", design.cluster_a, design.n_agents()};
  Factor time{"time", design.cluster_t, design.n_time_clusters()};
  switch (choice) {
    case ClusterChoice::Robust: return Clustering::robust();
    case ClusterChoice::Agent: return Clustering::one_way(std::move(agent));
    case ClusterChoice::Time: return Clustering::one_way(std::move(time));
    case ClusterChoice::TwoWay: return Clustering::two_way(std::move(agent), std::move(time));
  }
  return Clustering::robust();
}

std::vector<Factor> absorb_factors(const DesignMatrix& design, const FitSpec& spec) {
  std::vector<Factor> out;
  if (spec.absorb_spans) out.push_back(Factor{"span", design.span_ids, design.n_spans()});
  if (spec.absorb_agents) out.push_back(Factor{"agent", design.agent_ids, design.n_agents()});
  return out;
}

std::size_t absorbed_dof(std::span<const Factor> factors, const Clustering& clustering) {
  if (factors.empty()) return 0;
  std::size_t dof = 0;
  bool any_counted = false;
  for (const auto& f : factors) {
    bool nested = false;
    for (const auto& c : clustering.factors()) nested = nested || nested_in(f, c);
    if (!nested) {
      dof += nonempty_levels(f);
      any_counted = true;
    }
  }
  const std::size_t redundant = factors.size() - 1;
  if (!any_counted) return 0;
  return dof > redundant ? dof - redundant : 0;
}

namespace {

struct AbsorbedBlock {
  Eigen::MatrixXd columns;
  AbsorptionResult absorption;
  std::size_t dof = 0;
  bool intercept = false;
};

// Lays out [leading..., W] and projects out the requested fixed effects; with
// no fixed effects an explicit intercept column is appended instead.
AbsorbedBlock prepare_columns(const DesignMatrix& design, const FitSpec& spec,
                              const std::vector<const Eigen::VectorXd*>& leading, const Clustering& clustering) {
  const auto n = static_cast<Eigen::Index>(design.rows());
  const Eigen::Index w = spec.include_covariates ? design.w_baseline.cols() : 0;
  const auto lead = static_cast<Eigen::Index>(leading.size());
  auto factors = absorb_factors(design, spec);
  AbsorbedBlock block;
  block.intercept = factors.empty();
  block.columns.resize(n, lead + w + (block.intercept ? 1 : 0));
  for (Eigen::Index j = 0; j < lead; ++j) block.columns.col(j) = *leading[static_cast<std::size_t>(j)];
  if (w) block.columns.middleCols(lead, w) = design.w_baseline;
  if (block.intercept) {
    block.columns.col(lead + w).setOnes();
  } else {
    block.absorption = absorb_fixed_effects(block.columns, factors, spec.absorption);
    block.dof = absorbed_dof(factors, clustering);
  }
  return block;
}

std::vector<std::string> regressor_names(const DesignMatrix& design, const FitSpec& spec, bool intercept) {
  std::vector<std::string> names{"sat"};
  if (spec.include_covariates) names.insert(names.end(), design.covariate_names.begin(), design.covariate_names.end());
  if (intercept) names.push_back("(intercept)");
  return names;
}

EstimateReport base_report(const DesignMatrix& design, const FitSpec& spec, const LinearFit& fit,
                           const AbsorbedBlock& block, const char* method) {
  EstimateReport r;
  r.method = method;
  r.outcome = design.outcome;
  r.score = to_string(design.score);
  r.coef = fit.coef(0);
  r.se = fit.se(0);
  r.t_stat = fit.t_stat(0);
  r.p_value = fit.p_value(0);
  const double crit = student_t_quantile(0.975, fit.df);
  r.ci_low = r.coef - crit * r.se;
  r.ci_high = r.coef + crit * r.se;
  r.n_obs = design.rows();
  r.n_spans = design.n_spans();
  r.n_clusters_a = design.n_agents();
  r.n_clusters_t = design.n_time_clusters();
  r.cluster = to_string(spec.cluster);
  r.time_controls = spec.absorb_spans;
  r.baseline_controls = spec.include_covariates;
  r.absorption_iterations = block.absorption.iterations;
  r.absorption_delta = block.absorption.final_delta;
  r.variance_truncated = fit.covariance.truncated;
  if (block.absorption.degenerate) r.warnings.push_back("absorption left every column at zero");
  if (fit.covariance.truncated) r.warnings.push_back("two-way variance truncated to be positive semidefinite");
  return r;
}

}  // namespace

EstimateReport fit_ols(const DesignMatrix& design, const FitSpec& spec) {
  auto clustering = make_clustering(design, spec.cluster);
  auto block = prepare_columns(design, spec, {&design.y, &design.sat}, clustering);
  const auto k = block.columns.cols() - 1;
  auto names = regressor_names(design, spec, block.intercept);
  auto fit = least_squares(block.columns.col(0), block.columns.rightCols(k), names, clustering, block.dof);
  return base_report(design, spec, fit, block, "OLS");
}

EstimateReport fit_tsls(const DesignMatrix& design, const Eigen::VectorXd& instrument, const FitSpec& spec) {
  if (static_cast<std::size_t>(instrument.size()) != design.rows()) {
    throw DataError("instrument is not aligned with the design rows");
  }
  auto clustering = make_clustering(design, spec.cluster);
  auto block = prepare_columns(design, spec, {&design.y, &design.sat, &instrument}, clustering);
  const auto w = block.columns.cols() - 3;
  auto names = regressor_names(design, spec, block.intercept);
  auto iv = two_stage_least_squares(block.columns.col(0), block.columns.col(1), block.columns.col(2),
                                    block.columns.rightCols(w), names, clustering, block.dof);
  auto r = base_report(design, spec, iv.second_stage, block, "2SLS");
  const double t = iv.first_stage.t_stat(0);
  r.first_stage_F = std::min(t * t, kMaxReportedF);
  r.first_stage_coef = iv.first_stage.coef(0);
  r.first_stage_se = iv.first_stage.se(0);
  if (*r.first_stage_F < spec.weak_instrument_threshold) {
    r.warnings.push_back("weak instrument: first-stage F " + std::to_string(*r.first_stage_F) + " below " +
                         std::to_string(spec.weak_instrument_threshold));
  }
  return r;
}

double first_stage_f(const DesignMatrix& design, const Eigen::VectorXd& instrument, const FitSpec& spec) {
  if (static_cast<std::size_t>(instrument.size()) != design.rows()) {
    throw DataError("instrument is not aligned with the design rows");
  }
  auto clustering = make_clustering(design, spec.cluster);
  auto block = prepare_columns(design, spec, {&design.sat, &instrument}, clustering);
  const auto k = block.columns.cols() - 1;
  auto names = regressor_names(design, spec, block.intercept);
  names[0] = "instrument";
  auto fit = least_squares(block.columns.col(0), block.columns.rightCols(k), names, clustering, block.dof);
  const double t = fit.t_stat(0);
  return std::min(t * t, kMaxReportedF);
}

}  // namespace examiner
