#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "examiner/fixed_effects.hpp"
#include "examiner/panel.hpp"

namespace examiner {

class Clustering {
 public:
  enum class Kind { Robust, OneWay, TwoWay };

  // Heteroskedasticity-robust (every row its own cluster).
  static Clustering robust() { return Clustering(Kind::Robust, {}); }
  static Clustering one_way(Factor a) { return Clustering(Kind::OneWay, {std::move(a)}); }
  static Clustering two_way(Factor a, Factor b) {
    return Clustering(Kind::TwoWay, {std::move(a), std::move(b)});
  }

  Kind kind() const noexcept { return kind_; }
  const std::vector<Factor>& factors() const noexcept { return factors_; }

 private:
  Clustering(Kind kind, std::vector<Factor> factors) : kind_(kind), factors_(std::move(factors)) {}
  Kind kind_;
  std::vector<Factor> factors_;
};

struct CovarianceInfo {
  std::size_t n = 0;
  std::size_t k = 0;
  // Smallest cluster count (n for robust).
  std::size_t clusters = 0;
  std::vector<std::size_t> cluster_counts;
  double scale = 1.0;
  bool truncated = false;
};

// V = c * B * (sum over clusters of s_g s_g') * B with s_g the summed score
// rows of cluster g. Two-way uses V_A + V_T - V_{A and T}; a negative
// diagonal triggers eigenvalue truncation at zero. c = G/(G-1) * (n-1)/(n-k)
// with G the smallest cluster count. Throws ConfigError if a cluster factor
// has a single level.
Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& bread, const Eigen::MatrixXd& scores,
                                    const Clustering& clustering, std::size_t k,
                                    CovarianceInfo* info = nullptr);

struct LinearFit {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  Eigen::VectorXd residuals;
  CovarianceInfo covariance;
  // Reference degrees of freedom for t and F: G-1 when clustered, n-k otherwise.
  double df = 0.0;
  double rss = 0.0;

  double se(std::size_t i) const;
  double t_stat(std::size_t i) const;
  double p_value(std::size_t i) const;
};

// Least squares of y on the columns of x. `absorbed_dof` counts fixed-effect
// parameters already projected out that enter the small-sample correction.
// Throws RankDeficientError naming the collinear columns.
LinearFit least_squares(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                        const std::vector<std::string>& names, const Clustering& clustering,
                        std::size_t absorbed_dof = 0);

struct IvFit {
  LinearFit second_stage;  // coefficient 0 is the endogenous regressor
  LinearFit first_stage;   // coefficient 0 is the instrument
  Eigen::VectorXd fitted_endogenous;
};

// Just-identified 2SLS. The covariance is the IV sandwich built from the
// first-stage fitted regressor and structural residuals y - X b.
IvFit two_stage_least_squares(const Eigen::VectorXd& y, const Eigen::VectorXd& endogenous,
                              const Eigen::VectorXd& instrument, const Eigen::MatrixXd& exogenous,
                              const std::vector<std::string>& names, const Clustering& clustering,
                              std::size_t absorbed_dof = 0);

struct WaldTest {
  double F = 0.0;
  double p_value = 1.0;
  std::size_t q = 0;
  double df2 = 0.0;
};

// Joint test that the listed coefficients are zero, using the fit's
// covariance (pseudo-inverse when singular, q = its rank).
WaldTest wald_test(const LinearFit& fit, std::span<const std::size_t> indices);

double student_t_two_sided_p(double t, double df);
double student_t_quantile(double p, double df);
double fisher_f_upper_p(double F, double df1, double df2);

// ---------------------------------------------------------------------------
// Design-level fits

enum class Method { Ols, Tsls };
enum class ClusterChoice { Robust, Agent, Time, TwoWay };

std::string to_string(ClusterChoice c);
ClusterChoice parse_cluster(const std::string& text);

struct FitSpec {
  Method method = Method::Ols;
  bool absorb_spans = true;
  bool absorb_agents = false;
  bool include_covariates = true;
  ClusterChoice cluster = ClusterChoice::TwoWay;
  double weak_instrument_threshold = 10.0;
  AbsorptionOptions absorption;
};

struct EstimateReport {
  std::string method;
  std::string outcome;
  std::string score;
  double coef = 0.0;
  double se = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> first_stage_F;
  std::optional<double> first_stage_coef;
  std::optional<double> first_stage_se;
  std::size_t n_obs = 0;
  int n_spans = 0;
  int n_clusters_a = 0;
  int n_clusters_t = 0;
  std::string cluster;
  bool time_controls = true;
  bool baseline_controls = true;
  int absorption_iterations = 0;
  double absorption_delta = 0.0;
  bool variance_truncated = false;
  std::vector<std::string> warnings;
};

Clustering make_clustering(const DesignMatrix& design, ClusterChoice choice);

// Fixed-effect factors the fit asks for, in absorption order.
std::vector<Factor> absorb_factors(const DesignMatrix& design, const FitSpec& spec);

// Fixed-effect parameters that count toward k: factors nested in a cluster
// factor are excluded.
std::size_t absorbed_dof(std::span<const Factor> factors, const Clustering& clustering);

// Reported F values are capped here.
inline constexpr double kMaxReportedF = 1e6;

EstimateReport fit_ols(const DesignMatrix& design, const FitSpec& spec);
EstimateReport fit_tsls(const DesignMatrix& design, const Eigen::VectorXd& instrument,
                        const FitSpec& spec);

// Squared robust t statistic of the instrument in the first stage.
double first_stage_f(const DesignMatrix& design, const Eigen::VectorXd& instrument,
                     const FitSpec& spec);

}  // namespace examiner
