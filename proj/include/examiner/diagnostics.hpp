#pragma once

#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "examiner/estimator.hpp"
#include "examiner/panel.hpp"

namespace examiner {

struct CovariateEstimate {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
};

struct DiagnosticReport {
  std::string test_name;
  bool time_controls = false;
  double joint_F = 0.0;
  double p_value = 1.0;
  std::size_t q = 0;
  double df2 = 0.0;
  double r2_full = 0.0;
  double r2_restricted = 0.0;
  double net_variation = 0.0;
  std::size_t n_obs = 0;
  std::vector<CovariateEstimate> per_covariate;
  // Tested regressors left out because they were collinear with the rest.
  std::vector<std::string> dropped;
};

struct DiagnosticOptions {
  bool time_controls = true;
  ClusterChoice cluster = ClusterChoice::Robust;
};

// Waiting time on agent dummies (one reference agent), optionally absorbing
// span effects. Joint F on all agent coefficients that are identified. Throws
// DataError with fewer than two agents.
DiagnosticReport waiting_time_check(const DesignMatrix& design, const DiagnosticOptions& options);

enum class BalanceTarget { Sat, Instrument };

// Target on the baseline covariates, optionally absorbing spans; joint F on
// all covariate coefficients. `target` must be aligned with the design rows.
DiagnosticReport balance_test(const DesignMatrix& design, const Eigen::VectorXd& target,
                              const std::string& target_name, const DiagnosticOptions& options);

}  // namespace examiner
