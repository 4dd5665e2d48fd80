#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "examiner/panel.hpp"

namespace examiner {

struct ResidualizeOptions {
  bool absorb_spans = true;
  bool include_baseline = true;
};

// Sat minus its fitted value from the regression on time-span effects and
// baseline covariates. Throws RankDeficientError naming collinear covariates
// and DataError when there are no residual degrees of freedom.
Eigen::VectorXd residualize(const DesignMatrix& design, const ResidualizeOptions& options = {});

struct InstrumentVector {
  Eigen::VectorXd z;                  // one entry per kept row
  std::vector<std::size_t> kept_rows;  // indices into the input rows
  std::vector<std::size_t> dropped_rows;
  std::vector<std::string> dropped_call_ids;
  std::map<std::string, std::size_t> agent_call_counts;
};

// Jackknife agent mean: z_i = (T_a - r_i) / (n_a - 1), with T_a the agent's
// residual total. Rows of agents with a single call are dropped.
InstrumentVector leave_one_out(const Eigen::VectorXd& residuals, std::span<const int> agent_ids);

// Same, with call and agent names filled in from the design.
InstrumentVector leave_one_out(const DesignMatrix& design, const Eigen::VectorXd& residuals);

void write_instrument(std::ostream& out, const DesignMatrix& design, const InstrumentVector& iv,
                      char delimiter);

}  // namespace examiner
