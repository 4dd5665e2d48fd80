#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace examiner {

// A categorical variable with dense 0-based level ids, one per row.
struct Factor {
  std::string name;
  std::vector<int> ids;
  int levels = 0;
};

// Renumbers arbitrary integer codes densely in order of first appearance.
Factor make_factor(std::string name, std::span<const int> codes);
// Same, but levels are numbered in ascending code order.
Factor make_sorted_factor(std::string name, std::span<const long long> codes);

// True when every level of `inner` falls in a single level of `outer`.
bool nested_in(const Factor& inner, const Factor& outer);

struct AbsorptionOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

struct AbsorptionResult {
  int iterations = 0;
  double final_delta = 0.0;
  // Every column is identically zero after absorption.
  bool degenerate = false;
  std::vector<double> trace;
};

// Subtracts group means of `factor` from every column.
void demean(Eigen::Ref<Eigen::MatrixXd> columns, const Factor& factor);

// Projects out the fixed effects of all factors. One factor is exact in a
// single pass; two or more use alternating projections until the largest
// absolute change in a sweep drops below the tolerance. Throws
// ConvergenceError (with the per-sweep trace) when the iteration cap is hit.
AbsorptionResult absorb_fixed_effects(Eigen::Ref<Eigen::MatrixXd> columns,
                                      std::span<const Factor> factors,
                                      const AbsorptionOptions& options = {});

}  // namespace examiner
