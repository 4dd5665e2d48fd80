#include "examiner/fixed_effects.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "examiner/errors.hpp"

namespace examiner {

Factor make_factor(std::string name, std::span<const int> codes) {
  Factor f;
  f.name = std::move(name);
  f.ids.reserve(codes.size());
  std::unordered_map<int, int> dense;
  for (int c : codes) {
    auto [it, inserted] = dense.emplace(c, f.levels);
    if (inserted) ++f.levels;
    f.ids.push_back(it->second);
  }
  return f;
}

Factor make_sorted_factor(std::string name, std::span<const long long> codes) {
  Factor f;
  f.name = std::move(name);
  std::map<long long, int> dense;
  for (auto c : codes) dense.emplace(c, 0);
  for (auto& [code, id] : dense) id = f.levels++;
  f.ids.reserve(codes.size());
  for (auto c : codes) f.ids.push_back(dense.at(c));
  return f;
}

bool nested_in(const Factor& inner, const Factor& outer) {
  if (inner.ids.size() != outer.ids.size()) return false;
  std::vector<int> owner(static_cast<std::size_t>(inner.levels), -1);
  for (std::size_t i = 0; i < inner.ids.size(); ++i) {
    auto& o = owner[static_cast<std::size_t>(inner.ids[i])];
    if (o == -1) o = outer.ids[i];
    else if (o != outer.ids[i]) return false;
  }
  return true;
}

void demean(Eigen::Ref<Eigen::MatrixXd> columns, const Factor& factor) {
  const auto n = columns.rows();
  if (static_cast<std::size_t>(n) != factor.ids.size()) {
    throw DataError("factor " + factor.name + " is not aligned with the data rows");
  }
  std::vector<double> counts(static_cast<std::size_t>(factor.levels), 0.0);
  for (int id : factor.ids) counts[static_cast<std::size_t>(id)] += 1.0;
  std::vector<double> sums(static_cast<std::size_t>(factor.levels));
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) sums[static_cast<std::size_t>(factor.ids[static_cast<std::size_t>(i)])] += columns(i, c);
    for (std::size_t g = 0; g < sums.size(); ++g) {
      if (counts[g] > 0) sums[g] /= counts[g];
    }
    for (Eigen::Index i = 0; i < n; ++i) columns(i, c) -= sums[static_cast<std::size_t>(factor.ids[static_cast<std::size_t>(i)])];
  }
}

AbsorptionResult absorb_fixed_effects(Eigen::Ref<Eigen::MatrixXd> columns, std::span<const Factor> factors,
                                      const AbsorptionOptions& options) {
  AbsorptionResult result;
  if (factors.empty() || columns.size() == 0) return result;
  const double scale = 1.0 + columns.cwiseAbs().maxCoeff();

  if (factors.size() == 1) {
    demean(columns, factors[0]);
    result.iterations = 1;
  } else {
    Eigen::MatrixXd previous;
    for (int iter = 1;; ++iter) {
      previous = columns;
      for (const auto& f : factors) demean(columns, f);
      const double delta = (columns - previous).cwiseAbs().maxCoeff();
      result.trace.push_back(delta);
      result.iterations = iter;
      result.final_delta = delta;
      if (delta < options.tolerance) break;
      if (iter >= options.max_iterations) {
        throw ConvergenceError("fixed-effect absorption did not converge in " + std::to_string(iter) +
                                   " iterations (last change " + std::to_string(delta) + ")",
                               result.trace);
      }
    }
  }
  result.degenerate = columns.cwiseAbs().maxCoeff() <= 1e-12 * scale;
  return result;
}

}  // namespace examiner
