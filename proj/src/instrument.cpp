#include "examiner/instrument.hpp"

#include <ostream>

#include "examiner/csv.hpp"
#include "examiner/errors.hpp"
#include "examiner/fixed_effects.hpp"

namespace examiner {

Eigen::VectorXd residualize(const DesignMatrix& design, const ResidualizeOptions& options) {
  const auto n = static_cast<Eigen::Index>(design.rows());
  const Eigen::Index w = options.include_baseline ? design.w_baseline.cols() : 0;
  const bool intercept = !options.absorb_spans;
  Eigen::MatrixXd m(n, 1 + w + (intercept ? 1 : 0));
  m.col(0) = design.sat;
  if (w) m.middleCols(1, w) = design.w_baseline;
  if (intercept) m.col(m.cols() - 1).setOnes();

  Eigen::Index params = m.cols() - 1;
  if (options.absorb_spans) {
    Factor spans{"span", design.span_ids, design.n_spans()};
    demean(m, spans);
    params += design.n_spans();
  }
  if (n <= params) {
    throw DataError("too few rows to residualize (" + std::to_string(n) + " rows, " + std::to_string(params) +
                    " parameters)");
  }
  Eigen::VectorXd r = m.col(0);
  const Eigen::Index k = m.cols() - 1;
  if (k == 0) return r;

  Eigen::MatrixXd x = m.rightCols(k);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::vector<std::string> names(design.covariate_names.begin(), design.covariate_names.begin() + w);
    if (intercept) names.push_back("(intercept)");
    std::vector<std::string> collinear;
    for (Eigen::Index j = qr.rank(); j < k; ++j) collinear.push_back(names[static_cast<std::size_t>(qr.colsPermutation().indices()(j))]);
    std::string msg = "baseline covariates are collinear:";
    for (const auto& c : collinear) msg += " " + c;
    throw RankDeficientError(msg, collinear);
  }
  Eigen::VectorXd beta = qr.solve(r);
  return r - x * beta;
}

InstrumentVector leave_one_out(const Eigen::VectorXd& residuals, std::span<const int> agent_ids) {
  if (static_cast<std::size_t>(residuals.size()) != agent_ids.size()) {
    throw DataError("residuals and agent ids differ in length");
  }
  int levels = 0;
  for (int a : agent_ids) {
    if (a < 0) throw DataError("negative agent id");
    levels = std::max(levels, a + 1);
  }
  std::vector<double> total(static_cast<std::size_t>(levels), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(levels), 0);
  for (std::size_t i = 0; i < agent_ids.size(); ++i) {
    total[static_cast<std::size_t>(agent_ids[i])] += residuals(static_cast<Eigen::Index>(i));
    ++count[static_cast<std::size_t>(agent_ids[i])];
  }
  InstrumentVector out;
  std::vector<double> z;
  for (std::size_t i = 0; i < agent_ids.size(); ++i) {
    auto a = static_cast<std::size_t>(agent_ids[i]);
    if (count[a] < 2) {
      out.dropped_rows.push_back(i);
      continue;
    }
    out.kept_rows.push_back(i);
    z.push_back((total[a] - residuals(static_cast<Eigen::Index>(i))) / static_cast<double>(count[a] - 1));
  }
  out.z = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  for (std::size_t a = 0; a < count.size(); ++a) {
    if (count[a]) out.agent_call_counts[std::to_string(a)] = count[a];
  }
  return out;
}

InstrumentVector leave_one_out(const DesignMatrix& design, const Eigen::VectorXd& residuals) {
  auto out = leave_one_out(residuals, design.agent_ids);
  out.agent_call_counts.clear();
  for (int a : design.agent_ids) ++out.agent_call_counts[design.agent_names[static_cast<std::size_t>(a)]];
  for (auto i : out.dropped_rows) out.dropped_call_ids.push_back(design.row_call_ids[i]);
  return out;
}

void write_instrument(std::ostream& out, const DesignMatrix& design, const InstrumentVector& iv, char delimiter) {
  csv::write_row(out, {"call_id", "agent_id", "z"}, delimiter);
  for (std::size_t j = 0; j < iv.kept_rows.size(); ++j) {
    auto row = iv.kept_rows[j];
    const auto& agent = design.agent_names[static_cast<std::size_t>(design.agent_ids[row])];
    csv::write_row(out, {design.row_call_ids[row], agent, csv::format_double(iv.z(static_cast<Eigen::Index>(j)))},
                   delimiter);
  }
}

}  // namespace examiner
