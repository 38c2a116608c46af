#include "otbarrier/classical.hpp"
#include "otbarrier/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otb {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr std::size_t kMaxVariables = 20000;

// Dense tableau with the objective (reduced costs, −value) in the last row.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)) {}

  Eigen::MatrixXd& data() { return t_; }
  std::size_t rows() const { return static_cast<std::size_t>(t_.rows()) - 1; }
  std::size_t cols() const { return static_cast<std::size_t>(t_.cols()) - 1; }
  double& at(std::size_t r, std::size_t c) { return t_(r, c); }
  double rhs(std::size_t r) const { return t_(r, t_.cols() - 1); }
  double reduced(std::size_t c) const { return t_(t_.rows() - 1, c); }

  void pivot(std::size_t r, std::size_t c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == static_cast<Eigen::Index>(r)) continue;
      const double factor = t_(i, c);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(r);
    }
  }

  void drop_row(std::size_t r) {
    const Eigen::Index last = t_.rows() - 1;
    Eigen::MatrixXd next(t_.rows() - 1, t_.cols());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i <= last; ++i)
      if (i != static_cast<Eigen::Index>(r)) next.row(k++) = t_.row(i);
    t_ = std::move(next);
  }

 private:
  Eigen::MatrixXd t_;
};

// Bland's rule over columns [0, allowed). Returns the pivot count.
std::size_t run_simplex(Tableau& tab, std::vector<std::size_t>& basis, std::size_t allowed) {
  std::size_t pivots = 0;
  const std::size_t max_pivots = 50 * (tab.rows() + allowed) + 1000;
  while (true) {
    std::size_t enter = allowed;
    for (std::size_t c = 0; c < allowed; ++c)
      if (tab.reduced(c) < -kPivotTol) {
        enter = c;
        break;
      }
    if (enter == allowed) return pivots;

    std::size_t leave = tab.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      const double a = tab.at(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(tab.rhs(r), 0.0) / a;
      const bool first = leave == tab.rows();
      const double slack = first ? 0.0 : 1e-12 * (1.0 + best);
      if (first || ratio < best - slack || (ratio <= best + slack && basis[r] < basis[leave])) {
        best = first ? ratio : std::min(best, ratio);
        leave = r;
      }
    }
    if (leave == tab.rows()) throw NumericalFailure("transport LP reported unbounded");
    tab.pivot(leave, enter);
    basis[leave] = enter;
    if (++pivots > max_pivots) throw NumericalFailure("simplex exceeded its pivot budget");
  }
}

}  // namespace

LpResult lp_reference(const ClassicalInstance& inst) {
  const std::size_t nvar = inst.cost.size();
  if (nvar > kMaxVariables)
    throw InvalidArgument("LP reference is limited to " + std::to_string(kMaxVariables) + " variables");
  const auto& dims = inst.dims();
  const std::size_t d = dims.size();

  // Row (i,k) constrains the k-th slice sum of mode i.
  std::vector<std::size_t> row_offset(d + 1, 0);
  for (std::size_t i = 0; i < d; ++i) row_offset[i + 1] = row_offset[i] + dims[i];
  const std::size_t m = row_offset[d];

  std::vector<std::vector<std::size_t>> var_rows(nvar, std::vector<std::size_t>(d));
  {
    MultiIndex idx(dims);
    std::size_t j = 0;
    do {
      for (std::size_t i = 0; i < d; ++i) var_rows[j][i] = row_offset[i] + idx[i];
      ++j;
    } while (idx.next());
  }
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < dims[i]; ++k) rhs[row_offset[i] + k] = inst.marginals[i][k];

  // Phase I: artificial per row, minimize their sum.
  Tableau tab(m, nvar + m);
  const std::size_t rhs_col = nvar + m;
  std::vector<std::size_t> basis(m);
  for (std::size_t j = 0; j < nvar; ++j)
    for (std::size_t r : var_rows[j]) tab.at(r, j) = 1.0;
  for (std::size_t r = 0; r < m; ++r) {
    tab.at(r, nvar + r) = 1.0;
    tab.at(r, rhs_col) = rhs[r];
    basis[r] = nvar + r;
  }
  for (std::size_t c = 0; c <= rhs_col; ++c) {
    if (c >= nvar && c < rhs_col) continue;
    double s = 0.0;
    for (std::size_t r = 0; r < m; ++r) s += tab.at(r, c);
    tab.at(m, c) = -s;
  }
  LpResult out;
  out.pivots += run_simplex(tab, basis, nvar + m);
  const double infeasibility = -tab.at(tab.rows(), rhs_col);
  if (infeasibility > 1e-9 * (1.0 + inst.marginals.common_mass()))
    throw NumericalFailure("transport LP phase I found no feasible coupling");

  // Drive artificials out; rows that cannot pivot are redundant.
  std::vector<std::size_t> kept_rows;
  for (std::size_t r = 0; r < m; ++r) kept_rows.push_back(r);
  for (std::size_t r = 0; r < tab.rows();) {
    if (basis[r] < nvar) {
      ++r;
      continue;
    }
    std::size_t best = nvar;
    double mag = kPivotTol;
    for (std::size_t c = 0; c < nvar; ++c)
      if (std::abs(tab.at(r, c)) > mag) {
        mag = std::abs(tab.at(r, c));
        best = c;
      }
    if (best < nvar) {
      tab.pivot(r, best);
      basis[r] = best;
      ++out.pivots;
      ++r;
    } else {
      tab.drop_row(r);
      basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(r));
      kept_rows.erase(kept_rows.begin() + static_cast<std::ptrdiff_t>(r));
    }
  }

  // Phase II objective row.
  const std::size_t obj = tab.rows();
  const std::size_t rhs_now = tab.cols();
  for (std::size_t c = 0; c <= rhs_now; ++c) {
    double v = (c < nvar) ? inst.cost[c] : 0.0;
    for (std::size_t r = 0; r < tab.rows(); ++r) v -= inst.cost[basis[r]] * tab.at(r, c);
    tab.at(obj, c) = v;
  }
  out.pivots += run_simplex(tab, basis, nvar);

  // Recompute the vertex and the duals from the final basis.
  const auto mb = static_cast<Eigen::Index>(basis.size());
  std::vector<Eigen::Index> row_pos(m, -1);
  for (Eigen::Index r = 0; r < mb; ++r) row_pos[kept_rows[static_cast<std::size_t>(r)]] = r;
  Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(mb, mb);
  Eigen::VectorXd bvec(mb), cb(mb);
  for (Eigen::Index c = 0; c < mb; ++c) {
    const std::size_t j = basis[static_cast<std::size_t>(c)];
    for (std::size_t r : var_rows[j])
      if (row_pos[r] >= 0) bmat(row_pos[r], c) = 1.0;
    cb(c) = inst.cost[j];
  }
  for (Eigen::Index r = 0; r < mb; ++r) bvec(r) = rhs[kept_rows[static_cast<std::size_t>(r)]];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
  if (!lu.isInvertible()) throw NumericalFailure("transport LP ended on a singular basis");
  const Eigen::VectorXd xb = lu.solve(bvec);
  const Eigen::VectorXd y = lu.transpose().solve(cb);

  out.coupling = DenseTensor(dims);
  for (Eigen::Index c = 0; c < mb; ++c) {
    const double v = xb(c);
    if (v < -1e-9 * (1.0 + inst.marginals.common_mass()))
      throw NumericalFailure("transport LP basis is primal infeasible");
    out.coupling[basis[static_cast<std::size_t>(c)]] = std::max(v, 0.0);
  }
  const double cost_scale = 1.0 + inst.c_abs;
  for (std::size_t j = 0; j < nvar; ++j) {
    double rc = inst.cost[j];
    for (std::size_t r : var_rows[j])
      if (row_pos[r] >= 0) rc -= y(row_pos[r]);
    if (rc < -1e-9 * cost_scale) throw NumericalFailure("transport LP basis is not dual feasible");
  }
  out.value = inner(inst.cost, out.coupling);
  check(out.value >= inst.c_min * inst.marginals.common_mass() - 1e-9 * cost_scale,
        "transport LP value below the cost lower bound");
  return out;
}

}  // namespace otb
