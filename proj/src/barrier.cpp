#include "otbarrier/barrier.hpp"

#include "otbarrier/errors.hpp"
#include "otbarrier/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> block_offsets(const Dims& dims, bool squared) {
  std::vector<std::size_t> off(dims.size() + 1, 0);
  for (std::size_t i = 0; i < dims.size(); ++i) off[i + 1] = off[i] + (squared ? dims[i] * dims[i] : dims[i]);
  return off;
}

double ball_gap(const TrustRegion& region, const Eigen::VectorXd& z) {
  return region.radius * region.radius - (z - region.center).squaredNorm();
}

std::vector<std::size_t> mode_strides(const Dims& dims) {
  std::vector<std::size_t> st(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) st[i - 1] = st[i] * dims[i];
  return st;
}

}  // namespace

void add_ball_term(const TrustRegion& region, const Eigen::VectorXd& z, BarrierEvaluation& eval) {
  const double q = ball_gap(region, z);
  if (!(q > 0.0)) {
    eval.domain_ok = false;
    eval.value = kInf;
    return;
  }
  const Eigen::VectorXd d = z - region.center;
  eval.value += -std::log(q) + 2.0 * std::log(region.radius);
  eval.gradient += (2.0 / q) * d;
  eval.hessian.diagonal().array() += 2.0 / q;
  eval.hessian.noalias() += (4.0 / (q * q)) * d * d.transpose();
}

// ---------------------------------------------------------------------------

ClassicalBarrier::ClassicalBarrier(const ClassicalInstance& inst, std::optional<TrustRegion> region)
    : inst_(&inst), region_(std::move(region)), dim_(0) {
  for (auto n : inst.dims()) dim_ += n;
  if (region_ && static_cast<std::size_t>(region_->center.size()) != dim_)
    throw DimensionMismatch("trust region center has the wrong dimension");
}

bool ClassicalBarrier::in_domain(const Eigen::VectorXd& z) const {
  if (region_ && !(ball_gap(*region_, z) > 0.0)) return false;
  const DenseTensor s = slack_tensor(*inst_, unflatten(inst_->dims(), z));
  for (double v : s.entries())
    if (!(v > 0.0)) return false;
  return true;
}

double ClassicalBarrier::value(const Eigen::VectorXd& z) const {
  const DenseTensor s = slack_tensor(*inst_, unflatten(inst_->dims(), z));
  double v = 0.0;
  for (double e : s.entries()) {
    if (!(e > 0.0)) return kInf;
    v -= std::log(e);
  }
  if (region_) {
    const double q = ball_gap(*region_, z);
    if (!(q > 0.0)) return kInf;
    v += -std::log(q) + 2.0 * std::log(region_->radius);
  }
  return v;
}

BarrierEvaluation ClassicalBarrier::evaluate(const Eigen::VectorXd& z, FlopCounter* flops) const {
  const auto& dims = inst_->dims();
  const std::size_t d = dims.size();
  const auto off = block_offsets(dims, false);
  const DenseTensor s = slack_tensor(*inst_, unflatten(dims, z));

  BarrierEvaluation out;
  out.gradient = Eigen::VectorXd::Zero(dim_);
  out.hessian = Eigen::MatrixXd::Zero(dim_, dim_);
  out.domain_ok = true;

  MultiIndex idx(dims);
  std::size_t j = 0;
  std::vector<std::size_t> rows(d);
  do {
    const double e = s[j++];
    if (!(e > 0.0)) {
      out.domain_ok = false;
      out.value = kInf;
      return out;
    }
    const double w = 1.0 / e;
    out.value -= std::log(e);
    for (std::size_t a = 0; a < d; ++a) rows[a] = off[a] + idx[a];
    for (std::size_t a = 0; a < d; ++a) {
      out.gradient(rows[a]) += w;
      for (std::size_t b = 0; b < d; ++b) out.hessian(rows[a], rows[b]) += w * w;
    }
  } while (idx.next());

  const double n = static_cast<double>(s.size());
  const double dd = static_cast<double>(d);
  count(flops, n * (dd + 2.0 * dd * dd + 4.0));
  if (region_) {
    add_ball_term(*region_, z, out);
    const double m = static_cast<double>(dim_);
    count(flops, 3.0 * m * m);
  }
  return out;
}

double ClassicalBarrier::theta_bound() const {
  return static_cast<double>(inst_->cost.size()) + (region_ ? 1.0 : 0.0);
}

// ---------------------------------------------------------------------------

QuantumBarrier::QuantumBarrier(const QuantumInstance& inst, std::optional<TrustRegion> region)
    : inst_(&inst), region_(std::move(region)), dim_(0) {
  for (auto n : inst.dims()) dim_ += n * n;
  if (region_ && static_cast<std::size_t>(region_->center.size()) != dim_)
    throw DimensionMismatch("trust region center has the wrong dimension");
}

bool QuantumBarrier::in_domain(const Eigen::VectorXd& z) const {
  if (region_ && !(ball_gap(*region_, z) > 0.0)) return false;
  return chol_logdet(slack_operator(*inst_, unflatten_hermitian(inst_->dims(), z))).is_pd;
}

double QuantumBarrier::value(const Eigen::VectorXd& z) const {
  const LogDet ld = chol_logdet(slack_operator(*inst_, unflatten_hermitian(inst_->dims(), z)));
  if (!ld.is_pd) return kInf;
  double v = -ld.logdet;
  if (region_) {
    const double q = ball_gap(*region_, z);
    if (!(q > 0.0)) return kInf;
    v += -std::log(q) + 2.0 * std::log(region_->radius);
  }
  return v;
}

BarrierEvaluation QuantumBarrier::evaluate(const Eigen::VectorXd& z, FlopCounter* flops) const {
  const auto& dims = inst_->dims();
  const std::size_t d = dims.size();
  const auto off = block_offsets(dims, true);
  const auto strides = mode_strides(dims);
  const ProductOperator slack = slack_operator(*inst_, unflatten_hermitian(dims, z));
  const std::size_t total = slack.dim();
  const double nn = static_cast<double>(total);

  BarrierEvaluation out;
  out.gradient = Eigen::VectorXd::Zero(dim_);
  out.hessian = Eigen::MatrixXd::Zero(dim_, dim_);

  bool pd = false;
  const Eigen::MatrixXcd l = cholesky_lower(slack.matrix.matrix(), &pd);
  count(flops, 4.0 * nn * nn * nn / 3.0);
  if (!pd) {
    out.value = kInf;
    return out;
  }
  out.domain_ok = true;
  for (Eigen::Index i = 0; i < l.rows(); ++i) out.value -= 2.0 * std::log(l(i, i).real());
  const Eigen::MatrixXcd e = inverse_from_cholesky(l);
  count(flops, 4.0 * nn * nn * nn);

  // Gradient block a: coordinates of tr_â(E).
  const ProductOperator einv(dims, HermitianMatrix(e));
  for (std::size_t a = 0; a < d; ++a) {
    const auto c = to_coordinates(partial_trace_except(einv, a));
    out.gradient.segment(static_cast<Eigen::Index>(off[a]), c.coords.size()) = c.coords;
  }
  count(flops, 2.0 * static_cast<double>(d) * nn * nn);

  // Hessian block (a,b): Re tr(E·lift_a(B_u)·E·lift_b(B_v)), contracted
  // through W[j,k,m,i] = Σ E[I,J]·E[J with j_a→k, I with i_b→m] over I, J
  // whose a-digit of J is j and b-digit of I is i.
  std::vector<std::vector<std::size_t>> digits(total, std::vector<std::size_t>(d));
  {
    MultiIndex idx(dims);
    std::size_t f = 0;
    do {
      for (std::size_t a = 0; a < d; ++a) digits[f][a] = idx[a];
      ++f;
    } while (idx.next());
  }
  std::vector<Complex> w;
  for (std::size_t a = 0; a < d; ++a) {
    const std::size_t na = dims[a];
    for (std::size_t b = a; b < d; ++b) {
      const std::size_t nb = dims[b];
      w.assign(na * na * nb * nb, Complex(0.0, 0.0));
      auto widx = [&](std::size_t j, std::size_t k, std::size_t m, std::size_t i) {
        return ((j * na + k) * nb + m) * nb + i;
      };
      for (std::size_t ii = 0; ii < total; ++ii) {
        const std::size_t ib = digits[ii][b];
        for (std::size_t jj = 0; jj < total; ++jj) {
          const Complex eij = e(ii, jj);
          const std::size_t ja = digits[jj][a];
          for (std::size_t k = 0; k < na; ++k) {
            const std::size_t kk = jj + (k - ja) * strides[a];
            for (std::size_t m = 0; m < nb; ++m) {
              const std::size_t mm = ii + (m - ib) * strides[b];
              w[widx(ja, k, m, ib)] += eij * e(kk, mm);
            }
          }
        }
      }
      count(flops, 8.0 * nn * nn * static_cast<double>(na * nb));

      for (std::size_t u = 0; u < na * na; ++u) {
        const BasisEntry bu = coordinate_basis(na, u);
        for (std::size_t v = 0; v < nb * nb; ++v) {
          const BasisEntry bv = coordinate_basis(nb, v);
          Complex acc(0.0, 0.0);
          auto add = [&](std::size_t j, std::size_t k, Complex x, std::size_t m, std::size_t i, Complex y) {
            acc += w[widx(j, k, m, i)] * x * y;
          };
          auto over_v = [&](std::size_t j, std::size_t k, Complex x) {
            add(j, k, x, bv.p, bv.q, bv.value);
            if (bv.p != bv.q) add(j, k, x, bv.q, bv.p, std::conj(bv.value));
          };
          over_v(bu.p, bu.q, bu.value);
          if (bu.p != bu.q) over_v(bu.q, bu.p, std::conj(bu.value));
          const auto r = static_cast<Eigen::Index>(off[a] + u);
          const auto c = static_cast<Eigen::Index>(off[b] + v);
          out.hessian(r, c) = acc.real();
          out.hessian(c, r) = acc.real();
        }
      }
      count(flops, 32.0 * static_cast<double>(na * na * nb * nb));
    }
  }

  if (region_) {
    add_ball_term(*region_, z, out);
    const double m = static_cast<double>(dim_);
    count(flops, 3.0 * m * m);
  }
  return out;
}

double QuantumBarrier::theta_bound() const {
  return static_cast<double>(inst_->cost.dim()) + (region_ ? 1.0 : 0.0);
}

// ---------------------------------------------------------------------------

namespace {

double inverse_dim_sum(const Dims& dims) {
  double s = 0.0;
  for (auto n : dims) s += 1.0 / static_cast<double>(n);
  return s;
}

}  // namespace

DualPoint classical_start_point(const ClassicalInstance& inst) {
  const double t = (inst.c_min - 1.0) / inverse_dim_sum(inst.dims());
  DualPoint z;
  for (auto n : inst.dims()) z.emplace_back(n, t / static_cast<double>(n));
  return z;
}

HermitianDualPoint quantum_start_point(const QuantumInstance& inst) {
  const double t = (inst.lambda_min - 1.0) / inverse_dim_sum(inst.dims());
  HermitianDualPoint z;
  for (auto n : inst.dims()) z.push_back(HermitianMatrix::identity(n) * (t / static_cast<double>(n)));
  return z;
}

double classical_radius(const ClassicalInstance& inst) {
  const double m = inst.marginals.common_mass();
  double prod = 1.0;
  std::size_t nmax = 0;
  for (std::size_t i = 0; i < inst.parties(); ++i) {
    prod *= inst.marginals.min_entry(i) / m;
    nmax = std::max(nmax, inst.dims()[i]);
  }
  const double c = inst.c_abs;
  return std::sqrt(static_cast<double>(nmax) * (9.0 * c * c + 1.0)) / prod;
}

double quantum_radius(const QuantumInstance& inst) {
  const double m = inst.densities.common_trace();
  double prod = 1.0;
  std::size_t nmax = 0;
  for (std::size_t i = 0; i < inst.parties(); ++i) {
    prod *= inst.densities.lambda_min(i) / m;
    nmax = std::max(nmax, inst.dims()[i]);
  }
  const double c = inst.spectral_norm;
  return std::sqrt(static_cast<double>(nmax) * (9.0 * c * c + 1.0)) / prod;
}

TrustRegion classical_region(const ClassicalInstance& inst) {
  return {flatten(classical_start_point(inst)), classical_radius(inst)};
}

TrustRegion quantum_region(const QuantumInstance& inst) {
  return {flatten(quantum_start_point(inst)), quantum_radius(inst)};
}

Eigen::MatrixXd classical_balance_matrix(const Dims& dims) {
  const auto off = block_offsets(dims, false);
  const auto rows = static_cast<Eigen::Index>(dims.size() - 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(off.back()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t i = static_cast<std::size_t>(r) + 1;
    for (std::size_t k = 0; k < dims[i]; ++k) a(r, off[i] + k) = 1.0;
    for (std::size_t k = 0; k < dims[0]; ++k) a(r, off[0] + k) = -1.0;
  }
  return a;
}

Eigen::MatrixXd quantum_balance_matrix(const Dims& dims) {
  const auto off = block_offsets(dims, true);
  const auto rows = static_cast<Eigen::Index>(dims.size() - 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(off.back()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t i = static_cast<std::size_t>(r) + 1;
    for (std::size_t k = 0; k < dims[i]; ++k) a(r, off[i] + k) = 1.0;
    for (std::size_t k = 0; k < dims[0]; ++k) a(r, off[0] + k) = -1.0;
  }
  return a;
}

double boundary_distance(const BarrierOracle& oracle, const Eigen::VectorXd& from,
                         const Eigen::VectorXd& direction, double t_max) {
  if (!oracle.in_domain(from)) throw InvalidArgument("boundary search must start inside the domain");
  double lo = 0.0, hi = t_max;
  if (oracle.in_domain(from + hi * direction)) return hi;
  while (hi - lo > 1e-13 * (1.0 + hi)) {
    const double mid = 0.5 * (lo + hi);
    if (oracle.in_domain(from + mid * direction))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double theta_estimate(const BarrierOracle& oracle, const TrustRegion& region, std::size_t samples,
                      std::uint64_t seed) {
  if (samples == 0) throw InvalidArgument("theta_estimate needs at least one sample");
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(oracle.dimension());
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) h(i) = rng.normal();
    h.normalize();
    const double tb = boundary_distance(oracle, region.center, h, region.radius);
    const Eigen::VectorXd z = region.center + rng.uniform(0.02, 0.98) * tb * h;
    const BarrierEvaluation ev = oracle.evaluate(z);
    if (!ev.domain_ok) throw NumericalFailure("theta_estimate sampled a point outside the domain");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericalFailure("theta_estimate: Hessian solve failed at a sampled point");
    const Eigen::VectorXd x = ldlt.solve(ev.gradient);
    best = std::max(best, ev.gradient.dot(x));
  }
  return best;
}

}  // namespace otb
