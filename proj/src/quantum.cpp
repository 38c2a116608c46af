#include "otbarrier/quantum.hpp"

#include "otbarrier/errors.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace otb {

DensityFamily::DensityFamily(std::vector<HermitianMatrix> rho) : rho_(std::move(rho)) {
  if (rho_.empty()) throw InvalidArgument("density family must be non-empty");
  for (std::size_t i = 0; i < rho_.size(); ++i) {
    if (rho_[i].dim() == 0) throw InvalidArgument("density matrices must be non-empty");
    if (!rho_[i].matrix().allFinite()) throw InvalidArgument("density entries must be finite");
    const auto bundle = spectral_bundle(rho_[i]);
    if (!chol_logdet(rho_[i]).is_pd || !(bundle.lambda_min > 0.0))
      throw PositivityError("density " + std::to_string(i + 1) +
                            " is not positive definite (smallest eigenvalue " +
                            std::to_string(bundle.lambda_min) + ")");
    lambda_min_.push_back(bundle.lambda_min);
  }
  trace_ = rho_[0].trace();
  for (std::size_t i = 1; i < rho_.size(); ++i)
    if (std::abs(rho_[i].trace() - trace_) > 1e-12 * trace_ + 1e-15)
      throw InvalidArgument("densities must have equal traces");
}

Dims DensityFamily::dims() const {
  Dims d;
  for (const auto& r : rho_) d.push_back(r.dim());
  return d;
}

QuantumInstance::QuantumInstance(ProductOperator c, DensityFamily r)
    : cost(std::move(c)), densities(std::move(r)) {
  if (cost.mode_dims != densities.dims())
    throw DimensionMismatch("cost operator mode dimensions do not match the densities");
  if (!cost.matrix.matrix().allFinite()) throw InvalidArgument("cost entries must be finite");
  const auto bundle = spectral_bundle(cost.matrix);
  lambda_min = bundle.lambda_min;
  lambda_max = bundle.lambda_max;
  spectral_norm = bundle.spectral_norm;
}

Eigen::VectorXd flatten(const HermitianDualPoint& z) {
  std::size_t total = 0;
  for (const auto& x : z) total += x.dim() * x.dim();
  Eigen::VectorXd v(total);
  Eigen::Index k = 0;
  for (const auto& x : z) {
    const auto c = to_coordinates(x);
    v.segment(k, c.coords.size()) = c.coords;
    k += c.coords.size();
  }
  return v;
}

HermitianDualPoint unflatten_hermitian(const Dims& dims, const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::size_t total = 0;
  for (auto n : dims) total += n * n;
  if (static_cast<std::size_t>(v.size()) != total)
    throw DimensionMismatch("Hermitian dual coordinate vector has the wrong length");
  HermitianDualPoint z;
  Eigen::Index k = 0;
  for (auto n : dims) {
    const auto len = static_cast<Eigen::Index>(n * n);
    z.push_back(from_coordinates(n, v.segment(k, len)));
    k += len;
  }
  return z;
}

HermitianDualPoint zero_hermitian_dual(const Dims& dims) {
  HermitianDualPoint z;
  for (auto n : dims) z.emplace_back(n);
  return z;
}

namespace {

void check_dual(const QuantumInstance& inst, const HermitianDualPoint& z) {
  if (z.size() != inst.parties()) throw DimensionMismatch("dual point has the wrong number of modes");
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i].dim() != inst.dims()[i]) throw DimensionMismatch("dual matrix dimension mismatch");
}

}  // namespace

ProductOperator slack_operator(const QuantumInstance& inst, const HermitianDualPoint& z) {
  check_dual(inst, z);
  const auto& dims = inst.dims();
  Eigen::MatrixXcd s = inst.cost.matrix.matrix();
  const std::size_t total = inst.cost.dim();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t n = dims[i];
    std::size_t stride = 1;
    for (std::size_t m = i + 1; m < dims.size(); ++m) stride *= dims[m];
    const std::size_t outer = total / (n * stride);
    const auto& x = z[i].matrix();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t t = 0; t < stride; ++t) {
        const std::size_t base = o * n * stride + t;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) s(base + a * stride, base + b * stride) -= x(a, b);
      }
  }
  return ProductOperator(dims, HermitianMatrix(s));
}

double dual_objective(const QuantumInstance& inst, const HermitianDualPoint& z) {
  check_dual(inst, z);
  double v = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) v += trace_product(inst.densities[i], z[i]);
  return v;
}

GammaResidual gamma_residual(const ProductOperator& rho, const DensityFamily& r) {
  if (rho.mode_dims != r.dims()) throw DimensionMismatch("coupling dimensions do not match the densities");
  GammaResidual out;
  for (std::size_t i = 0; i < r.parties(); ++i) {
    const double res = (partial_trace_except(rho, i) - r[i]).frobenius_norm();
    out.per_mode.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
  }
  out.lambda_min = spectral_bundle(rho.matrix).lambda_min;
  out.trace_error = std::abs(rho.matrix.trace() - r.common_trace());
  return out;
}

ProductOperator recover_primal(const QuantumInstance& inst, const HermitianDualPoint& z,
                               double epsilon) {
  const ProductOperator s = slack_operator(inst, z);
  bool pd = false;
  const auto l = cholesky_lower(s.matrix.matrix(), &pd);
  if (!pd) throw DomainExit("primal recovery requested at a dual point with a singular slack");
  return ProductOperator(inst.dims(), HermitianMatrix(epsilon * inverse_from_cholesky(l)));
}

double primal_objective(const QuantumInstance& inst, const ProductOperator& rho) {
  return trace_product(inst.cost.matrix, rho.matrix);
}

double quantum_barrier_primal_value(const QuantumInstance& inst, const ProductOperator& rho,
                                    double epsilon) {
  const LogDet ld = chol_logdet(rho);
  if (!ld.is_pd) return std::numeric_limits<double>::infinity();
  return primal_objective(inst, rho) - epsilon * ld.logdet;
}

double quantum_barrier_dual_function(const QuantumInstance& inst, const HermitianDualPoint& z,
                                     double epsilon) {
  const LogDet ld = chol_logdet(slack_operator(inst, z));
  if (!ld.is_pd) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(inst.cost.dim());
  return dual_objective(inst, z) + epsilon * ld.logdet + n * epsilon * (1.0 - std::log(epsilon));
}

std::optional<ClassicalInstance> diagonal_reduction(const QuantumInstance& inst) {
  constexpr double kOffDiagonal = 1e-14;
  if (inst.cost.matrix.max_off_diagonal() > kOffDiagonal) return std::nullopt;
  for (const auto& r : inst.densities.matrices())
    if (r.max_off_diagonal() > kOffDiagonal) return std::nullopt;
  std::vector<std::vector<double>> p;
  for (const auto& r : inst.densities.matrices()) p.push_back(r.diagonal_values());
  return ClassicalInstance(DenseTensor(inst.dims(), inst.cost.matrix.diagonal_values()),
                           MarginalFamily(std::move(p)));
}

namespace {

BoundChainReport quantum_chain(const QuantumInstance& inst, double epsilon, double kappa,
                               double kappa_beta) {
  if (!(epsilon > 0.0)) throw InvalidArgument("bound chain: epsilon must be positive");
  const double m = inst.densities.common_trace();
  const double n = static_cast<double>(inst.cost.dim());
  double min_product = 1.0;
  for (std::size_t i = 0; i < inst.parties(); ++i) min_product *= inst.densities.lambda_min(i) / m;
  const double shift = n * epsilon * std::log(m);
  const double excess =
      m * barrier_excess_bound(n, epsilon / m, inst.spectral_norm, min_product, inst.parties());
  BoundChainReport r;
  r.tau = kappa;
  r.tau_beta = kappa_beta;
  r.lower = kappa - shift;
  r.upper = kappa + excess - shift;
  r.lower_margin = kappa_beta - r.lower;
  r.upper_margin = r.upper - kappa_beta;
  r.holds = r.lower_margin > 0.0 && r.upper_margin > 0.0;
  return r;
}

}  // namespace

BoundChainReport bound_chain_quantum(const QuantumInstance& inst, double epsilon, double kappa,
                                     double kappa_beta) {
  if (inst.parties() != 2) throw InvalidArgument("bound chain is stated for bipartite instances");
  return quantum_chain(inst, epsilon, kappa, kappa_beta);
}

BoundChainReport bound_chain_quantum_multipartite(const QuantumInstance& inst, double epsilon,
                                                  double kappa, double kappa_beta) {
  return quantum_chain(inst, epsilon, kappa, kappa_beta);
}

}  // namespace otb
