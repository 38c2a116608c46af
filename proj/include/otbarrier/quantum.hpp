#pragma once

#include "otbarrier/classical.hpp"
#include "otbarrier/tensor.hpp"

#include <optional>
#include <vector>

namespace otb {

/// Positive definite densities ρ₁,…,ρ_d with a common trace.
class DensityFamily {
 public:
  DensityFamily() = default;
  explicit DensityFamily(std::vector<HermitianMatrix> rho);

  std::size_t parties() const { return rho_.size(); }
  const HermitianMatrix& operator[](std::size_t i) const { return rho_[i]; }
  const std::vector<HermitianMatrix>& matrices() const { return rho_; }
  Dims dims() const;
  double common_trace() const { return trace_; }
  double lambda_min(std::size_t i) const { return lambda_min_[i]; }

 private:
  std::vector<HermitianMatrix> rho_;
  std::vector<double> lambda_min_;
  double trace_ = 0.0;
};

struct QuantumInstance {
  ProductOperator cost;
  DensityFamily densities;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double spectral_norm = 0.0;

  QuantumInstance() = default;
  QuantumInstance(ProductOperator c, DensityFamily r);
  const Dims& dims() const { return cost.mode_dims; }
  std::size_t parties() const { return cost.mode_dims.size(); }
};

/// Dual variables (X₁,…,X_d).
using HermitianDualPoint = std::vector<HermitianMatrix>;

/// Concatenated isometric coordinates of every Xᵢ.
Eigen::VectorXd flatten(const HermitianDualPoint& z);
HermitianDualPoint unflatten_hermitian(const Dims& dims, const Eigen::Ref<const Eigen::VectorXd>& v);
HermitianDualPoint zero_hermitian_dual(const Dims& dims);

/// C − Σᵢ lift(Xᵢ).
ProductOperator slack_operator(const QuantumInstance& inst, const HermitianDualPoint& z);

/// Σᵢ tr ρᵢXᵢ.
double dual_objective(const QuantumInstance& inst, const HermitianDualPoint& z);

struct GammaResidual {
  std::vector<double> per_mode;  // ‖tr_î ρ − ρᵢ‖_F
  double max_residual = 0.0;
  double lambda_min = 0.0;
  double trace_error = 0.0;
};

GammaResidual gamma_residual(const ProductOperator& rho, const DensityFamily& r);

/// ε·slack⁻¹; throws DomainExit when the slack is not positive definite.
ProductOperator recover_primal(const QuantumInstance& inst, const HermitianDualPoint& z,
                               double epsilon);

/// tr Cρ.
double primal_objective(const QuantumInstance& inst, const ProductOperator& rho);

/// tr Cρ − ε log det ρ.
double quantum_barrier_primal_value(const QuantumInstance& inst, const ProductOperator& rho,
                                    double epsilon);

/// Σ tr ρᵢXᵢ + ε log det slack + Nε(1 − log ε); −∞ outside the domain.
double quantum_barrier_dual_function(const QuantumInstance& inst, const HermitianDualPoint& z,
                                     double epsilon);

/// Classical instance read off the diagonals when C and every ρᵢ are diagonal.
std::optional<ClassicalInstance> diagonal_reduction(const QuantumInstance& inst);

/// Bipartite chain κ < κ_β < κ + excess, using ‖C‖₂ and λ_min(ρᵢ).
BoundChainReport bound_chain_quantum(const QuantumInstance& inst, double epsilon, double kappa,
                                     double kappa_beta);

/// Multipartite analogue of the chain with the n^d reading of its excess
/// term; for reporting only.
BoundChainReport bound_chain_quantum_multipartite(const QuantumInstance& inst, double epsilon,
                                                  double kappa, double kappa_beta);

}  // namespace otb
