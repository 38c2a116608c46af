#pragma once

// Classical multi-partite transport: couplings with prescribed marginals,
// an exact simplex reference, entropic Sinkhorn, and the barrier-relaxation
// Sinkhorn that rescales reciprocal slack slices.

#include "otbarrier/tensor.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace otb {

/// d strictly positive vectors with a common total mass.
class MarginalFamily {
 public:
  MarginalFamily() = default;
  explicit MarginalFamily(std::vector<std::vector<double>> p);

  std::size_t parties() const { return p_.size(); }
  const std::vector<double>& operator[](std::size_t i) const { return p_[i]; }
  const std::vector<std::vector<double>>& vectors() const { return p_; }
  Dims dims() const;
  double common_mass() const { return mass_; }
  double min_entry(std::size_t i) const;

 private:
  std::vector<std::vector<double>> p_;
  double mass_ = 0.0;
};

struct ClassicalInstance {
  DenseTensor cost;
  MarginalFamily marginals;
  double c_min = 0.0;
  double c_max = 0.0;
  double c_abs = 0.0;  // max |c_J|

  ClassicalInstance() = default;
  ClassicalInstance(DenseTensor c, MarginalFamily p);
  const Dims& dims() const { return cost.dims(); }
  std::size_t parties() const { return cost.order(); }
};

/// Dual variables (x₁,…,x_d), one vector per mode.
using DualPoint = std::vector<std::vector<double>>;

Eigen::VectorXd flatten(const DualPoint& z);
DualPoint unflatten(const Dims& dims, const Eigen::Ref<const Eigen::VectorXd>& v);
DualPoint zero_dual(const Dims& dims);

/// C_J − Σᵢ x_{i,jᵢ}.
DenseTensor slack_tensor(const ClassicalInstance& inst, const DualPoint& z);

/// Σᵢ pᵢᵀxᵢ.
double dual_objective(const ClassicalInstance& inst, const DualPoint& z);

/// Largest ‖marginal(V,i) − pᵢ‖∞ over modes.
double marginal_residual(const ClassicalInstance& inst, const DenseTensor& coupling);

/// Shifts xᵢ by tᵢ·1 with Σtᵢ = 0 so that all 1ᵀxᵢ agree; slack unchanged.
DualPoint rebalance(const DualPoint& z);

// ---------------------------------------------------------------------------

struct LpResult {
  double value = 0.0;
  DenseTensor coupling;
  std::size_t pivots = 0;
};

/// Exact optimum of min ⟨C,V⟩ over couplings, by a dense two-phase simplex.
LpResult lp_reference(const ClassicalInstance& inst);

// ---------------------------------------------------------------------------

struct EntropicResult {
  double value = 0.0;       // ⟨C,U⟩ − ε·entropy(U)
  double dual_value = 0.0;  // Σ pᵢᵀfᵢ + ε(m − ΣU)
  double entropy = 0.0;
  DenseTensor coupling;
  std::vector<std::vector<double>> potentials;  // U_J = exp((Σ f_{i,jᵢ} − C_J)/ε)
  std::size_t iterations = 0;
  double max_residual = 0.0;
};

EntropicResult entropic_sinkhorn(const ClassicalInstance& inst, double epsilon, double tol,
                                 std::size_t max_iter);

// ---------------------------------------------------------------------------

/// φ(z) = Σ pᵢᵀxᵢ + ε Σ log slack + Nε(1 − log ε); −∞ outside the domain.
double barrier_dual_function(const ClassicalInstance& inst, const DualPoint& z, double epsilon);

/// ⟨C,U⟩ − ε Σ log u.
double barrier_primal_value(const ClassicalInstance& inst, const DenseTensor& coupling,
                            double epsilon);

/// ε / slack, entrywise.
DenseTensor barrier_coupling(const ClassicalInstance& inst, const DualPoint& z, double epsilon);

/// Shifts x_mode so every slice of 1/slack sums to targets[k].
DualPoint rescale_mode(const ClassicalInstance& inst, const DualPoint& z, std::size_t mode,
                       const std::vector<double>& targets, double tol);

struct SinkhornTraceRow {
  std::size_t sweep;
  double phi;
  double max_residual;
};

struct BarrierSinkhornResult {
  double value = 0.0;  // τ_β = ⟨C,U⟩ − ε Σ log u
  double phi = 0.0;
  DualPoint z;
  DenseTensor coupling;
  std::vector<SinkhornTraceRow> trace;
  std::size_t sweeps = 0;
  double max_residual = 0.0;
  bool converged = false;
};

/// Cyclic rescaling with targets pᵢ/ε from the interior start point. Stops
/// once every marginal of U = ε/slack is within tol of pᵢ.
BarrierSinkhornResult barrier_sinkhorn(const ClassicalInstance& inst, double epsilon, double tol,
                                       std::size_t max_sweeps);
BarrierSinkhornResult barrier_sinkhorn(const ClassicalInstance& inst, double epsilon, double tol,
                                       std::size_t max_sweeps, const DualPoint& start);

// ---------------------------------------------------------------------------

struct BoundChainReport {
  double tau = 0.0;
  double tau_beta = 0.0;
  double lower = 0.0;  // τ_β must exceed this
  double upper = 0.0;  // τ_β must stay below this
  double lower_margin = 0.0;
  double upper_margin = 0.0;
  bool holds = false;
};

/// Upper-bound excess of the barrier relaxation over the optimum for unit
/// mass: N terms, ε, a cost scale, the product of the smallest marginal
/// entries (or eigenvalues) and the number of parties.
double barrier_excess_bound(double terms, double epsilon, double cost_scale, double min_product,
                            std::size_t parties);

/// Bipartite chain τ < τ_β < τ + excess; general mass m is handled by scaling.
BoundChainReport bound_chain_classical(const ClassicalInstance& inst, double epsilon, double tau,
                                       double tau_beta);

}  // namespace otb
