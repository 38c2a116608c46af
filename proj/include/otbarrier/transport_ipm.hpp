#pragma once

// Interior-point drivers for the classical and quantum transport duals.

#include "otbarrier/barrier.hpp"
#include "otbarrier/classical.hpp"
#include "otbarrier/ipm.hpp"
#include "otbarrier/quantum.hpp"

namespace otb {

/// Weak-duality certificate for U = ε/slack at a balanced interior z.
Certificate certify_classical(const ClassicalInstance& inst, const DualPoint& z, double epsilon);
/// Weak-duality certificate for ρ = ε·slack⁻¹ at a balanced interior z.
Certificate certify_quantum(const QuantumInstance& inst, const HermitianDualPoint& z, double epsilon);

struct ClassicalIpmResult {
  double value = 0.0;  // dual value Σ pᵢᵀxᵢ
  double primal_value = 0.0;
  double gap = 0.0;
  bool certified = false;
  DualPoint z;
  DenseTensor coupling;
  TrustRegion region;
  SolveReport report;
};

/// τ(C,P) to precision δ.
ClassicalIpmResult solve_classical_ipm(const ClassicalInstance& inst, const IpmConfig& config);

struct ClassicalBarrierPoint {
  double value = 0.0;  // τ_β = ⟨C,U⟩ − ε Σ log u
  double phi = 0.0;    // dual function at z
  double max_residual = 0.0;
  DualPoint z;
  DenseTensor coupling;
  SolveReport report;
};

/// τ_β(C,P,ε) at the path point η = 1/ε.
ClassicalBarrierPoint classical_barrier_relaxation(const ClassicalInstance& inst, double epsilon,
                                                   const IpmConfig& config);

struct QuantumIpmResult {
  double value = 0.0;  // Σ tr ρᵢXᵢ
  double primal_value = 0.0;
  double gap = 0.0;
  bool certified = false;
  HermitianDualPoint z;
  ProductOperator coupling;
  GammaResidual residual;
  TrustRegion region;
  SolveReport report;
};

/// κ(C,R) to precision δ.
QuantumIpmResult solve_quantum_ipm(const QuantumInstance& inst, const IpmConfig& config);

struct QuantumBarrierPoint {
  double value = 0.0;  // κ_β = tr Cρ − ε log det ρ
  double phi = 0.0;
  double max_residual = 0.0;
  HermitianDualPoint z;
  ProductOperator coupling;
  SolveReport report;
};

/// κ_β(C,R,ε) at the path point η = 1/ε.
QuantumBarrierPoint quantum_barrier_relaxation(const QuantumInstance& inst, double epsilon,
                                               const IpmConfig& config);

}  // namespace otb
