#pragma once

// Augmented dual barriers
//
//   β̂(z) = −Σ log slack(z) − log(r² − ‖z − z₀‖²) + log r²      (classical)
//   β̂(z) = −log det slack(z) − log(r² − ‖z − z₀‖²) + log r²    (quantum)
//
// in flat coordinates: the concatenated xᵢ, or the concatenated isometric
// Hermitian coordinates of the Xᵢ. The ball term is optional so the same
// oracle also serves as the plain barrier.

#include "otbarrier/classical.hpp"
#include "otbarrier/flops.hpp"
#include "otbarrier/quantum.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace otb {

struct BarrierEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  bool domain_ok = false;
};

struct TrustRegion {
  Eigen::VectorXd center;
  double radius = 0.0;
};

class BarrierOracle {
 public:
  virtual ~BarrierOracle() = default;
  virtual std::size_t dimension() const = 0;
  virtual bool in_domain(const Eigen::VectorXd& z) const = 0;
  /// +∞ outside the domain.
  virtual double value(const Eigen::VectorXd& z) const = 0;
  virtual BarrierEvaluation evaluate(const Eigen::VectorXd& z, FlopCounter* flops = nullptr) const = 0;
  /// Upper bound on sup ∇βᵀ(∇²β)⁻¹∇β.
  virtual double theta_bound() const = 0;
};

/// −log(r² − ‖z − z₀‖²) + log r² and its derivatives, added in place.
void add_ball_term(const TrustRegion& region, const Eigen::VectorXd& z, BarrierEvaluation& eval);

class ClassicalBarrier final : public BarrierOracle {
 public:
  explicit ClassicalBarrier(const ClassicalInstance& inst, std::optional<TrustRegion> region = {});

  std::size_t dimension() const override { return dim_; }
  bool in_domain(const Eigen::VectorXd& z) const override;
  double value(const Eigen::VectorXd& z) const override;
  BarrierEvaluation evaluate(const Eigen::VectorXd& z, FlopCounter* flops = nullptr) const override;
  double theta_bound() const override;
  const std::optional<TrustRegion>& region() const { return region_; }

 private:
  const ClassicalInstance* inst_;
  std::optional<TrustRegion> region_;
  std::size_t dim_;
};

class QuantumBarrier final : public BarrierOracle {
 public:
  explicit QuantumBarrier(const QuantumInstance& inst, std::optional<TrustRegion> region = {});

  std::size_t dimension() const override { return dim_; }
  bool in_domain(const Eigen::VectorXd& z) const override;
  double value(const Eigen::VectorXd& z) const override;
  BarrierEvaluation evaluate(const Eigen::VectorXd& z, FlopCounter* flops = nullptr) const override;
  double theta_bound() const override;
  const std::optional<TrustRegion>& region() const { return region_; }

 private:
  const QuantumInstance* inst_;
  std::optional<TrustRegion> region_;
  std::size_t dim_;
};

/// xᵢ = (T/nᵢ)·1 with T = (c_min − 1)/Σⱼ(1/nⱼ): balanced, every slack ≥ 1.
DualPoint classical_start_point(const ClassicalInstance& inst);
/// Xᵢ = (T/nᵢ)·I with T = (λ_min(C) − 1)/Σⱼ(1/nⱼ): balanced, slack ⪰ I.
HermitianDualPoint quantum_start_point(const QuantumInstance& inst);

/// r² = max nᵢ·(9c² + 1)/(Πᵢ min p̂ᵢ)² with p̂ = p/mass and c = max|c_J|.
double classical_radius(const ClassicalInstance& inst);
/// r² = max nᵢ·(9‖C‖₂² + 1)/(Πᵢ λ_min(ρ̂ᵢ))² with ρ̂ = ρ/trace.
double quantum_radius(const QuantumInstance& inst);

TrustRegion classical_region(const ClassicalInstance& inst);
TrustRegion quantum_region(const QuantumInstance& inst);

/// Rows (block i) − (block 1) of the sum (classical) or trace (quantum)
/// functionals; the balanced subspace is their kernel.
Eigen::MatrixXd classical_balance_matrix(const Dims& dims);
Eigen::MatrixXd quantum_balance_matrix(const Dims& dims);

/// Distance from `from` along the unit vector `direction` to the boundary of
/// the oracle's domain, searched on [0, t_max] by bisection.
double boundary_distance(const BarrierOracle& oracle, const Eigen::VectorXd& from,
                         const Eigen::VectorXd& direction, double t_max);

/// Largest ∇βᵀ(∇²β)⁻¹∇β over points sampled along random rays from the
/// region center, each at a uniform fraction of the distance to the boundary.
double theta_estimate(const BarrierOracle& oracle, const TrustRegion& region, std::size_t samples,
                      std::uint64_t seed);

}  // namespace otb
