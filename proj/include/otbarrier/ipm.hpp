#pragma once

// Equality-constrained path following: maximize bᵀz over {A z = 0} ∩ dom β
// by minimizing −η·bᵀz + β(z) for increasing η. Points of this path are
// barrier-relaxation optima with ε = 1/η.

#include "otbarrier/barrier.hpp"
#include "otbarrier/flops.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace otb {

enum class StepMode { short_step, long_step };

struct Certificate {
  double dual_value = 0.0;
  double primal_value = 0.0;
  double gap = 0.0;
  std::vector<double> primal_residuals;
  double max_residual = 0.0;
};

struct IpmConfig {
  double delta = 1e-6;
  double feas_tol = 1e-8;  // multiplied by 1 + common mass
  StepMode mode = StepMode::long_step;
  /// Short-step growth is 1 + short_step_kappa/√θ.
  double short_step_kappa = 1.0 / 8.0;
  double long_step_growth = 10.0;
  double center_decrement = 1.0 / 8.0;
  std::size_t max_newton = 200;  // per centering
  std::size_t max_outer = 100000;
};

double growth_factor(const IpmConfig& config, double theta_bound);

struct TraceRow {
  std::string phase;
  std::size_t iteration = 0;
  double eta = 0.0;
  std::size_t newton_steps = 0;
  double decrement = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double flops = 0.0;
};

struct PathState {
  Eigen::VectorXd z;
  double eta = 0.0;
  double newton_decrement = 0.0;
  std::size_t iteration = 0;
  double flop_estimate = 0.0;
};

/// Problem data; `certify(z, ε)` recovers a primal from z and evaluates the
/// duality-gap certificate.
struct PathProblem {
  const BarrierOracle* oracle = nullptr;
  Eigen::VectorXd objective;  // b, maximized
  Eigen::MatrixXd constraints;
  std::function<Certificate(const Eigen::VectorXd&, double)> certify;
  /// Residuals are certified against feas_tol·feas_scale (1 + common mass).
  double feas_scale = 1.0;
};

struct NewtonResult {
  Eigen::VectorXd z;
  double decrement = 0.0;
  double step = 0.0;
};

/// One damped Newton step on −η·bᵀz + β(z) restricted to {A Δ = 0}.
NewtonResult newton_step(const BarrierOracle& oracle, const Eigen::VectorXd& objective,
                         const Eigen::MatrixXd& constraints, const Eigen::VectorXd& z, double eta,
                         FlopCounter* flops = nullptr);

/// Newton steps until the decrement is at most `target`; returns the step count.
std::size_t recenter(const BarrierOracle& oracle, const Eigen::VectorXd& objective,
                     const Eigen::MatrixXd& constraints, PathState& state, double target,
                     std::size_t max_steps, FlopCounter* flops = nullptr);

/// Newton steps toward `target` that stop early once the decrement stalls at
/// the rounding floor; never throws for lack of progress.
std::size_t polish(const BarrierOracle& oracle, const Eigen::VectorXd& objective,
                   const Eigen::MatrixXd& constraints, PathState& state, double target,
                   std::size_t max_steps, FlopCounter* flops = nullptr);

struct SolveReport {
  PathState state;
  Certificate certificate;
  bool certified = false;
  std::vector<TraceRow> trace;
  std::size_t phase1_newton = 0;
  std::size_t phase2_newton = 0;
  std::size_t outer_iterations = 0;
  double eta0 = 0.0;
};

/// Phase I to the analytic center, then path following until θ/η ≤ δ/2 and
/// the certificate gap is at most δ.
SolveReport follow_path(const PathProblem& problem, const Eigen::VectorXd& start,
                        const IpmConfig& config);

/// Phase I, then path following until η reaches eta_target exactly.
SolveReport follow_path_to(const PathProblem& problem, const Eigen::VectorXd& start,
                           double eta_target, const IpmConfig& config);

}  // namespace otb
