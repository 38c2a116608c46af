#include "otbarrier/transport_ipm.hpp"

#include "otbarrier/errors.hpp"

#include <cmath>

namespace otb {

Certificate certify_classical(const ClassicalInstance& inst, const DualPoint& z, double epsilon) {
  const DenseTensor u = barrier_coupling(inst, z, epsilon);
  Certificate c;
  c.dual_value = dual_objective(inst, z);
  c.primal_value = inner(inst.cost, u);
  c.gap = c.primal_value - c.dual_value;
  for (std::size_t i = 0; i < inst.parties(); ++i) {
    const auto m = marginal(u, i);
    double r = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) r = std::max(r, std::abs(m[k] - inst.marginals[i][k]));
    c.primal_residuals.push_back(r);
    c.max_residual = std::max(c.max_residual, r);
  }
  return c;
}

Certificate certify_quantum(const QuantumInstance& inst, const HermitianDualPoint& z, double epsilon) {
  const ProductOperator rho = recover_primal(inst, z, epsilon);
  const GammaResidual res = gamma_residual(rho, inst.densities);
  Certificate c;
  c.dual_value = dual_objective(inst, z);
  c.primal_value = primal_objective(inst, rho);
  c.gap = c.primal_value - c.dual_value;
  c.primal_residuals = res.per_mode;
  c.max_residual = res.max_residual;
  return c;
}

namespace {

// Newton on the plain barrier at the final η removes the ball term's pull.
void polish_plain(const BarrierOracle& plain, const PathProblem& problem, SolveReport& rep) {
  FlopCounter flops{rep.state.flop_estimate};
  PathState st = rep.state;
  const std::size_t steps = polish(plain, problem.objective, problem.constraints, st, 1e-10, 30, &flops);
  st.flop_estimate = flops.total;
  rep.state = st;
  rep.certificate = problem.certify(st.z, 1.0 / st.eta);
  TraceRow row;
  row.phase = "plain";
  row.iteration = st.iteration;
  row.eta = st.eta;
  row.newton_steps = steps;
  row.decrement = st.newton_decrement;
  row.dual_value = rep.certificate.dual_value;
  row.gap = rep.certificate.gap;
  row.flops = flops.total;
  rep.trace.push_back(row);
}

bool is_certified(const Certificate& c, const IpmConfig& config, double feas_scale) {
  return c.gap <= config.delta && c.gap >= -1e-9 * (1.0 + std::abs(c.primal_value)) &&
         c.max_residual <= config.feas_tol * feas_scale;
}

}  // namespace

ClassicalIpmResult solve_classical_ipm(const ClassicalInstance& inst, const IpmConfig& config) {
  ClassicalIpmResult out;
  out.region = classical_region(inst);
  const ClassicalBarrier oracle(inst, out.region);
  const ClassicalBarrier plain(inst);
  PathProblem problem;
  problem.oracle = &oracle;
  problem.objective = flatten(DualPoint(inst.marginals.vectors()));
  problem.constraints = classical_balance_matrix(inst.dims());
  problem.certify = [&](const Eigen::VectorXd& z, double eps) {
    return certify_classical(inst, unflatten(inst.dims(), z), eps);
  };
  problem.feas_scale = 1.0 + inst.marginals.common_mass();
  out.report = follow_path(problem, out.region.center, config);
  polish_plain(plain, problem, out.report);
  out.z = unflatten(inst.dims(), out.report.state.z);
  out.coupling = barrier_coupling(inst, out.z, 1.0 / out.report.state.eta);
  const auto& c = out.report.certificate;
  out.value = c.dual_value;
  out.primal_value = c.primal_value;
  out.gap = c.gap;
  out.certified = is_certified(c, config, problem.feas_scale);
  out.report.certified = out.certified;
  return out;
}

ClassicalBarrierPoint classical_barrier_relaxation(const ClassicalInstance& inst, double epsilon,
                                                   const IpmConfig& config) {
  if (!(epsilon > 0.0)) throw InvalidArgument("barrier relaxation: epsilon must be positive");
  const TrustRegion region = classical_region(inst);
  const ClassicalBarrier oracle(inst, region);
  const ClassicalBarrier plain(inst);
  PathProblem problem;
  problem.oracle = &oracle;
  problem.objective = flatten(DualPoint(inst.marginals.vectors()));
  problem.constraints = classical_balance_matrix(inst.dims());
  problem.certify = [&](const Eigen::VectorXd& z, double eps) {
    return certify_classical(inst, unflatten(inst.dims(), z), eps);
  };
  problem.feas_scale = 1.0 + inst.marginals.common_mass();
  ClassicalBarrierPoint out;
  out.report = follow_path_to(problem, region.center, 1.0 / epsilon, config);
  polish_plain(plain, problem, out.report);
  out.z = unflatten(inst.dims(), out.report.state.z);
  out.coupling = barrier_coupling(inst, out.z, epsilon);
  out.value = barrier_primal_value(inst, out.coupling, epsilon);
  out.phi = barrier_dual_function(inst, out.z, epsilon);
  out.max_residual = out.report.certificate.max_residual;
  return out;
}

QuantumIpmResult solve_quantum_ipm(const QuantumInstance& inst, const IpmConfig& config) {
  QuantumIpmResult out;
  out.region = quantum_region(inst);
  const QuantumBarrier oracle(inst, out.region);
  const QuantumBarrier plain(inst);
  PathProblem problem;
  problem.oracle = &oracle;
  problem.objective = flatten(HermitianDualPoint(inst.densities.matrices()));
  problem.constraints = quantum_balance_matrix(inst.dims());
  problem.certify = [&](const Eigen::VectorXd& z, double eps) {
    return certify_quantum(inst, unflatten_hermitian(inst.dims(), z), eps);
  };
  problem.feas_scale = 1.0 + inst.densities.common_trace();
  out.report = follow_path(problem, out.region.center, config);
  polish_plain(plain, problem, out.report);
  out.z = unflatten_hermitian(inst.dims(), out.report.state.z);
  out.coupling = recover_primal(inst, out.z, 1.0 / out.report.state.eta);
  out.residual = gamma_residual(out.coupling, inst.densities);
  const auto& c = out.report.certificate;
  out.value = c.dual_value;
  out.primal_value = c.primal_value;
  out.gap = c.gap;
  out.certified = is_certified(c, config, problem.feas_scale);
  out.report.certified = out.certified;
  return out;
}

QuantumBarrierPoint quantum_barrier_relaxation(const QuantumInstance& inst, double epsilon,
                                               const IpmConfig& config) {
  if (!(epsilon > 0.0)) throw InvalidArgument("barrier relaxation: epsilon must be positive");
  const TrustRegion region = quantum_region(inst);
  const QuantumBarrier oracle(inst, region);
  const QuantumBarrier plain(inst);
  PathProblem problem;
  problem.oracle = &oracle;
  problem.objective = flatten(HermitianDualPoint(inst.densities.matrices()));
  problem.constraints = quantum_balance_matrix(inst.dims());
  problem.certify = [&](const Eigen::VectorXd& z, double eps) {
    return certify_quantum(inst, unflatten_hermitian(inst.dims(), z), eps);
  };
  problem.feas_scale = 1.0 + inst.densities.common_trace();
  QuantumBarrierPoint out;
  out.report = follow_path_to(problem, region.center, 1.0 / epsilon, config);
  polish_plain(plain, problem, out.report);
  out.z = unflatten_hermitian(inst.dims(), out.report.state.z);
  out.coupling = recover_primal(inst, out.z, epsilon);
  out.value = quantum_barrier_primal_value(inst, out.coupling, epsilon);
  out.phi = quantum_barrier_dual_function(inst, out.z, epsilon);
  out.max_residual = out.report.certificate.max_residual;
  return out;
}

}  // namespace otb
