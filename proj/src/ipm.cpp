#include "otbarrier/ipm.hpp"

#include "otbarrier/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otb {

namespace {

// Solves [H Aᵀ; A 0]·(x, ν) = (rhs, 0) after symmetric diagonal scaling.
Eigen::VectorXd solve_kkt(const Eigen::MatrixXd& h, const Eigen::MatrixXd& a,
                          const Eigen::VectorXd& rhs, FlopCounter* flops) {
  const Eigen::Index n = h.rows();
  const Eigen::Index m = a.rows();
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) scale(i) = 1.0 / std::sqrt(std::max(h(i, i), 1e-300));

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = scale.asDiagonal() * h * scale.asDiagonal();
  if (m > 0) {
    const Eigen::MatrixXd as = a * scale.asDiagonal();
    k.bottomLeftCorner(m, n) = as;
    k.topRightCorner(n, m) = as.transpose();
  }
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n + m);
  r.head(n) = scale.cwiseProduct(rhs);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
  const Eigen::VectorXd y = lu.solve(r);
  const double nm = static_cast<double>(n + m);
  count(flops, 2.0 * nm * nm * nm / 3.0 + 2.0 * nm * nm);
  if (!y.allFinite()) throw NumericalFailure("KKT system is singular");
  return scale.cwiseProduct(y.head(n));
}

}  // namespace

double growth_factor(const IpmConfig& config, double theta_bound) {
  const double g = config.mode == StepMode::short_step
                       ? 1.0 + config.short_step_kappa / std::sqrt(theta_bound)
                       : config.long_step_growth;
  if (!(g > 1.0)) throw InvalidArgument("path growth factor must exceed 1");
  return g;
}

NewtonResult newton_step(const BarrierOracle& oracle, const Eigen::VectorXd& objective,
                         const Eigen::MatrixXd& constraints, const Eigen::VectorXd& z, double eta,
                         FlopCounter* flops) {
  const BarrierEvaluation ev = oracle.evaluate(z, flops);
  if (!ev.domain_ok) throw DomainExit("Newton step started outside the barrier domain");
  const Eigen::VectorXd g = ev.gradient - eta * objective;
  const Eigen::VectorXd dz = solve_kkt(ev.hessian, constraints, -g, flops);

  NewtonResult out;
  out.decrement = std::sqrt(std::max(0.0, dz.dot(ev.hessian * dz)));
  out.step = out.decrement <= 0.25 ? 1.0 : 1.0 / (1.0 + out.decrement);
  out.z = z + out.step * dz;
  if (!oracle.in_domain(out.z)) throw DomainExit("damped Newton step left the barrier domain");
  return out;
}

std::size_t recenter(const BarrierOracle& oracle, const Eigen::VectorXd& objective,
                     const Eigen::MatrixXd& constraints, PathState& state, double target,
                     std::size_t max_steps, FlopCounter* flops) {
  std::size_t steps = 0;
  while (true) {
    if (steps >= max_steps) throw NotConverged("centering exceeded its Newton budget");
    const NewtonResult r = newton_step(oracle, objective, constraints, state.z, state.eta, flops);
    state.z = r.z;
    state.newton_decrement = r.decrement;
    ++steps;
    if (r.decrement <= target) return steps;
  }
}

std::size_t polish(const BarrierOracle& oracle, const Eigen::VectorXd& objective,
                   const Eigen::MatrixXd& constraints, PathState& state, double target,
                   std::size_t max_steps, FlopCounter* flops) {
  // Below kFloor the decrement is dominated by rounding in η·b; stop once it
  // no longer halves.
  constexpr double kFloor = 1e-6;
  double best = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
  while (steps < max_steps) {
    const NewtonResult r = newton_step(oracle, objective, constraints, state.z, state.eta, flops);
    ++steps;
    const bool stalled = r.decrement <= kFloor && r.decrement > 0.5 * best;
    if (stalled) return steps;
    state.z = r.z;
    state.newton_decrement = r.decrement;
    best = std::min(best, r.decrement);
    if (r.decrement <= target) return steps;
  }
  return steps;
}

namespace {

constexpr double kPolishDecrement = 1e-10;
constexpr std::size_t kPolishSteps = 30;

class PathFollower {
 public:
  PathFollower(const PathProblem& problem, const IpmConfig& config)
      : p_(problem), cfg_(config) {
    if (!p_.oracle) throw InvalidArgument("path problem has no barrier oracle");
    if (!(cfg_.delta > 0.0)) throw InvalidArgument("IPM precision must be positive");
    theta_ = p_.oracle->theta_bound();
    growth_ = growth_factor(cfg_, theta_);
  }

  SolveReport& report() { return report_; }

  void phase_one(const Eigen::VectorXd& start) {
    if (!p_.oracle->in_domain(start)) throw InvalidArgument("IPM start point is not interior");
    if (p_.constraints.rows() > 0 &&
        (p_.constraints * start).lpNorm<Eigen::Infinity>() > 1e-10 * (1.0 + start.lpNorm<Eigen::Infinity>()))
      throw InvalidArgument("IPM start point violates the balance constraints");
    auto& st = report_.state;
    st.z = start;
    st.eta = 0.0;
    report_.phase1_newton =
        recenter(*p_.oracle, p_.objective, p_.constraints, st, cfg_.center_decrement,
                 50 * cfg_.max_newton, &flops_);
    record("I", report_.phase1_newton, false);

    // η₀ = 1/(8·‖b‖*) with the dual local norm at the analytic center.
    const BarrierEvaluation ev = p_.oracle->evaluate(st.z, &flops_);
    const Eigen::VectorXd x = solve_kkt(ev.hessian, p_.constraints, p_.objective, &flops_);
    const double norm = std::sqrt(std::max(p_.objective.dot(x), 1e-300));
    report_.eta0 = 1.0 / (8.0 * norm);
  }

  void advance(double eta) {
    auto& st = report_.state;
    st.eta = eta;
    const std::size_t steps = recenter(*p_.oracle, p_.objective, p_.constraints, st,
                                       cfg_.center_decrement, cfg_.max_newton, &flops_);
    report_.phase2_newton += steps;
    ++report_.outer_iterations;
    ++st.iteration;
    record("II", steps, false);
  }

  void polish() {
    const std::size_t steps = otb::polish(*p_.oracle, p_.objective, p_.constraints, report_.state,
                                          kPolishDecrement, kPolishSteps, &flops_);
    record("polish", steps, false);
  }

  void certify() {
    auto& st = report_.state;
    report_.certificate = p_.certify(st.z, 1.0 / st.eta);
    const auto& c = report_.certificate;
    const double scale = 1.0 + std::abs(c.primal_value);
    report_.certified =
        c.gap <= cfg_.delta && c.gap >= -1e-9 * scale && c.max_residual <= cfg_.feas_tol * p_.feas_scale;
    record("certify", 0, true);
  }

  double theta() const { return theta_; }
  double growth() const { return growth_; }

 private:
  void record(const char* phase, std::size_t steps, bool with_gap) {
    const auto& st = report_.state;
    report_.state.flop_estimate = flops_.total;
    TraceRow row;
    row.phase = phase;
    row.iteration = st.iteration;
    row.eta = st.eta;
    row.newton_steps = steps;
    row.decrement = st.newton_decrement;
    row.dual_value = p_.objective.dot(st.z);
    row.gap = with_gap ? report_.certificate.gap : 0.0;
    row.flops = flops_.total;
    report_.trace.push_back(row);
  }

  const PathProblem& p_;
  IpmConfig cfg_;
  double theta_ = 0.0;
  double growth_ = 0.0;
  FlopCounter flops_;
  SolveReport report_;
};

}  // namespace

SolveReport follow_path(const PathProblem& problem, const Eigen::VectorXd& start,
                        const IpmConfig& config) {
  PathFollower pf(problem, config);
  pf.phase_one(start);
  auto& rep = pf.report();
  pf.advance(rep.eta0);
  // The last step lands exactly on θ/η = δ/2; overshooting only amplifies
  // cancellation in the slack.
  const double eta_stop = 2.0 * pf.theta() / config.delta;
  while (rep.state.eta < eta_stop) {
    if (rep.outer_iterations >= config.max_outer) break;
    pf.advance(std::min(rep.state.eta * pf.growth(), eta_stop));
  }
  pf.polish();
  pf.certify();
  while (!rep.certified && rep.outer_iterations < config.max_outer) {
    pf.advance(rep.state.eta * std::max(2.0, pf.growth()));
    pf.polish();
    pf.certify();
    if (rep.state.eta > 1e4 * pf.theta() / config.delta) break;
  }
  return rep;
}

SolveReport follow_path_to(const PathProblem& problem, const Eigen::VectorXd& start,
                           double eta_target, const IpmConfig& config) {
  if (!(eta_target > 0.0)) throw InvalidArgument("path target must be positive");
  PathFollower pf(problem, config);
  pf.phase_one(start);
  auto& rep = pf.report();
  double eta = std::min(rep.eta0, eta_target);
  pf.advance(eta);
  while (eta < eta_target) {
    eta = std::min(eta * pf.growth(), eta_target);
    pf.advance(eta);
  }
  pf.polish();
  pf.certify();
  return rep;
}

}  // namespace otb
