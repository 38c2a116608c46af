#include "otbarrier/classical.hpp"

#include "otbarrier/barrier.hpp"
#include "otbarrier/errors.hpp"
#include "otbarrier/scalar_root.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace otb {

MarginalFamily::MarginalFamily(std::vector<std::vector<double>> p) : p_(std::move(p)) {
  if (p_.size() < 1) throw InvalidArgument("marginal family needs at least one vector");
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (p_[i].empty()) throw InvalidArgument("marginal vectors must be non-empty");
    for (double v : p_[i]) {
      if (!std::isfinite(v)) throw InvalidArgument("marginal entries must be finite");
      if (!(v > 0.0))
        throw PositivityError("marginal " + std::to_string(i + 1) +
                              " has a non-positive entry; strictly positive marginals are required");
    }
  }
  mass_ = std::accumulate(p_[0].begin(), p_[0].end(), 0.0);
  for (std::size_t i = 1; i < p_.size(); ++i) {
    const double s = std::accumulate(p_[i].begin(), p_[i].end(), 0.0);
    if (std::abs(s - mass_) > 1e-12 * mass_ + 1e-15)
      throw InvalidArgument("marginals must have equal total mass (mode 1 has " +
                            std::to_string(mass_) + ", mode " + std::to_string(i + 1) + " has " +
                            std::to_string(s) + ")");
  }
}

Dims MarginalFamily::dims() const {
  Dims d;
  for (const auto& v : p_) d.push_back(v.size());
  return d;
}

double MarginalFamily::min_entry(std::size_t i) const {
  return *std::min_element(p_.at(i).begin(), p_.at(i).end());
}

ClassicalInstance::ClassicalInstance(DenseTensor c, MarginalFamily p)
    : cost(std::move(c)), marginals(std::move(p)) {
  if (cost.dims() != marginals.dims())
    throw DimensionMismatch("cost tensor dimensions do not match the marginal lengths");
  for (double v : cost.entries())
    if (!std::isfinite(v)) throw InvalidArgument("cost entries must be finite");
  c_min = cost.min();
  c_max = cost.max();
  c_abs = cost.max_abs();
}

Eigen::VectorXd flatten(const DualPoint& z) {
  std::size_t total = 0;
  for (const auto& x : z) total += x.size();
  Eigen::VectorXd v(total);
  std::size_t k = 0;
  for (const auto& x : z)
    for (double e : x) v(k++) = e;
  return v;
}

DualPoint unflatten(const Dims& dims, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (static_cast<std::size_t>(v.size()) != std::accumulate(dims.begin(), dims.end(), std::size_t{0}))
    throw DimensionMismatch("dual coordinate vector has the wrong length");
  DualPoint z;
  std::size_t k = 0;
  for (auto n : dims) {
    std::vector<double> x(n);
    for (auto& e : x) e = v(k++);
    z.push_back(std::move(x));
  }
  return z;
}

DualPoint zero_dual(const Dims& dims) {
  DualPoint z;
  for (auto n : dims) z.emplace_back(n, 0.0);
  return z;
}

namespace {

void check_dual(const ClassicalInstance& inst, const DualPoint& z) {
  if (z.size() != inst.parties()) throw DimensionMismatch("dual point has the wrong number of modes");
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i].size() != inst.dims()[i]) throw DimensionMismatch("dual vector length mismatch");
}

}  // namespace

DenseTensor slack_tensor(const ClassicalInstance& inst, const DualPoint& z) {
  check_dual(inst, z);
  DenseTensor s = inst.cost;
  MultiIndex idx(inst.dims());
  std::size_t f = 0;
  do {
    double lift = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) lift += z[i][idx[i]];
    s[f++] -= lift;
  } while (idx.next());
  return s;
}

double dual_objective(const ClassicalInstance& inst, const DualPoint& z) {
  check_dual(inst, z);
  double v = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t k = 0; k < z[i].size(); ++k) v += inst.marginals[i][k] * z[i][k];
  return v;
}

double marginal_residual(const ClassicalInstance& inst, const DenseTensor& coupling) {
  if (coupling.dims() != inst.dims()) throw DimensionMismatch("coupling shape mismatch");
  double r = 0.0;
  for (std::size_t i = 0; i < inst.parties(); ++i) {
    const auto m = marginal(coupling, i);
    for (std::size_t k = 0; k < m.size(); ++k) r = std::max(r, std::abs(m[k] - inst.marginals[i][k]));
  }
  return r;
}

DualPoint rebalance(const DualPoint& z) {
  double num = 0.0, den = 0.0;
  std::vector<double> sums;
  for (const auto& x : z) {
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    const double n = static_cast<double>(x.size());
    sums.push_back(s);
    num += s / n;
    den += 1.0 / n;
  }
  const double target = num / den;
  DualPoint out = z;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double t = (target - sums[i]) / static_cast<double>(z[i].size());
    for (auto& e : out[i]) e += t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entropic relaxation

namespace {

void fill_log_coupling(const ClassicalInstance& inst, const std::vector<std::vector<double>>& f,
                       double eps, std::vector<double>& log_u) {
  log_u.resize(inst.cost.size());
  MultiIndex idx(inst.dims());
  std::size_t j = 0;
  do {
    double s = -inst.cost[j];
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i][idx[i]];
    log_u[j++] = s / eps;
  } while (idx.next());
}

// log Σ over each slice of `mode` of exp(log_u).
std::vector<double> slice_logsumexp(const ClassicalInstance& inst, const std::vector<double>& log_u,
                                    std::size_t mode) {
  const std::size_t n = inst.dims()[mode];
  const std::size_t stride = inst.cost.stride(mode);
  std::vector<double> mx(n, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < log_u.size(); ++j) {
    const std::size_t k = (j / stride) % n;
    mx[k] = std::max(mx[k], log_u[j]);
  }
  std::vector<double> acc(n, 0.0);
  for (std::size_t j = 0; j < log_u.size(); ++j) {
    const std::size_t k = (j / stride) % n;
    acc[k] += std::exp(log_u[j] - mx[k]);
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(mx[k]))
      throw NumericalFailure("entropic kernel underflowed to an all-zero slice");
    out[k] = mx[k] + std::log(acc[k]);
  }
  return out;
}

double entropic_residual(const ClassicalInstance& inst, const std::vector<double>& log_u) {
  double r = 0.0;
  for (std::size_t i = 0; i < inst.parties(); ++i) {
    const auto lse = slice_logsumexp(inst, log_u, i);
    for (std::size_t k = 0; k < lse.size(); ++k)
      r = std::max(r, std::abs(std::exp(lse[k]) - inst.marginals[i][k]));
  }
  return r;
}

// Cyclic log-domain sweeps until the marginal residual is below tol.
std::size_t sinkhorn_sweeps(const ClassicalInstance& inst, std::vector<std::vector<double>>& f,
                            double eps, double tol, std::size_t max_iter, double* residual) {
  std::vector<double> log_u;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    for (std::size_t i = 0; i < inst.parties(); ++i) {
      fill_log_coupling(inst, f, eps, log_u);
      const auto lse = slice_logsumexp(inst, log_u, i);
      for (std::size_t k = 0; k < lse.size(); ++k)
        f[i][k] += eps * (std::log(inst.marginals[i][k]) - lse[k]);
    }
    fill_log_coupling(inst, f, eps, log_u);
    *residual = entropic_residual(inst, log_u);
    if (!std::isfinite(*residual)) throw NumericalFailure("entropic Sinkhorn produced non-finite values");
    if (*residual <= tol) return it + 1;
  }
  return it;
}

// Newton ascent on G(f) = Σ pᵢᵀfᵢ − ε Σ exp((Σf − C)/ε), with fᵢ[0] held
// fixed for i ≥ 1 to remove the shift null space.
bool entropic_newton(const ClassicalInstance& inst, std::vector<std::vector<double>>& f, double eps,
                     double tol, std::size_t max_iter, double* residual) {
  const auto& dims = inst.dims();
  const std::size_t d = dims.size();
  std::vector<std::size_t> offset(d + 1, 0);
  for (std::size_t i = 0; i < d; ++i) offset[i + 1] = offset[i] + dims[i];
  const std::size_t total = offset[d];

  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < dims[i]; ++k)
      if (i == 0 || k != 0) free.push_back(offset[i] + k);

  auto objective = [&](const std::vector<std::vector<double>>& g) {
    std::vector<double> lu;
    fill_log_coupling(inst, g, eps, lu);
    double v = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < dims[i]; ++k) v += inst.marginals[i][k] * g[i][k];
    for (double l : lu) v -= eps * std::exp(l);
    return v;
  };

  std::vector<double> log_u;
  for (std::size_t it = 0; it < max_iter; ++it) {
    fill_log_coupling(inst, f, eps, log_u);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(total);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(total, total);
    MultiIndex idx(dims);
    std::size_t j = 0;
    do {
      const double u = std::exp(log_u[j++]);
      for (std::size_t a = 0; a < d; ++a) {
        const std::size_t ra = offset[a] + idx[a];
        grad(ra) -= u;
        for (std::size_t b = 0; b < d; ++b) hess(ra, offset[b] + idx[b]) += u;
      }
    } while (idx.next());
    double res = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < dims[i]; ++k) {
        grad(offset[i] + k) += inst.marginals[i][k];
        res = std::max(res, std::abs(grad(offset[i] + k)));
      }
    *residual = res;
    if (res <= tol) return true;

    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd h(m, m);
    Eigen::VectorXd g(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      g(a) = grad(free[a]);
      for (Eigen::Index b = 0; b < m; ++b) h(a, b) = hess(free[a], free[b]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd step = eps * ldlt.solve(g);
    if (!step.allFinite()) return false;

    const double base = objective(f);
    const double slope = g.dot(step);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      auto trial = f;
      for (Eigen::Index a = 0; a < m; ++a) {
        std::size_t i = 0;
        while (free[a] >= offset[i + 1]) ++i;
        trial[i][free[a] - offset[i]] += t * step(a);
      }
      const double val = objective(trial);
      if (std::isfinite(val) && val >= base + 1e-4 * t * slope) {
        f = std::move(trial);
        moved = true;
        break;
      }
    }
    if (!moved) return false;
  }
  return false;
}

}  // namespace

EntropicResult entropic_sinkhorn(const ClassicalInstance& inst, double epsilon, double tol,
                                 std::size_t max_iter) {
  if (!(epsilon > 0.0)) throw InvalidArgument("entropic Sinkhorn: epsilon must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("entropic Sinkhorn: tolerance must be positive");
  if (std::abs(inst.marginals.common_mass() - 1.0) > 1e-12)
    throw InvalidArgument("entropic Sinkhorn expects probability marginals");

  std::vector<std::vector<double>> f;
  for (auto n : inst.dims()) f.emplace_back(n, 0.0);

  EntropicResult out;
  double residual = std::numeric_limits<double>::infinity();
  // Warm start through a geometric ε schedule.
  const double range = std::max(inst.c_max - inst.c_min, 1e-300);
  double e = std::max(epsilon, range);
  while (e > epsilon) {
    out.iterations += sinkhorn_sweeps(inst, f, e, 1e-3, max_iter, &residual);
    e = std::max(epsilon, 0.25 * e);
  }
  const std::size_t before_polish = std::min<std::size_t>(max_iter, 500);
  out.iterations += sinkhorn_sweeps(inst, f, epsilon, tol, before_polish, &residual);
  if (residual > tol && !entropic_newton(inst, f, epsilon, tol, 100, &residual))
    out.iterations += sinkhorn_sweeps(inst, f, epsilon, tol, max_iter, &residual);
  if (residual > tol) throw NotConverged("entropic Sinkhorn did not reach the marginal tolerance");

  std::vector<double> log_u;
  fill_log_coupling(inst, f, epsilon, log_u);
  out.coupling = DenseTensor(inst.dims());
  double primal = 0.0, entropy = 0.0, mass = 0.0;
  for (std::size_t j = 0; j < log_u.size(); ++j) {
    const double u = std::exp(log_u[j]);
    out.coupling[j] = u;
    primal += inst.cost[j] * u;
    entropy -= u * log_u[j];
    mass += u;
  }
  out.entropy = entropy;
  out.value = primal - epsilon * entropy;
  out.dual_value = epsilon * (inst.marginals.common_mass() - mass);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t k = 0; k < f[i].size(); ++k) out.dual_value += inst.marginals[i][k] * f[i][k];
  out.potentials = std::move(f);
  out.max_residual = marginal_residual(inst, out.coupling);
  return out;
}

// ---------------------------------------------------------------------------
// Barrier relaxation

double barrier_dual_function(const ClassicalInstance& inst, const DualPoint& z, double epsilon) {
  const DenseTensor s = slack_tensor(inst, z);
  double logs = 0.0;
  for (double v : s.entries()) {
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    logs += std::log(v);
  }
  const double n = static_cast<double>(s.size());
  return dual_objective(inst, z) + epsilon * logs + n * epsilon * (1.0 - std::log(epsilon));
}

double barrier_primal_value(const ClassicalInstance& inst, const DenseTensor& coupling,
                            double epsilon) {
  double v = 0.0;
  for (std::size_t j = 0; j < coupling.size(); ++j) {
    if (!(coupling[j] > 0.0)) return std::numeric_limits<double>::infinity();
    v += inst.cost[j] * coupling[j] - epsilon * std::log(coupling[j]);
  }
  return v;
}

DenseTensor barrier_coupling(const ClassicalInstance& inst, const DualPoint& z, double epsilon) {
  DenseTensor s = slack_tensor(inst, z);
  for (auto& v : s.entries()) {
    if (!(v > 0.0)) throw DomainExit("barrier coupling requested outside the dual domain");
    v = epsilon / v;
  }
  return s;
}

DualPoint rescale_mode(const ClassicalInstance& inst, const DualPoint& z, std::size_t mode,
                       const std::vector<double>& targets, double tol) {
  if (mode >= inst.parties()) throw InvalidArgument("rescale_mode: mode out of range");
  const std::size_t n = inst.dims()[mode];
  if (targets.size() != n) throw DimensionMismatch("rescale_mode: target length mismatch");
  for (double t : targets)
    if (!(t > 0.0)) throw InvalidArgument("rescale_mode: targets must be positive");

  const DenseTensor s = slack_tensor(inst, z);
  const std::size_t stride = inst.cost.stride(mode);
  std::vector<std::vector<double>> slices(n);
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (!(s[j] > 0.0)) throw DomainExit("rescale_mode: start point is outside the dual domain");
    slices[(j / stride) % n].push_back(s[j]);
  }
  DualPoint out = z;
  for (std::size_t k = 0; k < n; ++k) {
    const ShiftSpectrum spectrum(std::move(slices[k]));
    const RootResult root = solve(targets[k], spectrum, tol);
    check(root.x + spectrum.smallest() > 0.0, "rescale_mode: rescaled slack left the domain");
    out[mode][k] -= root.x;
  }
  return out;
}

BarrierSinkhornResult barrier_sinkhorn(const ClassicalInstance& inst, double epsilon, double tol,
                                       std::size_t max_sweeps) {
  return barrier_sinkhorn(inst, epsilon, tol, max_sweeps, classical_start_point(inst));
}

BarrierSinkhornResult barrier_sinkhorn(const ClassicalInstance& inst, double epsilon, double tol,
                                       std::size_t max_sweeps, const DualPoint& start) {
  if (!(epsilon > 0.0)) throw InvalidArgument("barrier Sinkhorn: epsilon must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("barrier Sinkhorn: tolerance must be positive");

  std::size_t max_dim = 0;
  for (auto n : inst.dims()) max_dim = std::max(max_dim, n);
  const double inner_tol = (tol / epsilon) / (10.0 * static_cast<double>(max_dim));

  std::vector<std::vector<double>> targets;
  for (std::size_t i = 0; i < inst.parties(); ++i) {
    targets.emplace_back(inst.marginals[i]);
    for (auto& t : targets.back()) t /= epsilon;
  }

  BarrierSinkhornResult out;
  out.z = rebalance(start);
  auto residual_of = [&](const DualPoint& z) {
    return marginal_residual(inst, barrier_coupling(inst, z, epsilon));
  };
  out.phi = barrier_dual_function(inst, out.z, epsilon);
  if (!std::isfinite(out.phi)) throw DomainExit("barrier Sinkhorn start point is not interior");
  out.max_residual = residual_of(out.z);
  out.trace.push_back({0, out.phi, out.max_residual});

  while (out.max_residual > tol && out.sweeps < max_sweeps) {
    for (std::size_t i = 0; i < inst.parties(); ++i)
      out.z = rescale_mode(inst, out.z, i, targets[i], inner_tol);
    out.z = rebalance(out.z);
    ++out.sweeps;
    out.phi = barrier_dual_function(inst, out.z, epsilon);
    out.max_residual = residual_of(out.z);
    out.trace.push_back({out.sweeps, out.phi, out.max_residual});
  }
  out.converged = out.max_residual <= tol;
  out.coupling = barrier_coupling(inst, out.z, epsilon);
  out.value = barrier_primal_value(inst, out.coupling, epsilon);
  return out;
}

// ---------------------------------------------------------------------------

double barrier_excess_bound(double terms, double epsilon, double cost_scale, double min_product,
                            std::size_t parties) {
  const double c = cost_scale;
  const double k = static_cast<double>(parties);
  const double ratio = 2.0 * c / min_product;
  return terms * epsilon * (1.0 - std::log(epsilon)) +
         0.5 * terms * epsilon * std::log(k * c * c + k * ratio * ratio);
}

BoundChainReport bound_chain_classical(const ClassicalInstance& inst, double epsilon, double tau,
                                       double tau_beta) {
  if (inst.parties() != 2) throw InvalidArgument("bound chain is stated for bipartite instances");
  if (!(epsilon > 0.0)) throw InvalidArgument("bound chain: epsilon must be positive");
  const double m = inst.marginals.common_mass();
  const double n = static_cast<double>(inst.cost.size());
  const double shift = n * epsilon * std::log(m);
  const double min_product = (inst.marginals.min_entry(0) / m) * (inst.marginals.min_entry(1) / m);
  const double excess = m * barrier_excess_bound(n, epsilon / m, inst.c_abs, min_product, 2);
  BoundChainReport r;
  r.tau = tau;
  r.tau_beta = tau_beta;
  r.lower = tau - shift;
  r.upper = tau + excess - shift;
  r.lower_margin = tau_beta - r.lower;
  r.upper_margin = r.upper - tau_beta;
  r.holds = r.lower_margin > 0.0 && r.upper_margin > 0.0;
  return r;
}

}  // namespace otb
