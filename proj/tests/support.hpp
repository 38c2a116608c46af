#pragma once

// Input generators and brute-force reference computations shared by the tests.
// Oracles here deliberately avoid the library's own kernels.

#include "otbarrier/classical.hpp"
#include "otbarrier/instance_io.hpp"
#include "otbarrier/quantum.hpp"
#include "otbarrier/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace otb::testing {

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline std::vector<double> random_probability(Rng& rng, std::size_t n) {
  std::vector<double> v = random_vector(rng, n, 0.1, 1.0);
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

inline Eigen::MatrixXcd random_complex(Rng& rng, std::size_t n) {
  Eigen::MatrixXcd a(n, n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) a(p, q) = Complex(rng.normal(), rng.normal());
  return a;
}

inline Eigen::MatrixXcd random_hermitian(Rng& rng, std::size_t n) {
  const Eigen::MatrixXcd a = random_complex(rng, n);
  return (a + a.adjoint()) / 2.0;
}

/// Trace-one positive definite matrix.
inline Eigen::MatrixXcd random_density(Rng& rng, std::size_t n) {
  const Eigen::MatrixXcd b = random_complex(rng, n);
  Eigen::MatrixXcd m = b * b.adjoint() + 0.5 * Eigen::MatrixXcd::Identity(n, n);
  return m / m.trace().real();
}

/// Kronecker product by explicit index arithmetic.
inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

/// Partial trace over every factor except `mode`, by summing matching indices.
inline Eigen::MatrixXcd naive_partial_trace(const Eigen::MatrixXcd& h, const Dims& dims, std::size_t mode) {
  const std::size_t total = product(dims);
  auto digits = [&](std::size_t flat) {
    std::vector<std::size_t> d(dims.size());
    for (std::size_t i = dims.size(); i-- > 0;) {
      d[i] = flat % dims[i];
      flat /= dims[i];
    }
    return d;
  };
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dims[mode], dims[mode]);
  for (std::size_t r = 0; r < total; ++r)
    for (std::size_t c = 0; c < total; ++c) {
      const auto dr = digits(r);
      const auto dc = digits(c);
      bool match = true;
      for (std::size_t i = 0; i < dims.size(); ++i)
        if (i != mode && dr[i] != dc[i]) match = false;
      if (match) out(dr[mode], dc[mode]) += h(r, c);
    }
  return out;
}

inline ClassicalInstance random_classical(std::uint64_t seed, const Dims& dims) {
  GenerateOptions o;
  o.kind = InstanceKind::classical;
  o.dims = dims;
  o.seed = seed;
  return to_classical(generate(o));
}

inline QuantumInstance random_quantum(std::uint64_t seed, const Dims& dims, bool diagonal = false) {
  GenerateOptions o;
  o.kind = InstanceKind::quantum;
  o.dims = dims;
  o.seed = seed;
  o.diagonal = diagonal;
  return to_quantum(generate(o));
}

/// Central-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& z, double h) {
  Eigen::VectorXd g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Eigen::VectorXd a = z, b = z;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector field.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g,
                                   const Eigen::VectorXd& z, double h) {
  Eigen::MatrixXd jac(z.size(), z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Eigen::VectorXd a = z, b = z;
    a(i) += h;
    b(i) -= h;
    jac.col(i) = (g(a) - g(b)) / (2.0 * h);
  }
  return jac;
}

/// Root of a decreasing function on [lo, hi] by plain bisection.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi, double width = 1e-14) {
  for (int k = 0; k < 400 && hi - lo > width * (1.0 + std::abs(lo)); ++k) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Minimizer of a unimodal function on [lo, hi] by golden-section search.
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Exhaustive assignment optimum (1/n)·min_σ Σ c_{i,σ(i)} for uniform marginals.
inline double permutation_optimum(const DenseTensor& cost) {
  const std::size_t n = cost.dims()[0];
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost[i * n + perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

}  // namespace otb::testing
