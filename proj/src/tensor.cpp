#include "otbarrier/tensor.hpp"

#include "otbarrier/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace otb {

std::size_t product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

bool MultiIndex::next() {
  for (std::size_t m = idx_.size(); m-- > 0;) {
    if (++idx_[m] < (*dims_)[m]) return true;
    idx_[m] = 0;
  }
  return false;
}

namespace {

void validate_dims(const Dims& dims) {
  if (dims.empty()) throw InvalidArgument("tensor needs at least one mode");
  for (auto n : dims)
    if (n == 0) throw InvalidArgument("tensor dimensions must be positive");
}

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order)
    throw InvalidArgument("mode index " + std::to_string(mode) + " out of range for order " +
                          std::to_string(order));
}

}  // namespace

DenseTensor::DenseTensor(Dims dims, double fill) : dims_(std::move(dims)) {
  validate_dims(dims_);
  entries_.assign(product(dims_), fill);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> entries)
    : dims_(std::move(dims)), entries_(std::move(entries)) {
  validate_dims(dims_);
  if (entries_.size() != product(dims_))
    throw DimensionMismatch("tensor entry count does not match dimensions");
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) throw DimensionMismatch("multi-index has wrong order");
  std::size_t flat = 0;
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (index[m] >= dims_[m]) throw InvalidArgument("multi-index out of range");
    flat = flat * dims_[m] + index[m];
  }
  return flat;
}

std::size_t DenseTensor::stride(std::size_t mode) const {
  check_mode(mode, dims_.size());
  std::size_t s = 1;
  for (std::size_t m = mode + 1; m < dims_.size(); ++m) s *= dims_[m];
  return s;
}

double DenseTensor::sum() const { return std::accumulate(entries_.begin(), entries_.end(), 0.0); }
double DenseTensor::min() const { return *std::min_element(entries_.begin(), entries_.end()); }
double DenseTensor::max() const { return *std::max_element(entries_.begin(), entries_.end()); }
double DenseTensor::max_abs() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> marginal(const DenseTensor& tensor, std::size_t mode) {
  check_mode(mode, tensor.order());
  const std::size_t n = tensor.dims()[mode];
  const std::size_t stride = tensor.stride(mode);
  std::vector<double> out(n, 0.0);
  for (std::size_t f = 0; f < tensor.size(); ++f) out[(f / stride) % n] += tensor[f];
  return out;
}

double inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw DimensionMismatch("inner product of tensors with different shapes");
  double s = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
  return s;
}

DenseTensor outer_product(const std::vector<std::vector<double>>& factors) {
  Dims dims;
  for (const auto& f : factors) dims.push_back(f.size());
  DenseTensor out(dims, 1.0);
  MultiIndex idx(out.dims());
  std::size_t f = 0;
  do {
    double v = 1.0;
    for (std::size_t m = 0; m < factors.size(); ++m) v *= factors[m][idx[m]];
    out[f++] = v;
  } while (idx.next());
  return out;
}

// ---------------------------------------------------------------------------

HermitianMatrix::HermitianMatrix(std::size_t n) : m_(Eigen::MatrixXcd::Zero(n, n)) {}

HermitianMatrix::HermitianMatrix(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("Hermitian matrix must be square");
  m_ = 0.5 * (a + a.adjoint());
}

HermitianMatrix HermitianMatrix::identity(std::size_t n) {
  HermitianMatrix h(n);
  h.m_.setIdentity();
  return h;
}

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> values) {
  HermitianMatrix h(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) h.m_(i, i) = values[i];
  return h;
}

double HermitianMatrix::trace() const { return m_.trace().real(); }
double HermitianMatrix::frobenius_norm() const { return m_.norm(); }

double HermitianMatrix::max_off_diagonal() const {
  double m = 0.0;
  for (Eigen::Index p = 0; p < m_.rows(); ++p)
    for (Eigen::Index q = 0; q < m_.cols(); ++q)
      if (p != q) m = std::max(m, std::abs(m_(p, q)));
  return m;
}

std::vector<double> HermitianMatrix::diagonal_values() const {
  std::vector<double> d(dim());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = m_(i, i).real();
  return d;
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& other) const {
  if (dim() != other.dim()) throw DimensionMismatch("Hermitian sum dimension mismatch");
  HermitianMatrix h;
  h.m_ = m_ + other.m_;
  return h;
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& other) const {
  if (dim() != other.dim()) throw DimensionMismatch("Hermitian difference dimension mismatch");
  HermitianMatrix h;
  h.m_ = m_ - other.m_;
  return h;
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  HermitianMatrix h;
  h.m_ = m_ * s;
  return h;
}

double trace_product(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("trace product dimension mismatch");
  // tr(AB) = Σ_pq a_pq b_qp = Σ_pq a_pq conj(b_pq)
  return (a.matrix().array() * b.matrix().conjugate().array()).sum().real();
}

ProductOperator::ProductOperator(Dims dims, HermitianMatrix m)
    : mode_dims(std::move(dims)), matrix(std::move(m)) {
  validate_dims(mode_dims);
  if (product(mode_dims) != matrix.dim())
    throw DimensionMismatch("operator dimension does not equal the product of mode dimensions");
}

HermitianMatrix partial_trace_except(const ProductOperator& op, std::size_t mode) {
  const auto& dims = op.mode_dims;
  check_mode(mode, dims.size());
  const std::size_t n = dims[mode];
  std::size_t stride = 1;
  for (std::size_t m = mode + 1; m < dims.size(); ++m) stride *= dims[m];
  const std::size_t outer = op.dim() / (n * stride);

  const auto& h = op.matrix.matrix();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  // Row index = (o, a, s) and column index = (o, b, s) share every other mode.
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < stride; ++s) {
      const std::size_t base = o * n * stride + s;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) out(a, b) += h(base + a * stride, base + b * stride);
    }
  return HermitianMatrix(out);
}

ProductOperator kron_lift(const HermitianMatrix& u, const Dims& mode_dims, std::size_t mode) {
  validate_dims(mode_dims);
  check_mode(mode, mode_dims.size());
  const std::size_t n = mode_dims[mode];
  if (u.dim() != n) throw DimensionMismatch("lifted matrix does not match its mode dimension");
  std::size_t stride = 1;
  for (std::size_t m = mode + 1; m < mode_dims.size(); ++m) stride *= mode_dims[m];
  const std::size_t total = product(mode_dims);
  const std::size_t outer = total / (n * stride);

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(total, total);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < stride; ++s) {
      const std::size_t base = o * n * stride + s;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) out(base + a * stride, base + b * stride) = u(a, b);
    }
  return ProductOperator(mode_dims, HermitianMatrix(out));
}

// ---------------------------------------------------------------------------

HermitianCoordinates to_coordinates(const HermitianMatrix& h) {
  const std::size_t n = h.dim();
  HermitianCoordinates c{n, Eigen::VectorXd(n * n)};
  for (std::size_t p = 0; p < n; ++p) c.coords(p) = h(p, p).real();
  std::size_t k = n;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) {
      c.coords(k++) = std::sqrt(2.0) * h(p, q).real();
      c.coords(k++) = std::sqrt(2.0) * h(p, q).imag();
    }
  return c;
}

HermitianMatrix from_coordinates(std::size_t n, const Eigen::Ref<const Eigen::VectorXd>& coords) {
  if (static_cast<std::size_t>(coords.size()) != n * n)
    throw DimensionMismatch("Hermitian coordinate vector must have n² entries");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t p = 0; p < n; ++p) m(p, p) = coords(p);
  std::size_t k = n;
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) {
      const Complex v(s * coords(k), s * coords(k + 1));
      k += 2;
      m(p, q) = v;
      m(q, p) = std::conj(v);
    }
  return HermitianMatrix(m);
}

BasisEntry coordinate_basis(std::size_t n, std::size_t k) {
  if (k >= n * n) throw InvalidArgument("Hermitian coordinate index out of range");
  if (k < n) return {k, k, Complex(1.0, 0.0)};
  std::size_t offset = (k - n) / 2;
  const bool imaginary = ((k - n) % 2) == 1;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t row = n - 1 - p;
    if (offset < row) {
      const std::size_t q = p + 1 + offset;
      const double s = 1.0 / std::sqrt(2.0);
      return {p, q, imaginary ? Complex(0.0, s) : Complex(s, 0.0)};
    }
    offset -= row;
  }
  throw AssertionFailure("coordinate_basis: unreachable");
}

// ---------------------------------------------------------------------------

SpectralBundle spectral_bundle(const HermitianMatrix& h) {
  SpectralBundle out;
  const std::size_t n = h.dim();
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalFailure("Hermitian eigensolver did not converge");
  out.eigenvalues = solver.eigenvalues().reverse();
  out.lambda_max = out.eigenvalues(0);
  out.lambda_min = out.eigenvalues(n - 1);
  out.spectral_norm = std::max(out.lambda_max, -out.lambda_min);
  out.frobenius_norm = out.eigenvalues.norm();
  return out;
}

Eigen::MatrixXcd cholesky_lower(const Eigen::MatrixXcd& h, bool* is_pd) {
  const Eigen::Index n = h.rows();
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(h(i, i).real()));
  const double pivot_tol = 1e-12 * (1.0 + max_diag);

  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = h(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > pivot_tol)) {
      *is_pd = false;
      return {};
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Complex s = h(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  *is_pd = true;
  return l;
}

LogDet chol_logdet(const HermitianMatrix& h) {
  LogDet out;
  const auto l = cholesky_lower(h.matrix(), &out.is_pd);
  if (!out.is_pd) return out;
  for (Eigen::Index i = 0; i < l.rows(); ++i) out.logdet += 2.0 * std::log(l(i, i).real());
  return out;
}

LogDet chol_logdet(const ProductOperator& h) { return chol_logdet(h.matrix); }

Eigen::MatrixXcd inverse_from_cholesky(const Eigen::MatrixXcd& lower) {
  const Eigen::Index n = lower.rows();
  Eigen::MatrixXcd linv = Eigen::MatrixXcd::Identity(n, n);
  lower.triangularView<Eigen::Lower>().solveInPlace(linv);
  Eigen::MatrixXcd inv = linv.adjoint() * linv;
  return 0.5 * (inv + inv.adjoint());
}

}  // namespace otb
