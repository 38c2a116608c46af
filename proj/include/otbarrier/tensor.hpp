#pragma once

// Dense real tensors and complex Hermitian operators on tensor-product spaces.
//
// Multi-indices are flattened in row-major order (last mode fastest). Mode
// indices in this API are zero-based.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace otb {

using Complex = std::complex<double>;
using Dims = std::vector<std::size_t>;

std::size_t product(const Dims& dims);

/// Odometer over all multi-indices of a shape, in row-major order.
class MultiIndex {
 public:
  explicit MultiIndex(const Dims& dims) : dims_(&dims), idx_(dims.size(), 0) {}
  const std::vector<std::size_t>& operator*() const { return idx_; }
  std::size_t operator[](std::size_t mode) const { return idx_[mode]; }
  /// Advances to the next multi-index; returns false after the last one.
  bool next();

 private:
  const Dims* dims_;
  std::vector<std::size_t> idx_;
};

class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Dims dims, double fill = 0.0);
  DenseTensor(Dims dims, std::vector<double> entries);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t size() const { return entries_.size(); }

  double operator[](std::size_t flat) const { return entries_[flat]; }
  double& operator[](std::size_t flat) { return entries_[flat]; }
  double at(std::span<const std::size_t> index) const { return entries_[flat_index(index)]; }

  std::size_t flat_index(std::span<const std::size_t> index) const;
  /// Stride of a mode in the flat layout.
  std::size_t stride(std::size_t mode) const;

  std::span<const double> entries() const { return entries_; }
  std::span<double> entries() { return entries_; }

  double sum() const;
  double min() const;
  double max() const;
  double max_abs() const;

 private:
  Dims dims_;
  std::vector<double> entries_;
};

/// Sum of V over every mode except `mode`.
std::vector<double> marginal(const DenseTensor& tensor, std::size_t mode);

/// ⟨A, B⟩ = Σ a_J b_J.
double inner(const DenseTensor& a, const DenseTensor& b);

/// Outer product p₁ ⊗ ⋯ ⊗ p_d.
DenseTensor outer_product(const std::vector<std::vector<double>>& factors);

class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  /// Zero matrix of dimension n.
  explicit HermitianMatrix(std::size_t n);
  /// Stores (A + A*)/2.
  explicit HermitianMatrix(const Eigen::MatrixXcd& a);

  static HermitianMatrix identity(std::size_t n);
  static HermitianMatrix diagonal(std::span<const double> values);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return m_; }
  Complex operator()(std::size_t p, std::size_t q) const { return m_(p, q); }

  double trace() const;
  double frobenius_norm() const;
  /// Largest off-diagonal magnitude.
  double max_off_diagonal() const;
  std::vector<double> diagonal_values() const;

  HermitianMatrix operator+(const HermitianMatrix& other) const;
  HermitianMatrix operator-(const HermitianMatrix& other) const;
  HermitianMatrix operator*(double s) const;

 private:
  Eigen::MatrixXcd m_;
};

/// Real-valued tr(A B) for Hermitian A, B.
double trace_product(const HermitianMatrix& a, const HermitianMatrix& b);

/// A Hermitian operator on C^{n₁} ⊗ ⋯ ⊗ C^{n_d}; row/column indices are
/// row-major flattenings of (i₁,…,i_d).
struct ProductOperator {
  Dims mode_dims;
  HermitianMatrix matrix;

  ProductOperator() = default;
  ProductOperator(Dims dims, HermitianMatrix m);
  std::size_t dim() const { return matrix.dim(); }
};

/// tr_î H: traces out every factor except `mode`.
HermitianMatrix partial_trace_except(const ProductOperator& op, std::size_t mode);

/// I ⊗ ⋯ ⊗ U ⊗ ⋯ ⊗ I with U acting on `mode`.
ProductOperator kron_lift(const HermitianMatrix& u, const Dims& mode_dims, std::size_t mode);

/// Isometric real coordinates of a Hermitian matrix: n diagonal entries, then
/// for each p<q (row-major) the pair (√2 Re h_pq, √2 Im h_pq).
struct HermitianCoordinates {
  std::size_t n = 0;
  Eigen::VectorXd coords;
};

HermitianCoordinates to_coordinates(const HermitianMatrix& h);
HermitianMatrix from_coordinates(std::size_t n, const Eigen::Ref<const Eigen::VectorXd>& coords);

/// Nonzero entries of the Hermitian basis element for coordinate k; the
/// (q,p) partner of an off-diagonal entry is implied by Hermiticity.
struct BasisEntry {
  std::size_t p;
  std::size_t q;
  Complex value;  // entry (p,q); entry (q,p) holds conj(value) when p != q
};
BasisEntry coordinate_basis(std::size_t n, std::size_t k);

struct SpectralBundle {
  Eigen::VectorXd eigenvalues;  // descending
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double spectral_norm = 0.0;
  double frobenius_norm = 0.0;
};

SpectralBundle spectral_bundle(const HermitianMatrix& h);

struct LogDet {
  double logdet = 0.0;
  bool is_pd = false;
};

/// Cholesky factor L (lower, H = L L*) when every pivot exceeds
/// 1e-12·(1 + max diagonal); empty matrix otherwise.
Eigen::MatrixXcd cholesky_lower(const Eigen::MatrixXcd& h, bool* is_pd);

LogDet chol_logdet(const HermitianMatrix& h);
LogDet chol_logdet(const ProductOperator& h);

/// H⁻¹ from its Cholesky factor.
Eigen::MatrixXcd inverse_from_cholesky(const Eigen::MatrixXcd& lower);

}  // namespace otb
