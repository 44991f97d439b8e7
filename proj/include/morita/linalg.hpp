#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace morita {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

using Rng = std::mt19937_64;

/// Independent random stream for sub-check `stream` of a run seeded with `seed`.
/// Results depend only on (seed, stream), never on evaluation order.
Rng derived_rng(std::uint64_t seed, std::uint64_t stream);

Complex random_complex(Rng& rng);
CVector random_vector(Eigen::Index n, Rng& rng);
CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Haar-distributed unitary (QR of a complex Ginibre matrix with phase fix).
CMatrix random_unitary(Eigen::Index n, Rng& rng);

/// U · diag(s) · V* with s log-uniform in [1/spread, spread]; condition number
/// at most spread².
CMatrix random_invertible(Eigen::Index n, double spread, Rng& rng);

double operator_norm(const CMatrix& m);

/// Orthonormal basis (columns) of the column span of `columns`, dropping
/// singular values at or below `tol`.
CMatrix orthonormal_span(const CMatrix& columns, double tol);

std::size_t numeric_rank(const CMatrix& m, double tol);

/// Column-major flattening.
CVector flatten(const CMatrix& m);

/// Incremental Gram–Schmidt over flattened matrices. `add` returns true when
/// the candidate increased the span by more than `tol` (relative residual).
class SpanBuilder {
 public:
  explicit SpanBuilder(double tol) : tol_(tol) {}

  bool add(const CVector& v);
  /// residual measured against `scale` instead of ‖v‖
  bool add(const CVector& v, double scale);
  bool contains(const CVector& v) const;
  std::size_t dim() const noexcept { return basis_.size(); }
  const std::vector<CVector>& basis() const noexcept { return basis_; }
  CVector residual(const CVector& v) const;

 private:
  double tol_;
  std::vector<CVector> basis_;
};

}  // namespace morita
