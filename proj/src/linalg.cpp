#include "morita/linalg.hpp"

#include <cmath>

namespace morita {

Rng derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

Complex random_complex(Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double re = gauss(rng);
  const double im = gauss(rng);
  return {re, im};
}

CVector random_vector(Eigen::Index n, Rng& rng) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = random_complex(rng);
  return v;
}

CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = random_complex(rng);
  return m;
}

CMatrix random_unitary(Eigen::Index n, Rng& rng) {
  if (n == 0) return CMatrix(0, 0);
  const CMatrix g = random_matrix(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

CMatrix random_invertible(Eigen::Index n, double spread, Rng& rng) {
  const CMatrix u = random_unitary(n, rng);
  const CMatrix v = random_unitary(n, rng);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double log_spread = std::log(spread);
  Eigen::VectorXcd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = std::exp(unif(rng) * log_spread);
  return u * s.asDiagonal() * v.adjoint();
}

double operator_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

CMatrix orthonormal_span(const CMatrix& columns, double tol) {
  if (columns.cols() == 0 || columns.rows() == 0) return CMatrix(columns.rows(), 0);
  Eigen::JacobiSVD<CMatrix> svd(columns, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

std::size_t numeric_rank(const CMatrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  return rank;
}

CVector flatten(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

CVector SpanBuilder::residual(const CVector& v) const {
  CVector r = v;
  // two passes of classical Gram–Schmidt keep the basis orthonormal to ~eps
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis_) r -= b * b.dot(r);
  return r;
}

bool SpanBuilder::add(const CVector& v) { return add(v, v.norm()); }

bool SpanBuilder::add(const CVector& v, double scale) {
  if (scale == 0.0 || v.norm() <= tol_ * scale) return false;
  CVector r = residual(v);
  const double rn = r.norm();
  if (rn <= tol_ * scale) return false;
  basis_.push_back(r / rn);
  return true;
}

bool SpanBuilder::contains(const CVector& v) const {
  const double scale = v.norm();
  if (scale == 0.0) return true;
  return residual(v).norm() <= tol_ * scale;
}

}  // namespace morita
