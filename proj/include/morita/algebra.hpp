#pragma once

// Commutative unital finite-dimensional C*-algebras in the function model
// C(X) over a finite labeled spectrum X, plus the Gel'fand transform of
// algebras presented by commuting normal matrices.

#include "morita/linalg.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morita {

inline constexpr double kDefaultTol = 1e-9;

/// C(X) for a finite spectrum X given by distinct labels. Cheap to copy.
class Algebra {
 public:
  /// Throws PreconditionError on an empty or duplicated label list.
  explicit Algebra(std::vector<std::string> labels);

  std::size_t dim() const noexcept { return labels_->size(); }
  const std::vector<std::string>& labels() const noexcept { return *labels_; }
  const std::string& label(std::size_t point) const { return labels_->at(point); }
  std::optional<std::size_t> index_of(std::string_view label) const;

  friend bool operator==(const Algebra& a, const Algebra& b);

 private:
  std::shared_ptr<const std::vector<std::string>> labels_;
};

Algebra make_algebra(std::vector<std::string> labels);

/// Algebra with labels prefix0, prefix1, ...
Algebra numbered_algebra(std::size_t n, std::string_view prefix);

/// A function on the spectrum of its parent algebra.
class AlgebraElement {
 public:
  AlgebraElement(Algebra parent, CVector values);

  static AlgebraElement zero(const Algebra& a);
  static AlgebraElement unit(const Algebra& a);
  static AlgebraElement idempotent(const Algebra& a, std::size_t point);
  static AlgebraElement random(const Algebra& a, Rng& rng);

  const Algebra& parent() const noexcept { return parent_; }
  const CVector& values() const noexcept { return values_; }
  Complex operator[](std::size_t point) const { return values_(static_cast<Eigen::Index>(point)); }

  AlgebraElement adjoint() const;
  /// max modulus over the spectrum
  double norm() const;
  bool is_positive(double tol = kDefaultTol) const;

  friend AlgebraElement operator+(const AlgebraElement& x, const AlgebraElement& y);
  friend AlgebraElement operator-(const AlgebraElement& x, const AlgebraElement& y);
  friend AlgebraElement operator*(const AlgebraElement& x, const AlgebraElement& y);
  friend AlgebraElement operator*(Complex s, const AlgebraElement& x);

 private:
  Algebra parent_;
  CVector values_;
};

/// ‖x − y‖ in the parent algebra.
double distance(const AlgebraElement& x, const AlgebraElement& y);

/// Ideal of the elements vanishing on `kept`. The quotient by it is C(kept).
class Ideal {
 public:
  Ideal(Algebra parent, std::vector<std::size_t> kept);

  const Algebra& parent() const noexcept { return parent_; }
  /// Points where members vanish (sorted); the quotient's spectrum.
  const std::vector<std::size_t>& kept() const noexcept { return kept_; }
  /// Complement of kept(): where members may be nonzero.
  std::vector<std::size_t> support() const;

  bool contains(const AlgebraElement& x, double tol = kDefaultTol) const;
  bool is_proper() const noexcept { return !kept_.empty(); }
  bool is_zero() const noexcept { return kept_.size() == parent_.dim(); }

 private:
  Algebra parent_;
  std::vector<std::size_t> kept_;
};

Ideal ideal_from_points(const Algebra& a, std::vector<std::size_t> kept);

/// Unital *-homomorphism source → target in pullback form:
/// map(a)(q) = a(point_map[q]) for every target point q.
class AlgebraMap {
 public:
  AlgebraMap(Algebra source, Algebra target, std::vector<std::size_t> point_map);

  static AlgebraMap identity(const Algebra& a);
  /// Isomorphism sending the idempotent at source point p to the idempotent
  /// at target point forward[p].
  static AlgebraMap from_pushforward(Algebra source, Algebra target, const std::vector<std::size_t>& forward);

  const Algebra& source() const noexcept { return source_; }
  const Algebra& target() const noexcept { return target_; }
  const std::vector<std::size_t>& point_map() const noexcept { return point_map_; }

  AlgebraElement operator()(const AlgebraElement& a) const;

  bool is_bijective() const;
  /// Source point → target point; requires bijectivity.
  std::vector<std::size_t> pushforward() const;
  AlgebraMap inverse() const;

  friend bool operator==(const AlgebraMap& f, const AlgebraMap& g);

 private:
  Algebra source_;
  Algebra target_;
  std::vector<std::size_t> point_map_;
};

/// outer ∘ inner
AlgebraMap compose(const AlgebraMap& outer, const AlgebraMap& inner);

/// True iff `phi` is bijective. The homomorphism identities are re-checked
/// numerically on the basis idempotents.
bool check_isomorphism(const AlgebraMap& phi, double tol = kDefaultTol);

struct QuotientAlgebra {
  Algebra algebra;
  AlgebraMap projection;
};

/// A / I with the restriction map. Throws on an improper ideal.
QuotientAlgebra quotient_algebra(const Algebra& a, const Ideal& ideal);

struct Character {
  Algebra parent;
  std::size_t point = 0;
  /// Joint eigenvalue per generator; empty for the diagonal model.
  std::vector<Complex> joint_eigenvalues;

  Complex operator()(const AlgebraElement& a) const;
};

std::vector<Character> characters(const Algebra& a);

/// Simultaneous spectral data of a commutative family of normal matrices.
struct GelfandData {
  std::vector<CMatrix> generators;
  /// One joint-eigenvalue tuple per character, lexicographically ordered.
  std::vector<std::vector<Complex>> characters;
  /// Unitary; columns grouped by character in order.
  CMatrix basis;
  std::vector<std::size_t> multiplicity;
  /// Relative tolerance as requested and the absolute one actually used.
  double tol = kDefaultTol;
  double abs_tol = kDefaultTol;
  /// C(Sp) with labels x0, x1, ...
  Algebra spectrum{std::vector<std::string>{"x0"}};

  std::size_t ambient_dim() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t offset(std::size_t k) const;
  /// Orthonormal basis of the k-th joint eigenspace.
  CMatrix eigenspace(std::size_t k) const;
  CMatrix projection(std::size_t k) const;
  /// basis · blockwise scalars · basis* for generator g.
  CMatrix reconstruct(std::size_t g) const;
};

std::vector<Character> characters(const GelfandData& g);

/// Throws PreconditionError for a non-normal generator or a non-commuting pair,
/// NumericalError when joint eigenvalues cannot be separated unambiguously.
/// `tol` is relative to the largest generator norm.
GelfandData joint_diagonalize(std::span<const CMatrix> generators, double tol = kDefaultTol,
                              std::uint64_t seed = 0x6a09e667f3bcc909ULL);

/// Value of `element` on each character. Throws PreconditionError when the
/// element is not block-scalar on the joint eigenspaces.
AlgebraElement gelfand_transform(const GelfandData& g, const CMatrix& element);

/// Σ_k values[k] · projection(k)
CMatrix inverse_gelfand(const GelfandData& g, const AlgebraElement& f);

}  // namespace morita
