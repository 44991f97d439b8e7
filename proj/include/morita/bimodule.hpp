#pragma once

// A-B bimodules over two diagonal algebras in fibered form: one Hilbert fiber
// per (left point, right point) pair.
//
//   ⟨x,y⟩_B(q) = Σ_p x_pq* G_pq y_pq    (linear in y)
//   _A⟨x,y⟩(p) = Σ_q y_pq* G_pq x_pq    (linear in x)

#include "morita/algebra.hpp"
#include "morita/hilbert_module.hpp"
#include "morita/report.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace morita {

struct FiberSpec {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t dim = 0;
  /// empty means identity
  CMatrix metric;
};

class FiberedBimodule {
 public:
  /// Pairs not listed have dimension 0. Duplicate pairs are rejected.
  FiberedBimodule(Algebra left, Algebra right, const std::vector<FiberSpec>& fibers, double tol = kDefaultTol);

  const Algebra& left() const noexcept { return data_->left; }
  const Algebra& right() const noexcept { return data_->right; }
  std::size_t m() const noexcept { return data_->left.dim(); }
  std::size_t n() const noexcept { return data_->right.dim(); }
  std::size_t dim(std::size_t a, std::size_t b) const { return data_->dims.at(index(a, b)); }
  const CMatrix& metric(std::size_t a, std::size_t b) const { return data_->metrics.at(index(a, b)); }
  std::size_t total_dim() const noexcept { return data_->total; }
  /// position of fiber (a,b) in the flattened coordinate vector (row-major pairs)
  std::size_t offset(std::size_t a, std::size_t b) const { return data_->offsets.at(index(a, b)); }
  /// nonempty fibers in row-major order
  std::vector<FiberSpec> fibers() const;
  /// (a, b) of the nonempty fibers in row-major order
  const std::vector<std::pair<std::size_t, std::size_t>>& support() const noexcept { return data_->support; }
  std::size_t index(std::size_t a, std::size_t b) const;

  friend bool operator==(const FiberedBimodule& x, const FiberedBimodule& y);

 private:
  struct Data {
    Algebra left;
    Algebra right;
    std::vector<std::size_t> dims;
    std::vector<CMatrix> metrics;
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    std::vector<std::pair<std::size_t, std::size_t>> support;
  };
  std::shared_ptr<const Data> data_;
};

FiberedBimodule make_fibered_bimodule(const Algebra& left, const Algebra& right, const std::vector<FiberSpec>& fibers,
                                      double tol = kDefaultTol);

/// A over itself: diagonal fibers of dimension 1, identity metric.
FiberedBimodule identity_bimodule(const Algebra& a);

/// Dimension-1 fibers on (p, forward[p]); metrics default to 1.
FiberedBimodule graph_bimodule(const Algebra& left, const Algebra& right, const std::vector<std::size_t>& forward,
                               const std::vector<double>& metrics = {});

class BimoduleElement {
 public:
  /// coordinates in the flattened fiber order of `parent`
  BimoduleElement(FiberedBimodule parent, CVector coords);

  static BimoduleElement zero(const FiberedBimodule& m);
  static BimoduleElement basis(const FiberedBimodule& m, std::size_t a, std::size_t b, std::size_t i);
  static BimoduleElement random(const FiberedBimodule& m, Rng& rng);

  const FiberedBimodule& parent() const noexcept { return parent_; }
  const CVector& coords() const noexcept { return coords_; }
  CVector fiber(std::size_t a, std::size_t b) const;

  friend BimoduleElement operator+(const BimoduleElement& x, const BimoduleElement& y);
  friend BimoduleElement operator-(const BimoduleElement& x, const BimoduleElement& y);
  friend BimoduleElement operator*(Complex s, const BimoduleElement& x);

 private:
  FiberedBimodule parent_;
  CVector coords_;
};

/// a·x
BimoduleElement operator*(const AlgebraElement& a, const BimoduleElement& x);
/// x·b
BimoduleElement operator*(const BimoduleElement& x, const AlgebraElement& b);

/// largest coordinate modulus of x − y
double distance(const BimoduleElement& x, const BimoduleElement& y);

AlgebraElement right_inner(const BimoduleElement& x, const BimoduleElement& y);
AlgebraElement left_inner(const BimoduleElement& x, const BimoduleElement& y);
/// √‖⟨x,x⟩_B‖
double right_norm(const BimoduleElement& x);
/// √‖_A⟨x,x⟩‖
double left_norm(const BimoduleElement& x);

/// M as a right Hilbert module over B: fiber at q is ⊕_p M_pq.
FiberedModule right_module(const FiberedBimodule& m);
/// coordinates of x in right_module(m)
ModuleElement as_right_module_element(const BimoduleElement& x, const FiberedModule& rm);

// ---------------------------------------------------------------------------
// Presented (opaque) bimodules

/// Ambient ℂ^D with the images of the coordinate idempotents of both algebras
/// and the two Gram forms:
///   ⟨v,w⟩_B(q) = v* R_q w,   _A⟨v,w⟩(p) = w* L_p v.
struct PresentedBimodule {
  std::size_t dim = 0;
  std::vector<CMatrix> left_idem;
  std::vector<CMatrix> right_idem;
  std::vector<CMatrix> right_gram;
  std::vector<CMatrix> left_gram;
  std::vector<std::string> left_labels;
  std::vector<std::string> right_labels;

  /// labels default to a0.. and b0..
  Algebra left_algebra() const;
  Algebra right_algebra() const;

  CVector left_act(const AlgebraElement& a, const CVector& v) const;
  CVector right_act(const CVector& v, const AlgebraElement& b) const;
  AlgebraElement right_inner(const CVector& v, const CVector& w) const;
  AlgebraElement left_inner(const CVector& v, const CVector& w) const;
};

/// Wraps a fibered bimodule through a random invertible change of basis S:
/// v = S·c. Singular values of S are log-uniform in [1/spread, spread].
PresentedBimodule present_bimodule(const FiberedBimodule& m, double spread, Rng& rng);

/// Structural checks on the defining matrices plus randomized axiom
/// residuals. Residuals are relative to the scale of the data.
Report validate_bimodule_axioms(const PresentedBimodule& p, double tol = kDefaultTol, std::size_t samples = 50,
                                std::uint64_t seed = 42);
Report validate_bimodule_axioms(const FiberedBimodule& m, double tol = kDefaultTol, std::size_t samples = 50,
                                std::uint64_t seed = 42);

struct Decomposition {
  FiberedBimodule fibered;
  /// c = to_fibered · v
  CMatrix to_fibered;
  /// v = from_fibered · c
  CMatrix from_fibered;
  /// actions, Gram forms and basis round trip
  Report checks;

  BimoduleElement operator()(const CVector& v) const;
  CVector present(const BimoduleElement& x) const;
};

/// Fibers H_ab = range(P_a Q_b). Throws PreconditionError when the families
/// do not commute, a fiber Gram form is degenerate, or the two Gram forms
/// disagree on a fiber.
Decomposition decompose_presented(const PresentedBimodule& p, double tol = kDefaultTol);

// ---------------------------------------------------------------------------
// Imprimitivity

struct BasisTriple {
  /// (a, b, i) of each basis vector
  std::size_t x[3]{};
  std::size_t y[3]{};
  std::size_t z[3]{};
  double residual = 0.0;
};

struct ImprimitivityReport {
  bool imprimitivity = false;
  /// support is the graph of a bijection with every fiber of dimension 1
  bool graph = false;
  /// both-sided fullness by span and _A⟨x,y⟩z = x⟨y,z⟩_B on all basis triples
  bool identity = false;
  bool left_full = false;
  bool right_full = false;
  double identity_residual = 0.0;
  /// worst basis triple when the identity fails
  std::optional<BasisTriple> witness;
  /// left point → right point, when graph holds
  std::vector<std::size_t> bijection;
  std::string reason;
};

/// Throws NumericalError when the two characterizations disagree.
ImprimitivityReport is_imprimitivity(const FiberedBimodule& m, double tol = kDefaultTol);

enum class Side { left, right };

/// One term per spectrum point of the requested side: the first nonempty
/// fiber's first basis vector scaled to unit metric, w = z.
std::vector<std::pair<BimoduleElement, BimoduleElement>> partition_of_unity(const FiberedBimodule& m, Side side);

struct PhiCertificate {
  AlgebraMap phi;
  std::vector<std::pair<BimoduleElement, BimoduleElement>> witness;
  AlgebraElement alpha;
  AlgebraElement beta;
  /// well_defined, unit, functional, intertwining, alpha, alpha_x_beta,
  /// psi_phi, phi_psi
  Report residuals;

  bool pass() const { return residuals.pass(); }
};

/// Σ_j ⟨w_j, a·z_j⟩_B for a family with Σ⟨w_j,z_j⟩_B = 1
AlgebraElement phi_from_partition(const std::vector<std::pair<BimoduleElement, BimoduleElement>>& family,
                                  const AlgebraElement& a);

/// Throws PreconditionError when M is not an imprimitivity bimodule.
PhiCertificate canonical_phi(const FiberedBimodule& m, double tol = kDefaultTol, std::size_t samples = 20,
                             std::uint64_t seed = 42);

/// a ↦ T_a ∈ K(M_B): injectivity, span equality with the θ operators, and
/// *-preservation.
Report left_action_as_compacts(const FiberedBimodule& m, double tol = kDefaultTol, std::size_t samples = 20,
                               std::uint64_t seed = 42);

// ---------------------------------------------------------------------------
// Constructions

struct TensorProduct {
  FiberedBimodule product;
  FiberedBimodule first;
  FiberedBimodule second;

  /// x ⊗ y
  BimoduleElement embed(const BimoduleElement& x, const BimoduleElement& y) const;
};

/// Fiber at (a,c) is ⊕_b M_ab ⊗ N_bc with the Kronecker metric.
TensorProduct rieffel_tensor(const FiberedBimodule& m, const FiberedBimodule& n);

struct Dual {
  FiberedBimodule dual;
  FiberedBimodule original;

  /// the conjugate-linear identification ι: M → M*
  BimoduleElement iota(const BimoduleElement& x) const;
};

/// Fibers transposed, metrics conjugated, ι(x) = conj(x).
Dual rieffel_dual(const FiberedBimodule& m);

struct Twist {
  FiberedBimodule bimodule;
  FiberedBimodule original;
  /// alpha: A' → A, beta: B' → B
  AlgebraMap alpha;
  AlgebraMap beta;

  BimoduleElement operator()(const BimoduleElement& x) const;
};

/// A'-B' bimodule with a'·x = alpha(a')·x and x·b' = x·beta(b'). Both maps
/// must be isomorphisms.
Twist twist_bimodule(const FiberedBimodule& m, const AlgebraMap& alpha, const AlgebraMap& beta);

/// The left module _A M promoted to an A-A bimodule: x·a = a·x and
/// ⟨x,y⟩_A = _A⟨y,x⟩. Fiber (p,p) is ⊕_q M_pq.
FiberedBimodule right_symmetrized(const FiberedBimodule& m);
/// M_B promoted to a B-B bimodule: b·x = x·b and _B⟨x,y⟩ = ⟨y,x⟩_B.
FiberedBimodule left_symmetrized(const FiberedBimodule& m);

/// Right twist of M by φ_M against right_symmetrized(M), and the left twist by
/// φ_M⁻¹ against left_symmetrized(M): structure and action/inner-product
/// formulas on random elements.
Report symmetrization_check(const FiberedBimodule& m, double tol = kDefaultTol, std::size_t samples = 20,
                            std::uint64_t seed = 42);

struct QuotientBimodule {
  FiberedBimodule bimodule;
  QuotientAlgebra left;
  QuotientAlgebra right;
  /// φ_M restricted to the quotients
  AlgebraMap restricted_phi;

  BimoduleElement operator()(const BimoduleElement& x) const;
};

/// M / IM over A/I and B/φ_M(I).
QuotientBimodule quotient_bimodule(const FiberedBimodule& m, const Ideal& ideal, double tol = kDefaultTol);

struct BimoduleIso {
  FiberedBimodule source;
  FiberedBimodule target;
  AlgebraMap left_map;
  AlgebraMap right_map;
  /// indexed like source.index(a,b); U* G_target U = G_source
  std::vector<CMatrix> fiber_unitaries;

  BimoduleElement operator()(const BimoduleElement& x) const;
  /// actions and both inner products on random elements
  Report verify(double tol = kDefaultTol, std::size_t samples = 20, std::uint64_t seed = 42) const;
};

/// Same algebras required (PreconditionError otherwise). Returns an iso when
/// the fiber dimensions agree pointwise.
std::optional<BimoduleIso> bimodule_isomorphic(const FiberedBimodule& m, const FiberedBimodule& n,
                                               double tol = kDefaultTol);

}  // namespace morita
