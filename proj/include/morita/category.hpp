#pragma once

// Concrete C*-categories: blocks C_AB = p_A·S·p_B of a *-subalgebra S of
// M_D(ℂ), composition = matrix product, involution = adjoint.
// Block inner products: ⟨x,y⟩_B = x*y and _A⟨x,y⟩ = xy*.

#include "morita/bimodule.hpp"
#include "morita/spectral.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace morita {

struct CStarCategory {
  std::size_t ambient_dim = 0;
  std::vector<std::string> labels;
  std::vector<CMatrix> projections;
  /// spanning set of the ambient *-algebra; empty means all of M_D
  std::vector<CMatrix> ambient;
  double tol = kDefaultTol;

  std::size_t objects() const noexcept { return projections.size(); }
  std::size_t index_of(const std::string& label) const;
};

/// Throws PreconditionError for a non-projection, a non-orthogonal pair, a sum
/// other than the identity, or an ambient family that is visibly not a
/// *-algebra containing the projections. Labels default to O0, O1, ...
CStarCategory category_from_projections(std::vector<CMatrix> projections, std::vector<std::string> labels = {},
                                        std::vector<CMatrix> ambient = {}, double tol = kDefaultTol);

/// Frobenius-orthonormal basis of C_AB as D×D matrices.
std::vector<CMatrix> block_basis(const CStarCategory& c, std::size_t a, std::size_t b);

struct FullnessReport {
  bool full = false;
  /// span C_AB∘C_BC = C_AC for every triple
  bool triple_full = false;
  /// span C_AB∘C_BA = C_AA for every pair
  bool pairwise_full = false;
  /// first failing triple
  std::optional<std::array<std::size_t, 3>> witness;
  Report checks;
};

/// Throws NumericalError if the triple and pairwise conditions disagree.
FullnessReport check_full(const CStarCategory& c);

struct CommutativityReport {
  bool commutative = false;
  double residual = 0.0;
  /// object with the largest commutator
  std::size_t worst_object = 0;
};

CommutativityReport check_commutative(const CStarCategory& c, std::size_t samples = 20, std::uint64_t seed = 42);

/// C_AB as a bimodule over the Gel'fand spectra of C_AA and C_BB.
struct BlockBimodule {
  std::size_t a = 0;
  std::size_t b = 0;
  std::vector<CMatrix> basis;
  PresentedBimodule presented;
  Decomposition decomposition;
  PhiCertificate certificate;

  const FiberedBimodule& fibered() const { return decomposition.fibered; }
  /// fibered coordinates of a block matrix
  BimoduleElement element(const CMatrix& x) const;
  CMatrix matrix(const BimoduleElement& x) const;
};

struct PhiFamily {
  std::size_t objects = 0;
  /// per object: isometry onto range(p_A) and the spectral data of C_AA on it
  std::vector<CMatrix> isometries;
  std::vector<GelfandData> gelfand;
  std::vector<Algebra> algebras;
  /// row-major over ordered pairs (A,B)
  std::vector<BlockBimodule> blocks;
  /// phi[A·k+B] = φ_BA : C(Sp C_AA) → C(Sp C_BB)
  std::vector<AlgebraMap> phi;
  /// cocycle identities and block inner-product formulas
  Report checks;

  const BlockBimodule& block(std::size_t a, std::size_t b) const { return blocks.at(a * objects + b); }
  const AlgebraMap& map(std::size_t a, std::size_t b) const { return phi.at(a * objects + b); }
  AlgebraElement transform(std::size_t a, const CMatrix& x) const;
  CMatrix embed(std::size_t a, const AlgebraElement& f) const;
  /// φ_BA at the value level through the block's partition of unity
  CMatrix apply(std::size_t a, std::size_t b, const CMatrix& x) const;
  bool pass() const { return checks.pass(); }
};

/// Throws PreconditionError unless the category is full and commutative.
PhiFamily canonical_phi_family(const CStarCategory& c, std::size_t samples = 10, std::uint64_t seed = 42);

struct PointFunctor {
  std::size_t base_object = 0;
  std::size_t character = 0;
  /// character of C_AA used on each object
  std::vector<std::size_t> points;
  /// unit vectors in ℂ^D; ω(x) = u_A* x u_B for x ∈ C_AB
  std::vector<CVector> frames;

  Complex operator()(std::size_t a, std::size_t b, const CMatrix& x) const;
};

/// frame_seed 0 keeps the transported frames; other seeds add a phase per
/// object.
PointFunctor make_point_functor(const CStarCategory& c, const PhiFamily& f, std::size_t base_object,
                                std::size_t character, std::uint64_t frame_seed = 0);

Report verify_functor_invariance(const CStarCategory& c, const PhiFamily& f, const PointFunctor& omega,
                                 std::size_t samples = 20, std::uint64_t seed = 42);

struct PicardRelation {
  std::size_t objects = 0;
  /// classes[A·k+B]: Sp(C_AA) → Sp(C_BB)
  std::vector<std::vector<std::size_t>> classes;
  Report checks;

  const std::vector<std::size_t>& operator()(std::size_t a, std::size_t b) const { return classes.at(a * objects + b); }
};

PicardRelation picard_relation(const CStarCategory& c, const PhiFamily& f);

/// Block-wise action of a functor: x ∈ C_AB ↦ Φ(x) ∈ D_{ΦA ΦB}.
using BlockMap = std::function<CMatrix(std::size_t a, std::size_t b, const CMatrix& x)>;

struct PicardMap {
  std::vector<std::size_t> object_map;
  /// per object: Sp(C_AA) → Sp(D_ΦAΦA)
  std::vector<std::vector<std::size_t>> point_maps;
  Report checks;

  bool pass() const { return checks.pass(); }
};

PicardMap picard_of_functor(const CStarCategory& c, const PhiFamily& fc, const CStarCategory& d, const PhiFamily& fd,
                            const std::vector<std::size_t>& object_map, const BlockMap& functor,
                            std::size_t samples = 10, std::uint64_t seed = 42);

struct LinkingCategory {
  CStarCategory category;
  PhiFamily family;
  /// corner spectra identified with the bimodule's algebras
  AlgebraMap left_corner;
  AlgebraMap right_corner;
  Report checks;
};

/// 2-object category in M_{m+n} with corners ≅ A, B and off-diagonal corner ≅ M.
LinkingCategory linking_category(const FiberedBimodule& m, double tol = kDefaultTol);

Report tensor_equals_composition(const CStarCategory& c, const PhiFamily& f, std::size_t samples = 10,
                                 std::uint64_t seed = 42);

Report dual_equals_involution(const CStarCategory& c, const PhiFamily& f, std::size_t samples = 10,
                              std::uint64_t seed = 42);

}  // namespace morita
