#pragma once

// Right Hilbert modules over a diagonal algebra, one Hilbert fiber per
// spectrum point. ⟨x,y⟩(p) = x_p* G_p y_p, linear in the second slot.

#include "morita/algebra.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace morita {

/// Throws PreconditionError unless `g` is a Hermitian positive-definite d×d
/// matrix: ‖G − G*‖ ≤ tol·max(1,‖G‖) and smallest eigenvalue > tol.
void check_metric(const CMatrix& g, std::size_t d, double tol, const std::string& where);

class FiberedModule {
 public:
  /// Empty `metrics` means identity metrics.
  FiberedModule(Algebra base, std::vector<std::size_t> dims, std::vector<CMatrix> metrics = {},
                double tol = kDefaultTol);

  const Algebra& base() const noexcept { return data_->base; }
  std::size_t points() const noexcept { return data_->dims.size(); }
  std::size_t dim(std::size_t p) const { return data_->dims.at(p); }
  const std::vector<std::size_t>& dims() const noexcept { return data_->dims; }
  const CMatrix& metric(std::size_t p) const { return data_->metrics.at(p); }
  std::size_t total_dim() const;

  friend bool operator==(const FiberedModule& a, const FiberedModule& b);

 private:
  struct Data {
    Algebra base;
    std::vector<std::size_t> dims;
    std::vector<CMatrix> metrics;
  };
  std::shared_ptr<const Data> data_;
};

FiberedModule make_fibered_module(const Algebra& base, std::vector<std::size_t> dims,
                                  std::vector<CMatrix> metrics = {}, double tol = kDefaultTol);

class ModuleElement {
 public:
  ModuleElement(FiberedModule parent, std::vector<CVector> fibers);

  static ModuleElement zero(const FiberedModule& m);
  static ModuleElement basis(const FiberedModule& m, std::size_t p, std::size_t i);
  static ModuleElement random(const FiberedModule& m, Rng& rng);

  const FiberedModule& parent() const noexcept { return parent_; }
  const CVector& fiber(std::size_t p) const { return fibers_.at(p); }
  const std::vector<CVector>& fibers() const noexcept { return fibers_; }

  /// x·b
  ModuleElement act(const AlgebraElement& b) const;

  friend ModuleElement operator+(const ModuleElement& x, const ModuleElement& y);
  friend ModuleElement operator-(const ModuleElement& x, const ModuleElement& y);
  friend ModuleElement operator*(Complex s, const ModuleElement& x);

 private:
  FiberedModule parent_;
  std::vector<CVector> fibers_;
};

/// largest coordinate modulus of x − y
double distance(const ModuleElement& x, const ModuleElement& y);

AlgebraElement inner_product(const ModuleElement& x, const ModuleElement& y);
double module_norm(const ModuleElement& x);

/// Block-diagonal B-linear operator on a fibered module.
class ModuleOperator {
 public:
  ModuleOperator(FiberedModule parent, std::vector<CMatrix> blocks);

  static ModuleOperator identity(const FiberedModule& m);
  static ModuleOperator zero(const FiberedModule& m);
  static ModuleOperator random(const FiberedModule& m, Rng& rng);

  const FiberedModule& parent() const noexcept { return parent_; }
  const CMatrix& block(std::size_t p) const { return blocks_.at(p); }
  const std::vector<CMatrix>& blocks() const noexcept { return blocks_; }

  ModuleElement operator()(const ModuleElement& x) const;

  friend ModuleOperator operator+(const ModuleOperator& s, const ModuleOperator& t);
  friend ModuleOperator operator-(const ModuleOperator& s, const ModuleOperator& t);
  friend ModuleOperator operator*(Complex c, const ModuleOperator& t);
  /// composition s∘t
  friend ModuleOperator operator*(const ModuleOperator& s, const ModuleOperator& t);

 private:
  FiberedModule parent_;
  std::vector<CMatrix> blocks_;
};

/// max Frobenius norm of blockwise differences
double distance(const ModuleOperator& s, const ModuleOperator& t);

struct FullnessWitness {
  bool full = false;
  /// Σ⟨w_j, z_j⟩ = 1 when full
  std::vector<std::pair<ModuleElement, ModuleElement>> family;
  /// empty fibers when not full
  std::vector<std::size_t> empty_points;
};

FullnessWitness is_full(const FiberedModule& m);

/// z ↦ x·⟨y,z⟩
ModuleOperator theta(const ModuleElement& x, const ModuleElement& y);

/// Metric adjoint per fiber: G⁻¹ T* G.
ModuleOperator endomorphism_adjoint(const ModuleOperator& t);

/// Σ_p dim(p)²
std::size_t finite_rank_span_dim(const FiberedModule& m);

struct QuotientModule {
  FiberedModule module;
  QuotientAlgebra algebra;

  /// x + M·I
  ModuleElement operator()(const ModuleElement& x) const;
};

QuotientModule quotient_module(const FiberedModule& m, const Ideal& ideal);

/// M twisted along an isomorphism alpha: A → B; the result is a module over A.
struct TwistedModule {
  FiberedModule module;
  FiberedModule original;
  AlgebraMap alpha;

  /// the same vector viewed in the twisted module
  ModuleElement operator()(const ModuleElement& x) const;
  ModuleElement untwist(const ModuleElement& x) const;
  ModuleOperator operator()(const ModuleOperator& t) const;
};

TwistedModule twist_right(const FiberedModule& m, const AlgebraMap& alpha);

}  // namespace morita
