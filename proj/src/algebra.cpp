#include "morita/algebra.hpp"

#include "morita/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace morita {

// ---------------------------------------------------------------------------
// Algebra

Algebra::Algebra(std::vector<std::string> labels) {
  if (labels.empty()) throw PreconditionError("algebra needs at least one spectrum point");
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second) throw PreconditionError("duplicate spectrum label '" + l + "'");
  labels_ = std::make_shared<const std::vector<std::string>>(std::move(labels));
}

std::optional<std::size_t> Algebra::index_of(std::string_view label) const {
  const auto& ls = *labels_;
  for (std::size_t i = 0; i < ls.size(); ++i)
    if (ls[i] == label) return i;
  return std::nullopt;
}

bool operator==(const Algebra& a, const Algebra& b) {
  return a.labels_ == b.labels_ || *a.labels_ == *b.labels_;
}

Algebra make_algebra(std::vector<std::string> labels) { return Algebra(std::move(labels)); }

Algebra numbered_algebra(std::size_t n, std::string_view prefix) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::string(prefix) + std::to_string(i));
  return Algebra(std::move(labels));
}

// ---------------------------------------------------------------------------
// AlgebraElement

AlgebraElement::AlgebraElement(Algebra parent, CVector values)
    : parent_(std::move(parent)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != parent_.dim())
    throw PreconditionError("element length " + std::to_string(values_.size()) + " does not match algebra dimension " +
                            std::to_string(parent_.dim()));
}

AlgebraElement AlgebraElement::zero(const Algebra& a) {
  return {a, CVector::Zero(static_cast<Eigen::Index>(a.dim()))};
}

AlgebraElement AlgebraElement::unit(const Algebra& a) {
  return {a, CVector::Ones(static_cast<Eigen::Index>(a.dim()))};
}

AlgebraElement AlgebraElement::idempotent(const Algebra& a, std::size_t point) {
  if (point >= a.dim()) throw PreconditionError("idempotent index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(a.dim()));
  v(static_cast<Eigen::Index>(point)) = 1.0;
  return {a, std::move(v)};
}

AlgebraElement AlgebraElement::random(const Algebra& a, Rng& rng) {
  return {a, random_vector(static_cast<Eigen::Index>(a.dim()), rng)};
}

AlgebraElement AlgebraElement::adjoint() const { return {parent_, values_.conjugate()}; }

double AlgebraElement::norm() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

bool AlgebraElement::is_positive(double tol) const {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (std::abs(values_(i).imag()) > tol) return false;
    if (values_(i).real() < -tol) return false;
  }
  return true;
}

namespace {

void require_same_parent(const AlgebraElement& x, const AlgebraElement& y) {
  if (!(x.parent() == y.parent())) throw PreconditionError("algebra elements have different parent algebras");
}

}  // namespace

AlgebraElement operator+(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_parent(x, y);
  return {x.parent_, x.values_ + y.values_};
}

AlgebraElement operator-(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_parent(x, y);
  return {x.parent_, x.values_ - y.values_};
}

AlgebraElement operator*(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_parent(x, y);
  return {x.parent_, x.values_.cwiseProduct(y.values_)};
}

AlgebraElement operator*(Complex s, const AlgebraElement& x) { return {x.parent_, s * x.values_}; }

double distance(const AlgebraElement& x, const AlgebraElement& y) { return (x - y).norm(); }

// ---------------------------------------------------------------------------
// Ideal

Ideal::Ideal(Algebra parent, std::vector<std::size_t> kept) : parent_(std::move(parent)), kept_(std::move(kept)) {
  std::sort(kept_.begin(), kept_.end());
  kept_.erase(std::unique(kept_.begin(), kept_.end()), kept_.end());
  for (auto p : kept_)
    if (p >= parent_.dim()) throw PreconditionError("ideal point index " + std::to_string(p) + " out of range");
}

std::vector<std::size_t> Ideal::support() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < parent_.dim(); ++p)
    if (!std::binary_search(kept_.begin(), kept_.end(), p)) out.push_back(p);
  return out;
}

bool Ideal::contains(const AlgebraElement& x, double tol) const {
  if (!(x.parent() == parent_)) throw PreconditionError("element does not belong to the ideal's algebra");
  for (auto p : kept_)
    if (std::abs(x[p]) > tol) return false;
  return true;
}

Ideal ideal_from_points(const Algebra& a, std::vector<std::size_t> kept) { return Ideal(a, std::move(kept)); }

// ---------------------------------------------------------------------------
// AlgebraMap

AlgebraMap::AlgebraMap(Algebra source, Algebra target, std::vector<std::size_t> point_map)
    : source_(std::move(source)), target_(std::move(target)), point_map_(std::move(point_map)) {
  if (point_map_.size() != target_.dim()) throw PreconditionError("point map length must equal target dimension");
  for (auto p : point_map_)
    if (p >= source_.dim()) throw PreconditionError("point map value out of range");
}

AlgebraMap AlgebraMap::identity(const Algebra& a) {
  std::vector<std::size_t> pm(a.dim());
  std::iota(pm.begin(), pm.end(), 0);
  return {a, a, std::move(pm)};
}

AlgebraMap AlgebraMap::from_pushforward(Algebra source, Algebra target, const std::vector<std::size_t>& forward) {
  if (forward.size() != source.dim() || source.dim() != target.dim())
    throw PreconditionError("pushforward must be a bijection between equal-size spectra");
  std::vector<std::size_t> pm(target.dim(), target.dim());
  for (std::size_t p = 0; p < forward.size(); ++p) {
    if (forward[p] >= target.dim() || pm[forward[p]] != target.dim())
      throw PreconditionError("pushforward is not a bijection");
    pm[forward[p]] = p;
  }
  return {std::move(source), std::move(target), std::move(pm)};
}

AlgebraElement AlgebraMap::operator()(const AlgebraElement& a) const {
  if (!(a.parent() == source_)) throw PreconditionError("algebra map applied to an element of another algebra");
  CVector v(static_cast<Eigen::Index>(target_.dim()));
  for (std::size_t q = 0; q < point_map_.size(); ++q) v(static_cast<Eigen::Index>(q)) = a[point_map_[q]];
  return {target_, std::move(v)};
}

bool AlgebraMap::is_bijective() const {
  if (source_.dim() != target_.dim()) return false;
  std::vector<bool> hit(source_.dim(), false);
  for (auto p : point_map_) {
    if (hit[p]) return false;
    hit[p] = true;
  }
  return true;
}

std::vector<std::size_t> AlgebraMap::pushforward() const {
  if (!is_bijective()) throw PreconditionError("algebra map is not bijective");
  std::vector<std::size_t> fwd(source_.dim());
  for (std::size_t q = 0; q < point_map_.size(); ++q) fwd[point_map_[q]] = q;
  return fwd;
}

AlgebraMap AlgebraMap::inverse() const { return {target_, source_, pushforward()}; }

bool operator==(const AlgebraMap& f, const AlgebraMap& g) {
  return f.source_ == g.source_ && f.target_ == g.target_ && f.point_map_ == g.point_map_;
}

AlgebraMap compose(const AlgebraMap& outer, const AlgebraMap& inner) {
  if (!(inner.target() == outer.source())) throw PreconditionError("cannot compose algebra maps: algebra mismatch");
  std::vector<std::size_t> pm(outer.target().dim());
  for (std::size_t q = 0; q < pm.size(); ++q) pm[q] = inner.point_map()[outer.point_map()[q]];
  return {inner.source(), outer.target(), std::move(pm)};
}

bool check_isomorphism(const AlgebraMap& phi, double tol) {
  const Algebra& a = phi.source();
  if (distance(phi(AlgebraElement::unit(a)), AlgebraElement::unit(phi.target())) > tol) return false;
  for (std::size_t p = 0; p < a.dim(); ++p) {
    const auto e = AlgebraElement::idempotent(a, p);
    const auto img = phi(e);
    if (distance(img * img, img) > tol || distance(img.adjoint(), img) > tol) return false;
  }
  return phi.is_bijective();
}

QuotientAlgebra quotient_algebra(const Algebra& a, const Ideal& ideal) {
  if (!(ideal.parent() == a)) throw PreconditionError("ideal belongs to a different algebra");
  if (!ideal.is_proper()) throw PreconditionError("quotient by an improper ideal is the zero algebra, which is not unital here");
  std::vector<std::string> labels;
  for (auto p : ideal.kept()) labels.push_back(a.label(p));
  Algebra q(std::move(labels));
  return {q, AlgebraMap(a, q, ideal.kept())};
}

// ---------------------------------------------------------------------------
// Characters

Complex Character::operator()(const AlgebraElement& a) const {
  if (!(a.parent() == parent)) throw PreconditionError("character evaluated on an element of another algebra");
  return a[point];
}

std::vector<Character> characters(const Algebra& a) {
  std::vector<Character> out;
  for (std::size_t p = 0; p < a.dim(); ++p) out.push_back({a, p, {}});
  return out;
}

std::vector<Character> characters(const GelfandData& g) {
  std::vector<Character> out;
  for (std::size_t k = 0; k < g.characters.size(); ++k) out.push_back({g.spectrum, k, g.characters[k]});
  return out;
}

// ---------------------------------------------------------------------------
// GelfandData

std::size_t GelfandData::offset(std::size_t k) const {
  return std::accumulate(multiplicity.begin(), multiplicity.begin() + static_cast<std::ptrdiff_t>(k), std::size_t{0});
}

CMatrix GelfandData::eigenspace(std::size_t k) const {
  return basis.middleCols(static_cast<Eigen::Index>(offset(k)), static_cast<Eigen::Index>(multiplicity.at(k)));
}

CMatrix GelfandData::projection(std::size_t k) const {
  const CMatrix v = eigenspace(k);
  return v * v.adjoint();
}

CMatrix GelfandData::reconstruct(std::size_t g) const {
  const auto d = static_cast<Eigen::Index>(ambient_dim());
  CVector diag(d);
  Eigen::Index pos = 0;
  for (std::size_t k = 0; k < characters.size(); ++k)
    for (std::size_t i = 0; i < multiplicity[k]; ++i) diag(pos++) = characters[k].at(g);
  return basis * diag.asDiagonal() * basis.adjoint();
}

namespace {

struct Leaf {
  CMatrix vectors;
  std::vector<Complex> tuple;
};

class JointSplitter {
 public:
  JointSplitter(std::vector<CMatrix> candidates, double abs_tol)
      : candidates_(std::move(candidates)), abs_tol_(abs_tol) {}

  void split(const CMatrix& v, std::vector<CMatrix>& leaves) const {
    if (v.cols() <= 1) {
      leaves.push_back(v);
      return;
    }
    double best_gap = -1.0;
    double worst_spread = 0.0;
    Eigen::Index best_cut = 0;
    CMatrix best_vectors;
    for (const auto& c : candidates_) {
      const CMatrix r = v.adjoint() * c * v;
      Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
      const RVector& ev = es.eigenvalues();
      worst_spread = std::max(worst_spread, ev(ev.size() - 1) - ev(0));
      for (Eigen::Index i = 0; i + 1 < ev.size(); ++i) {
        const double gap = ev(i + 1) - ev(i);
        if (gap > best_gap) {
          best_gap = gap;
          best_cut = i + 1;
          best_vectors = es.eigenvectors();
        }
      }
    }
    if (worst_spread <= abs_tol_) {
      leaves.push_back(v);
      return;
    }
    if (best_gap <= abs_tol_) {
      std::ostringstream msg;
      msg << "ambiguous joint spectrum: eigenvalue spread " << worst_spread << " exceeds tol " << abs_tol_
          << " but no gap does";
      throw NumericalError(msg.str());
    }
    const CMatrix rotated = v * best_vectors;
    split(rotated.leftCols(best_cut), leaves);
    split(rotated.rightCols(rotated.cols() - best_cut), leaves);
  }

 private:
  std::vector<CMatrix> candidates_;
  double abs_tol_;
};

double tuple_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// lexicographic on (re, im) per generator; components within tol compare equal
bool tuple_less(const std::vector<Complex>& a, const std::vector<Complex>& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].real() - b[i].real()) > tol) return a[i].real() < b[i].real();
    if (std::abs(a[i].imag() - b[i].imag()) > tol) return a[i].imag() < b[i].imag();
  }
  return false;
}

}  // namespace

GelfandData joint_diagonalize(std::span<const CMatrix> generators, double tol, std::uint64_t seed) {
  if (generators.empty()) throw PreconditionError("joint_diagonalize needs at least one generator");
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  const Eigen::Index d = generators[0].rows();
  if (d == 0) throw PreconditionError("generators must be non-empty matrices");
  double scale = 0.0;
  for (const auto& g : generators) {
    if (g.rows() != d || g.cols() != d) throw PreconditionError("generators must be square of equal size");
    scale = std::max(scale, operator_norm(g));
  }
  if (scale == 0.0) scale = 1.0;
  const double abs_tol = tol * scale;

  for (std::size_t i = 0; i < generators.size(); ++i) {
    const auto& x = generators[i];
    const double defect = (x * x.adjoint() - x.adjoint() * x).norm();
    if (defect > tol * scale * scale) {
      std::ostringstream msg;
      msg << "generator " << i << " is not normal: ||XX*-X*X|| = " << defect;
      throw PreconditionError(msg.str());
    }
    for (std::size_t j = i + 1; j < generators.size(); ++j) {
      const double comm = (x * generators[j] - generators[j] * x).norm();
      if (comm > tol * scale * scale) {
        std::ostringstream msg;
        msg << "generators " << i << " and " << j << " do not commute: ||[X,Y]|| = " << comm;
        throw PreconditionError(msg.str());
      }
    }
  }

  // Hermitian parts, led by a seeded random real combination of all of them
  std::vector<CMatrix> parts;
  for (const auto& x : generators) {
    parts.push_back(0.5 * (x + x.adjoint()));
    parts.push_back(Complex(0.0, -0.5) * (x - x.adjoint()));
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  CMatrix combo = CMatrix::Zero(d, d);
  for (const auto& p : parts) combo += coef(rng) * p;
  std::vector<CMatrix> candidates;
  candidates.push_back(std::move(combo));
  for (auto& p : parts) candidates.push_back(std::move(p));

  std::vector<CMatrix> raw;
  JointSplitter(std::move(candidates), abs_tol).split(CMatrix::Identity(d, d), raw);

  std::vector<Leaf> leaves;
  for (auto& v : raw) {
    Leaf leaf{std::move(v), {}};
    const double m = static_cast<double>(leaf.vectors.cols());
    for (const auto& g : generators) leaf.tuple.push_back((leaf.vectors.adjoint() * g * leaf.vectors).trace() / m);
    leaves.push_back(std::move(leaf));
  }

  // single-linkage merge of tuples closer than tol
  std::vector<std::size_t> group(leaves.size());
  std::iota(group.begin(), group.end(), 0);
  auto find = [&](std::size_t i) {
    while (group[i] != i) i = group[i] = group[group[i]];
    return i;
  };
  for (std::size_t i = 0; i < leaves.size(); ++i)
    for (std::size_t j = i + 1; j < leaves.size(); ++j)
      if (tuple_distance(leaves[i].tuple, leaves[j].tuple) <= abs_tol) group[find(i)] = find(j);

  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> root_slot(leaves.size(), leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto r = find(i);
    if (root_slot[r] == leaves.size()) {
      root_slot[r] = members.size();
      members.emplace_back();
    }
    members[root_slot[r]].push_back(i);
  }

  struct Group {
    CMatrix vectors;
    std::vector<Complex> tuple;
  };
  std::vector<Group> groups;
  for (const auto& idx : members) {
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        if (tuple_distance(leaves[idx[a]].tuple, leaves[idx[b]].tuple) > abs_tol) {
          std::ostringstream msg;
          msg << "ambiguous joint spectrum: joint eigenvalues chain within tol " << abs_tol
              << " but their extremes differ by " << tuple_distance(leaves[idx[a]].tuple, leaves[idx[b]].tuple);
          throw NumericalError(msg.str());
        }
    Eigen::Index cols = 0;
    for (auto i : idx) cols += leaves[i].vectors.cols();
    Group g{CMatrix(d, cols), std::vector<Complex>(generators.size(), Complex{})};
    Eigen::Index pos = 0;
    for (auto i : idx) {
      const auto& lv = leaves[i].vectors;
      g.vectors.middleCols(pos, lv.cols()) = lv;
      pos += lv.cols();
      for (std::size_t t = 0; t < g.tuple.size(); ++t)
        g.tuple[t] += leaves[i].tuple[t] * static_cast<double>(lv.cols());
    }
    for (auto& t : g.tuple) t /= static_cast<double>(cols);
    groups.push_back(std::move(g));
  }

  std::stable_sort(groups.begin(), groups.end(),
                   [&](const Group& a, const Group& b) { return tuple_less(a.tuple, b.tuple, abs_tol); });

  GelfandData out;
  out.generators.assign(generators.begin(), generators.end());
  out.tol = tol;
  out.abs_tol = abs_tol;
  out.basis.resize(d, d);
  Eigen::Index pos = 0;
  for (auto& g : groups) {
    out.basis.middleCols(pos, g.vectors.cols()) = g.vectors;
    pos += g.vectors.cols();
    out.multiplicity.push_back(static_cast<std::size_t>(g.vectors.cols()));
    out.characters.push_back(std::move(g.tuple));
  }
  out.spectrum = numbered_algebra(out.characters.size(), "x");
  return out;
}

AlgebraElement gelfand_transform(const GelfandData& g, const CMatrix& element) {
  const auto d = static_cast<Eigen::Index>(g.ambient_dim());
  if (element.rows() != d || element.cols() != d)
    throw PreconditionError("element size does not match the presented algebra");
  CVector values(static_cast<Eigen::Index>(g.characters.size()));
  CMatrix rebuilt = CMatrix::Zero(d, d);
  for (std::size_t k = 0; k < g.characters.size(); ++k) {
    const CMatrix v = g.eigenspace(k);
    const Complex val = (v.adjoint() * element * v).trace() / static_cast<double>(v.cols());
    values(static_cast<Eigen::Index>(k)) = val;
    rebuilt += val * (v * v.adjoint());
  }
  const double scale = std::max(operator_norm(element), g.abs_tol / g.tol);
  const double off = (element - rebuilt).norm();
  if (off > g.tol * scale) {
    std::ostringstream msg;
    msg << "element is outside the presented algebra: off-block mass " << off;
    throw PreconditionError(msg.str());
  }
  return {g.spectrum, std::move(values)};
}

CMatrix inverse_gelfand(const GelfandData& g, const AlgebraElement& f) {
  if (!(f.parent() == g.spectrum)) throw PreconditionError("function is not on this Gel'fand spectrum");
  const auto d = static_cast<Eigen::Index>(g.ambient_dim());
  CMatrix out = CMatrix::Zero(d, d);
  for (std::size_t k = 0; k < g.characters.size(); ++k) out += f[k] * g.projection(k);
  return out;
}

}  // namespace morita
