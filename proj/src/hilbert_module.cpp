#include "morita/hilbert_module.hpp"

#include "morita/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace morita {

void check_metric(const CMatrix& g, std::size_t d, double tol, const std::string& where) {
  const auto n = static_cast<Eigen::Index>(d);
  if (g.rows() != n || g.cols() != n) {
    std::ostringstream msg;
    msg << where << ": metric is " << g.rows() << "x" << g.cols() << ", expected " << d << "x" << d;
    throw PreconditionError(msg.str());
  }
  if (d == 0) return;
  const double scale = std::max(1.0, g.norm());
  const double asym = (g - g.adjoint()).norm();
  if (asym > tol * scale) {
    std::ostringstream msg;
    msg << where << ": metric is not Hermitian (||G - G*|| = " << asym << ")";
    throw PreconditionError(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
  const double low = es.eigenvalues()(0);
  if (!(low > tol)) {
    std::ostringstream msg;
    msg << where << ": metric is not positive definite (smallest eigenvalue " << low << ")";
    throw PreconditionError(msg.str());
  }
}

FiberedModule::FiberedModule(Algebra base, std::vector<std::size_t> dims, std::vector<CMatrix> metrics, double tol) {
  if (dims.size() != base.dim())
    throw PreconditionError("fiber dimension list has " + std::to_string(dims.size()) + " entries for " +
                            std::to_string(base.dim()) + " points");
  if (metrics.empty()) {
    for (auto d : dims) metrics.push_back(CMatrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  } else if (metrics.size() != dims.size()) {
    throw PreconditionError("metric list length does not match the number of points");
  }
  for (std::size_t p = 0; p < dims.size(); ++p) check_metric(metrics[p], dims[p], tol, "fiber " + std::to_string(p));
  data_ = std::make_shared<const Data>(Data{std::move(base), std::move(dims), std::move(metrics)});
}

std::size_t FiberedModule::total_dim() const {
  std::size_t t = 0;
  for (auto d : data_->dims) t += d;
  return t;
}

bool operator==(const FiberedModule& a, const FiberedModule& b) {
  if (a.data_ == b.data_) return true;
  if (!(a.base() == b.base()) || a.dims() != b.dims()) return false;
  for (std::size_t p = 0; p < a.points(); ++p)
    if (a.metric(p) != b.metric(p)) return false;
  return true;
}

FiberedModule make_fibered_module(const Algebra& base, std::vector<std::size_t> dims, std::vector<CMatrix> metrics,
                                  double tol) {
  return FiberedModule(base, std::move(dims), std::move(metrics), tol);
}

// ---------------------------------------------------------------------------

ModuleElement::ModuleElement(FiberedModule parent, std::vector<CVector> fibers)
    : parent_(std::move(parent)), fibers_(std::move(fibers)) {
  if (fibers_.size() != parent_.points()) throw PreconditionError("module element has the wrong number of fibers");
  for (std::size_t p = 0; p < fibers_.size(); ++p)
    if (static_cast<std::size_t>(fibers_[p].size()) != parent_.dim(p))
      throw PreconditionError("module element fiber " + std::to_string(p) + " has the wrong length");
}

ModuleElement ModuleElement::zero(const FiberedModule& m) {
  std::vector<CVector> f;
  for (auto d : m.dims()) f.push_back(CVector::Zero(static_cast<Eigen::Index>(d)));
  return {m, std::move(f)};
}

ModuleElement ModuleElement::basis(const FiberedModule& m, std::size_t p, std::size_t i) {
  if (p >= m.points() || i >= m.dim(p)) throw PreconditionError("module basis index out of range");
  auto x = zero(m);
  x.fibers_[p](static_cast<Eigen::Index>(i)) = 1.0;
  return x;
}

ModuleElement ModuleElement::random(const FiberedModule& m, Rng& rng) {
  std::vector<CVector> f;
  for (auto d : m.dims()) f.push_back(random_vector(static_cast<Eigen::Index>(d), rng));
  return {m, std::move(f)};
}

ModuleElement ModuleElement::act(const AlgebraElement& b) const {
  if (!(b.parent() == parent_.base())) throw PreconditionError("right action by an element of another algebra");
  auto f = fibers_;
  for (std::size_t p = 0; p < f.size(); ++p) f[p] *= b[p];
  return {parent_, std::move(f)};
}

namespace {

void require_same(const FiberedModule& a, const FiberedModule& b) {
  if (!(a == b)) throw PreconditionError("module elements belong to different modules");
}

}  // namespace

ModuleElement operator+(const ModuleElement& x, const ModuleElement& y) {
  require_same(x.parent_, y.parent_);
  auto f = x.fibers_;
  for (std::size_t p = 0; p < f.size(); ++p) f[p] += y.fibers_[p];
  return {x.parent_, std::move(f)};
}

ModuleElement operator-(const ModuleElement& x, const ModuleElement& y) {
  require_same(x.parent_, y.parent_);
  auto f = x.fibers_;
  for (std::size_t p = 0; p < f.size(); ++p) f[p] -= y.fibers_[p];
  return {x.parent_, std::move(f)};
}

ModuleElement operator*(Complex s, const ModuleElement& x) {
  auto f = x.fibers_;
  for (auto& v : f) v *= s;
  return {x.parent_, std::move(f)};
}

double distance(const ModuleElement& x, const ModuleElement& y) {
  const auto d = x - y;
  double r = 0.0;
  for (const auto& v : d.fibers())
    if (v.size() > 0) r = std::max(r, v.cwiseAbs().maxCoeff());
  return r;
}

AlgebraElement inner_product(const ModuleElement& x, const ModuleElement& y) {
  require_same(x.parent(), y.parent());
  const auto& m = x.parent();
  CVector v(static_cast<Eigen::Index>(m.points()));
  for (std::size_t p = 0; p < m.points(); ++p) v(static_cast<Eigen::Index>(p)) = x.fiber(p).dot(m.metric(p) * y.fiber(p));
  return {m.base(), std::move(v)};
}

double module_norm(const ModuleElement& x) { return std::sqrt(inner_product(x, x).norm()); }

// ---------------------------------------------------------------------------

ModuleOperator::ModuleOperator(FiberedModule parent, std::vector<CMatrix> blocks)
    : parent_(std::move(parent)), blocks_(std::move(blocks)) {
  if (blocks_.size() != parent_.points()) throw PreconditionError("operator has the wrong number of blocks");
  for (std::size_t p = 0; p < blocks_.size(); ++p) {
    const auto d = static_cast<Eigen::Index>(parent_.dim(p));
    if (blocks_[p].rows() != d || blocks_[p].cols() != d)
      throw PreconditionError("operator block " + std::to_string(p) + " has the wrong shape");
  }
}

ModuleOperator ModuleOperator::identity(const FiberedModule& m) {
  std::vector<CMatrix> b;
  for (auto d : m.dims()) b.push_back(CMatrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  return {m, std::move(b)};
}

ModuleOperator ModuleOperator::zero(const FiberedModule& m) {
  std::vector<CMatrix> b;
  for (auto d : m.dims()) b.push_back(CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  return {m, std::move(b)};
}

ModuleOperator ModuleOperator::random(const FiberedModule& m, Rng& rng) {
  std::vector<CMatrix> b;
  for (auto d : m.dims()) b.push_back(random_matrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), rng));
  return {m, std::move(b)};
}

ModuleElement ModuleOperator::operator()(const ModuleElement& x) const {
  require_same(parent_, x.parent());
  std::vector<CVector> f;
  for (std::size_t p = 0; p < blocks_.size(); ++p) f.push_back(blocks_[p] * x.fiber(p));
  return {parent_, std::move(f)};
}

ModuleOperator operator+(const ModuleOperator& s, const ModuleOperator& t) {
  require_same(s.parent_, t.parent_);
  auto b = s.blocks_;
  for (std::size_t p = 0; p < b.size(); ++p) b[p] += t.blocks_[p];
  return {s.parent_, std::move(b)};
}

ModuleOperator operator-(const ModuleOperator& s, const ModuleOperator& t) {
  require_same(s.parent_, t.parent_);
  auto b = s.blocks_;
  for (std::size_t p = 0; p < b.size(); ++p) b[p] -= t.blocks_[p];
  return {s.parent_, std::move(b)};
}

ModuleOperator operator*(Complex c, const ModuleOperator& t) {
  auto b = t.blocks_;
  for (auto& m : b) m *= c;
  return {t.parent_, std::move(b)};
}

ModuleOperator operator*(const ModuleOperator& s, const ModuleOperator& t) {
  require_same(s.parent_, t.parent_);
  std::vector<CMatrix> b;
  for (std::size_t p = 0; p < s.blocks_.size(); ++p) b.push_back(s.blocks_[p] * t.blocks_[p]);
  return {s.parent_, std::move(b)};
}

double distance(const ModuleOperator& s, const ModuleOperator& t) {
  const auto d = s - t;
  double r = 0.0;
  for (const auto& b : d.blocks()) r = std::max(r, b.norm());
  return r;
}

FullnessWitness is_full(const FiberedModule& m) {
  FullnessWitness w;
  for (std::size_t p = 0; p < m.points(); ++p)
    if (m.dim(p) == 0) w.empty_points.push_back(p);
  w.full = w.empty_points.empty();
  if (!w.full) return w;
  for (std::size_t p = 0; p < m.points(); ++p) {
    auto v = ModuleElement::basis(m, p, 0);
    v = Complex(1.0 / std::sqrt(m.metric(p)(0, 0).real())) * v;
    w.family.emplace_back(v, v);
  }
  return w;
}

ModuleOperator theta(const ModuleElement& x, const ModuleElement& y) {
  require_same(x.parent(), y.parent());
  const auto& m = x.parent();
  std::vector<CMatrix> b;
  for (std::size_t p = 0; p < m.points(); ++p) b.push_back(x.fiber(p) * (y.fiber(p).adjoint() * m.metric(p)));
  return {m, std::move(b)};
}

ModuleOperator endomorphism_adjoint(const ModuleOperator& t) {
  const auto& m = t.parent();
  std::vector<CMatrix> b;
  for (std::size_t p = 0; p < m.points(); ++p) {
    if (m.dim(p) == 0) {
      b.push_back(t.block(p));
      continue;
    }
    const auto& g = m.metric(p);
    b.push_back(g.ldlt().solve(t.block(p).adjoint() * g));
  }
  return {m, std::move(b)};
}

std::size_t finite_rank_span_dim(const FiberedModule& m) {
  std::size_t n = 0;
  for (auto d : m.dims()) n += d * d;
  return n;
}

ModuleElement QuotientModule::operator()(const ModuleElement& x) const {
  std::vector<CVector> f;
  for (auto p : algebra.projection.point_map()) f.push_back(x.fiber(p));
  return {module, std::move(f)};
}

QuotientModule quotient_module(const FiberedModule& m, const Ideal& ideal) {
  auto q = quotient_algebra(m.base(), ideal);
  std::vector<std::size_t> dims;
  std::vector<CMatrix> metrics;
  for (auto p : ideal.kept()) {
    dims.push_back(m.dim(p));
    metrics.push_back(m.metric(p));
  }
  FiberedModule qm(q.algebra, std::move(dims), std::move(metrics), std::numeric_limits<double>::min());
  return {std::move(qm), std::move(q)};
}

ModuleElement TwistedModule::operator()(const ModuleElement& x) const {
  const auto fwd = alpha.pushforward();
  std::vector<CVector> f;
  for (std::size_t p = 0; p < fwd.size(); ++p) f.push_back(x.fiber(fwd[p]));
  return {module, std::move(f)};
}

ModuleElement TwistedModule::untwist(const ModuleElement& x) const {
  const auto& pm = alpha.point_map();
  std::vector<CVector> f;
  for (std::size_t q = 0; q < pm.size(); ++q) f.push_back(x.fiber(pm[q]));
  return {original, std::move(f)};
}

ModuleOperator TwistedModule::operator()(const ModuleOperator& t) const {
  const auto fwd = alpha.pushforward();
  std::vector<CMatrix> b;
  for (std::size_t p = 0; p < fwd.size(); ++p) b.push_back(t.block(fwd[p]));
  return {module, std::move(b)};
}

TwistedModule twist_right(const FiberedModule& m, const AlgebraMap& alpha) {
  if (!(alpha.target() == m.base())) throw PreconditionError("twist map must land in the module's base algebra");
  if (!alpha.is_bijective()) throw PreconditionError("twist map is not an isomorphism");
  const auto fwd = alpha.pushforward();
  std::vector<std::size_t> dims;
  std::vector<CMatrix> metrics;
  for (auto q : fwd) {
    dims.push_back(m.dim(q));
    metrics.push_back(m.metric(q));
  }
  FiberedModule tm(alpha.source(), std::move(dims), std::move(metrics), std::numeric_limits<double>::min());
  return {std::move(tm), m, alpha};
}

}  // namespace morita
