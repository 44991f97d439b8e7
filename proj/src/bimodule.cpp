#include "morita/bimodule.hpp"

#include "morita/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace morita {

namespace {

constexpr double kTrusted = std::numeric_limits<double>::min();

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix block_diagonal(const std::vector<CMatrix>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  CMatrix out = CMatrix::Zero(n, n);
  Eigen::Index pos = 0;
  for (const auto& b : blocks) {
    out.block(pos, pos, b.rows(), b.cols()) = b;
    pos += b.rows();
  }
  return out;
}

// distance scaled by the larger of the two values (at least 1)
double rel(const AlgebraElement& u, const AlgebraElement& v) {
  return distance(u, v) / std::max({1.0, u.norm(), v.norm()});
}

double coord_norm(const BimoduleElement& x) {
  return x.coords().size() == 0 ? 0.0 : x.coords().cwiseAbs().maxCoeff();
}

double rel(const BimoduleElement& u, const BimoduleElement& v) {
  return distance(u, v) / std::max({1.0, coord_norm(u), coord_norm(v)});
}

double metric_scale(const FiberedBimodule& m) {
  double s = 1.0;
  for (const auto& f : m.fibers()) s = std::max(s, operator_norm(f.metric));
  return s;
}

std::string pair_name(std::size_t a, std::size_t b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// FiberedBimodule

FiberedBimodule::FiberedBimodule(Algebra left, Algebra right, const std::vector<FiberSpec>& fibers, double tol) {
  const std::size_t m = left.dim();
  const std::size_t n = right.dim();
  Data d{std::move(left), std::move(right), std::vector<std::size_t>(m * n, 0), std::vector<CMatrix>(m * n),
         std::vector<std::size_t>(m * n, 0), 0, {}};
  std::vector<bool> seen(m * n, false);
  for (const auto& f : fibers) {
    if (f.a >= m || f.b >= n) throw PreconditionError("fiber " + pair_name(f.a, f.b) + " is out of range");
    const std::size_t k = f.a * n + f.b;
    if (seen[k]) throw PreconditionError("fiber " + pair_name(f.a, f.b) + " listed twice");
    seen[k] = true;
    d.dims[k] = f.dim;
    const auto dd = static_cast<Eigen::Index>(f.dim);
    d.metrics[k] = f.metric.size() == 0 && f.dim > 0 ? CMatrix(CMatrix::Identity(dd, dd)) : f.metric;
    if (f.dim == 0) d.metrics[k] = CMatrix(0, 0);
    check_metric(d.metrics[k], f.dim, tol, "fiber " + pair_name(f.a, f.b));
  }
  for (std::size_t k = 0; k < m * n; ++k) {
    if (!seen[k]) d.metrics[k] = CMatrix(0, 0);
    d.offsets[k] = d.total;
    d.total += d.dims[k];
    if (d.dims[k] > 0) d.support.emplace_back(k / n, k % n);
  }
  data_ = std::make_shared<const Data>(std::move(d));
}

std::size_t FiberedBimodule::index(std::size_t a, std::size_t b) const {
  if (a >= m() || b >= n()) throw PreconditionError("fiber index " + pair_name(a, b) + " out of range");
  return a * n() + b;
}

std::vector<FiberSpec> FiberedBimodule::fibers() const {
  std::vector<FiberSpec> out;
  for (const auto& [a, b] : support()) out.push_back({a, b, dim(a, b), metric(a, b)});
  return out;
}

bool operator==(const FiberedBimodule& x, const FiberedBimodule& y) {
  if (x.data_ == y.data_) return true;
  if (!(x.left() == y.left()) || !(x.right() == y.right())) return false;
  return x.data_->dims == y.data_->dims && x.data_->metrics == y.data_->metrics;
}

FiberedBimodule make_fibered_bimodule(const Algebra& left, const Algebra& right, const std::vector<FiberSpec>& fibers,
                                      double tol) {
  return FiberedBimodule(left, right, fibers, tol);
}

FiberedBimodule identity_bimodule(const Algebra& a) {
  std::vector<FiberSpec> f;
  for (std::size_t p = 0; p < a.dim(); ++p) f.push_back({p, p, 1, {}});
  return FiberedBimodule(a, a, f);
}

FiberedBimodule graph_bimodule(const Algebra& left, const Algebra& right, const std::vector<std::size_t>& forward,
                               const std::vector<double>& metrics) {
  if (forward.size() != left.dim()) throw PreconditionError("graph map must have one entry per left point");
  if (!metrics.empty() && metrics.size() != forward.size())
    throw PreconditionError("graph metrics must have one entry per left point");
  std::vector<FiberSpec> f;
  for (std::size_t p = 0; p < forward.size(); ++p) {
    CMatrix g(1, 1);
    g(0, 0) = metrics.empty() ? 1.0 : metrics[p];
    f.push_back({p, forward[p], 1, g});
  }
  return FiberedBimodule(left, right, f);
}

// ---------------------------------------------------------------------------
// Elements

BimoduleElement::BimoduleElement(FiberedBimodule parent, CVector coords)
    : parent_(std::move(parent)), coords_(std::move(coords)) {
  if (static_cast<std::size_t>(coords_.size()) != parent_.total_dim())
    throw PreconditionError("bimodule element has " + std::to_string(coords_.size()) + " coordinates, expected " +
                            std::to_string(parent_.total_dim()));
}

BimoduleElement BimoduleElement::zero(const FiberedBimodule& m) {
  return {m, CVector::Zero(static_cast<Eigen::Index>(m.total_dim()))};
}

BimoduleElement BimoduleElement::basis(const FiberedBimodule& m, std::size_t a, std::size_t b, std::size_t i) {
  if (i >= m.dim(a, b)) throw PreconditionError("basis index out of range in fiber " + pair_name(a, b));
  CVector v = CVector::Zero(static_cast<Eigen::Index>(m.total_dim()));
  v(static_cast<Eigen::Index>(m.offset(a, b) + i)) = 1.0;
  return {m, std::move(v)};
}

BimoduleElement BimoduleElement::random(const FiberedBimodule& m, Rng& rng) {
  return {m, random_vector(static_cast<Eigen::Index>(m.total_dim()), rng)};
}

CVector BimoduleElement::fiber(std::size_t a, std::size_t b) const {
  return coords_.segment(static_cast<Eigen::Index>(parent_.offset(a, b)), static_cast<Eigen::Index>(parent_.dim(a, b)));
}

namespace {

void require_same(const FiberedBimodule& a, const FiberedBimodule& b) {
  if (!(a == b)) throw PreconditionError("bimodule elements belong to different bimodules");
}

}  // namespace

BimoduleElement operator+(const BimoduleElement& x, const BimoduleElement& y) {
  require_same(x.parent_, y.parent_);
  return {x.parent_, x.coords_ + y.coords_};
}

BimoduleElement operator-(const BimoduleElement& x, const BimoduleElement& y) {
  require_same(x.parent_, y.parent_);
  return {x.parent_, x.coords_ - y.coords_};
}

BimoduleElement operator*(Complex s, const BimoduleElement& x) { return {x.parent_, s * x.coords_}; }

BimoduleElement operator*(const AlgebraElement& a, const BimoduleElement& x) {
  const auto& m = x.parent();
  if (!(a.parent() == m.left())) throw PreconditionError("left action by an element of another algebra");
  CVector v = x.coords();
  for (const auto& [p, q] : m.support())
    v.segment(static_cast<Eigen::Index>(m.offset(p, q)), static_cast<Eigen::Index>(m.dim(p, q))) *= a[p];
  return {m, std::move(v)};
}

BimoduleElement operator*(const BimoduleElement& x, const AlgebraElement& b) {
  const auto& m = x.parent();
  if (!(b.parent() == m.right())) throw PreconditionError("right action by an element of another algebra");
  CVector v = x.coords();
  for (const auto& [p, q] : m.support())
    v.segment(static_cast<Eigen::Index>(m.offset(p, q)), static_cast<Eigen::Index>(m.dim(p, q))) *= b[q];
  return {m, std::move(v)};
}

double distance(const BimoduleElement& x, const BimoduleElement& y) { return coord_norm(x - y); }

AlgebraElement right_inner(const BimoduleElement& x, const BimoduleElement& y) {
  require_same(x.parent(), y.parent());
  const auto& m = x.parent();
  CVector v = CVector::Zero(static_cast<Eigen::Index>(m.n()));
  for (const auto& [p, q] : m.support()) {
    const auto off = static_cast<Eigen::Index>(m.offset(p, q));
    const auto k = static_cast<Eigen::Index>(m.dim(p, q));
    v(static_cast<Eigen::Index>(q)) += x.coords().segment(off, k).dot(m.metric(p, q) * y.coords().segment(off, k));
  }
  return {m.right(), std::move(v)};
}

AlgebraElement left_inner(const BimoduleElement& x, const BimoduleElement& y) {
  require_same(x.parent(), y.parent());
  const auto& m = x.parent();
  CVector v = CVector::Zero(static_cast<Eigen::Index>(m.m()));
  for (const auto& [p, q] : m.support()) {
    const auto off = static_cast<Eigen::Index>(m.offset(p, q));
    const auto k = static_cast<Eigen::Index>(m.dim(p, q));
    v(static_cast<Eigen::Index>(p)) += y.coords().segment(off, k).dot(m.metric(p, q) * x.coords().segment(off, k));
  }
  return {m.left(), std::move(v)};
}

double right_norm(const BimoduleElement& x) { return std::sqrt(right_inner(x, x).norm()); }
double left_norm(const BimoduleElement& x) { return std::sqrt(left_inner(x, x).norm()); }

FiberedModule right_module(const FiberedBimodule& m) {
  std::vector<std::size_t> dims;
  std::vector<CMatrix> metrics;
  for (std::size_t q = 0; q < m.n(); ++q) {
    std::size_t d = 0;
    std::vector<CMatrix> blocks;
    for (std::size_t p = 0; p < m.m(); ++p) {
      d += m.dim(p, q);
      blocks.push_back(m.metric(p, q));
    }
    dims.push_back(d);
    metrics.push_back(block_diagonal(blocks));
  }
  return FiberedModule(m.right(), std::move(dims), std::move(metrics), kTrusted);
}

ModuleElement as_right_module_element(const BimoduleElement& x, const FiberedModule& rm) {
  const auto& m = x.parent();
  std::vector<CVector> f;
  for (std::size_t q = 0; q < m.n(); ++q) {
    CVector v(static_cast<Eigen::Index>(rm.dim(q)));
    Eigen::Index pos = 0;
    for (std::size_t p = 0; p < m.m(); ++p) {
      const auto d = static_cast<Eigen::Index>(m.dim(p, q));
      v.segment(pos, d) = x.fiber(p, q);
      pos += d;
    }
    f.push_back(std::move(v));
  }
  return {rm, std::move(f)};
}

// ---------------------------------------------------------------------------
// Presented bimodules

namespace {

std::vector<std::string> default_labels(std::size_t n, const char* prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void check_shapes(const PresentedBimodule& p) {
  const auto d = static_cast<Eigen::Index>(p.dim);
  if (p.dim == 0) throw PreconditionError("presented bimodule has ambient dimension 0");
  if (p.left_idem.empty() || p.right_idem.empty())
    throw PreconditionError("presented bimodule needs at least one idempotent on each side");
  if (p.left_gram.size() != p.left_idem.size())
    throw PreconditionError("left_gram must have one form per left idempotent");
  if (p.right_gram.size() != p.right_idem.size())
    throw PreconditionError("right_gram must have one form per right idempotent");
  auto check = [&](const std::vector<CMatrix>& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i].rows() != d || v[i].cols() != d)
        throw PreconditionError(std::string(name) + "[" + std::to_string(i) + "] is not " + std::to_string(p.dim) +
                                "x" + std::to_string(p.dim));
  };
  check(p.left_idem, "left_idem");
  check(p.right_idem, "right_idem");
  check(p.left_gram, "left_gram");
  check(p.right_gram, "right_gram");
  if (!p.left_labels.empty() && p.left_labels.size() != p.left_idem.size())
    throw PreconditionError("left label count does not match the left idempotents");
  if (!p.right_labels.empty() && p.right_labels.size() != p.right_idem.size())
    throw PreconditionError("right label count does not match the right idempotents");
}

}  // namespace

Algebra PresentedBimodule::left_algebra() const {
  return Algebra(left_labels.empty() ? default_labels(left_idem.size(), "a") : left_labels);
}

Algebra PresentedBimodule::right_algebra() const {
  return Algebra(right_labels.empty() ? default_labels(right_idem.size(), "b") : right_labels);
}

CVector PresentedBimodule::left_act(const AlgebraElement& a, const CVector& v) const {
  if (a.parent().dim() != left_idem.size()) throw PreconditionError("left action: algebra size mismatch");
  CVector out = CVector::Zero(v.size());
  for (std::size_t p = 0; p < left_idem.size(); ++p) out += a[p] * (left_idem[p] * v);
  return out;
}

CVector PresentedBimodule::right_act(const CVector& v, const AlgebraElement& b) const {
  if (b.parent().dim() != right_idem.size()) throw PreconditionError("right action: algebra size mismatch");
  CVector out = CVector::Zero(v.size());
  for (std::size_t q = 0; q < right_idem.size(); ++q) out += b[q] * (right_idem[q] * v);
  return out;
}

AlgebraElement PresentedBimodule::right_inner(const CVector& v, const CVector& w) const {
  CVector out(static_cast<Eigen::Index>(right_gram.size()));
  for (std::size_t q = 0; q < right_gram.size(); ++q) out(static_cast<Eigen::Index>(q)) = v.dot(right_gram[q] * w);
  return {right_algebra(), std::move(out)};
}

AlgebraElement PresentedBimodule::left_inner(const CVector& v, const CVector& w) const {
  CVector out(static_cast<Eigen::Index>(left_gram.size()));
  for (std::size_t p = 0; p < left_gram.size(); ++p) out(static_cast<Eigen::Index>(p)) = w.dot(left_gram[p] * v);
  return {left_algebra(), std::move(out)};
}

PresentedBimodule present_bimodule(const FiberedBimodule& m, double spread, Rng& rng) {
  if (!(spread >= 1.0)) throw PreconditionError("basis spread must be at least 1");
  const auto d = static_cast<Eigen::Index>(m.total_dim());
  if (d == 0) throw PreconditionError("cannot present the zero bimodule");
  const CMatrix s = random_invertible(d, spread, rng);
  const CMatrix s_inv = s.inverse();
  PresentedBimodule p;
  p.dim = m.total_dim();
  p.left_labels = m.left().labels();
  p.right_labels = m.right().labels();
  for (std::size_t a = 0; a < m.m(); ++a) {
    CMatrix e = CMatrix::Zero(d, d);
    CMatrix g = CMatrix::Zero(d, d);
    for (std::size_t b = 0; b < m.n(); ++b) {
      const auto off = static_cast<Eigen::Index>(m.offset(a, b));
      const auto k = static_cast<Eigen::Index>(m.dim(a, b));
      e.block(off, off, k, k).setIdentity();
      g.block(off, off, k, k) = m.metric(a, b);
    }
    p.left_idem.push_back(s * e * s_inv);
    p.left_gram.push_back(s_inv.adjoint() * g * s_inv);
  }
  for (std::size_t b = 0; b < m.n(); ++b) {
    CMatrix e = CMatrix::Zero(d, d);
    CMatrix g = CMatrix::Zero(d, d);
    for (std::size_t a = 0; a < m.m(); ++a) {
      const auto off = static_cast<Eigen::Index>(m.offset(a, b));
      const auto k = static_cast<Eigen::Index>(m.dim(a, b));
      e.block(off, off, k, k).setIdentity();
      g.block(off, off, k, k) = m.metric(a, b);
    }
    p.right_idem.push_back(s * e * s_inv);
    p.right_gram.push_back(s_inv.adjoint() * g * s_inv);
  }
  return p;
}

namespace {

double negative_part(const CMatrix& g) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
  return std::max(0.0, -es.eigenvalues()(0));
}

double presented_scale(const PresentedBimodule& p) {
  double s = 1.0;
  for (const auto& g : p.right_gram) s = std::max(s, operator_norm(g));
  for (const auto& g : p.left_gram) s = std::max(s, operator_norm(g));
  return s;
}

/// e = u·v*, exact up to singular values far below any check tolerance.
struct Factored {
  CMatrix u;
  CMatrix v;
};

Factored factor(const CMatrix& e, double tol) {
  Eigen::JacobiSVD<CMatrix> svd(e, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = 1e-3 * tol * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return {svd.matrixU().leftCols(r) * sv.head(r).asDiagonal(), svd.matrixV().leftCols(r)};
}

std::vector<Factored> factor_all(const std::vector<CMatrix>& fam, double tol) {
  std::vector<Factored> out;
  out.reserve(fam.size());
  for (const auto& e : fam) out.push_back(factor(e, tol));
  return out;
}

Report structural_checks(const PresentedBimodule& p, double tol) {
  check_shapes(p);
  const auto d = static_cast<Eigen::Index>(p.dim);
  const CMatrix id = CMatrix::Identity(d, d);
  const double scale = presented_scale(p);
  Report r;
  auto idem = [&](const std::vector<CMatrix>& fam, const std::string& side) {
    double res = 0.0;
    CMatrix sum = CMatrix::Zero(d, d);
    for (const auto& e : fam) {
      res = std::max(res, (e * e - e).norm());
      sum += e;
    }
    r.add(side + "_idempotent", res, tol);
    r.add(side + "_partition", (sum - id).norm(), tol);
  };
  idem(p.left_idem, "left");
  idem(p.right_idem, "right");
  const auto left = factor_all(p.left_idem, tol);
  const auto right = factor_all(p.right_idem, tol);
  double comm = 0.0;
  for (const auto& e : left)
    for (const auto& f : p.right_idem)
      comm = std::max(comm, (e.u * (e.v.adjoint() * f) - (f * e.u) * e.v.adjoint()).norm());
  r.add("actions_commute", comm, tol);

  auto grams = [&](const std::vector<CMatrix>& g, const std::vector<CMatrix>& own, const std::vector<Factored>& other,
                   const std::string& side) {
    double herm = 0.0, support = 0.0, pos = 0.0, compat = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      herm = std::max(herm, (g[i] - g[i].adjoint()).norm());
      support = std::max(support, (g[i] - own[i].adjoint() * g[i] * own[i]).norm());
      pos = std::max(pos, negative_part(g[i]));
      for (const auto& e : other)
        compat = std::max(compat, ((g[i] * e.u) * e.v.adjoint() - e.v * (e.u.adjoint() * g[i])).norm());
    }
    r.add(side + "_gram_hermitian", herm / scale, tol);
    r.add(side + "_gram_support", support / scale, tol);
    r.add(side + "_gram_positive", pos / scale, tol);
    r.add(side + "_compat", compat / scale, tol);
  };
  grams(p.right_gram, p.right_idem, left, "right");
  grams(p.left_gram, p.left_idem, right, "left");
  return r;
}

}  // namespace

Report validate_bimodule_axioms(const PresentedBimodule& p, double tol, std::size_t samples, std::uint64_t seed) {
  Report r = structural_checks(p, tol);
  const Algebra A = p.left_algebra();
  const Algebra B = p.right_algebra();
  const auto d = static_cast<Eigen::Index>(p.dim);
  double assoc = 0.0, rc = 0.0, lc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = derived_rng(seed, s);
    const auto a = AlgebraElement::random(A, rng);
    const auto b = AlgebraElement::random(B, rng);
    const CVector x = random_vector(d, rng);
    const CVector y = random_vector(d, rng);
    const CVector l = p.right_act(p.left_act(a, x), b);
    const CVector rr = p.left_act(a, p.right_act(x, b));
    assoc = std::max(assoc, (l - rr).cwiseAbs().maxCoeff() / std::max(1.0, l.cwiseAbs().maxCoeff()));
    rc = std::max(rc, rel(p.right_inner(x, p.left_act(a, y)), p.right_inner(p.left_act(a.adjoint(), x), y)));
    lc = std::max(lc, rel(p.left_inner(p.right_act(x, b), y), p.left_inner(x, p.right_act(y, b.adjoint()))));
  }
  r.add("associativity", assoc, tol);
  r.add("right_inner_compat", rc, tol);
  r.add("left_inner_compat", lc, tol);
  return r;
}

Report validate_bimodule_axioms(const FiberedBimodule& m, double tol, std::size_t samples, std::uint64_t seed) {
  Report r;
  double assoc = 0.0, rc = 0.0, lc = 0.0, rl = 0.0, ll = 0.0, herm = 0.0, pos = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = derived_rng(seed, s);
    const auto a = AlgebraElement::random(m.left(), rng);
    const auto b = AlgebraElement::random(m.right(), rng);
    const auto x = BimoduleElement::random(m, rng);
    const auto y = BimoduleElement::random(m, rng);
    assoc = std::max(assoc, rel((a * x) * b, a * (x * b)));
    rc = std::max(rc, rel(right_inner(x, a * y), right_inner(a.adjoint() * x, y)));
    lc = std::max(lc, rel(left_inner(x * b, y), left_inner(x, y * b.adjoint())));
    rl = std::max(rl, rel(right_inner(x, y * b), right_inner(x, y) * b));
    ll = std::max(ll, rel(left_inner(a * x, y), a * left_inner(x, y)));
    herm = std::max({herm, rel(right_inner(x, y).adjoint(), right_inner(y, x)),
                     rel(left_inner(x, y).adjoint(), left_inner(y, x))});
    for (const auto& v : {right_inner(x, x), left_inner(x, x)})
      for (Eigen::Index i = 0; i < v.values().size(); ++i)
        pos = std::max({pos, std::abs(v.values()(i).imag()) / std::max(1.0, v.norm()),
                        -v.values()(i).real() / std::max(1.0, v.norm())});
  }
  r.add("associativity", assoc, tol);
  r.add("right_inner_compat", rc, tol);
  r.add("left_inner_compat", lc, tol);
  r.add("right_linearity", rl, tol);
  r.add("left_linearity", ll, tol);
  r.add("hermitian", herm, tol);
  r.add("positivity", pos, tol);
  return r;
}

// ---------------------------------------------------------------------------
// Decomposition

BimoduleElement Decomposition::operator()(const CVector& v) const { return {fibered, to_fibered * v}; }

CVector Decomposition::present(const BimoduleElement& x) const { return from_fibered * x.coords(); }

Decomposition decompose_presented(const PresentedBimodule& p, double tol) {
  const Report structure = structural_checks(p, tol);
  if (const auto* c = structure.first_failure()) {
    std::ostringstream msg;
    msg << "presented bimodule fails " << c->name << " (residual " << c->residual << ")";
    throw PreconditionError(msg.str());
  }
  const Algebra A = p.left_algebra();
  const Algebra B = p.right_algebra();
  const std::size_t m = A.dim();
  const std::size_t n = B.dim();
  const auto d = static_cast<Eigen::Index>(p.dim);
  const double scale = presented_scale(p);

  std::vector<CMatrix> bases(m * n);
  Eigen::Index total = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      // tr(P_a Q_b) is the rank of the commuting product
      const Complex trace = p.left_idem[a].transpose().cwiseProduct(p.right_idem[b]).sum();
      if (std::abs(trace) < 0.5) continue;
      const CMatrix e = p.left_idem[a] * p.right_idem[b];
      Eigen::JacobiSVD<CMatrix> svd(e, Eigen::ComputeThinU);
      Eigen::Index rank = 0;
      // singular values of an idempotent are 0 or at least 1
      while (rank < svd.singularValues().size() && svd.singularValues()(rank) > 0.5) ++rank;
      bases[a * n + b] = svd.matrixU().leftCols(rank);
      total += rank;
    }
  if (total != d) {
    std::ostringstream msg;
    msg << "joint ranges of the idempotents span dimension " << total << ", expected " << d;
    throw PreconditionError(msg.str());
  }

  CMatrix s(d, d);
  std::vector<FiberSpec> fibers;
  Eigen::Index pos = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const CMatrix& basis = bases[a * n + b];
      if (basis.cols() == 0) continue;
      s.middleCols(pos, basis.cols()) = basis;
      pos += basis.cols();
      CMatrix g = basis.adjoint() * p.right_gram[b] * basis;
      g = (0.5 * (g + g.adjoint())).eval();
      const CMatrix h = basis.adjoint() * p.left_gram[a] * basis;
      const double gap = (h - g).norm();
      if (gap > tol * scale) {
        std::ostringstream msg;
        msg << "left and right Gram forms disagree on fiber " << pair_name(a, b) << " (difference " << gap << ")";
        throw PreconditionError(msg.str());
      }
      try {
        check_metric(g, static_cast<std::size_t>(basis.cols()), tol * scale, "fiber " + pair_name(a, b));
      } catch (const PreconditionError& e) {
        throw PreconditionError(std::string("Gram form degenerate: ") + e.what());
      }
      fibers.push_back({a, b, static_cast<std::size_t>(basis.cols()), g});
    }

  FiberedBimodule fb(A, B, fibers, kTrusted);
  Eigen::PartialPivLU<CMatrix> lu(s);
  CMatrix t = lu.inverse();

  Eigen::JacobiSVD<CMatrix> svd(s);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(sv.size() - 1);
  const double check_tol = tol * std::max(1.0, cond);

  Report checks;
  checks.add("round_trip", (t * s - CMatrix::Identity(d, d)).norm(), check_tol);
  double la = 0.0, ra = 0.0, lg = 0.0, rg = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    CMatrix e = CMatrix::Zero(d, d);
    CMatrix g = CMatrix::Zero(d, d);
    for (std::size_t b = 0; b < n; ++b) {
      const auto off = static_cast<Eigen::Index>(fb.offset(a, b));
      const auto k = static_cast<Eigen::Index>(fb.dim(a, b));
      e.block(off, off, k, k).setIdentity();
      g.block(off, off, k, k) = fb.metric(a, b);
    }
    la = std::max(la, (t * p.left_idem[a] * s - e).norm());
    lg = std::max(lg, (s.adjoint() * p.left_gram[a] * s - g).norm() / scale);
  }
  for (std::size_t b = 0; b < n; ++b) {
    CMatrix e = CMatrix::Zero(d, d);
    CMatrix g = CMatrix::Zero(d, d);
    for (std::size_t a = 0; a < m; ++a) {
      const auto off = static_cast<Eigen::Index>(fb.offset(a, b));
      const auto k = static_cast<Eigen::Index>(fb.dim(a, b));
      e.block(off, off, k, k).setIdentity();
      g.block(off, off, k, k) = fb.metric(a, b);
    }
    ra = std::max(ra, (t * p.right_idem[b] * s - e).norm());
    rg = std::max(rg, (s.adjoint() * p.right_gram[b] * s - g).norm() / scale);
  }
  checks.add("left_action", la, check_tol);
  checks.add("right_action", ra, check_tol);
  checks.add("left_gram", lg, check_tol);
  checks.add("right_gram", rg, check_tol);
  return {std::move(fb), std::move(t), std::move(s), std::move(checks)};
}

// ---------------------------------------------------------------------------
// Imprimitivity

ImprimitivityReport is_imprimitivity(const FiberedBimodule& m, double tol) {
  ImprimitivityReport rep;

  // structural characterization
  rep.graph = m.m() == m.n();
  std::ostringstream why;
  std::vector<std::size_t> row_count(m.m(), 0), col_count(m.n(), 0);
  std::vector<std::size_t> forward(m.m(), 0);
  for (const auto& f : m.fibers()) {
    ++row_count[f.a];
    ++col_count[f.b];
    forward[f.a] = f.b;
    if (f.dim != 1 && rep.graph) {
      rep.graph = false;
      why << "fiber " << pair_name(f.a, f.b) << " has dimension " << f.dim;
    }
  }
  if (m.m() != m.n()) why << "spectra have different sizes (" << m.m() << " vs " << m.n() << ")";
  for (std::size_t a = 0; a < m.m() && rep.graph; ++a)
    if (row_count[a] != 1) {
      rep.graph = false;
      why << "left point " << a << " has " << row_count[a] << " nonempty fibers";
    }
  for (std::size_t b = 0; b < m.n() && rep.graph; ++b)
    if (col_count[b] != 1) {
      rep.graph = false;
      why << "right point " << b << " has " << col_count[b] << " nonempty fibers";
    }
  if (rep.graph) rep.bijection = forward;

  // fullness by span of inner-product values, and the identity on basis triples
  std::vector<BimoduleElement> basis;
  std::vector<std::array<std::size_t, 3>> index;
  for (const auto& f : m.fibers())
    for (std::size_t i = 0; i < f.dim; ++i) {
      basis.push_back(BimoduleElement::basis(m, f.a, f.b, i));
      index.push_back({f.a, f.b, i});
    }
  const std::size_t nb = basis.size();
  std::vector<AlgebraElement> lip, rip;
  lip.reserve(nb * nb);
  rip.reserve(nb * nb);
  SpanBuilder left_span(tol), right_span(tol);
  for (const auto& x : basis)
    for (const auto& y : basis) {
      lip.push_back(left_inner(x, y));
      rip.push_back(right_inner(x, y));
      left_span.add(lip.back().values());
      right_span.add(rip.back().values());
    }
  rep.left_full = left_span.dim() == m.m();
  rep.right_full = right_span.dim() == m.n();

  // _A<e_i,e_j>·e_k = l_ij(a_k) e_k and e_i·<e_j,e_k>_B = r_jk(b_i) e_i
  const double scale = metric_scale(m);
  double worst = 0.0;
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t k = 0; k < nb; ++k) {
        const Complex lhs = lip[i * nb + j][index[k][0]];
        const Complex rhs = rip[j * nb + k][index[i][1]];
        const double r = (i == k ? std::abs(lhs - rhs) : std::max(std::abs(lhs), std::abs(rhs))) / scale;
        if (r > worst) {
          worst = r;
          BasisTriple t;
          std::copy(index[i].begin(), index[i].end(), t.x);
          std::copy(index[j].begin(), index[j].end(), t.y);
          std::copy(index[k].begin(), index[k].end(), t.z);
          t.residual = r;
          rep.witness = t;
        }
      }
  rep.identity_residual = worst;
  if (worst <= tol) rep.witness.reset();
  rep.identity = rep.left_full && rep.right_full && worst <= tol;

  if (rep.graph != rep.identity) {
    std::ostringstream msg;
    msg << "imprimitivity characterizations disagree (graph " << rep.graph << ", identity " << rep.identity
        << ", residual " << worst << ")";
    throw NumericalError(msg.str());
  }
  rep.imprimitivity = rep.graph;
  if (!rep.imprimitivity) {
    if (!rep.left_full) why << "; not full on the left";
    if (!rep.right_full) why << "; not full on the right";
    if (rep.witness) {
      const auto& t = *rep.witness;
      why << "; identity fails on basis triple x=" << pair_name(t.x[0], t.x[1]) << "[" << t.x[2]
          << "] y=" << pair_name(t.y[0], t.y[1]) << "[" << t.y[2] << "] z=" << pair_name(t.z[0], t.z[1]) << "["
          << t.z[2] << "] with residual " << t.residual;
    }
    rep.reason = why.str();
    if (!rep.reason.empty() && rep.reason[0] == ';') rep.reason = rep.reason.substr(2);
  }
  return rep;
}

std::vector<std::pair<BimoduleElement, BimoduleElement>> partition_of_unity(const FiberedBimodule& m, Side side) {
  std::vector<std::pair<BimoduleElement, BimoduleElement>> out;
  std::vector<std::size_t> empty;
  const std::size_t points = side == Side::right ? m.n() : m.m();
  for (std::size_t s = 0; s < points; ++s) {
    bool found = false;
    const std::size_t others = side == Side::right ? m.m() : m.n();
    for (std::size_t o = 0; o < others && !found; ++o) {
      const std::size_t a = side == Side::right ? o : s;
      const std::size_t b = side == Side::right ? s : o;
      if (m.dim(a, b) == 0) continue;
      auto v = BimoduleElement::basis(m, a, b, 0);
      v = Complex(1.0 / std::sqrt(m.metric(a, b)(0, 0).real())) * v;
      out.emplace_back(v, v);
      found = true;
    }
    if (!found) empty.push_back(s);
  }
  if (!empty.empty()) {
    std::ostringstream msg;
    msg << "not full on the " << (side == Side::right ? "right" : "left") << ": no fibers over point(s)";
    for (auto e : empty) msg << ' ' << e;
    throw PreconditionError(msg.str());
  }
  return out;
}

AlgebraElement phi_from_partition(const std::vector<std::pair<BimoduleElement, BimoduleElement>>& family,
                                  const AlgebraElement& a) {
  if (family.empty()) throw PreconditionError("empty partition of unity");
  auto sum = AlgebraElement::zero(family.front().first.parent().right());
  for (const auto& [w, z] : family) sum = sum + right_inner(w, a * z);
  return sum;
}

namespace {

// a genuinely different family: random fiber vectors with unequal w/z
// scalings, then remixed by a random unitary
std::vector<std::pair<BimoduleElement, BimoduleElement>> random_partition(const FiberedBimodule& m, Rng& rng) {
  std::vector<BimoduleElement> ws, zs;
  for (std::size_t q = 0; q < m.n(); ++q) {
    std::size_t a = m.m();
    for (std::size_t p = 0; p < m.m(); ++p)
      if (m.dim(p, q) > 0) {
        a = p;
        break;
      }
    if (a == m.m()) throw PreconditionError("not full on the right");
    CVector v = CVector::Zero(static_cast<Eigen::Index>(m.total_dim()));
    const CVector f = random_vector(static_cast<Eigen::Index>(m.dim(a, q)), rng);
    const double g = f.dot(m.metric(a, q) * f).real();
    v.segment(static_cast<Eigen::Index>(m.offset(a, q)), f.size()) = f / std::sqrt(g);
    const BimoduleElement e(m, v);
    Complex c = random_complex(rng);
    while (std::abs(c) < 0.1) c = random_complex(rng);
    ws.push_back(c * e);
    zs.push_back((1.0 / std::conj(c)) * e);
  }
  const CMatrix u = random_unitary(static_cast<Eigen::Index>(ws.size()), rng);
  std::vector<std::pair<BimoduleElement, BimoduleElement>> out;
  for (Eigen::Index k = 0; k < u.rows(); ++k) {
    auto w = BimoduleElement::zero(m);
    auto z = BimoduleElement::zero(m);
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      w = w + u(k, j) * ws[static_cast<std::size_t>(j)];
      z = z + u(k, j) * zs[static_cast<std::size_t>(j)];
    }
    out.emplace_back(w, z);
  }
  return out;
}

}  // namespace

PhiCertificate canonical_phi(const FiberedBimodule& m, double tol, std::size_t samples, std::uint64_t seed) {
  const auto imp = is_imprimitivity(m, tol);
  if (!imp.imprimitivity) throw PreconditionError("not an imprimitivity bimodule: " + imp.reason);
  const Algebra& A = m.left();
  const Algebra& B = m.right();

  auto family = partition_of_unity(m, Side::right);
  std::vector<AlgebraElement> images;
  for (std::size_t p = 0; p < A.dim(); ++p) images.push_back(phi_from_partition(family, AlgebraElement::idempotent(A, p)));

  std::vector<std::size_t> pm(B.dim(), 0);
  for (std::size_t q = 0; q < B.dim(); ++q) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < A.dim(); ++p)
      if (images[p][q].real() > best) {
        best = images[p][q].real();
        pm[q] = p;
      }
  }
  AlgebraMap phi(A, B, pm);
  if (!phi.is_bijective()) throw NumericalError("canonical map is not bijective on spectra");

  Report r;
  double pointwise = 0.0;
  for (std::size_t p = 0; p < A.dim(); ++p)
    pointwise = std::max(pointwise, distance(images[p], phi(AlgebraElement::idempotent(A, p))));
  r.add("point_map", pointwise, tol);

  Rng rng = derived_rng(seed, 0);
  const auto second = random_partition(m, rng);
  auto unit_sum = AlgebraElement::zero(B);
  for (const auto& [w, z] : second) unit_sum = unit_sum + right_inner(w, z);
  r.add("second_partition", distance(unit_sum, AlgebraElement::unit(B)), tol);
  double wd = 0.0;
  for (std::size_t p = 0; p < A.dim(); ++p)
    wd = std::max(wd, distance(phi_from_partition(second, AlgebraElement::idempotent(A, p)), images[p]));
  r.add("well_defined", wd, tol);
  r.add("unit", distance(phi_from_partition(family, AlgebraElement::unit(A)), AlgebraElement::unit(B)), tol);

  auto alpha = AlgebraElement::zero(A);
  for (const auto& [w, z] : family) alpha = alpha + left_inner(z, w);
  r.add("alpha", distance(alpha, AlgebraElement::unit(A)), tol);

  const auto left_family = partition_of_unity(m, Side::left);
  auto beta = AlgebraElement::zero(B);
  for (const auto& [t, u] : left_family) beta = beta + right_inner(u, t);
  auto psi = [&](const AlgebraElement& b) {
    auto s = AlgebraElement::zero(A);
    for (const auto& [t, u] : left_family) s = s + left_inner(t * b, u);
    return s;
  };

  double fe = 0.0, tw = 0.0, axb = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng srng = derived_rng(seed, 1 + s);
    const auto x = BimoduleElement::random(m, srng);
    const auto y = BimoduleElement::random(m, srng);
    const auto a = AlgebraElement::random(A, srng);
    fe = std::max(fe, rel(phi_from_partition(family, left_inner(x, y)), right_inner(y, x)));
    tw = std::max(tw, rel(a * x, x * phi_from_partition(family, a)));
    axb = std::max(axb, rel((alpha * x) * beta, x));
  }
  r.add("functional", fe, tol);
  r.add("intertwining", tw, tol);
  r.add("alpha_x_beta", axb, tol);

  double pp = 0.0, qq = 0.0;
  for (std::size_t p = 0; p < A.dim(); ++p)
    pp = std::max(pp, distance(psi(phi_from_partition(family, AlgebraElement::idempotent(A, p))),
                               AlgebraElement::idempotent(A, p)));
  for (std::size_t q = 0; q < B.dim(); ++q)
    qq = std::max(qq, distance(phi_from_partition(family, psi(AlgebraElement::idempotent(B, q))),
                               AlgebraElement::idempotent(B, q)));
  r.add("psi_phi", pp, tol);
  r.add("phi_psi", qq, tol);

  return {std::move(phi), std::move(family), std::move(alpha), std::move(beta), std::move(r)};
}

Report left_action_as_compacts(const FiberedBimodule& m, double tol, std::size_t samples, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(m.total_dim());
  Report r;
  std::vector<CMatrix> left_ops;
  for (std::size_t p = 0; p < m.m(); ++p) {
    CMatrix t = CMatrix::Zero(d, d);
    for (std::size_t q = 0; q < m.n(); ++q) {
      const auto off = static_cast<Eigen::Index>(m.offset(p, q));
      const auto k = static_cast<Eigen::Index>(m.dim(p, q));
      t.block(off, off, k, k).setIdentity();
    }
    left_ops.push_back(std::move(t));
  }
  SpanBuilder t_span(tol);
  for (const auto& t : left_ops) t_span.add(flatten(t));
  r.add("injective", static_cast<double>(m.m() - t_span.dim()), 0.0);

  std::vector<BimoduleElement> basis;
  for (const auto& f : m.fibers())
    for (std::size_t i = 0; i < f.dim; ++i) basis.push_back(BimoduleElement::basis(m, f.a, f.b, i));
  SpanBuilder theta_span(tol), joint(tol);
  for (const auto& t : left_ops) joint.add(flatten(t));
  for (const auto& x : basis)
    for (const auto& y : basis) {
      CMatrix th(d, d);
      for (Eigen::Index k = 0; k < d; ++k)
        th.col(k) = (x * right_inner(y, basis[static_cast<std::size_t>(k)])).coords();
      theta_span.add(flatten(th));
      joint.add(flatten(th));
    }
  const double mismatch = std::abs(static_cast<double>(theta_span.dim()) - static_cast<double>(t_span.dim())) +
                          std::abs(static_cast<double>(joint.dim()) - static_cast<double>(t_span.dim()));
  r.add("span_match", mismatch, 0.0);

  double star = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = derived_rng(seed, s);
    const auto a = AlgebraElement::random(m.left(), rng);
    const auto x = BimoduleElement::random(m, rng);
    const auto y = BimoduleElement::random(m, rng);
    star = std::max(star, rel(right_inner(a * x, y), right_inner(x, a.adjoint() * y)));
  }
  r.add("star_preserving", star, tol);
  return r;
}

// ---------------------------------------------------------------------------
// Constructions

BimoduleElement TensorProduct::embed(const BimoduleElement& x, const BimoduleElement& y) const {
  require_same(x.parent(), first);
  require_same(y.parent(), second);
  CVector v = CVector::Zero(static_cast<Eigen::Index>(product.total_dim()));
  for (std::size_t a = 0; a < first.m(); ++a)
    for (std::size_t c = 0; c < second.n(); ++c) {
      auto pos = static_cast<Eigen::Index>(product.offset(a, c));
      for (std::size_t b = 0; b < first.n(); ++b) {
        const auto k = static_cast<Eigen::Index>(first.dim(a, b) * second.dim(b, c));
        if (k == 0) continue;
        v.segment(pos, k) = kron(x.fiber(a, b), y.fiber(b, c));
        pos += k;
      }
    }
  return {product, std::move(v)};
}

TensorProduct rieffel_tensor(const FiberedBimodule& m, const FiberedBimodule& n) {
  if (!(m.right() == n.left())) throw PreconditionError("tensor product needs M's right algebra to be N's left algebra");
  std::vector<FiberSpec> fibers;
  for (std::size_t a = 0; a < m.m(); ++a)
    for (std::size_t c = 0; c < n.n(); ++c) {
      std::vector<CMatrix> blocks;
      std::size_t dim = 0;
      for (std::size_t b = 0; b < m.n(); ++b) {
        const std::size_t k = m.dim(a, b) * n.dim(b, c);
        if (k == 0) continue;
        blocks.push_back(kron(m.metric(a, b), n.metric(b, c)));
        dim += k;
      }
      if (dim > 0) fibers.push_back({a, c, dim, block_diagonal(blocks)});
    }
  return {FiberedBimodule(m.left(), n.right(), fibers, kTrusted), m, n};
}

BimoduleElement Dual::iota(const BimoduleElement& x) const {
  require_same(x.parent(), original);
  CVector v(static_cast<Eigen::Index>(dual.total_dim()));
  for (std::size_t a = 0; a < original.m(); ++a)
    for (std::size_t b = 0; b < original.n(); ++b)
      v.segment(static_cast<Eigen::Index>(dual.offset(b, a)), static_cast<Eigen::Index>(dual.dim(b, a))) =
          x.fiber(a, b).conjugate();
  return {dual, std::move(v)};
}

Dual rieffel_dual(const FiberedBimodule& m) {
  std::vector<FiberSpec> fibers;
  for (const auto& f : m.fibers()) fibers.push_back({f.b, f.a, f.dim, f.metric.conjugate()});
  return {FiberedBimodule(m.right(), m.left(), fibers, kTrusted), m};
}

BimoduleElement Twist::operator()(const BimoduleElement& x) const {
  require_same(x.parent(), original);
  const auto& pa = alpha.point_map();
  const auto& pb = beta.point_map();
  CVector v(static_cast<Eigen::Index>(bimodule.total_dim()));
  for (std::size_t p = 0; p < original.m(); ++p)
    for (std::size_t q = 0; q < original.n(); ++q)
      v.segment(static_cast<Eigen::Index>(bimodule.offset(pa[p], pb[q])), static_cast<Eigen::Index>(original.dim(p, q))) =
          x.fiber(p, q);
  return {bimodule, std::move(v)};
}

Twist twist_bimodule(const FiberedBimodule& m, const AlgebraMap& alpha, const AlgebraMap& beta) {
  if (!(alpha.target() == m.left()) || !(beta.target() == m.right()))
    throw PreconditionError("twist maps must land in the bimodule's algebras");
  if (!alpha.is_bijective() || !beta.is_bijective()) throw PreconditionError("twist maps must be isomorphisms");
  std::vector<FiberSpec> fibers;
  for (const auto& f : m.fibers()) fibers.push_back({alpha.point_map()[f.a], beta.point_map()[f.b], f.dim, f.metric});
  return {FiberedBimodule(alpha.source(), beta.source(), fibers, kTrusted), m, alpha, beta};
}

FiberedBimodule right_symmetrized(const FiberedBimodule& m) {
  std::vector<FiberSpec> fibers;
  for (std::size_t p = 0; p < m.m(); ++p) {
    std::vector<CMatrix> blocks;
    std::size_t d = 0;
    for (std::size_t q = 0; q < m.n(); ++q)
      if (m.dim(p, q) > 0) {
        blocks.push_back(m.metric(p, q));
        d += m.dim(p, q);
      }
    if (d > 0) fibers.push_back({p, p, d, block_diagonal(blocks)});
  }
  return FiberedBimodule(m.left(), m.left(), fibers, kTrusted);
}

FiberedBimodule left_symmetrized(const FiberedBimodule& m) {
  std::vector<FiberSpec> fibers;
  for (std::size_t q = 0; q < m.n(); ++q) {
    std::vector<CMatrix> blocks;
    std::size_t d = 0;
    for (std::size_t p = 0; p < m.m(); ++p)
      if (m.dim(p, q) > 0) {
        blocks.push_back(m.metric(p, q));
        d += m.dim(p, q);
      }
    if (d > 0) fibers.push_back({q, q, d, block_diagonal(blocks)});
  }
  return FiberedBimodule(m.right(), m.right(), fibers, kTrusted);
}

namespace {

BimoduleElement to_right_symmetrized(const BimoduleElement& x, const FiberedBimodule& sym) {
  // row-major fiber order already groups coordinates by left point
  return {sym, x.coords()};
}

BimoduleElement to_left_symmetrized(const BimoduleElement& x, const FiberedBimodule& sym) {
  const auto& m = x.parent();
  CVector v(static_cast<Eigen::Index>(sym.total_dim()));
  for (std::size_t q = 0; q < m.n(); ++q) {
    if (sym.dim(q, q) == 0) continue;
    auto pos = static_cast<Eigen::Index>(sym.offset(q, q));
    for (std::size_t p = 0; p < m.m(); ++p) {
      const auto k = static_cast<Eigen::Index>(m.dim(p, q));
      v.segment(pos, k) = x.fiber(p, q);
      pos += k;
    }
  }
  return {sym, std::move(v)};
}

}  // namespace

Report symmetrization_check(const FiberedBimodule& m, double tol, std::size_t samples, std::uint64_t seed) {
  const auto cert = canonical_phi(m, tol, samples, seed);
  const AlgebraMap& phi = cert.phi;
  const AlgebraMap phi_inv = phi.inverse();
  Report r;

  const auto right_twist = twist_bimodule(m, AlgebraMap::identity(m.left()), phi);
  const auto rsym = right_symmetrized(m);
  r.add_flag("right_structure", right_twist.bimodule == rsym);
  const auto left_twist = twist_bimodule(m, phi_inv, AlgebraMap::identity(m.right()));
  const auto lsym = left_symmetrized(m);
  r.add_flag("left_structure", left_twist.bimodule == lsym);

  double ra = 0.0, ri = 0.0, rl = 0.0, la = 0.0, li = 0.0, lr = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = derived_rng(seed, 1000 + s);
    const auto x = BimoduleElement::random(m, rng);
    const auto y = BimoduleElement::random(m, rng);
    const auto a = AlgebraElement::random(m.left(), rng);
    const auto b = AlgebraElement::random(m.right(), rng);

    // _A M_φ against the right symmetrization of _A M
    const auto tx = right_twist(x);
    const auto ty = right_twist(y);
    const auto sx = to_right_symmetrized(x, rsym);
    const auto sy = to_right_symmetrized(y, rsym);
    ra = std::max({ra, rel(tx * a, right_twist(x * phi_from_partition(cert.witness, a))),
                   rel(sx * a, to_right_symmetrized(a * x, rsym)), rel(tx * a, right_twist(a * x))});
    ri = std::max({ri, rel(right_inner(tx, ty), phi_inv(right_inner(x, y))), rel(right_inner(sx, sy), left_inner(y, x)),
                   rel(right_inner(tx, ty), right_inner(sx, sy))});
    rl = std::max(rl, rel(left_inner(tx, ty), left_inner(sx, sy)));

    // _{φ⁻¹}M_B against the left symmetrization of M_B
    const auto ux = left_twist(x);
    const auto uy = left_twist(y);
    const auto vx = to_left_symmetrized(x, lsym);
    const auto vy = to_left_symmetrized(y, lsym);
    la = std::max({la, rel(b * ux, left_twist(phi_inv(b) * x)), rel(b * vx, to_left_symmetrized(x * b, lsym)),
                   rel(b * ux, left_twist(x * b))});
    li = std::max({li, rel(left_inner(ux, uy), phi(left_inner(x, y))), rel(left_inner(vx, vy), right_inner(y, x)),
                   rel(left_inner(ux, uy), left_inner(vx, vy))});
    lr = std::max(lr, rel(right_inner(ux, uy), right_inner(vx, vy)));
  }
  r.add("right_action", ra, tol);
  r.add("right_inner", ri, tol);
  r.add("right_left_inner", rl, tol);
  r.add("left_action", la, tol);
  r.add("left_inner", li, tol);
  r.add("left_right_inner", lr, tol);
  return r;
}

BimoduleElement QuotientBimodule::operator()(const BimoduleElement& x) const {
  const auto& src = x.parent();
  const auto& ka = left.projection.point_map();
  const auto& kb = right.projection.point_map();
  CVector v(static_cast<Eigen::Index>(bimodule.total_dim()));
  for (std::size_t i = 0; i < ka.size(); ++i)
    for (std::size_t j = 0; j < kb.size(); ++j)
      v.segment(static_cast<Eigen::Index>(bimodule.offset(i, j)), static_cast<Eigen::Index>(bimodule.dim(i, j))) =
          x.fiber(ka[i], kb[j]);
  (void)src;
  return {bimodule, std::move(v)};
}

QuotientBimodule quotient_bimodule(const FiberedBimodule& m, const Ideal& ideal, double tol) {
  if (!(ideal.parent() == m.left())) throw PreconditionError("ideal must belong to the left algebra");
  if (!ideal.is_proper()) throw PreconditionError("quotient by an improper ideal");
  const auto cert = canonical_phi(m, tol, 0);
  const auto& pm = cert.phi.point_map();
  const auto& kept_a = ideal.kept();
  std::vector<std::size_t> kept_b;
  for (std::size_t q = 0; q < pm.size(); ++q)
    if (std::binary_search(kept_a.begin(), kept_a.end(), pm[q])) kept_b.push_back(q);
  auto qa = quotient_algebra(m.left(), ideal);
  auto qb = quotient_algebra(m.right(), Ideal(m.right(), kept_b));
  std::vector<FiberSpec> fibers;
  for (std::size_t i = 0; i < kept_a.size(); ++i)
    for (std::size_t j = 0; j < kept_b.size(); ++j)
      if (m.dim(kept_a[i], kept_b[j]) > 0)
        fibers.push_back({i, j, m.dim(kept_a[i], kept_b[j]), m.metric(kept_a[i], kept_b[j])});
  FiberedBimodule qm(qa.algebra, qb.algebra, fibers, kTrusted);
  std::vector<std::size_t> rpm;
  for (auto q : kept_b)
    rpm.push_back(static_cast<std::size_t>(std::lower_bound(kept_a.begin(), kept_a.end(), pm[q]) - kept_a.begin()));
  AlgebraMap restricted(qa.algebra, qb.algebra, std::move(rpm));
  return {std::move(qm), std::move(qa), std::move(qb), std::move(restricted)};
}

// ---------------------------------------------------------------------------
// Isomorphisms

BimoduleElement BimoduleIso::operator()(const BimoduleElement& x) const {
  require_same(x.parent(), source);
  CVector v = CVector::Zero(static_cast<Eigen::Index>(target.total_dim()));
  for (std::size_t a = 0; a < source.m(); ++a)
    for (std::size_t b = 0; b < source.n(); ++b) {
      if (source.dim(a, b) == 0) continue;
      v.segment(static_cast<Eigen::Index>(target.offset(a, b)), static_cast<Eigen::Index>(target.dim(a, b))) =
          fiber_unitaries[source.index(a, b)] * x.fiber(a, b);
    }
  return {target, std::move(v)};
}

Report BimoduleIso::verify(double tol, std::size_t samples, std::uint64_t seed) const {
  Report r;
  double act = 0.0, ri = 0.0, li = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = derived_rng(seed, s);
    const auto a = AlgebraElement::random(source.left(), rng);
    const auto b = AlgebraElement::random(source.right(), rng);
    const auto x = BimoduleElement::random(source, rng);
    const auto y = BimoduleElement::random(source, rng);
    const auto fx = (*this)(x);
    const auto fy = (*this)(y);
    act = std::max(act, rel((*this)((a * x) * b), (left_map(a) * fx) * right_map(b)));
    ri = std::max(ri, rel(right_inner(fx, fy), right_map(right_inner(x, y))));
    li = std::max(li, rel(left_inner(fx, fy), left_map(left_inner(x, y))));
  }
  r.add("actions", act, tol);
  r.add("right_inner", ri, tol);
  r.add("left_inner", li, tol);
  return r;
}

std::optional<BimoduleIso> bimodule_isomorphic(const FiberedBimodule& m, const FiberedBimodule& n, double tol) {
  (void)tol;
  if (!(m.left() == n.left()) || !(m.right() == n.right()))
    throw PreconditionError("isomorphism test needs the same left and right algebras");
  for (std::size_t a = 0; a < m.m(); ++a)
    for (std::size_t b = 0; b < m.n(); ++b)
      if (m.dim(a, b) != n.dim(a, b)) return std::nullopt;
  std::vector<CMatrix> units(m.m() * m.n());
  for (const auto& f : m.fibers()) {
    Eigen::LLT<CMatrix> lm(f.metric);
    Eigen::LLT<CMatrix> ln(n.metric(f.a, f.b));
    const CMatrix lm_adj = lm.matrixL().adjoint();
    units[m.index(f.a, f.b)] = ln.matrixU().solve(lm_adj);
  }
  return BimoduleIso{m, n, AlgebraMap::identity(m.left()), AlgebraMap::identity(m.right()), std::move(units)};
}

}  // namespace morita
