#include "morita/category.hpp"

#include "morita/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace morita {

namespace {

std::vector<CMatrix> ambient_list(const CStarCategory& c) {
  if (!c.ambient.empty()) return c.ambient;
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  std::vector<CMatrix> out;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      CMatrix e = CMatrix::Zero(d, d);
      e(i, j) = 1.0;
      out.push_back(std::move(e));
    }
  return out;
}

CMatrix unflatten(const CVector& v, Eigen::Index d) { return Eigen::Map<const CMatrix>(v.data(), d, d); }

CMatrix random_combination(const std::vector<CMatrix>& basis, Eigen::Index d, Rng& rng) {
  CMatrix x = CMatrix::Zero(d, d);
  for (const auto& b : basis) x += random_complex(rng) * b;
  return x;
}

double rel(const AlgebraElement& u, const AlgebraElement& v) {
  return distance(u, v) / std::max({1.0, u.norm(), v.norm()});
}

double rel(Complex u, Complex v) { return std::abs(u - v) / std::max({1.0, std::abs(u), std::abs(v)}); }

double rel(const CMatrix& u, const CMatrix& v) { return (u - v).norm() / std::max({1.0, u.norm(), v.norm()}); }

std::string triple_name(const CStarCategory& c, std::size_t a, std::size_t b, std::size_t d) {
  return c.labels[a] + "," + c.labels[b] + "," + c.labels[d];
}

}  // namespace

std::size_t CStarCategory::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return i;
  throw PreconditionError("no object labeled '" + label + "'");
}

CStarCategory category_from_projections(std::vector<CMatrix> projections, std::vector<std::string> labels,
                                        std::vector<CMatrix> ambient, double tol) {
  if (projections.empty()) throw PreconditionError("category needs at least one object");
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  const Eigen::Index d = projections[0].rows();
  if (d == 0) throw PreconditionError("ambient dimension must be positive");
  if (labels.empty())
    for (std::size_t i = 0; i < projections.size(); ++i) labels.push_back("O" + std::to_string(i));
  if (labels.size() != projections.size()) throw PreconditionError("one label per projection required");
  if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size())
    throw PreconditionError("object labels must be distinct");

  CMatrix sum = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const auto& p = projections[i];
    if (p.rows() != d || p.cols() != d) throw PreconditionError("projection " + labels[i] + " has the wrong shape");
    const double idem = (p * p - p).norm();
    const double herm = (p - p.adjoint()).norm();
    if (idem > tol * std::max(1.0, p.norm()) || herm > tol * std::max(1.0, p.norm())) {
      std::ostringstream msg;
      msg << "'" << labels[i] << "' is not an orthogonal projection (||p^2-p|| = " << idem << ", ||p-p*|| = " << herm
          << ")";
      throw PreconditionError(msg.str());
    }
    if ((p.norm()) == 0.0) throw PreconditionError("projection " + labels[i] + " is zero");
    for (std::size_t j = 0; j < i; ++j) {
      const double overlap = (p * projections[j]).norm();
      if (overlap > tol * std::max(1.0, p.norm())) {
        std::ostringstream msg;
        msg << "projections '" << labels[j] << "' and '" << labels[i] << "' are not orthogonal (||pq|| = " << overlap
            << ")";
        throw PreconditionError(msg.str());
      }
    }
    sum += p;
  }
  const double defect = (sum - CMatrix::Identity(d, d)).norm();
  if (defect > tol * std::sqrt(static_cast<double>(d))) {
    std::ostringstream msg;
    msg << "projections do not sum to the identity (defect " << defect << ")";
    throw PreconditionError(msg.str());
  }

  if (!ambient.empty()) {
    SpanBuilder span(tol);
    for (std::size_t i = 0; i < ambient.size(); ++i) {
      if (ambient[i].rows() != d || ambient[i].cols() != d)
        throw PreconditionError("ambient element " + std::to_string(i) + " has the wrong shape");
      span.add(flatten(ambient[i]));
    }
    auto require = [&](const CMatrix& x, const std::string& what) {
      if (!span.contains(flatten(x))) throw PreconditionError("ambient span does not contain " + what);
    };
    require(CMatrix::Identity(d, d), "the identity");
    for (std::size_t i = 0; i < projections.size(); ++i) require(projections[i], "projection " + labels[i]);
    // spot-check that the span is a *-algebra
    for (std::uint64_t s = 0; s < 4; ++s) {
      Rng rng = derived_rng(0x616d6269656e74ULL, s);
      const CMatrix x = random_combination(ambient, d, rng);
      const CMatrix y = random_combination(ambient, d, rng);
      require(x * y, "a product of its elements");
      require(x.adjoint(), "an adjoint of its elements");
    }
  }
  return {static_cast<std::size_t>(d), std::move(labels), std::move(projections), std::move(ambient), tol};
}

std::vector<CMatrix> block_basis(const CStarCategory& c, std::size_t a, std::size_t b) {
  const auto& pa = c.projections.at(a);
  const auto& pb = c.projections.at(b);
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  SpanBuilder span(c.tol);
  for (const auto& x : ambient_list(c)) span.add(flatten(pa * x * pb), x.norm());
  std::vector<CMatrix> out;
  for (const auto& v : span.basis()) out.push_back(unflatten(v, d));
  return out;
}

FullnessReport check_full(const CStarCategory& c) {
  const std::size_t k = c.objects();
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  std::vector<std::vector<CMatrix>> bases;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) bases.push_back(block_basis(c, a, b));
  auto spans = [&](std::size_t a, std::size_t b, std::size_t e) {
    SpanBuilder s(c.tol);
    for (const auto& x : bases[a * k + b])
      for (const auto& y : bases[b * k + e]) s.add(flatten(x * y), 1.0);
    return s.dim() == bases[a * k + e].size();
  };
  (void)d;
  FullnessReport rep;
  rep.triple_full = true;
  std::size_t failing_triples = 0, failing_pairs = 0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t e = 0; e < k; ++e)
        if (!spans(a, b, e)) {
          ++failing_triples;
          if (!rep.witness) rep.witness = std::array<std::size_t, 3>{a, b, e};
        }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (!spans(a, b, a)) ++failing_pairs;
  rep.triple_full = failing_triples == 0;
  rep.pairwise_full = failing_pairs == 0;
  if (rep.triple_full != rep.pairwise_full)
    throw NumericalError("triple and pairwise fullness disagree");
  rep.full = rep.triple_full;
  rep.checks.add("triples_not_spanning", static_cast<double>(failing_triples), 0.0);
  rep.checks.add("pairs_not_spanning", static_cast<double>(failing_pairs), 0.0);
  if (rep.witness) rep.checks.add_flag("witness " + triple_name(c, (*rep.witness)[0], (*rep.witness)[1], (*rep.witness)[2]), false);
  return rep;
}

CommutativityReport check_commutative(const CStarCategory& c, std::size_t samples, std::uint64_t seed) {
  CommutativityReport rep;
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  for (std::size_t a = 0; a < c.objects(); ++a) {
    const auto basis = block_basis(c, a, a);
    double worst = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = i + 1; j < basis.size(); ++j)
        worst = std::max(worst, (basis[i] * basis[j] - basis[j] * basis[i]).norm());
    for (std::size_t s = 0; s < samples; ++s) {
      Rng rng = derived_rng(seed, a * 1000 + s);
      const CMatrix x = random_combination(basis, d, rng);
      const CMatrix y = random_combination(basis, d, rng);
      worst = std::max(worst, (x * y - y * x).norm() / std::max(1.0, x.norm() * y.norm()));
    }
    if (worst >= rep.residual) {
      rep.residual = worst;
      rep.worst_object = a;
    }
  }
  rep.commutative = rep.residual <= c.tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Blocks and the φ family

BimoduleElement BlockBimodule::element(const CMatrix& x) const {
  CVector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) c(static_cast<Eigen::Index>(i)) = (basis[i].adjoint() * x).trace();
  return decomposition(c);
}

CMatrix BlockBimodule::matrix(const BimoduleElement& x) const {
  const CVector c = decomposition.present(x);
  CMatrix out = CMatrix::Zero(basis.front().rows(), basis.front().cols());
  for (std::size_t i = 0; i < basis.size(); ++i) out += c(static_cast<Eigen::Index>(i)) * basis[i];
  return out;
}

AlgebraElement PhiFamily::transform(std::size_t a, const CMatrix& x) const {
  const auto f = gelfand_transform(gelfand.at(a), isometries[a].adjoint() * x * isometries[a]);
  return {algebras[a], f.values()};
}

CMatrix PhiFamily::embed(std::size_t a, const AlgebraElement& f) const {
  const auto& g = gelfand.at(a);
  if (f.parent().dim() != g.characters.size()) throw PreconditionError("function does not live on this object");
  const auto r = static_cast<Eigen::Index>(g.ambient_dim());
  CMatrix inner = CMatrix::Zero(r, r);
  for (std::size_t k = 0; k < g.characters.size(); ++k) inner += f[k] * g.projection(k);
  return isometries[a] * inner * isometries[a].adjoint();
}

CMatrix PhiFamily::apply(std::size_t a, std::size_t b, const CMatrix& x) const {
  return embed(b, phi_from_partition(block(a, b).certificate.witness, transform(a, x)));
}

namespace {

CMatrix character_projection(const PhiFamily& f, std::size_t a, std::size_t k) {
  return f.isometries[a] * f.gelfand[a].projection(k) * f.isometries[a].adjoint();
}

BlockBimodule realize_block(const CStarCategory& c, const PhiFamily& f, std::size_t a, std::size_t b,
                            std::size_t samples, std::uint64_t seed) {
  auto basis = block_basis(c, a, b);
  const std::size_t d = basis.size();
  if (d == 0) throw PreconditionError("block " + c.labels[a] + "," + c.labels[b] + " is zero");
  const auto dd = static_cast<Eigen::Index>(d);
  const auto& xs = basis;
  PresentedBimodule p;
  p.dim = d;
  p.left_labels = f.algebras[a].labels();
  p.right_labels = f.algebras[b].labels();
  for (std::size_t k = 0; k < f.gelfand[a].characters.size(); ++k) {
    const CMatrix e = character_projection(f, a, k);
    const double tr = e.trace().real();
    CMatrix pk(dd, dd), lk(dd, dd);
    for (Eigen::Index i = 0; i < dd; ++i)
      for (Eigen::Index j = 0; j < dd; ++j) {
        pk(i, j) = (xs[i].adjoint() * e * xs[j]).trace();
        lk(j, i) = (e * xs[i] * xs[j].adjoint()).trace() / tr;
      }
    p.left_idem.push_back(std::move(pk));
    p.left_gram.push_back(std::move(lk));
  }
  for (std::size_t l = 0; l < f.gelfand[b].characters.size(); ++l) {
    const CMatrix e = character_projection(f, b, l);
    const double tr = e.trace().real();
    CMatrix ql(dd, dd), rl(dd, dd);
    for (Eigen::Index i = 0; i < dd; ++i)
      for (Eigen::Index j = 0; j < dd; ++j) {
        ql(i, j) = (xs[i].adjoint() * xs[j] * e).trace();
        rl(i, j) = (e * xs[i].adjoint() * xs[j]).trace() / tr;
      }
    p.right_idem.push_back(std::move(ql));
    p.right_gram.push_back(std::move(rl));
  }
  auto decomposition = decompose_presented(p, c.tol);
  auto certificate = canonical_phi(decomposition.fibered, c.tol, samples, seed);
  return {a, b, std::move(basis), std::move(p), std::move(decomposition), std::move(certificate)};
}

}  // namespace

PhiFamily canonical_phi_family(const CStarCategory& c, std::size_t samples, std::uint64_t seed) {
  const auto full = check_full(c);
  if (!full.full) throw PreconditionError("category is not full");
  const auto comm = check_commutative(c);
  if (!comm.commutative) {
    std::ostringstream msg;
    msg << "diagonal block of '" << c.labels[comm.worst_object] << "' is not commutative (commutator "
        << comm.residual << ")";
    throw PreconditionError(msg.str());
  }
  const std::size_t k = c.objects();
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  PhiFamily f;
  f.objects = k;
  for (std::size_t a = 0; a < k; ++a) {
    const CMatrix v = orthonormal_span(c.projections[a], 0.5);
    std::vector<CMatrix> gens;
    for (const auto& x : block_basis(c, a, a)) gens.push_back(v.adjoint() * x * v);
    auto g = joint_diagonalize(gens, c.tol);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < g.characters.size(); ++i) labels.push_back(c.labels[a] + "/x" + std::to_string(i));
    f.isometries.push_back(v);
    f.gelfand.push_back(std::move(g));
    f.algebras.emplace_back(std::move(labels));
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      f.blocks.push_back(realize_block(c, f, a, b, samples, seed));
      f.phi.push_back(f.blocks.back().certificate.phi);
    }

  Report& r = f.checks;
  bool decomp = true, certs = true;
  for (const auto& blk : f.blocks) {
    decomp = decomp && blk.decomposition.checks.pass();
    certs = certs && blk.certificate.pass();
  }
  r.add_flag("blocks.decomposition", decomp);
  r.add_flag("blocks.phi_certificates", certs);

  bool ident = true, inv = true, comp = true;
  for (std::size_t a = 0; a < k; ++a) {
    ident = ident && f.map(a, a) == AlgebraMap::identity(f.algebras[a]);
    for (std::size_t b = 0; b < k; ++b) {
      inv = inv && f.map(b, a) == f.map(a, b).inverse();
      for (std::size_t e = 0; e < k; ++e) comp = comp && compose(f.map(b, e), f.map(a, b)) == f.map(a, e);
    }
  }
  r.add_flag("cocycle.identity", ident);
  r.add_flag("cocycle.inverse", inv);
  r.add_flag("cocycle.composition", comp);

  double vi = 0.0, vv = 0.0, vc = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    const auto basis = block_basis(c, a, a);
    for (const auto& x : basis) {
      vi = std::max(vi, rel(f.apply(a, a, x), x));
      for (std::size_t b = 0; b < k; ++b) {
        const CMatrix y = f.apply(a, b, x);
        vv = std::max(vv, rel(f.apply(b, a, y), x));
        for (std::size_t e = 0; e < k; ++e) vc = std::max(vc, rel(f.apply(b, e, y), f.apply(a, e, x)));
      }
    }
  }
  r.add("cocycle.identity_value", vi, c.tol);
  r.add("cocycle.inverse_value", vv, c.tol);
  r.add("cocycle.composition_value", vc, c.tol);

  double ri = 0.0, li = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      const auto& blk = f.block(a, b);
      for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = derived_rng(seed, 7000 + (a * k + b) * 100 + s);
        const CMatrix x = random_combination(blk.basis, d, rng);
        const CMatrix y = random_combination(blk.basis, d, rng);
        const auto ex = blk.element(x);
        const auto ey = blk.element(y);
        ri = std::max(ri, rel(right_inner(ex, ey), f.transform(b, x.adjoint() * y)));
        li = std::max(li, rel(left_inner(ex, ey), f.transform(a, x * y.adjoint())));
      }
    }
  r.add("blocks.right_inner_formula", ri, c.tol);
  r.add("blocks.left_inner_formula", li, c.tol);
  return f;
}

// ---------------------------------------------------------------------------
// Point functors

Complex PointFunctor::operator()(std::size_t a, std::size_t b, const CMatrix& x) const {
  return frames.at(a).dot(x * frames.at(b));
}

PointFunctor make_point_functor(const CStarCategory& c, const PhiFamily& f, std::size_t base_object,
                                std::size_t character, std::uint64_t frame_seed) {
  const std::size_t k = c.objects();
  if (base_object >= k) throw PreconditionError("base object out of range");
  if (character >= f.algebras[base_object].dim()) throw PreconditionError("character out of range");
  PointFunctor w;
  w.base_object = base_object;
  w.character = character;
  w.frames.resize(k);
  for (std::size_t b = 0; b < k; ++b) w.points.push_back(f.map(base_object, b).pushforward()[character]);

  const CVector u = f.isometries[base_object] * f.gelfand[base_object].eigenspace(character).col(0);
  w.frames[base_object] = u;
  Rng rng = derived_rng(frame_seed, 0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const CMatrix e = character_projection(f, base_object, character);
  for (std::size_t b = 0; b < k; ++b) {
    if (b == base_object) continue;
    const CMatrix fb = character_projection(f, b, w.points[b]);
    CVector best;
    double best_norm = 0.0;
    for (const auto& x : f.block(base_object, b).basis) {
      const CVector v = (e * x * fb).adjoint() * u;
      if (v.norm() > best_norm) {
        best_norm = v.norm();
        best = v;
      }
    }
    if (best_norm <= c.tol) throw NumericalError("no transport element between the chosen characters");
    w.frames[b] = best / best_norm;
    if (frame_seed != 0) w.frames[b] *= std::polar(1.0, angle(rng));
  }
  return w;
}

Report verify_functor_invariance(const CStarCategory& c, const PhiFamily& f, const PointFunctor& w,
                                 std::size_t samples, std::uint64_t seed) {
  const std::size_t k = c.objects();
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  Report r;
  double mult = 0.0, star = 0.0, diag = 0.0, inv = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = derived_rng(seed, (a * k + b) * 1000 + s);
        const CMatrix x = random_combination(f.block(a, b).basis, d, rng);
        star = std::max(star, rel(w(b, a, x.adjoint()), std::conj(w(a, b, x))));
        const std::size_t e = s % k;
        const CMatrix y = random_combination(f.block(b, e).basis, d, rng);
        mult = std::max(mult, rel(w(a, e, x * y), w(a, b, x) * w(b, e, y)));
      }
  for (std::size_t a = 0; a < k; ++a)
    for (const auto& x : block_basis(c, a, a)) {
      diag = std::max(diag, rel(w(a, a, x), f.transform(a, x)[w.points[a]]));
      for (std::size_t b = 0; b < k; ++b) inv = std::max(inv, rel(w(b, b, f.apply(a, b, x)), w(a, a, x)));
    }
  r.add("multiplicativity", mult, c.tol);
  r.add("star", star, c.tol);
  r.add("diagonal_character", diag, c.tol);
  r.add("invariance", inv, c.tol);
  return r;
}

// ---------------------------------------------------------------------------
// Picard

PicardRelation picard_relation(const CStarCategory& c, const PhiFamily& f) {
  const std::size_t k = c.objects();
  PicardRelation rel_out;
  rel_out.objects = k;
  bool agree = true;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      auto s = spectral_data(f.block(a, b).fibered(), c.tol);
      agree = agree && s.bijection == f.map(a, b).pushforward();
      rel_out.classes.push_back(std::move(s.bijection));
    }
  Report& r = rel_out.checks;
  r.add_flag("agrees_with_phi", agree);
  r.add_flag("total", rel_out.classes.size() == k * k);
  bool refl = true, sym = true, trans = true;
  for (std::size_t a = 0; a < k; ++a) {
    const auto& id = rel_out(a, a);
    for (std::size_t i = 0; i < id.size(); ++i) refl = refl && id[i] == i;
    for (std::size_t b = 0; b < k; ++b) {
      const auto& ab = rel_out(a, b);
      const auto& ba = rel_out(b, a);
      for (std::size_t i = 0; i < ab.size(); ++i) sym = sym && ba.at(ab[i]) == i;
      for (std::size_t e = 0; e < k; ++e) {
        const auto& be = rel_out(b, e);
        const auto& ae = rel_out(a, e);
        for (std::size_t i = 0; i < ab.size(); ++i) trans = trans && be.at(ab[i]) == ae[i];
      }
    }
  }
  r.add_flag("reflexive", refl);
  r.add_flag("symmetric", sym);
  r.add_flag("transitive", trans);
  return rel_out;
}

PicardMap picard_of_functor(const CStarCategory& c, const PhiFamily& fc, const CStarCategory& d, const PhiFamily& fd,
                            const std::vector<std::size_t>& object_map, const BlockMap& functor, std::size_t samples,
                            std::uint64_t seed) {
  const std::size_t k = c.objects();
  PicardMap out;
  out.object_map = object_map;
  Report& r = out.checks;
  bool objects_ok = object_map.size() == k && d.objects() == k;
  if (objects_ok) {
    std::vector<bool> hit(k, false);
    for (auto o : object_map) {
      if (o >= k || hit[o]) objects_ok = false;
      else hit[o] = true;
    }
  }
  r.add_flag("object_bijection", objects_ok);
  if (!objects_ok) return out;

  const auto dim_c = static_cast<Eigen::Index>(c.ambient_dim);
  double lin = 0.0, mult = 0.0, invol = 0.0, support = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      const auto& pa = d.projections[object_map[a]];
      const auto& pb = d.projections[object_map[b]];
      for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = derived_rng(seed, (a * k + b) * 1000 + s);
        const CMatrix x = random_combination(fc.block(a, b).basis, dim_c, rng);
        const CMatrix y = random_combination(fc.block(a, b).basis, dim_c, rng);
        const std::size_t e = s % k;
        const CMatrix z = random_combination(fc.block(b, e).basis, dim_c, rng);
        const Complex lambda = random_complex(rng);
        const CMatrix fx = functor(a, b, x);
        lin = std::max(lin, rel(functor(a, b, lambda * x + y), lambda * fx + functor(a, b, y)));
        mult = std::max(mult, rel(functor(a, e, x * z), fx * functor(b, e, z)));
        invol = std::max(invol, rel(functor(b, a, x.adjoint()), fx.adjoint()));
        support = std::max(support, rel(pa * fx * pb, fx));
      }
    }
  r.add("linear", lin, c.tol);
  r.add("multiplicative", mult, c.tol);
  r.add("involutive", invol, c.tol);
  r.add("block_support", support, c.tol);

  bool points_ok = true;
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t ta = object_map[a];
    std::vector<std::size_t> pm;
    for (std::size_t i = 0; i < fc.algebras[a].dim(); ++i) {
      const auto img = fd.transform(ta, functor(a, a, character_projection(fc, a, i)));
      std::size_t hit = img.parent().dim();
      for (std::size_t j = 0; j < img.parent().dim(); ++j)
        if (std::abs(img[j] - 1.0) <= 0.5) hit = j;
      points_ok = points_ok && hit < img.parent().dim();
      pm.push_back(hit);
    }
    points_ok = points_ok && fc.algebras[a].dim() == fd.algebras[ta].dim();
    out.point_maps.push_back(std::move(pm));
  }
  r.add_flag("diagonal_isomorphisms", points_ok);
  if (!points_ok) return out;

  const auto pc = picard_relation(c, fc);
  const auto pd = picard_relation(d, fd);
  bool natural = true;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      const auto& cls_c = pc(a, b);
      const auto& cls_d = pd(object_map[a], object_map[b]);
      for (std::size_t i = 0; i < cls_c.size(); ++i)
        natural = natural && cls_d.at(out.point_maps[a][i]) == out.point_maps[b].at(cls_c[i]);
    }
  r.add_flag("classes_transported", natural);
  r.add_flag("source_relation", pc.checks.pass());
  r.add_flag("target_relation", pd.checks.pass());
  return out;
}

// ---------------------------------------------------------------------------
// Linking algebra

LinkingCategory linking_category(const FiberedBimodule& m, double tol) {
  const auto imp = is_imprimitivity(m, tol);
  if (!imp.imprimitivity) throw PreconditionError("not an imprimitivity bimodule: " + imp.reason);
  const std::size_t nm = m.m();
  const std::size_t nn = m.n();
  const auto d = static_cast<Eigen::Index>(nm + nn);
  auto unit = [&](Eigen::Index i, Eigen::Index j) {
    CMatrix e = CMatrix::Zero(d, d);
    e(i, j) = 1.0;
    return e;
  };
  std::vector<CMatrix> ambient;
  CMatrix p = CMatrix::Zero(d, d), q = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < nm; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    p(ii, ii) = 1.0;
    ambient.push_back(unit(ii, ii));
  }
  for (std::size_t j = 0; j < nn; ++j) {
    const auto jj = static_cast<Eigen::Index>(nm + j);
    q(jj, jj) = 1.0;
    ambient.push_back(unit(jj, jj));
  }
  for (std::size_t i = 0; i < nm; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(nm + imp.bijection[i]);
    ambient.push_back(unit(ii, jj));
    ambient.push_back(unit(jj, ii));
  }
  auto cat = category_from_projections({p, q}, {"left", "right"}, ambient, tol);
  auto fam = canonical_phi_family(cat);

  Report r;
  r.add_flag("p_plus_q", p + q == CMatrix::Identity(d, d));
  r.merge(fam.checks, "family.");

  auto identify = [&](std::size_t obj, const Algebra& target, std::size_t count, std::size_t shift) {
    const Algebra& corner = fam.algebras[obj];
    std::vector<std::size_t> pm(corner.dim(), count);
    if (corner.dim() != count) throw NumericalError("corner spectrum has the wrong size");
    for (std::size_t i = 0; i < count; ++i) {
      const auto ii = static_cast<Eigen::Index>(shift + i);
      const auto f = fam.transform(obj, unit(ii, ii));
      for (std::size_t k = 0; k < corner.dim(); ++k)
        if (std::abs(f[k] - 1.0) <= 0.5) pm[k] = i;
    }
    for (auto v : pm)
      if (v >= count) throw NumericalError("corner idempotent does not match a character");
    return AlgebraMap(target, corner, std::move(pm));
  };
  auto left_corner = identify(0, m.left(), nm, 0);
  auto right_corner = identify(1, m.right(), nn, nm);
  r.add_flag("left_corner_isomorphic", check_isomorphism(left_corner, tol));
  r.add_flag("right_corner_isomorphic", check_isomorphism(right_corner, tol));

  const auto twisted = twist_bimodule(fam.block(0, 1).fibered(), left_corner, right_corner);
  if (auto iso = bimodule_isomorphic(twisted.bimodule, m, tol)) {
    r.add_flag("corner_isomorphic", true);
    r.merge(iso->verify(tol), "corner_iso.");
  } else {
    r.add_flag("corner_isomorphic", false);
  }

  SpanBuilder whole(tol);
  for (const auto& x : ambient) whole.add(flatten(x));
  for (const auto* proj : {&p, &q}) {
    SpanBuilder s(tol);
    for (const auto& x : ambient)
      for (const auto& y : ambient) s.add(flatten(x * (*proj) * y), 1.0);
    r.add_flag(proj == &p ? "span_CpC" : "span_CqC", s.dim() == whole.dim());
  }
  return {std::move(cat), std::move(fam), std::move(left_corner), std::move(right_corner), std::move(r)};
}

// ---------------------------------------------------------------------------
// Tensor and dual coherence

Report tensor_equals_composition(const CStarCategory& c, const PhiFamily& f, std::size_t samples, std::uint64_t seed) {
  const std::size_t k = c.objects();
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  Report r;
  double ri = 0.0, li = 0.0;
  bool surjective = true, iso = true;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t e = 0; e < k; ++e) {
        const auto& ab = f.block(a, b);
        const auto& be = f.block(b, e);
        const auto t = rieffel_tensor(ab.fibered(), be.fibered());
        for (std::size_t s = 0; s < samples; ++s) {
          Rng rng = derived_rng(seed, ((a * k + b) * k + e) * 1000 + s);
          auto u = BimoduleElement::zero(t.product), v = u;
          CMatrix tu = CMatrix::Zero(d, d), tv = tu;
          for (int term = 0; term < 2; ++term) {
            const CMatrix x1 = random_combination(ab.basis, d, rng), y1 = random_combination(be.basis, d, rng);
            const CMatrix x2 = random_combination(ab.basis, d, rng), y2 = random_combination(be.basis, d, rng);
            u = u + t.embed(ab.element(x1), be.element(y1));
            v = v + t.embed(ab.element(x2), be.element(y2));
            tu += x1 * y1;
            tv += x2 * y2;
          }
          ri = std::max(ri, rel(right_inner(u, v), f.transform(e, tu.adjoint() * tv)));
          li = std::max(li, rel(left_inner(u, v), f.transform(a, tu * tv.adjoint())));
        }
        SpanBuilder span(c.tol);
        for (const auto& x : ab.basis)
          for (const auto& y : be.basis) span.add(flatten(x * y), 1.0);
        surjective = surjective && span.dim() == f.block(a, e).basis.size();
        iso = iso && bimodule_isomorphic(t.product, f.block(a, e).fibered(), c.tol).has_value();
      }
  r.add("isometry_right", ri, c.tol);
  r.add("isometry_left", li, c.tol);
  r.add_flag("surjective", surjective);
  r.add_flag("isomorphic_to_composite_block", iso);
  return r;
}

Report dual_equals_involution(const CStarCategory& c, const PhiFamily& f, std::size_t samples, std::uint64_t seed) {
  const std::size_t k = c.objects();
  const auto d = static_cast<Eigen::Index>(c.ambient_dim);
  Report r;
  double isometric = 0.0, conj_lin = 0.0, anti = 0.0, inner = 0.0;
  bool iso = true;
  double iso_res = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      const auto& ab = f.block(a, b);
      const auto& ba = f.block(b, a);
      for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = derived_rng(seed, (a * k + b) * 1000 + s);
        const CMatrix x = random_combination(ab.basis, d, rng);
        const CMatrix y = random_combination(ab.basis, d, rng);
        const CMatrix ea = random_combination(f.block(a, a).basis, d, rng);
        const CMatrix eb = random_combination(f.block(b, b).basis, d, rng);
        const Complex lambda = random_complex(rng);
        isometric = std::max(isometric, std::abs(operator_norm(x.adjoint()) - operator_norm(x)) /
                                            std::max(1.0, operator_norm(x)));
        conj_lin = std::max(conj_lin, rel((lambda * x).adjoint(), std::conj(lambda) * x.adjoint()));
        anti = std::max(anti, rel((ea * x * eb).adjoint(), eb.adjoint() * x.adjoint() * ea.adjoint()));
        inner = std::max(inner, rel(right_inner(ba.element(x.adjoint()), ba.element(y.adjoint())),
                                    left_inner(ab.element(x), ab.element(y))));
      }
      const auto dual = rieffel_dual(ab.fibered());
      if (auto i = bimodule_isomorphic(ba.fibered(), dual.dual, c.tol)) {
        const auto v = i->verify(c.tol, samples, seed);
        for (const auto& ch : v.checks()) iso_res = std::max(iso_res, ch.residual);
      } else {
        iso = false;
      }
    }
  r.add("isometric", isometric, c.tol);
  r.add("conjugate_linear", conj_lin, c.tol);
  r.add("anti_multiplicative", anti, c.tol);
  r.add("dual_inner_product", inner, c.tol);
  r.add_flag("isomorphic_to_dual", iso);
  r.add("dual_iso", iso_res, c.tol);
  return r;
}

}  // namespace morita
