#include "morita/spectral.hpp"

#include "morita/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace morita {

namespace {

double rel(const AlgebraElement& u, const AlgebraElement& v) {
  return distance(u, v) / std::max({1.0, u.norm(), v.norm()});
}

double rel(const BimoduleElement& u, const BimoduleElement& v) {
  const double nu = u.coords().size() ? u.coords().cwiseAbs().maxCoeff() : 0.0;
  const double nv = v.coords().size() ? v.coords().cwiseAbs().maxCoeff() : 0.0;
  return distance(u, v) / std::max({1.0, nu, nv});
}

double max_residual(const Report& r) {
  double m = 0.0;
  for (const auto& c : r.checks()) m = std::max(m, c.residual);
  return m;
}

}  // namespace

SpectralData spectral_data(const FiberedBimodule& m, double tol, std::uint64_t frame_seed) {
  const auto imp = is_imprimitivity(m, tol);
  if (!imp.imprimitivity) throw PreconditionError("not an imprimitivity bimodule: " + imp.reason);
  auto cert = canonical_phi(m, tol, 0);
  const auto from_phi = cert.phi.inverse().point_map();
  if (from_phi != imp.bijection) throw NumericalError("support graph and canonical isomorphism disagree");

  SpectralData s{m.left(), m.right(), imp.bijection, {}, {}, cert.phi};
  Rng rng = derived_rng(frame_seed, 0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < s.bijection.size(); ++k) {
    const double g = m.metric(k, s.bijection[k])(0, 0).real();
    s.metrics.push_back(g);
    const Complex phase = frame_seed == 0 ? Complex(1.0) : std::polar(1.0, angle(rng));
    s.frames.push_back(phase / std::sqrt(g));
  }
  return s;
}

SpectralData spectral_data(const PresentedBimodule& p, double tol, std::uint64_t frame_seed) {
  return spectral_data(decompose_presented(p, tol).fibered, tol, frame_seed);
}

FiberedBimodule section_bimodule(const SpectralData& s) {
  return graph_bimodule(s.left, s.right, s.bijection, s.metrics);
}

CVector Reconstruction::trivialize(const BimoduleElement& x) const {
  const auto& m = x.parent();
  CVector c(static_cast<Eigen::Index>(spectral.graph_size()));
  for (std::size_t k = 0; k < spectral.graph_size(); ++k) {
    const std::size_t q = spectral.bijection[k];
    c(static_cast<Eigen::Index>(k)) = std::conj(spectral.frames[k]) * m.metric(k, q)(0, 0) * x.fiber(k, q)(0);
  }
  return c;
}

BimoduleElement Reconstruction::operator()(const BimoduleElement& x) const {
  if (!(x.parent() == source)) throw PreconditionError("element does not belong to the reconstructed bimodule");
  const CVector c = trivialize(x);
  CVector v = CVector::Zero(static_cast<Eigen::Index>(section.total_dim()));
  for (std::size_t k = 0; k < spectral.graph_size(); ++k)
    v(static_cast<Eigen::Index>(section.offset(k, spectral.bijection[k]))) = c(static_cast<Eigen::Index>(k)) * spectral.frames[k];
  return {section, std::move(v)};
}

BimoduleElement Reconstruction::operator()(const CVector& presented) const {
  if (!decomposition) throw PreconditionError("reconstruction was built from a fibered bimodule");
  return (*this)((*decomposition)(presented));
}

Reconstruction reconstruction_iso(const FiberedBimodule& m, double tol, std::uint64_t frame_seed) {
  auto s = spectral_data(m, tol, frame_seed);
  auto sec = section_bimodule(s);
  return {std::move(s), std::move(sec), m, std::nullopt};
}

Reconstruction reconstruction_iso(const PresentedBimodule& p, double tol, std::uint64_t frame_seed) {
  auto d = decompose_presented(p, tol);
  auto r = reconstruction_iso(d.fibered, tol, frame_seed);
  r.decomposition = std::move(d);
  return r;
}

DiagramMaps diagram_maps(const SpectralData& s, double tol) {
  const Algebra& A = s.left;
  const Algebra& B = s.right;
  const AlgebraMap phi_inv = s.phi.inverse();

  // characters of R = {(a, φ(a))} ⊂ A ⊕ B are restrictions of the point
  // evaluations of A ⊕ B; two of them coincide when they agree on the
  // spanning family (e_p, φ(e_p))
  struct Restricted {
    bool from_left;
    std::size_t point;
    std::vector<long> values;
  };
  std::vector<Restricted> chars;
  auto snap = [&](Complex v) {
    const long r = std::lround(v.real());
    if (std::abs(v - Complex(static_cast<double>(r))) > tol) throw NumericalError("auxiliary character is not 0/1 valued");
    return r;
  };
  for (std::size_t p = 0; p < A.dim(); ++p) {
    Restricted c{true, p, {}};
    for (std::size_t i = 0; i < A.dim(); ++i) c.values.push_back(snap(AlgebraElement::idempotent(A, i)[p]));
    chars.push_back(std::move(c));
  }
  for (std::size_t q = 0; q < B.dim(); ++q) {
    Restricted c{false, q, {}};
    for (std::size_t i = 0; i < A.dim(); ++i) c.values.push_back(snap(s.phi(AlgebraElement::idempotent(A, i))[q]));
    chars.push_back(std::move(c));
  }

  // group into the spectrum of R, indexed by the left representative
  DiagramMaps d;
  std::vector<std::vector<long>> spectrum;
  std::vector<std::size_t> left_rep, right_rep;
  for (const auto& c : chars) {
    std::size_t k = 0;
    while (k < spectrum.size() && spectrum[k] != c.values) ++k;
    if (k == spectrum.size()) {
      spectrum.push_back(c.values);
      left_rep.push_back(A.dim());
      right_rep.push_back(B.dim());
    }
    (c.from_left ? left_rep[k] : right_rep[k]) = c.point;
  }
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    // α•: χ_k∘α is the evaluation at the point where χ_k(α(e_p)) = 1
    std::size_t a_pt = A.dim();
    for (std::size_t p = 0; p < A.dim(); ++p)
      if (spectrum[k][p] == 1) a_pt = p;
    d.alpha_dot.push_back(a_pt);
    // β•: χ_k(β(e_q)) with β(b) = (φ⁻¹(b), b), evaluated through the left leg
    std::size_t b_pt = B.dim();
    for (std::size_t q = 0; q < B.dim(); ++q) {
      const auto pre = phi_inv(AlgebraElement::idempotent(B, q));
      long v = 0;
      for (std::size_t p = 0; p < A.dim(); ++p) v += spectrum[k][p] * snap(pre[p]);
      if (v == 1) b_pt = q;
    }
    d.beta_dot.push_back(b_pt);
    d.s.emplace_back(left_rep[k], right_rep[k]);
  }
  return d;
}

Report check_diagram(const SpectralData& s, double tol) {
  const auto d = diagram_maps(s, tol);
  Report r;
  bool left = d.s.size() == d.alpha_dot.size(), right = left;
  for (std::size_t k = 0; k < d.s.size() && left; ++k) {
    left = left && d.s[k].first == d.alpha_dot[k];
    right = right && d.s[k].second == d.beta_dot[k];
  }
  r.add_flag("pi_left_S_eq_alpha_dot", left);
  r.add_flag("pi_right_S_eq_beta_dot", right);
  bool graph = d.s.size() == s.graph_size();
  for (std::size_t k = 0; k < d.s.size() && graph; ++k)
    graph = d.s[k].first < s.graph_size() && s.bijection[d.s[k].first] == d.s[k].second;
  r.add_flag("S_onto_graph", graph);
  std::vector<std::size_t> composed(s.left.dim(), s.right.dim());
  for (std::size_t k = 0; k < d.alpha_dot.size(); ++k)
    if (d.alpha_dot[k] < composed.size()) composed[d.alpha_dot[k]] = d.beta_dot[k];
  r.add_flag("R_eq_beta_dot_alpha_dot_inverse", composed == s.bijection);
  return r;
}

namespace {

ReconstructionReport run_pipeline(const FiberedBimodule& m, const PresentedBimodule* presented,
                                  const std::optional<Decomposition>& decomposition, double tol, std::size_t samples,
                                  std::uint64_t seed, ReconstructionReport rep) {
  const auto imp = is_imprimitivity(m, tol);
  rep.imprimitivity = imp.imprimitivity;
  rep.checks.add_flag("imprimitivity", imp.imprimitivity);
  if (!imp.imprimitivity) {
    rep.failure = "imprimitivity: " + imp.reason;
    rep.pass = false;
    return rep;
  }

  const auto cert = canonical_phi(m, tol, samples, seed);
  rep.checks.merge(cert.residuals, "phi.");
  rep.phi_residual = max_residual(cert.residuals);

  auto recon = reconstruction_iso(m, tol, 0);
  if (decomposition) recon.decomposition = decomposition;
  const auto& s = recon.spectral;
  rep.bijection = s.bijection;
  rep.metrics = s.metrics;

  double act = 0.0, ri = 0.0, li = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = derived_rng(seed, 5000 + i);
    const auto a = AlgebraElement::random(m.left(), rng);
    const auto b = AlgebraElement::random(m.right(), rng);
    if (presented) {
      const auto d = static_cast<Eigen::Index>(presented->dim);
      const CVector x = random_vector(d, rng);
      const CVector y = random_vector(d, rng);
      const auto fx = recon(x);
      const auto fy = recon(y);
      act = std::max(act, rel(recon(presented->right_act(presented->left_act(a, x), b)), (a * fx) * b));
      ri = std::max(ri, rel(right_inner(fx, fy), presented->right_inner(x, y)));
      li = std::max(li, rel(left_inner(fx, fy), presented->left_inner(x, y)));
    } else {
      const auto x = BimoduleElement::random(m, rng);
      const auto y = BimoduleElement::random(m, rng);
      const auto fx = recon(x);
      const auto fy = recon(y);
      act = std::max(act, rel(recon((a * x) * b), (a * fx) * b));
      ri = std::max(ri, rel(right_inner(fx, fy), right_inner(x, y)));
      li = std::max(li, rel(left_inner(fx, fy), left_inner(x, y)));
    }
  }
  rep.checks.add("iso.actions", act, tol);
  rep.checks.add("iso.right_inner", ri, tol);
  rep.checks.add("iso.left_inner", li, tol);
  rep.iso_residual = std::max({act, ri, li});

  rep.checks.add_flag("section.imprimitivity", is_imprimitivity(recon.section, tol).imprimitivity);
  rep.checks.add_flag("round_trip.bijection", spectral_data(recon.section, tol).bijection == s.bijection);
  if (auto iso = bimodule_isomorphic(recon.section, m, tol)) {
    const auto v = iso->verify(tol, samples, seed);
    rep.checks.merge(v, "round_trip.");
  } else {
    rep.checks.add_flag("round_trip.isomorphic", false);
  }
  rep.checks.merge(check_diagram(s, tol), "diagram.");

  const auto gauged = spectral_data(m, tol, seed == 0 ? 1 : seed);
  rep.checks.add_flag("gauge.bijection", gauged.bijection == s.bijection);
  rep.checks.add_flag("gauge.isomorphic", bimodule_isomorphic(section_bimodule(gauged), recon.section, tol).has_value());

  rep.pass = rep.checks.pass();
  if (const auto* c = rep.checks.first_failure()) {
    std::ostringstream msg;
    msg << c->name << " residual " << c->residual;
    rep.failure = msg.str();
  }
  return rep;
}

}  // namespace

ReconstructionReport verify_reconstruction(const FiberedBimodule& m, double tol, std::size_t samples,
                                           std::uint64_t seed) {
  return run_pipeline(m, nullptr, std::nullopt, tol, samples, seed, {});
}

ReconstructionReport verify_reconstruction(const PresentedBimodule& p, double tol, std::size_t samples,
                                           std::uint64_t seed) {
  ReconstructionReport rep;
  rep.checks.merge(validate_bimodule_axioms(p, tol, samples, seed), "axioms.");
  std::optional<Decomposition> d;
  try {
    d = decompose_presented(p, tol);
  } catch (const PreconditionError& e) {
    rep.failure = std::string("decomposition: ") + e.what();
    rep.checks.add_flag("decomposition", false);
    return rep;
  }
  rep.checks.merge(d->checks, "decompose.");
  return run_pipeline(d->fibered, &p, d, tol, samples, seed, std::move(rep));
}

}  // namespace morita
