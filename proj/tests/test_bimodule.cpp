#include "morita/bimodule.hpp"
#include "morita/error.hpp"
#include "morita/generators.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace morita;

namespace {

FiberedBimodule swap2() { return graph_bimodule(numbered_algebra(2, "a"), numbered_algebra(2, "b"), {1, 0}); }

FiberedBimodule swap3() { return graph_bimodule(numbered_algebra(3, "a"), numbered_algebra(3, "b"), {1, 0, 2}); }

bool all_zero(const Report& r) {
  for (const auto& c : r.checks())
    if (c.residual > 1e-12) return false;
  return r.pass();
}

}  // namespace

TEST_CASE("construction") {
  const auto a = numbered_algebra(2, "a");
  const auto id = identity_bimodule(a);
  CHECK(id.total_dim() == 2);
  CHECK(id.dim(0, 0) == 1);
  CHECK(id.dim(0, 1) == 0);
  CHECK(swap2().dim(0, 1) == 1);
  CHECK_THROWS_AS(make_fibered_bimodule(a, a, {{0, 2, 1, CMatrix::Identity(1, 1)}}), PreconditionError);
  CHECK_THROWS_AS(make_fibered_bimodule(a, a, {{0, 0, 1, -CMatrix::Identity(1, 1)}}), PreconditionError);
  const auto wide = make_fibered_bimodule(a, a, {{0, 0, 2, CMatrix::Identity(2, 2)}, {1, 1, 1, CMatrix::Identity(1, 1)}});
  CHECK(wide.dim(0, 0) == 2);
  CHECK_FALSE(is_imprimitivity(wide).imprimitivity);
}

TEST_CASE("fibered axioms hold exactly") {
  Rng rng = derived_rng(1, 0);
  CHECK(all_zero(validate_bimodule_axioms(swap3())));
  const auto m = make_fibered_bimodule(numbered_algebra(2, "a"), numbered_algebra(3, "b"),
                                       {{0, 0, 2, CMatrix::Identity(2, 2)}, {1, 2, 1, CMatrix::Identity(1, 1) * 3.0}});
  CHECK(validate_bimodule_axioms(m).pass());
  CHECK(validate_bimodule_axioms(gen_random_imprimitivity(5, 10.0, rng)).pass());
}

TEST_CASE("presented axioms and injected defects") {
  Rng rng = derived_rng(2, 0);
  const auto m = gen_random_imprimitivity(4, 10.0, rng);
  auto p = present_bimodule(m, 3.0, rng);
  CHECK(validate_bimodule_axioms(p).pass());

  auto broken = p;
  // P ← P + εN with N orthogonal to the structure keeps the shape and breaks P² = P
  CMatrix n = random_matrix(static_cast<Eigen::Index>(p.dim), static_cast<Eigen::Index>(p.dim), rng);
  n /= n.norm();
  broken.left_idem[0] += 1e-3 * n;
  const auto r = validate_bimodule_axioms(broken);
  CHECK_FALSE(r.pass());
  const auto* c = r.find("left_idempotent");
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->pass);
  CHECK(c->residual > 1e-5);
}

TEST_CASE("imprimitivity") {
  CHECK(is_imprimitivity(swap2()).imprimitivity);
  CHECK(is_imprimitivity(swap2()).bijection == std::vector<std::size_t>{1, 0});
  const auto a = numbered_algebra(2, "a");
  const auto b = numbered_algebra(2, "b");
  const auto row = make_fibered_bimodule(a, b, {{0, 0, 1, CMatrix::Identity(1, 1)}, {0, 1, 1, CMatrix::Identity(1, 1)},
                                               {1, 1, 1, CMatrix::Identity(1, 1)}});
  const auto rep = is_imprimitivity(row);
  CHECK_FALSE(rep.imprimitivity);
  CHECK_FALSE(rep.graph);
  CHECK(rep.witness.has_value());
  CHECK(oracle::imprimitivity(row) == rep.imprimitivity);

  const auto thick = make_fibered_bimodule(a, b, {{0, 1, 2, CMatrix::Identity(2, 2)}, {1, 0, 1, CMatrix::Identity(1, 1)}});
  CHECK_FALSE(is_imprimitivity(thick).imprimitivity);
  CHECK(oracle::imprimitivity(thick) == false);
}

TEST_CASE("partition of unity") {
  Rng rng = derived_rng(3, 0);
  const auto a = numbered_algebra(3, "a");
  const auto id = identity_bimodule(a);
  const auto fam = partition_of_unity(id, Side::right);
  REQUIRE(fam.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(distance(fam[j].first, BimoduleElement::basis(id, j, j, 0)) == 0.0);
    CHECK(distance(fam[j].second, BimoduleElement::basis(id, j, j, 0)) == 0.0);
  }
  const auto m = gen_random_imprimitivity(5, 10.0, rng);
  for (auto side : {Side::left, Side::right}) {
    const auto f = partition_of_unity(m, side);
    CHECK(f.size() == 5);
    auto sum = AlgebraElement::zero(side == Side::right ? m.right() : m.left());
    for (const auto& [w, z] : f) sum = sum + (side == Side::right ? right_inner(w, z) : left_inner(w, z));
    CHECK(distance(sum, AlgebraElement::unit(sum.parent())) <= 1e-12);
  }
  const auto partial = make_fibered_bimodule(a, a, {{0, 0, 1, CMatrix::Identity(1, 1)}});
  CHECK_THROWS_AS(partition_of_unity(partial, Side::right), PreconditionError);
}

TEST_CASE("canonical phi") {
  const auto a = numbered_algebra(3, "a");
  const auto id = canonical_phi(identity_bimodule(a));
  CHECK(id.phi == AlgebraMap::identity(a));
  CHECK(id.pass());

  // swap: φ sends e_p to the idempotent at the partner point
  const auto s = canonical_phi(swap2());
  CHECK(s.phi.pushforward() == std::vector<std::size_t>{1, 0});
  for (std::size_t p = 0; p < 2; ++p)
    CHECK(distance(s.phi(AlgebraElement::idempotent(swap2().left(), p)),
                   AlgebraElement::idempotent(swap2().right(), 1 - p)) == 0.0);
  CHECK(distance(s.phi(AlgebraElement::unit(swap2().left())), AlgebraElement::unit(swap2().right())) == 0.0);

  Rng rng = derived_rng(4, 0);
  for (int i = 0; i < 10; ++i) {
    const auto m = gen_random_imprimitivity(6, 100.0, rng);
    const auto cert = canonical_phi(m, kDefaultTol, 20, 7 + i);
    CHECK(cert.pass());
    CHECK(distance(cert.alpha, AlgebraElement::unit(m.left())) <= 1e-9);
    // point map is the inverse of the support bijection
    CHECK(cert.phi.pushforward() == oracle::graph_bijection(m));
    for (int k = 0; k < 5; ++k) {
      const auto x = BimoduleElement::random(m, rng);
      const auto y = BimoduleElement::random(m, rng);
      const auto f = AlgebraElement::random(m.left(), rng);
      CHECK(distance(cert.phi(left_inner(x, y)), right_inner(y, x)) <= 1e-9 * (1 + right_inner(y, x).norm()));
      CHECK(distance(f * x, x * cert.phi(f)) <= 1e-12 * (1 + f.norm() * right_norm(x)));
      CHECK(std::abs(left_norm(x) - right_norm(x)) <= 1e-9 * (1 + right_norm(x)));
    }
  }
  CHECK_THROWS_AS(canonical_phi(make_fibered_bimodule(a, a, {{0, 0, 1, CMatrix::Identity(1, 1)}})), PreconditionError);
}

TEST_CASE("left action as compacts") {
  Rng rng = derived_rng(5, 0);
  CHECK(left_action_as_compacts(identity_bimodule(numbered_algebra(3, "a"))).pass());
  CHECK(left_action_as_compacts(gen_random_imprimitivity(4, 10.0, rng)).pass());
  const auto a = numbered_algebra(2, "a");
  const auto partial = make_fibered_bimodule(a, a, {{0, 0, 1, CMatrix::Identity(1, 1)}, {0, 1, 1, CMatrix::Identity(1, 1)}});
  const auto r = left_action_as_compacts(partial);
  const auto* inj = r.find("injective");
  REQUIRE(inj != nullptr);
  CHECK_FALSE(inj->pass);
}

TEST_CASE("Rieffel tensor") {
  Rng rng = derived_rng(6, 0);
  const auto m = gen_random_imprimitivity(4, 10.0, rng);
  const auto unit = rieffel_tensor(m, identity_bimodule(m.right()));
  const auto iso = bimodule_isomorphic(unit.product, m);
  REQUIRE(iso.has_value());
  CHECK(iso->verify().pass());

  const auto ss = rieffel_tensor(swap2(), graph_bimodule(numbered_algebra(2, "b"), numbered_algebra(2, "c"), {1, 0}));
  CHECK(is_imprimitivity(ss.product).bijection == std::vector<std::size_t>{0, 1});

  const auto n = graph_bimodule(m.right(), numbered_algebra(4, "c"), random_permutation(4, rng), {2.0, 0.5, 1.0, 3.0});
  const auto t = rieffel_tensor(m, n);
  for (int i = 0; i < 20; ++i) {
    const auto x1 = BimoduleElement::random(m, rng), x2 = BimoduleElement::random(m, rng);
    const auto y1 = BimoduleElement::random(n, rng), y2 = BimoduleElement::random(n, rng);
    const auto lhs = right_inner(t.embed(x1, y1), t.embed(x2, y2));
    const auto rhs = right_inner(y1, right_inner(x1, x2) * y2);
    CHECK(distance(lhs, rhs) <= 1e-9 * (1 + rhs.norm()));
  }
  // bijections compose
  const auto pm = oracle::graph_bijection(m);
  const auto pn = oracle::graph_bijection(n);
  const auto pt = oracle::graph_bijection(t.product);
  for (std::size_t p = 0; p < 4; ++p) CHECK(pt[p] == pn[pm[p]]);
  CHECK_THROWS_AS(rieffel_tensor(m, m), PreconditionError);
}

TEST_CASE("tensor associativity and dual anti-multiplicativity") {
  Rng rng = derived_rng(7, 0);
  const auto m = gen_random_imprimitivity(3, 10.0, rng);
  const auto n = graph_bimodule(m.right(), numbered_algebra(3, "c"), random_permutation(3, rng), {2.0, 0.5, 1.5});
  const auto p = graph_bimodule(n.right(), numbered_algebra(3, "d"), random_permutation(3, rng), {0.3, 4.0, 1.0});
  const auto left = rieffel_tensor(rieffel_tensor(m, n).product, p).product;
  const auto right = rieffel_tensor(m, rieffel_tensor(n, p).product).product;
  CHECK(bimodule_isomorphic(left, right).has_value());
  const auto d1 = rieffel_dual(rieffel_tensor(m, n).product).dual;
  const auto d2 = rieffel_tensor(rieffel_dual(n).dual, rieffel_dual(m).dual).product;
  CHECK(bimodule_isomorphic(d1, d2).has_value());
}

TEST_CASE("Rieffel dual") {
  Rng rng = derived_rng(8, 0);
  const auto a = numbered_algebra(3, "a");
  CHECK(bimodule_isomorphic(rieffel_dual(identity_bimodule(a)).dual, identity_bimodule(a)).has_value());
  const auto m = gen_random_imprimitivity(5, 10.0, rng);
  const auto d = rieffel_dual(m);
  const auto dd = rieffel_dual(d.dual).dual;
  const auto iso = bimodule_isomorphic(dd, m);
  REQUIRE(iso.has_value());
  CHECK(iso->verify().pass());
  // bijection of the dual is the inverse permutation
  const auto fwd = oracle::graph_bijection(m);
  const auto back = oracle::graph_bijection(d.dual);
  for (std::size_t p = 0; p < 5; ++p) CHECK(back[fwd[p]] == p);
  for (int i = 0; i < 10; ++i) {
    const auto x = BimoduleElement::random(m, rng);
    const auto y = BimoduleElement::random(m, rng);
    const auto fa = AlgebraElement::random(m.left(), rng);
    const auto fb = AlgebraElement::random(m.right(), rng);
    const Complex s = random_complex(rng);
    // ι(a·x·b) = b*·ι(x)·a*
    CHECK(distance(d.iota(fa * x * fb), fb.adjoint() * d.iota(x) * fa.adjoint()) <= 1e-12 * (1 + fa.norm() * fb.norm() * right_norm(x)));
    CHECK(distance(d.iota(s * x), std::conj(s) * d.iota(x)) <= 1e-12 * (1 + std::abs(s) * right_norm(x)));
    // ⟨ι(x), ι(y)⟩_A = _A⟨x, y⟩
    CHECK(distance(right_inner(d.iota(x), d.iota(y)), left_inner(x, y)) <= 1e-12 * (1 + left_inner(x, y).norm()));
  }
}

TEST_CASE("symmetrization") {
  CHECK(symmetrization_check(identity_bimodule(numbered_algebra(3, "a"))).pass());
  const auto r = symmetrization_check(swap3());
  CHECK(r.pass());
  for (const auto& c : r.checks()) CHECK(c.residual <= 1e-12);
  Rng rng = derived_rng(9, 0);
  CHECK(symmetrization_check(gen_random_imprimitivity(5, 10.0, rng)).pass());
}

TEST_CASE("quotients") {
  const auto m = swap3();
  const auto same = quotient_bimodule(m, ideal_from_points(m.left(), {0, 1, 2}));
  CHECK(same.bimodule == m);
  const auto q = quotient_bimodule(m, ideal_from_points(m.left(), {0, 2}));
  // kept right points are the images {1, 2}
  CHECK(q.right.projection.point_map() == std::vector<std::size_t>{1, 2});
  CHECK(is_imprimitivity(q.bimodule).imprimitivity);
  CHECK(canonical_phi(q.bimodule).phi == q.restricted_phi);
  CHECK(q.restricted_phi.pushforward() == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(quotient_bimodule(m, ideal_from_points(m.left(), {})), PreconditionError);
}

TEST_CASE("isomorphism testing") {
  Rng rng = derived_rng(10, 0);
  const auto m = gen_random_imprimitivity(4, 10.0, rng);
  const auto self = bimodule_isomorphic(m, m);
  REQUIRE(self.has_value());
  for (const auto& u : self->fiber_unitaries)
    if (u.size() > 0) CHECK((u - CMatrix::Identity(u.rows(), u.cols())).norm() <= 1e-12);

  const auto a = numbered_algebra(2, "a");
  const auto b = numbered_algebra(2, "b");
  CHECK_FALSE(bimodule_isomorphic(graph_bimodule(a, b, {1, 0}), graph_bimodule(a, b, {0, 1})).has_value());

  // metric ×4 → scaling 1/2
  const auto g1 = graph_bimodule(a, b, {1, 0}, {1.0, 1.0});
  const auto g4 = graph_bimodule(a, b, {1, 0}, {4.0, 4.0});
  const auto iso = bimodule_isomorphic(g1, g4);
  REQUIRE(iso.has_value());
  for (const auto& u : iso->fiber_unitaries)
    if (u.size() > 0) CHECK(std::abs(u(0, 0) - 0.5) <= 1e-12);
  CHECK(iso->verify().pass());
  CHECK_THROWS_AS(bimodule_isomorphic(g1, identity_bimodule(a)), PreconditionError);
}

TEST_CASE("decomposition of presented bimodules") {
  Rng rng = derived_rng(11, 0);
  for (int i = 0; i < 5; ++i) {
    const auto m = make_fibered_bimodule(
        numbered_algebra(2, "a"), numbered_algebra(3, "b"),
        {{0, 0, 2, CMatrix::Identity(2, 2)}, {0, 2, 1, 2.0 * CMatrix::Identity(1, 1)}, {1, 1, 3, CMatrix::Identity(3, 3)}});
    const auto p = present_bimodule(m, 5.0, rng);
    const auto d = decompose_presented(p);
    CHECK(d.checks.pass());
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 3; ++b) CHECK(d.fibered.dim(a, b) == m.dim(a, b));
    for (int k = 0; k < 5; ++k) {
      const CVector v = random_vector(static_cast<Eigen::Index>(p.dim), rng);
      const CVector w = random_vector(static_cast<Eigen::Index>(p.dim), rng);
      const auto lhs = right_inner(d(v), d(w));
      const auto rhs = p.right_inner(v, w);
      CHECK(distance(lhs, rhs) <= 1e-8 * (1 + rhs.norm()));
      CHECK((d.present(d(v)) - v).norm() <= 1e-9 * (1 + v.norm()));
    }
  }
  // diagonal idempotents decompose trivially
  const auto id = identity_bimodule(numbered_algebra(3, "a"));
  PresentedBimodule p;
  p.dim = 3;
  for (std::size_t k = 0; k < 3; ++k) {
    CMatrix e = CMatrix::Zero(3, 3);
    e(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
    p.left_idem.push_back(e);
    p.right_idem.push_back(e);
    p.right_gram.push_back(e);
    p.left_gram.push_back(e);
  }
  const auto d = decompose_presented(p);
  CHECK(d.fibered.total_dim() == 3);
  CHECK((d.to_fibered - CMatrix::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("brute-force agreement on small support patterns") {
  const auto a = numbered_algebra(2, "a");
  const auto b = numbered_algebra(2, "b");
  // every pattern on 2×2 with dims ≤ 2
  for (int code = 0; code < 81; ++code) {
    std::vector<FiberSpec> specs;
    int c = code;
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t q = 0; q < 2; ++q) {
        const auto d = static_cast<std::size_t>(c % 3);
        c /= 3;
        if (d > 0) specs.push_back({p, q, d, CMatrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))});
      }
    const auto m = make_fibered_bimodule(a, b, specs);
    CHECK(is_imprimitivity(m).imprimitivity == oracle::imprimitivity(m));
  }
}
