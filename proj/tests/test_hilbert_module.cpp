#include "morita/error.hpp"
#include "morita/generators.hpp"
#include "morita/hilbert_module.hpp"

#include <doctest.h>

using namespace morita;

namespace {

CMatrix spd(Eigen::Index d, Rng& rng) {
  const CMatrix a = random_matrix(d, d, rng);
  return a * a.adjoint() + CMatrix::Identity(d, d);
}

FiberedModule sample_module(Rng& rng) {
  const auto b = numbered_algebra(3, "b");
  return make_fibered_module(b, {2, 1, 3}, {spd(2, rng), spd(1, rng), spd(3, rng)});
}

}  // namespace

TEST_CASE("module construction") {
  const auto b2 = numbered_algebra(2, "b");
  const auto self = make_fibered_module(b2, {1, 1});
  CHECK(is_full(self).full);
  const auto partial = make_fibered_module(numbered_algebra(3, "b"), {2, 0, 1});
  CHECK(partial.total_dim() == 3);
  CHECK_FALSE(is_full(partial).full);
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(make_fibered_module(b2, {2, 0}, {bad, CMatrix(0, 0)}), PreconditionError);
  CMatrix skew = CMatrix::Identity(2, 2);
  skew(0, 1) = 0.5;
  CHECK_THROWS_AS(make_fibered_module(b2, {2, 0}, {skew, CMatrix(0, 0)}), PreconditionError);
  CHECK_THROWS_AS(make_fibered_module(b2, {1}), PreconditionError);
}

TEST_CASE("inner product") {
  Rng rng = derived_rng(1, 0);
  const auto m = sample_module(rng);
  const auto e = ModuleElement::basis(make_fibered_module(m.base(), {1, 1, 1}), 1, 0);
  CHECK(distance(inner_product(e, e), AlgebraElement::idempotent(m.base(), 1)) == 0.0);
  for (int i = 0; i < 20; ++i) {
    const auto x = ModuleElement::random(m, rng);
    const auto y = ModuleElement::random(m, rng);
    const auto b = AlgebraElement::random(m.base(), rng);
    const auto xy = inner_product(x, y);
    CHECK(distance(xy.adjoint(), inner_product(y, x)) <= 1e-12 * (1 + xy.norm()));
    CHECK(distance(inner_product(x, y.act(b)), xy * b) <= 1e-12 * (1 + xy.norm() * b.norm()));
    CHECK(inner_product(x, x).is_positive());
    // Cauchy–Schwarz
    CHECK(xy.norm() <= module_norm(x) * module_norm(y) * (1 + 1e-9));
    CHECK(module_norm(Complex(2.0) * x) == doctest::Approx(2 * module_norm(x)));
  }
  CHECK(module_norm(ModuleElement::zero(m)) == 0.0);
}

TEST_CASE("unit fiber vectors have norm one") {
  const auto m = make_fibered_module(numbered_algebra(2, "b"), {2, 1});
  CHECK(module_norm(ModuleElement::basis(m, 0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("fullness witness") {
  Rng rng = derived_rng(2, 0);
  const auto m = make_fibered_module(numbered_algebra(3, "b"), {1, 1, 1}, {spd(1, rng), spd(1, rng), spd(1, rng)});
  const auto w = is_full(m);
  REQUIRE(w.full);
  CHECK(w.family.size() == 3);
  auto sum = AlgebraElement::zero(m.base());
  for (const auto& [a, b] : w.family) sum = sum + inner_product(a, b);
  CHECK(distance(sum, AlgebraElement::unit(m.base())) <= 1e-12);

  const auto partial = is_full(make_fibered_module(numbered_algebra(2, "b"), {1, 0}));
  CHECK_FALSE(partial.full);
  CHECK(partial.empty_points == std::vector<std::size_t>{1});
}

TEST_CASE("theta operators") {
  Rng rng = derived_rng(3, 0);
  const auto m = sample_module(rng);
  for (int i = 0; i < 10; ++i) {
    const auto x = ModuleElement::random(m, rng);
    const auto y = ModuleElement::random(m, rng);
    const auto z = ModuleElement::random(m, rng);
    const auto u = ModuleElement::random(m, rng);
    const auto v = ModuleElement::random(m, rng);
    const auto t = theta(x, y);
    CHECK(distance(t(z), x.act(inner_product(y, z))) <= 1e-10);
    CHECK(distance(endomorphism_adjoint(t), theta(y, x)) <= 1e-9);
    CHECK(distance(theta(x, y) * theta(u, v), theta(x.act(inner_product(y, u)), v)) <= 1e-8);
  }
  CHECK(distance(theta(ModuleElement::zero(m), ModuleElement::random(m, rng)), ModuleOperator::zero(m)) == 0.0);
}

TEST_CASE("metric adjoint") {
  Rng rng = derived_rng(4, 0);
  const auto m = sample_module(rng);
  CHECK(distance(endomorphism_adjoint(ModuleOperator::identity(m)), ModuleOperator::identity(m)) <= 1e-12);
  for (int i = 0; i < 10; ++i) {
    const auto t = ModuleOperator::random(m, rng);
    const auto s = endomorphism_adjoint(t);
    CHECK(distance(endomorphism_adjoint(s), t) <= 1e-9);
    const auto x = ModuleElement::random(m, rng);
    const auto y = ModuleElement::random(m, rng);
    CHECK(distance(inner_product(s(x), y), inner_product(x, t(y))) <= 1e-9);
  }
  const auto flat = make_fibered_module(numbered_algebra(2, "b"), {2, 2});
  const auto t = ModuleOperator::random(flat, rng);
  const auto s = endomorphism_adjoint(t);
  for (std::size_t p = 0; p < 2; ++p) CHECK((s.block(p) - t.block(p).adjoint()).norm() <= 1e-12);
}

TEST_CASE("finite-rank span dimension matches Gram–Schmidt over thetas") {
  auto brute = [](const FiberedModule& m) {
    std::vector<ModuleElement> basis;
    for (std::size_t p = 0; p < m.points(); ++p)
      for (std::size_t i = 0; i < m.dim(p); ++i) basis.push_back(ModuleElement::basis(m, p, i));
    SpanBuilder span(1e-10);
    for (const auto& x : basis)
      for (const auto& y : basis) {
        const auto t = theta(x, y);
        std::vector<Complex> flat;
        for (const auto& b : t.blocks())
          for (Eigen::Index k = 0; k < b.size(); ++k) flat.push_back(b.data()[k]);
        span.add(Eigen::Map<CVector>(flat.data(), static_cast<Eigen::Index>(flat.size())));
      }
    return span.dim();
  };
  const auto b2 = numbered_algebra(2, "b");
  for (const std::vector<std::size_t>& dims : {std::vector<std::size_t>{1, 1}, {2, 1}, {0, 3}}) {
    const auto m = make_fibered_module(b2, dims);
    CHECK(finite_rank_span_dim(m) == brute(m));
  }
  CHECK(finite_rank_span_dim(make_fibered_module(b2, {1, 1})) == 2);
  CHECK(finite_rank_span_dim(make_fibered_module(b2, {2, 1})) == 5);
  CHECK(finite_rank_span_dim(make_fibered_module(b2, {0, 3})) == 9);
}

TEST_CASE("quotient modules") {
  Rng rng = derived_rng(5, 0);
  const auto b = numbered_algebra(3, "b");
  const auto m = make_fibered_module(b, {1, 1, 1}, {spd(1, rng), spd(1, rng), spd(1, rng)});
  const auto zero = quotient_module(m, ideal_from_points(b, {0, 1, 2}));
  CHECK(zero.module.dims() == m.dims());

  const auto q = quotient_module(m, ideal_from_points(b, {0, 2}));
  CHECK(q.module.dims() == std::vector<std::size_t>{1, 1});
  CHECK(is_full(q.module).full);
  for (int i = 0; i < 10; ++i) {
    const auto x = ModuleElement::random(m, rng);
    const auto y = ModuleElement::random(m, rng);
    CHECK(distance(inner_product(q(x), q(y)), q.algebra.projection(inner_product(x, y))) <= 1e-12);
  }
  CHECK_THROWS_AS(quotient_module(m, ideal_from_points(b, {})), PreconditionError);
}

TEST_CASE("right twists") {
  Rng rng = derived_rng(6, 0);
  const auto m = sample_module(rng);
  const auto a = numbered_algebra(3, "a");
  const auto c = numbered_algebra(3, "c");
  const auto alpha = AlgebraMap::from_pushforward(a, m.base(), random_permutation(3, rng));
  const auto beta = AlgebraMap::from_pushforward(c, a, random_permutation(3, rng));

  CHECK(twist_right(m, AlgebraMap::identity(m.base())).module == m);
  const auto tw = twist_right(m, alpha);
  CHECK(twist_right(tw.module, alpha.inverse()).module == m);
  CHECK(twist_right(tw.module, beta).module == twist_right(m, compose(alpha, beta)).module);
  CHECK_THROWS_AS(twist_right(m, AlgebraMap(a, m.base(), {0, 0, 1})), PreconditionError);

  for (int i = 0; i < 10; ++i) {
    const auto x = ModuleElement::random(m, rng);
    const auto y = ModuleElement::random(m, rng);
    CHECK(distance(inner_product(tw(x), tw(y)), alpha.inverse()(inner_product(x, y))) <= 1e-12);
    CHECK(distance(tw.untwist(tw(x)), x) == 0.0);
    // the same adjoint certifies adjointability before and after the twist
    const auto t = ModuleOperator::random(m, rng);
    const auto s = endomorphism_adjoint(t);
    CHECK(distance(inner_product(s(x), y), inner_product(x, t(y))) <= 1e-9);
    CHECK(distance(inner_product(tw(s)(tw(x)), tw(y)), inner_product(tw(x), tw(t)(tw(y)))) <= 1e-9);
    CHECK(distance(endomorphism_adjoint(tw(t)), tw(s)) <= 1e-9);
  }
}
