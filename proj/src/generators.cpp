#include "morita/generators.hpp"

#include "morita/error.hpp"

#include <cmath>
#include <numeric>

namespace morita {

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p[i - 1], p[pick(rng)]);
  }
  return p;
}

FiberedBimodule gen_random_imprimitivity(std::size_t n, double spread, Rng& rng) {
  if (n == 0) throw PreconditionError("need at least one point");
  if (!(spread >= 1.0)) throw PreconditionError("metric spread must be at least 1");
  const auto perm = random_permutation(n, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> metrics;
  for (std::size_t i = 0; i < n; ++i) metrics.push_back(std::exp(u(rng) * std::log(spread)));
  return graph_bimodule(numbered_algebra(n, "a"), numbered_algebra(n, "b"), perm, metrics);
}

CStarCategory gen_random_category(std::size_t k, std::size_t n, Rng& rng, double tol) {
  if (k == 0 || n == 0) throw PreconditionError("need at least one object and one point");
  const std::size_t dim = k * n;
  const auto perm = random_permutation(dim, rng);
  auto coord = [&](std::size_t s, std::size_t a) { return static_cast<Eigen::Index>(perm[s * k + a]); };
  const auto d = static_cast<Eigen::Index>(dim);

  CMatrix w = CMatrix::Zero(d, d);
  std::vector<CMatrix> projections(k, CMatrix::Zero(d, d));
  for (std::size_t a = 0; a < k; ++a) {
    const CMatrix wa = random_unitary(static_cast<Eigen::Index>(n), rng);
    for (std::size_t s = 0; s < n; ++s) {
      projections[a](coord(s, a), coord(s, a)) = 1.0;
      for (std::size_t t = 0; t < n; ++t)
        w(coord(s, a), coord(t, a)) = wa(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
    }
  }

  std::vector<CMatrix> units;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        CMatrix e = CMatrix::Zero(d, d);
        e(coord(s, a), coord(s, b)) = 1.0;
        units.push_back(w * e * w.adjoint());
      }
  std::vector<CMatrix> ambient;
  for (std::size_t i = 0; i < units.size(); ++i) {
    CMatrix x = CMatrix::Zero(d, d);
    for (const auto& e : units) x += random_complex(rng) * e;
    ambient.push_back(std::move(x));
  }

  std::vector<std::string> labels;
  for (std::size_t a = 0; a < k; ++a) labels.push_back(std::string(1, static_cast<char>('A' + a % 26)) +
                                                       (a >= 26 ? std::to_string(a / 26) : std::string()));
  return category_from_projections(std::move(projections), std::move(labels), std::move(ambient), tol);
}

PresentedAlgebraInstance random_presented_algebra(std::size_t dim, std::size_t gens, std::size_t chars,
                                                  double min_gap, Rng& rng) {
  if (chars == 0 || chars > dim) throw PreconditionError("character count must be in [1, dim]");
  if (gens == 0) throw PreconditionError("need at least one generator");
  PresentedAlgebraInstance out;
  auto far_enough = [&](const std::vector<Complex>& t) {
    for (const auto& u : out.tuples) {
      double gap = 0.0;
      for (std::size_t g = 0; g < gens; ++g) gap = std::max(gap, std::abs(t[g] - u[g]));
      if (gap < min_gap) return false;
    }
    return true;
  };
  std::bernoulli_distribution near(0.3);
  std::uniform_int_distribution<std::size_t> which(0, gens - 1);
  while (out.tuples.size() < chars) {
    std::vector<Complex> t(gens);
    if (!out.tuples.empty() && near(rng)) {
      t = out.tuples.back();
      const Complex step = random_complex(rng);
      t[which(rng)] += 1.5 * min_gap * step / std::max(std::abs(step), 1e-300);
    } else {
      for (auto& v : t) v = random_complex(rng);
    }
    if (far_enough(t)) out.tuples.push_back(std::move(t));
  }

  out.multiplicity.assign(chars, 1);
  std::uniform_int_distribution<std::size_t> slot(0, chars - 1);
  for (std::size_t extra = chars; extra < dim; ++extra) ++out.multiplicity[slot(rng)];

  const auto d = static_cast<Eigen::Index>(dim);
  const CMatrix u = random_unitary(d, rng);
  for (std::size_t g = 0; g < gens; ++g) {
    CVector diag(d);
    Eigen::Index pos = 0;
    for (std::size_t c = 0; c < chars; ++c)
      for (std::size_t r = 0; r < out.multiplicity[c]; ++r) diag(pos++) = out.tuples[c][g];
    out.generators.push_back(u * diag.asDiagonal() * u.adjoint());
  }
  return out;
}

}  // namespace morita
