#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance run. Nothing here calls the library's inner products.

#include "morita/bimodule.hpp"

#include <vector>

namespace oracle {

struct Basis {
  std::size_t a, b, i;
};

inline std::vector<Basis> basis_of(const morita::FiberedBimodule& m) {
  std::vector<Basis> out;
  for (std::size_t a = 0; a < m.m(); ++a)
    for (std::size_t b = 0; b < m.n(); ++b)
      for (std::size_t i = 0; i < m.dim(a, b); ++i) out.push_back({a, b, i});
  return out;
}

/// Exhaustive check of _A<x,y>z = x<y,z>_B over basis triples plus fullness
/// by span, for identity metrics. With orthonormal fiber bases
///   _A<x,y> = [x = y] e_a(x),   <y,z>_B = [y = z] e_b(y),
/// so both sides are indicator multiples of a basis vector.
inline bool imprimitivity(const morita::FiberedBimodule& m) {
  const auto basis = basis_of(m);
  auto same = [](const Basis& u, const Basis& v) { return u.a == v.a && u.b == v.b && u.i == v.i; };
  for (const auto& x : basis)
    for (const auto& y : basis)
      for (const auto& z : basis) {
        const bool lhs = same(x, y) && z.a == x.a;   // coefficient 1 on z
        const bool rhs = same(y, z) && x.b == y.b;   // coefficient 1 on x
        if (lhs != rhs) return false;
        if (lhs && !same(x, z)) return false;
      }
  std::vector<bool> left(m.m(), false), right(m.n(), false);
  for (const auto& x : basis) left[x.a] = right[x.b] = true;
  for (bool v : left)
    if (!v) return false;
  for (bool v : right)
    if (!v) return false;
  return true;
}

/// Left point → right point of a support that is the graph of a bijection
/// with one-dimensional fibers; empty otherwise.
inline std::vector<std::size_t> graph_bijection(const morita::FiberedBimodule& m) {
  std::vector<std::size_t> out(m.m(), m.n());
  std::vector<bool> hit(m.n(), false);
  for (std::size_t a = 0; a < m.m(); ++a)
    for (std::size_t b = 0; b < m.n(); ++b) {
      const auto d = m.dim(a, b);
      if (d == 0) continue;
      if (d != 1 || out[a] != m.n() || hit[b]) return {};
      out[a] = b;
      hit[b] = true;
    }
  for (auto v : out)
    if (v == m.n()) return {};
  if (m.m() != m.n()) return {};
  return out;
}

}  // namespace oracle
