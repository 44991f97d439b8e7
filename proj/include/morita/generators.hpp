#pragma once

// Seeded random instances for tests, the acceptance run and `morita gen`.

#include "morita/bimodule.hpp"
#include "morita/category.hpp"

#include <vector>

namespace morita {

/// Fisher–Yates permutation of {0, …, n−1}; independent of the standard
/// library's shuffle.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

/// Graph bimodule of a random bijection on n points with metrics
/// log-uniform in [1/spread, spread]. Labels a0.. and b0...
FiberedBimodule gen_random_imprimitivity(std::size_t n, double spread, Rng& rng);

/// k objects, each with an n-point diagonal block, inside M_{kn}.
CStarCategory gen_random_category(std::size_t k, std::size_t n, Rng& rng, double tol = kDefaultTol);

struct PresentedAlgebraInstance {
  std::vector<CMatrix> generators;
  /// ground truth: joint eigenvalue tuple and multiplicity per character
  std::vector<std::vector<Complex>> tuples;
  std::vector<std::size_t> multiplicity;
};

/// U·diag·U* generators with `chars` distinct joint tuples whose pairwise
/// max-coordinate distance is at least min_gap (some pairs sit at the gap).
PresentedAlgebraInstance random_presented_algebra(std::size_t dim, std::size_t gens, std::size_t chars,
                                                  double min_gap, Rng& rng);

}  // namespace morita
