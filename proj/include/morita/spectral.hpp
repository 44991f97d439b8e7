#pragma once

// Imprimitivity bimodules as sections of a Hermitian line bundle over the
// graph of a bijection of spectra.

#include "morita/bimodule.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace morita {

struct SpectralData {
  Algebra left;
  Algebra right;
  /// R: left point → right point; graph point k is (k, bijection[k])
  std::vector<std::size_t> bijection;
  /// metric scalar g_k of the line over graph point k
  std::vector<double> metrics;
  /// unit frame u_k: g_k |u_k|² = 1
  std::vector<Complex> frames;
  /// the canonical isomorphism, whose pullback is the inverse of R
  AlgebraMap phi;

  std::size_t graph_size() const noexcept { return bijection.size(); }
  std::size_t pi_left(std::size_t k) const { return k; }
  std::size_t pi_right(std::size_t k) const { return bijection.at(k); }
};

/// frame_seed 0 gives positive-real frames; any other seed draws a phase per
/// line. Throws PreconditionError when M is not an imprimitivity bimodule.
SpectralData spectral_data(const FiberedBimodule& m, double tol = kDefaultTol, std::uint64_t frame_seed = 0);
SpectralData spectral_data(const PresentedBimodule& p, double tol = kDefaultTol, std::uint64_t frame_seed = 0);

/// Γ(R; E): dimension-1 fibers on the graph with metrics g_k.
FiberedBimodule section_bimodule(const SpectralData& s);

struct Reconstruction {
  SpectralData spectral;
  FiberedBimodule section;
  FiberedBimodule source;
  /// present for presented inputs
  std::optional<Decomposition> decomposition;

  /// frame coefficient c_k = ⟨u_k, x_k⟩ of each line
  CVector trivialize(const BimoduleElement& x) const;
  /// Φ(x) = Σ_k c_k u_k
  BimoduleElement operator()(const BimoduleElement& x) const;
  BimoduleElement operator()(const CVector& presented) const;
};

Reconstruction reconstruction_iso(const FiberedBimodule& m, double tol = kDefaultTol, std::uint64_t frame_seed = 0);
Reconstruction reconstruction_iso(const PresentedBimodule& p, double tol = kDefaultTol, std::uint64_t frame_seed = 0);

/// Index maps of the auxiliary algebra {(a, φ(a))}: its characters k, the
/// maps α•, β• to the two spectra, and S to the graph.
struct DiagramMaps {
  std::vector<std::size_t> alpha_dot;
  std::vector<std::size_t> beta_dot;
  std::vector<std::pair<std::size_t, std::size_t>> s;
};

DiagramMaps diagram_maps(const SpectralData& s, double tol = kDefaultTol);

/// π_A∘S = α•, π_B∘S = β• and R = β•∘(α•)⁻¹, all exact.
Report check_diagram(const SpectralData& s, double tol = kDefaultTol);

struct ReconstructionReport {
  bool imprimitivity = false;
  std::vector<std::size_t> bijection;
  std::vector<double> metrics;
  double phi_residual = 0.0;
  double iso_residual = 0.0;
  bool pass = false;
  Report checks;
  /// stage and reason of the first failure
  std::string failure;
};

ReconstructionReport verify_reconstruction(const FiberedBimodule& m, double tol = kDefaultTol,
                                           std::size_t samples = 50, std::uint64_t seed = 42);
ReconstructionReport verify_reconstruction(const PresentedBimodule& p, double tol = kDefaultTol,
                                           std::size_t samples = 50, std::uint64_t seed = 42);

}  // namespace morita
