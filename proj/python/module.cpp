#include "morita/category.hpp"
#include "morita/cli.hpp"
#include "morita/generators.hpp"
#include "morita/json_io.hpp"
#include "morita/spectral.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace morita;

namespace {

Json parse(const std::string& text) { return Json::parse(text); }

FiberedBimodule fibered_or_decomposed(const Json& j) {
  if (is_presented_bimodule(j)) return decompose_presented(presented_from_json(j)).fibered;
  return fibered_from_json(j);
}

std::string imprimitivity(const std::string& text, double tol) {
  const auto rep = is_imprimitivity(fibered_or_decomposed(parse(text)), tol);
  Json out{{"imprimitivity", rep.imprimitivity}, {"graph", rep.graph},         {"identity", rep.identity},
           {"left_full", rep.left_full},         {"right_full", rep.right_full}, {"bijection", rep.bijection},
           {"reason", rep.reason}};
  return out.dump();
}

std::string phi(const std::string& text, double tol, std::size_t samples, std::uint64_t seed) {
  const auto cert = canonical_phi(fibered_or_decomposed(parse(text)), tol, samples, seed);
  Json out{{"pushforward", cert.phi.pushforward()},
           {"point_map", cert.phi.point_map()},
           {"alpha", to_json(cert.alpha.values())},
           {"checks", to_json(cert.residuals)},
           {"pass", cert.pass()}};
  return out.dump();
}

std::string reconstruct(const std::string& text, double tol, std::size_t samples, std::uint64_t seed) {
  const Json j = parse(text);
  const auto rep = is_presented_bimodule(j) ? verify_reconstruction(presented_from_json(j), tol, samples, seed)
                                            : verify_reconstruction(fibered_from_json(j), tol, samples, seed);
  Json out{{"pass", rep.pass},
           {"imprimitivity", rep.imprimitivity},
           {"bijection", rep.bijection},
           {"metrics", rep.metrics},
           {"phi_residual", rep.phi_residual},
           {"iso_residual", rep.iso_residual},
           {"failure", rep.failure}};
  return out.dump();
}

std::string decompose(const std::string& text, double tol) {
  return to_json(decompose_presented(presented_from_json(parse(text)), tol).fibered).dump();
}

std::string gen_bimodule(std::size_t n, double spread, std::uint64_t seed, bool present) {
  Rng rng = derived_rng(seed, 0);
  const auto m = gen_random_imprimitivity(n, spread, rng);
  return present ? to_json(present_bimodule(m, spread, rng)).dump() : to_json(m).dump();
}

std::string gen_category(std::size_t objects, std::size_t points, std::uint64_t seed) {
  Rng rng = derived_rng(seed, 0);
  return to_json(gen_random_category(objects, points, rng)).dump();
}

std::string run(const std::string& command, const std::vector<std::string>& inputs, double tol, std::uint64_t seed,
                std::size_t samples, const std::vector<std::size_t>& kept) {
  cli::RunConfig c;
  c.command = command;
  c.tol = tol;
  c.seed = seed;
  c.samples = samples;
  c.kept = kept;
  std::vector<Json> docs;
  for (const auto& t : inputs) docs.push_back(parse(t));
  auto r = cli::run(c, std::move(docs));
  r.document["status"] = r.status;
  return r.document.dump();
}

py::dict diagonalize(const std::vector<CMatrix>& generators, double tol) {
  const auto g = joint_diagonalize(generators, tol);
  py::dict out;
  out["characters"] = g.characters;
  out["multiplicity"] = g.multiplicity;
  out["basis"] = g.basis;
  std::vector<CMatrix> rec;
  for (std::size_t k = 0; k < generators.size(); ++k) rec.push_back(g.reconstruct(k));
  out["reconstructed"] = rec;
  return out;
}

}  // namespace

PYBIND11_MODULE(_morita, m) {
  m.doc() = "Imprimitivity bimodules over finite commutative C*-algebras.";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<cli::UsageError>(m, "UsageError", PyExc_ValueError);

  m.attr("default_tol") = kDefaultTol;

  m.def("imprimitivity", &imprimitivity, py::arg("bimodule"), py::arg("tol") = kDefaultTol);
  m.def("phi", &phi, py::arg("bimodule"), py::arg("tol") = kDefaultTol, py::arg("samples") = 20,
        py::arg("seed") = 42);
  m.def("reconstruct", &reconstruct, py::arg("bimodule"), py::arg("tol") = kDefaultTol, py::arg("samples") = 20,
        py::arg("seed") = 42);
  m.def("decompose", &decompose, py::arg("presented"), py::arg("tol") = kDefaultTol);
  m.def("gen_bimodule", &gen_bimodule, py::arg("n"), py::arg("spread") = 10.0, py::arg("seed") = 42,
        py::arg("present") = false);
  m.def("gen_category", &gen_category, py::arg("objects"), py::arg("points"), py::arg("seed") = 42);
  m.def("run", &run, py::arg("command"), py::arg("inputs"), py::arg("tol") = kDefaultTol, py::arg("seed") = 42,
        py::arg("samples") = 50, py::arg("kept") = std::vector<std::size_t>{});
  m.def("joint_diagonalize", &diagonalize, py::arg("generators"), py::arg("tol") = kDefaultTol);
  m.def("digest", [](const std::string& text) { return digest(parse(text)); }, py::arg("document"));
}
