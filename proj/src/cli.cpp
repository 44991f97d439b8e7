#include "morita/cli.hpp"

#include "morita/error.hpp"
#include "morita/generators.hpp"
#include "morita/spectral.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace morita::cli {

namespace {

struct LoadedBimodule {
  Json source;
  std::optional<PresentedBimodule> presented;
  std::optional<Decomposition> decomposition;
  FiberedBimodule fibered;
};

LoadedBimodule as_bimodule(const Json& j, double tol, Report& checks) {
  if (is_presented_bimodule(j)) {
    auto p = presented_from_json(j);
    auto d = decompose_presented(p, tol);
    checks.merge(d.checks, "decompose.");
    auto f = d.fibered;
    return {j, std::move(p), std::move(d), std::move(f)};
  }
  return {j, std::nullopt, std::nullopt, fibered_from_json(j)};
}

bool is_category(const Json& j) { return j.is_object() && j.contains("objects"); }

Json point_map_json(const AlgebraMap& f) {
  return {{"source", f.source().labels()},
          {"target", f.target().labels()},
          {"point_map", f.point_map()},
          {"pushforward", f.is_bijective() ? Json(f.pushforward()) : Json(nullptr)}};
}

const Json& single_input(const std::vector<Json>& inputs, const std::string& command) {
  if (inputs.size() != 1) throw UsageError(command + " takes exactly one --in file");
  return inputs.front();
}

Json cmd_validate(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  const Json& j = single_input(in, c.command);
  if (is_presented_bimodule(j)) {
    r.merge(validate_bimodule_axioms(presented_from_json(j), c.tol, c.samples, c.seed), "");
    return {{"kind", "presented"}};
  }
  r.merge(validate_bimodule_axioms(fibered_from_json(j), c.tol, c.samples, c.seed), "");
  return {{"kind", "fibered"}};
}

Json cmd_imprimitivity(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  auto m = as_bimodule(single_input(in, c.command), c.tol, r);
  const auto rep = is_imprimitivity(m.fibered, c.tol);
  r.add_flag("graph", rep.graph);
  r.add_flag("left_full", rep.left_full);
  r.add_flag("right_full", rep.right_full);
  r.add("identity", rep.identity_residual, c.tol);
  r.add_flag("imprimitivity", rep.imprimitivity);
  Json out = {{"imprimitivity", rep.imprimitivity}, {"bijection", rep.bijection}, {"reason", rep.reason}};
  if (rep.witness) {
    const auto& w = *rep.witness;
    out["witness"] = {{"x", {w.x[0], w.x[1], w.x[2]}},
                      {"y", {w.y[0], w.y[1], w.y[2]}},
                      {"z", {w.z[0], w.z[1], w.z[2]}},
                      {"residual", w.residual}};
  }
  return out;
}

Json cmd_phi(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  auto m = as_bimodule(single_input(in, c.command), c.tol, r);
  const auto cert = canonical_phi(m.fibered, c.tol, c.samples, c.seed);
  r.merge(cert.residuals, "");
  Json alpha = Json::array();
  for (std::size_t p = 0; p < cert.alpha.parent().dim(); ++p) alpha.push_back(to_json(cert.alpha[p]));
  return {{"phi", point_map_json(cert.phi)}, {"alpha", alpha}};
}

Json cmd_decompose(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  const Json& j = single_input(in, c.command);
  if (!is_presented_bimodule(j)) throw UsageError("decompose expects a presented bimodule");
  const auto p = presented_from_json(j);
  const auto d = decompose_presented(p, c.tol);
  r.merge(d.checks, "");
  return {{"fibered", to_json(d.fibered)}};
}

Json cmd_reconstruct(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  const Json& j = single_input(in, c.command);
  const auto rep = is_presented_bimodule(j) ? verify_reconstruction(presented_from_json(j), c.tol, c.samples, c.seed)
                                            : verify_reconstruction(fibered_from_json(j), c.tol, c.samples, c.seed);
  r.merge(rep.checks, "");
  return {{"imprimitivity", rep.imprimitivity},
          {"bijection", rep.bijection},
          {"metrics", rep.metrics},
          {"phi_residual", rep.phi_residual},
          {"iso_residual", rep.iso_residual},
          {"failure", rep.failure}};
}

Json cmd_tensor(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  if (in.size() == 1 && is_category(in[0])) {
    const auto cat = category_from_json(in[0]);
    const auto fam = canonical_phi_family(cat, std::min<std::size_t>(c.samples, 10), c.seed);
    r.merge(tensor_equals_composition(cat, fam, std::min<std::size_t>(c.samples, 10), c.seed), "");
    return {{"objects", cat.labels}};
  }
  if (in.size() != 2) throw UsageError("tensor takes two bimodules or one category");
  Report prep;
  auto m = as_bimodule(in[0], c.tol, prep);
  auto n = as_bimodule(in[1], c.tol, prep);
  r.merge(prep, "");
  const auto t = rieffel_tensor(m.fibered, n.fibered);
  r.merge(validate_bimodule_axioms(t.product, c.tol, c.samples, c.seed), "axioms.");
  const auto imp = is_imprimitivity(t.product, c.tol);
  r.add_flag("imprimitivity", imp.imprimitivity);
  if (imp.imprimitivity) {
    const auto pm = canonical_phi(m.fibered, c.tol, c.samples, c.seed).phi;
    const auto pn = canonical_phi(n.fibered, c.tol, c.samples, c.seed).phi;
    const auto pt = canonical_phi(t.product, c.tol, c.samples, c.seed).phi;
    r.add_flag("phi_composes", pt == compose(pn, pm));
  }
  return {{"product", to_json(t.product)}};
}

Json cmd_dual(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  const Json& j = single_input(in, c.command);
  if (is_category(j)) {
    const auto cat = category_from_json(j);
    const auto fam = canonical_phi_family(cat, std::min<std::size_t>(c.samples, 10), c.seed);
    r.merge(dual_equals_involution(cat, fam, std::min<std::size_t>(c.samples, 10), c.seed), "");
    return {{"objects", cat.labels}};
  }
  auto m = as_bimodule(j, c.tol, r);
  const auto d = rieffel_dual(m.fibered);
  r.merge(validate_bimodule_axioms(d.dual, c.tol, c.samples, c.seed), "axioms.");
  const auto back = rieffel_dual(d.dual).dual;
  const auto iso = bimodule_isomorphic(back, m.fibered, c.tol);
  r.add_flag("double_dual_isomorphic", iso.has_value());
  const auto imp = is_imprimitivity(m.fibered, c.tol);
  if (imp.imprimitivity) {
    const auto pm = canonical_phi(m.fibered, c.tol, c.samples, c.seed).phi;
    const auto pd = canonical_phi(d.dual, c.tol, c.samples, c.seed).phi;
    r.add_flag("phi_inverse", pd == pm.inverse());
  }
  return {{"dual", to_json(d.dual)}};
}

Json cmd_quotient(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  auto m = as_bimodule(single_input(in, c.command), c.tol, r);
  for (auto k : c.kept)
    if (k >= m.fibered.m()) throw UsageError("--kept point " + std::to_string(k) + " out of range");
  const auto q = quotient_bimodule(m.fibered, Ideal(m.fibered.left(), c.kept), c.tol);
  const auto imp = is_imprimitivity(q.bimodule, c.tol);
  r.add_flag("imprimitivity", imp.imprimitivity);
  if (imp.imprimitivity) r.add_flag("restricted_phi", canonical_phi(q.bimodule, c.tol, c.samples, c.seed).phi == q.restricted_phi);
  return {{"quotient", to_json(q.bimodule)}, {"restricted_phi", point_map_json(q.restricted_phi)}};
}

Json cmd_category_check(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  const auto cat = category_from_json(single_input(in, c.command));
  const auto full = check_full(cat);
  r.merge(full.checks, "full.");
  r.add_flag("full", full.full);
  const auto comm = check_commutative(cat, c.samples, c.seed);
  r.add("commutative", comm.residual, cat.tol);
  double cstar = 0.0;
  const auto d = static_cast<Eigen::Index>(cat.ambient_dim);
  for (std::size_t a = 0; a < cat.objects(); ++a)
    for (std::size_t b = 0; b < cat.objects(); ++b) {
      const auto basis = block_basis(cat, a, b);
      for (std::size_t s = 0; s < std::min<std::size_t>(c.samples, 5); ++s) {
        Rng rng = derived_rng(c.seed, (a * cat.objects() + b) * 100 + s);
        CMatrix x = CMatrix::Zero(d, d);
        for (const auto& e : basis) x += random_complex(rng) * e;
        const double n = operator_norm(x);
        cstar = std::max(cstar, std::abs(operator_norm(x.adjoint() * x) - n * n) / std::max(1.0, n * n));
      }
    }
  r.add("cstar_identity", cstar, cat.tol);
  Json dims = Json::array();
  for (std::size_t a = 0; a < cat.objects(); ++a) {
    Json row = Json::array();
    for (std::size_t b = 0; b < cat.objects(); ++b) row.push_back(block_basis(cat, a, b).size());
    dims.push_back(row);
  }
  Json out = {{"objects", cat.labels}, {"block_dims", dims}, {"full", full.full}, {"commutative", comm.commutative}};
  if (full.witness) out["witness"] = {(*full.witness)[0], (*full.witness)[1], (*full.witness)[2]};
  return out;
}

Json cmd_cocycle(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  const auto cat = category_from_json(single_input(in, c.command));
  const std::size_t samples = std::min<std::size_t>(c.samples, 10);
  const auto fam = canonical_phi_family(cat, samples, c.seed);
  r.merge(fam.checks, "");
  Json maps = Json::array();
  for (std::size_t a = 0; a < cat.objects(); ++a)
    for (std::size_t b = 0; b < cat.objects(); ++b)
      maps.push_back({{"from", cat.labels[a]}, {"to", cat.labels[b]}, {"pushforward", fam.map(a, b).pushforward()}});
  for (std::size_t a = 0; a < cat.objects(); ++a)
    for (std::size_t k = 0; k < fam.algebras[a].dim(); ++k) {
      const auto w = make_point_functor(cat, fam, a, k);
      r.merge(verify_functor_invariance(cat, fam, w, samples, c.seed),
              "functor." + cat.labels[a] + "." + std::to_string(k) + ".");
    }
  return {{"objects", cat.labels}, {"phi", maps}};
}

Json cmd_picard(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  const auto cat = category_from_json(single_input(in, c.command));
  const std::size_t samples = std::min<std::size_t>(c.samples, 10);
  const auto fam = canonical_phi_family(cat, samples, c.seed);
  const auto rel = picard_relation(cat, fam);
  r.merge(rel.checks, "");
  std::vector<std::size_t> ids(cat.objects());
  for (std::size_t a = 0; a < ids.size(); ++a) ids[a] = a;
  const auto identity = picard_of_functor(cat, fam, cat, fam, ids,
                                          [](std::size_t, std::size_t, const CMatrix& x) { return x; }, samples, c.seed);
  r.merge(identity.checks, "identity_functor.");
  Json classes = Json::array();
  for (std::size_t a = 0; a < cat.objects(); ++a)
    for (std::size_t b = 0; b < cat.objects(); ++b)
      classes.push_back({{"from", cat.labels[a]}, {"to", cat.labels[b]}, {"bijection", rel(a, b)}});
  return {{"objects", cat.labels}, {"classes", classes}};
}

Json cmd_linking(const std::vector<Json>& in, const RunConfig& c, Report& r) {
  auto m = as_bimodule(single_input(in, c.command), c.tol, r);
  const auto l = linking_category(m.fibered, c.tol);
  r.merge(l.checks, "");
  return {{"ambient_dim", l.category.ambient_dim},
          {"left_corner", point_map_json(l.left_corner)},
          {"right_corner", point_map_json(l.right_corner)}};
}

Json generate(const RunConfig& c) {
  Rng rng = derived_rng(c.seed, 0);
  if (c.gen_kind == "bimodule") {
    const auto m = gen_random_imprimitivity(c.points, c.spread, rng);
    if (!c.present) return to_json(m);
    return to_json(present_bimodule(m, c.spread, rng));
  }
  if (c.gen_kind == "category") return to_json(gen_random_category(c.objects, c.points, rng, c.tol));
  throw UsageError("gen kind must be 'bimodule' or 'category'");
}

using Handler = Json (*)(const std::vector<Json>&, const RunConfig&, Report&);

struct Command {
  const char* name;
  Handler handler;
};

constexpr Command kCommands[] = {
    {"validate", cmd_validate},       {"imprimitivity", cmd_imprimitivity},
    {"phi", cmd_phi},                 {"decompose", cmd_decompose},
    {"reconstruct", cmd_reconstruct}, {"tensor", cmd_tensor},
    {"dual", cmd_dual},               {"quotient", cmd_quotient},
    {"category-check", cmd_category_check}, {"cocycle", cmd_cocycle},
    {"picard", cmd_picard},           {"linking", cmd_linking},
};

std::string format_residual(double r) {
  if (std::isnan(r)) return "nan";
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << r;
  return s.str();
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& c : kCommands) out.emplace_back(c.name);
    out.emplace_back("gen");
    return out;
  }();
  return names;
}

RunResult run(const RunConfig& config) {
  std::vector<Json> inputs;
  if (config.command != "gen")
    for (const auto& path : config.inputs) inputs.push_back(load_json(path));
  return run(config, std::move(inputs));
}

RunResult run(const RunConfig& config, std::vector<Json> inputs) {
  if (!(config.tol > 0.0)) throw UsageError("--tol must be positive");
  if (config.samples < 1) throw UsageError("--samples must be at least 1");
  if (config.command == "gen") return {generate(config), kPass};

  Handler handler = nullptr;
  for (const auto& c : kCommands)
    if (config.command == c.name) handler = c.handler;
  if (!handler) throw UsageError("unknown command '" + config.command + "'");

  const auto start = std::chrono::steady_clock::now();
  Report r;
  Json result;
  try {
    result = handler(inputs, config, r);
  } catch (const ParseError&) {
    throw;
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    r.add_flag("precondition", false);
    result = {{"error", e.what()}};
  }
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  Json doc = {{"command", config.command},
              {"digest", digest(Json(inputs))},
              {"checks", to_json(r)},
              {"pass", r.pass()},
              {"wall_time_ms", ms},
              {"result", result}};
  return {std::move(doc), r.pass() ? kPass : kCheckFailure};
}

std::string render(const RunResult& result, Format format) {
  const Json& d = result.document;
  if (format == Format::json || !d.contains("checks")) return d.dump(2) + "\n";
  std::ostringstream out;
  out << "command: " << d["command"].get<std::string>() << "\n";
  out << "digest:  " << d["digest"].get<std::string>() << "\n";
  for (const auto& c : d["checks"]) {
    const double residual = c["residual"].is_null() ? std::nan("") : c["residual"].get<double>();
    out << (c["pass"].get<bool>() ? "  pass  " : "  FAIL  ") << std::left << std::setw(48)
        << c["name"].get<std::string>() << " " << format_residual(residual) << "\n";
  }
  out << "result:  " << d["result"].dump() << "\n";
  out << (d["pass"].get<bool>() ? "PASS" : "FAIL") << " (" << std::fixed << std::setprecision(1)
      << d["wall_time_ms"].get<double>() << " ms)\n";
  return out.str();
}

int main(int argc, char** argv) {
  CLI::App app{"Morita equivalence toolkit for commutative finite-dimensional C*-algebras"};
  RunConfig config;
  std::string format = "text";
  app.add_option("command", config.command, "command to run")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("kind", config.gen_kind, "gen: bimodule or category");
  app.add_option("--in", config.inputs, "input JSON file (repeatable)");
  app.add_option("--out", config.output, "output file (default stdout)");
  app.add_option("--tol", config.tol, "tolerance")->capture_default_str();
  app.add_option("--seed", config.seed, "random seed")->capture_default_str();
  app.add_option("--samples", config.samples, "random samples per check")->capture_default_str();
  app.add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  app.add_option("--kept", config.kept, "quotient: kept left points")->delimiter(',');
  app.add_option("--n,--points", config.points, "gen: points per side or per object")->capture_default_str();
  app.add_option("--spread", config.spread, "gen: metric spread")->capture_default_str();
  app.add_option("--objects", config.objects, "gen category: object count")->capture_default_str();
  app.add_flag("--present", config.present, "gen bimodule: emit the presented form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }
  config.format = format == "json" ? Format::json : Format::text;

  RunResult result;
  try {
    result = run(config);
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInputError;
  }

  const std::string text = render(result, config.format);
  if (config.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(config.output, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << config.output << "\n";
      return kInputError;
    }
    out << text;
  }
  return result.status;
}

}  // namespace morita::cli
