// Acceptance run: one line per criterion, exit status 0 iff all pass.
//
//   acceptance [--cli path/to/morita] [--only N]

#include "morita/category.hpp"
#include "morita/cli.hpp"
#include "morita/generators.hpp"
#include "morita/json_io.hpp"
#include "morita/spectral.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace morita;

namespace {

constexpr double kTight = 1e-9;
constexpr double kRecon = 1e-8;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Tally {
  bool pass = true;
  double worst = 0.0;
  std::size_t cases = 0;
  std::string first_failure;

  void residual(double r, double tol, const std::string& where) {
    worst = std::max(worst, r);
    if (!(r <= tol)) fail(where + " residual " + std::to_string(r));
  }
  void require(bool ok, const std::string& where) {
    if (!ok) fail(where);
  }
  void fail(const std::string& why) {
    if (pass) first_failure = why;
    pass = false;
  }
  Outcome outcome(const std::string& unit) const {
    std::ostringstream s;
    s << cases << " " << unit << ", worst residual " << worst;
    if (!pass) s << "; first failure: " << first_failure;
    return {pass, s.str()};
  }
};

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct Instance {
  FiberedBimodule m;
  double spread;
};

/// 200 instances with n ≤ 8 and spread ≤ 10, plus 20 at spread 100.
const std::vector<Instance>& corpus() {
  static const std::vector<Instance> c = [] {
    std::vector<Instance> out;
    Rng rng = derived_rng(kSeed, 1);
    for (int i = 0; i < 200; ++i) {
      const auto n = uniform(rng, 1, 8);
      const double spread = uniform_real(rng, 1.0, 10.0);
      out.push_back({gen_random_imprimitivity(n, spread, rng), spread});
    }
    for (int i = 0; i < 20; ++i) out.push_back({gen_random_imprimitivity(uniform(rng, 2, 8), 100.0, rng), 100.0});
    return out;
  }();
  return c;
}

std::vector<Instance> regular_corpus() { return {corpus().begin(), corpus().begin() + 200}; }

/// k ≤ 5 objects, n ≤ 4 points per object, so D = k·n ≤ 20.
const std::vector<CStarCategory>& categories() {
  static const std::vector<CStarCategory> c = [] {
    std::vector<CStarCategory> out;
    Rng rng = derived_rng(kSeed, 2);
    for (int i = 0; i < 50; ++i) out.push_back(gen_random_category(uniform(rng, 1, 5), uniform(rng, 1, 4), rng));
    return out;
  }();
  return c;
}

const std::vector<PhiFamily>& families() {
  static const std::vector<PhiFamily> f = [] {
    std::vector<PhiFamily> out;
    std::uint64_t s = 0;
    for (const auto& c : categories()) out.push_back(canonical_phi_family(c, 10, kSeed + s++));
    return out;
  }();
  return f;
}

/// A partition of unity built here rather than by the library: per right
/// point q the last nonempty fiber over q, with a random complex scale c,
///   w = c·e,  z = e / (conj(c)·g),  ⟨w,z⟩_B(q) = 1.
std::vector<std::pair<BimoduleElement, BimoduleElement>> scaled_partition(const FiberedBimodule& m, Rng& rng) {
  std::vector<std::pair<BimoduleElement, BimoduleElement>> out;
  for (std::size_t q = 0; q < m.n(); ++q) {
    for (std::size_t p = m.m(); p-- > 0;) {
      if (m.dim(p, q) == 0) continue;
      const Complex c = random_complex(rng) + Complex(0.5, 0.0);
      const Complex g = m.metric(p, q)(0, 0);
      const auto e = BimoduleElement::basis(m, p, q, 0);
      out.emplace_back(c * e, (1.0 / (std::conj(c) * g)) * e);
      break;
    }
  }
  return out;
}

double rel(const AlgebraElement& x, const AlgebraElement& y) {
  return distance(x, y) / std::max(1.0, std::max(x.norm(), y.norm()));
}

double rel(const BimoduleElement& x, const BimoduleElement& y) {
  double scale = 1.0;
  for (Eigen::Index i = 0; i < x.coords().size(); ++i)
    scale = std::max({scale, std::abs(x.coords()(i)), std::abs(y.coords()(i))});
  return distance(x, y) / scale;
}

double rel(const CMatrix& x, const CMatrix& y) { return (x - y).norm() / std::max(1.0, std::max(x.norm(), y.norm())); }

// ---------------------------------------------------------------------------

Outcome phi_well_defined() {
  Tally t;
  Rng rng = derived_rng(kSeed, 10);
  for (const auto& inst : regular_corpus()) {
    const auto cert = canonical_phi(inst.m);
    const auto second = scaled_partition(inst.m, rng);
    for (std::size_t p = 0; p < inst.m.m(); ++p) {
      const auto e = AlgebraElement::idempotent(inst.m.left(), p);
      const auto a = phi_from_partition(cert.witness, e);
      const auto b = phi_from_partition(second, e);
      t.residual(rel(a, b), kTight, "partitions disagree");
      t.residual(rel(a, cert.phi(e)), kTight, "certificate map");
    }
    ++t.cases;
  }
  return t.outcome("bimodules");
}

Outcome phi_functional_equation() {
  Tally t;
  Rng rng = derived_rng(kSeed, 11);
  for (const auto& inst : regular_corpus()) {
    const auto& m = inst.m;
    const auto phi = canonical_phi(m).phi;
    for (int i = 0; i < 20; ++i) {
      const auto x = BimoduleElement::random(m, rng);
      const auto y = BimoduleElement::random(m, rng);
      const auto a = AlgebraElement::random(m.left(), rng);
      t.residual(rel(phi(left_inner(x, y)), right_inner(y, x)), kTight, "functional equation");
      t.residual(rel(x * phi(a), a * x), kTight, "intertwining");
    }
    ++t.cases;
  }
  return t.outcome("bimodules");
}

Outcome alpha_normalization() {
  Tally t;
  for (const auto& inst : corpus()) {
    const auto cert = canonical_phi(inst.m);
    auto alpha = AlgebraElement::zero(inst.m.left());
    for (const auto& [w, z] : cert.witness) alpha = alpha + left_inner(z, w);
    t.residual(distance(alpha, AlgebraElement::unit(inst.m.left())), kTight, "alpha");
    ++t.cases;
  }
  return t.outcome("bimodules incl. spread 100");
}

Outcome norm_coincidence() {
  Tally t;
  Rng rng = derived_rng(kSeed, 13);
  for (const auto& inst : regular_corpus()) {
    for (int i = 0; i < 50; ++i) {
      const auto x = BimoduleElement::random(inst.m, rng);
      const double l = left_norm(x);
      const double r = right_norm(x);
      t.residual(std::abs(l - r) / std::max(1.0, std::max(l, r)), kTight, "norms");
    }
    ++t.cases;
  }
  return t.outcome("bimodules");
}

Outcome spectral_reconstruction() {
  Tally t;
  Rng rng = derived_rng(kSeed, 14);
  auto one = [&](const auto& input, const FiberedBimodule& m, const std::string& kind) {
    const auto rep = verify_reconstruction(input, kDefaultTol, 20, kSeed);
    t.require(rep.pass, kind + " reconstruct: " + rep.failure);
    t.residual(rep.phi_residual, kRecon, kind + " phi");
    t.residual(rep.iso_residual, kRecon, kind + " iso");
    t.require(rep.bijection == oracle::graph_bijection(m), kind + " bijection");
    ++t.cases;
  };
  std::vector<FiberedBimodule> all;
  for (const auto& inst : corpus()) all.push_back(inst.m);
  for (std::size_t n : {16, 32, 64}) all.push_back(gen_random_imprimitivity(n, 10.0, rng));

  for (const auto& m : all) {
    one(m, m, "fibered");
    const auto s = spectral_data(m);
    const auto sec = section_bimodule(s);
    t.require(spectral_data(sec).bijection == s.bijection, "round trip bijection");
    const auto iso = bimodule_isomorphic(sec, m);
    t.require(iso.has_value(), "round trip iso");
    if (iso) t.require(iso->verify(kRecon, 5, kSeed).pass(), "round trip iso certificate");
  }
  for (std::size_t i = 0; i < all.size(); i += 4) one(present_bimodule(all[i], 10.0, rng), all[i], "presented");
  for (std::size_t i = all.size() - 3; i < all.size(); ++i)
    one(present_bimodule(all[i], 10.0, rng), all[i], "presented");
  return t.outcome("reconstructions");
}

Outcome oracle_equivalence() {
  Tally t;
  for (std::size_t m = 1; m <= 3; ++m)
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto a = numbered_algebra(m, "a");
      const auto b = numbered_algebra(n, "b");
      const std::size_t cells = m * n;
      std::size_t patterns = 1;
      for (std::size_t i = 0; i < cells; ++i) patterns *= 3;
      for (std::size_t code = 0; code < patterns; ++code) {
        std::vector<FiberSpec> fibers;
        std::size_t c = code;
        for (std::size_t i = 0; i < cells; ++i, c /= 3)
          if (c % 3 != 0) fibers.push_back({i / n, i % n, c % 3, {}});
        const auto bm = make_fibered_bimodule(a, b, fibers);
        const bool expect = oracle::imprimitivity(bm);
        const bool got = is_imprimitivity(bm).imprimitivity;
        t.require(expect == got, std::to_string(m) + "x" + std::to_string(n) + " pattern " + std::to_string(code));
        ++t.cases;
      }
    }
  return t.outcome("support patterns");
}

Outcome quotient_preservation() {
  Tally t;
  Rng rng = derived_rng(kSeed, 16);
  std::size_t i = 0;
  while (t.cases < 50) {
    const auto& m = corpus()[i++ % 200].m;
    if (m.m() < 2) continue;
    auto points = random_permutation(m.m(), rng);
    points.resize(uniform(rng, 1, m.m() - 1));
    const auto q = quotient_bimodule(m, ideal_from_points(m.left(), points));
    const auto imp = is_imprimitivity(q.bimodule);
    t.require(imp.imprimitivity, "quotient not imprimitivity");
    if (imp.imprimitivity) t.require(canonical_phi(q.bimodule).phi == q.restricted_phi, "restricted phi");

    // restriction of the original pushforward, by labels
    const auto forward = canonical_phi(m).phi.pushforward();
    const auto qf = q.restricted_phi.pushforward();
    const auto& qa = q.restricted_phi.source();
    const auto& qb = q.restricted_phi.target();
    for (std::size_t k = 0; k < qa.dim(); ++k) {
      const auto p = m.left().index_of(qa.label(k));
      t.require(p.has_value() && qb.label(qf[k]) == m.right().label(forward[*p]), "restriction labels");
    }
    ++t.cases;
  }
  return t.outcome("quotient pairs");
}

Outcome cocycle_suite() {
  Tally t;
  for (std::size_t i = 0; i < categories().size(); ++i) {
    const auto& c = categories()[i];
    const auto& f = families()[i];
    const std::string tag = "category " + std::to_string(i) + ": ";
    t.require(f.pass(), tag + "family checks");
    const auto k = c.objects();
    Rng rng = derived_rng(kSeed + i, 17);
    for (std::size_t a = 0; a < k; ++a) {
      t.require(f.map(a, a) == AlgebraMap::identity(f.algebras[a]), tag + "identity");
      for (std::size_t b = 0; b < k; ++b) {
        t.require(f.map(b, a) == f.map(a, b).inverse(), tag + "inverse");
        for (std::size_t d = 0; d < k; ++d) t.require(compose(f.map(b, d), f.map(a, b)) == f.map(a, d), tag + "composition");
      }
      const CMatrix x = f.embed(a, AlgebraElement::random(f.algebras[a], rng));
      t.residual(rel(f.apply(a, a, x), x), kTight, tag + "identity value");
      for (std::size_t b = 0; b < k; ++b) {
        const CMatrix y = f.apply(a, b, x);
        t.residual(rel(f.apply(b, a, y), x), kTight, tag + "inverse value");
        for (std::size_t d = 0; d < k; ++d) t.residual(rel(f.apply(b, d, y), f.apply(a, d, x)), kTight, tag + "composition value");
      }
    }
    const auto rel_ = picard_relation(c, f);
    for (const char* name : {"reflexive", "symmetric", "transitive"}) {
      const auto* ch = rel_.checks.find(name);
      t.require(ch && ch->pass && ch->residual == 0.0, tag + name);
    }
    ++t.cases;
  }
  return t.outcome("categories");
}

Outcome functor_invariance() {
  Tally t;
  std::size_t functors = 0;
  for (std::size_t i = 0; i < categories().size(); ++i) {
    const auto& c = categories()[i];
    const auto& f = families()[i];
    for (std::size_t a = 0; a < c.objects(); ++a)
      for (std::size_t k = 0; k < f.algebras[a].dim(); ++k) {
        const auto omega = make_point_functor(c, f, a, k);
        const auto rep = verify_functor_invariance(c, f, omega, 5, kSeed + i);
        for (const auto& ch : rep.checks()) t.residual(ch.residual, kTight, "category " + std::to_string(i) + " " + ch.name);
        ++functors;
      }
    ++t.cases;
  }
  auto out = t.outcome("categories");
  out.detail += ", " + std::to_string(functors) + " functors";
  return out;
}

Outcome tensor_dual_coherence() {
  Tally t;
  for (std::size_t i = 0; i < categories().size(); ++i) {
    const auto& c = categories()[i];
    const auto& f = families()[i];
    for (const auto& rep : {tensor_equals_composition(c, f, 5, kSeed + i), dual_equals_involution(c, f, 5, kSeed + i)})
      for (const auto& ch : rep.checks()) {
        t.require(ch.pass, "category " + std::to_string(i) + " " + ch.name);
        t.residual(ch.residual, kTight, "category " + std::to_string(i) + " " + ch.name);
      }
    ++t.cases;
  }
  return t.outcome("categories");
}

Outcome linking() {
  Tally t;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& m = corpus()[i * 10].m;
    const auto l = linking_category(m);
    const std::string tag = "bimodule " + std::to_string(i * 10) + ": ";
    t.require(l.checks.pass(), tag + (l.checks.first_failure() ? l.checks.first_failure()->name : ""));
    t.require(check_isomorphism(l.left_corner) && l.left_corner.source() == m.left(), tag + "left corner");
    t.require(check_isomorphism(l.right_corner) && l.right_corner.source() == m.right(), tag + "right corner");
    t.require(l.checks.find("corner_isomorphic") && l.checks.find("corner_isomorphic")->pass, tag + "off-diagonal corner");
    ++t.cases;
  }
  return t.outcome("bimodules");
}

Outcome joint_diagonalization() {
  Tally t;
  Rng rng = derived_rng(kSeed, 20);
  for (int i = 0; i < 100; ++i) {
    const auto dim = uniform(rng, 1, 64);
    const auto gens = uniform(rng, 1, 4);
    const auto chars = uniform(rng, 1, std::min<std::size_t>(dim, 12));
    const double gap = i % 2 == 0 ? 1e-6 : std::pow(10.0, -uniform_real(rng, 0.0, 5.0));
    const auto inst = random_presented_algebra(dim, gens, chars, gap, rng);
    const auto g = joint_diagonalize(inst.generators);
    const std::string tag = "instance " + std::to_string(i) + ": ";
    for (std::size_t k = 0; k < inst.generators.size(); ++k) {
      const double scale = std::max(1.0, inst.generators[k].norm());
      t.residual((g.reconstruct(k) - inst.generators[k]).norm() / scale, kRecon, tag + "reconstruction");
    }
    t.require(g.characters.size() == inst.tuples.size(), tag + "character count");
    if (g.characters.size() == inst.tuples.size()) {
      for (std::size_t k = 0; k < g.characters.size(); ++k) {
        std::size_t best = 0;
        double bd = 1e300;
        for (std::size_t j = 0; j < inst.tuples.size(); ++j) {
          double d = 0;
          for (std::size_t s = 0; s < gens; ++s) d = std::max(d, std::abs(inst.tuples[j][s] - g.characters[k][s]));
          if (d < bd) bd = d, best = j;
        }
        t.require(bd < gap / 2, tag + "tuple match");
        t.require(g.multiplicity[k] == inst.multiplicity[best], tag + "multiplicity");
      }
    }
    ++t.cases;
  }
  return t.outcome("presented algebras");
}

// ---------------------------------------------------------------------------

std::string cli_path;

std::string capture(const std::string& args, int& status) {
  std::string out;
  FILE* pipe = popen((cli_path + " " + args + " 2>/dev/null").c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return out;
}

Outcome cli_determinism() {
  Tally t;
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "morita_acceptance";
  fs::create_directories(dir);
  Rng rng = derived_rng(kSeed, 21);
  auto save = [&](const std::string& name, const Json& j) {
    const auto p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  };
  const auto bm = save("bimodule.json", to_json(corpus()[7].m));
  const auto pres = save("presented.json", to_json(present_bimodule(corpus()[7].m, 10.0, rng)));
  const auto cat = save("category.json", to_json(categories()[3]));

  const std::vector<std::string> runs = {
      "validate --in " + pres,          "phi --in " + bm,        "reconstruct --in " + pres,
      "tensor --in " + bm + " --in " + bm, "dual --in " + bm,   "cocycle --in " + cat,
      "picard --in " + cat,             "linking --in " + bm,    "imprimitivity --in " + bm,
  };

  auto report_digest = [&](const std::string& args) -> std::string {
    std::string text;
    if (!cli_path.empty()) {
      int status = 0;
      text = capture(args + " --format json --seed 5", status);
    } else {
      std::istringstream in(args);
      cli::RunConfig c;
      in >> c.command;
      std::string flag, value;
      while (in >> flag >> value) c.inputs.push_back(value);
      c.seed = 5;
      c.format = cli::Format::json;
      text = cli::render(cli::run(c), c.format);
    }
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) return "unparseable";
    j.erase("wall_time_ms");
    return digest(j);
  };

  for (const auto& args : runs) {
    const auto first = report_digest(args);
    t.require(first != "unparseable", args);
    for (int r = 1; r < 10; ++r) t.require(report_digest(args) == first, args + " run " + std::to_string(r));
    ++t.cases;
  }
  if (!cli_path.empty()) {
    int s1 = 0, s2 = 0;
    const auto g1 = capture("gen category --objects 3 --points 2 --seed 9", s1);
    bool same = true;
    for (int r = 1; r < 10; ++r) same = same && capture("gen category --objects 3 --points 2 --seed 9", s2) == g1;
    t.require(s1 == 0 && same, "gen");
    ++t.cases;
  }
  auto out = t.outcome("commands x 10 runs");
  out.detail += cli_path.empty() ? " (in-process)" : " (subprocess)";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli") cli_path = argv[++i];
    else if (a == "--only") only = std::atoi(argv[++i]);
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"phi well-definedness", phi_well_defined},
      {"functional equation and intertwining", phi_functional_equation},
      {"alpha normalization", alpha_normalization},
      {"norm coincidence", norm_coincidence},
      {"spectral reconstruction", spectral_reconstruction},
      {"brute-force oracle equivalence", oracle_equivalence},
      {"quotient preservation", quotient_preservation},
      {"cocycle and Picard relation", cocycle_suite},
      {"functor invariance", functor_invariance},
      {"tensor and dual coherence", tensor_dual_coherence},
      {"linking category", linking},
      {"joint diagonalization", joint_diagonalization},
      {"CLI determinism", cli_determinism},
  };

  const auto start = std::chrono::steady_clock::now();
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    std::printf("%s %2zu %-38s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s total %.2fs\n", all ? "PASS" : "FAIL", total);
  return all ? 0 : 1;
}
