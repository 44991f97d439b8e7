#include "morita/cli.hpp"
#include "morita/error.hpp"
#include "morita/generators.hpp"
#include "morita/json_io.hpp"

#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace morita;
namespace fs = std::filesystem;

namespace {

struct Output {
  int status = -1;
  std::string text;
};

std::string cli_path() {
  const char* p = std::getenv("MORITA_CLI");
  return p ? p : "";
}

fs::path data_path(const std::string& name) {
  const char* p = std::getenv("MORITA_DATA");
  return fs::path(p ? p : "data") / name;
}

Output run_cli(const std::string& args) {
  Output out;
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return out;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.text.append(buf.data(), n);
  const int raw = pclose(pipe);
  out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "morita_json_cli";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream f(p);
  f << s;
}

Json strip_time(Json j) {
  j.erase("wall_time_ms");
  return j;
}

}  // namespace

TEST_CASE("scalar and matrix round trip") {
  const Complex z(0.1, -3.25e-7);
  CHECK(complex_from_json(to_json(z)) == z);
  CHECK(complex_from_json(Json(2.5)) == Complex(2.5, 0.0));

  Rng rng = derived_rng(1, 0);
  const CMatrix m = random_matrix(3, 2, rng);
  const CMatrix back = matrix_from_json(Json::parse(to_json(m).dump()));
  CHECK(back == m);
  const CVector v = m.col(0);
  CHECK(vector_from_json(to_json(v)) == v);
}

TEST_CASE("bimodule and category round trip") {
  Rng rng = derived_rng(2, 0);
  const auto m = gen_random_imprimitivity(5, 10.0, rng);
  CHECK(fibered_from_json(Json::parse(to_json(m).dump())) == m);

  const auto thick = make_fibered_bimodule(numbered_algebra(2, "a"), numbered_algebra(1, "b"),
                                           {{0, 0, 2, CMatrix::Identity(2, 2) * 3.0}, {1, 0, 1, {}}});
  CHECK(fibered_from_json(to_json(thick)) == thick);

  const auto p = present_bimodule(m, 5.0, rng);
  const auto q = presented_from_json(Json::parse(to_json(p).dump()));
  CHECK(q.dim == p.dim);
  REQUIRE(q.right_gram.size() == p.right_gram.size());
  for (std::size_t k = 0; k < p.right_gram.size(); ++k) CHECK(q.right_gram[k] == p.right_gram[k]);
  CHECK(q.left_algebra() == p.left_algebra());
  CHECK(is_presented_bimodule(to_json(p)));
  CHECK_FALSE(is_presented_bimodule(to_json(m)));

  const auto c = gen_random_category(3, 2, rng);
  const auto d = category_from_json(Json::parse(to_json(c).dump()));
  CHECK(d.labels == c.labels);
  CHECK(d.ambient.size() == c.ambient.size());
  for (std::size_t k = 0; k < c.objects(); ++k) CHECK(d.projections[k] == c.projections[k]);

  const auto rm = right_module(m);
  CHECK(module_from_json(to_json(rm)) == rm);
}

TEST_CASE("presented algebra input is diagonalized") {
  Rng rng = derived_rng(3, 0);
  const auto inst = random_presented_algebra(6, 2, 3, 1e-3, rng);
  Json j{{"type", "presented"}, {"dim", 6}, {"generators", Json::array()}};
  for (const auto& g : inst.generators) j["generators"].push_back(to_json(g));
  CHECK(algebra_from_json(j).dim() == 3);
}

TEST_CASE("parse errors carry a path") {
  auto message = [](auto&& f) -> std::string {
    try {
      f();
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message([] { complex_from_json(Json::parse(R"([1])")); }) != "");
  CHECK(message([] { matrix_from_json(Json::parse(R"([[[1,0]],[[1,0],[2,0]]])"), "/m"); }).find("/m/1") !=
        std::string::npos);

  Json bad = to_json(identity_bimodule(numbered_algebra(2, "a")));
  bad["fibers"][1]["metric"] = Json::parse(R"([[[-1, 0]]])");
  CHECK(message([&] { fibered_from_json(bad); }).find("fiber (1,1)") != std::string::npos);

  Json dup = to_json(identity_bimodule(numbered_algebra(2, "a")));
  dup["left"]["labels"] = Json::parse(R"(["x", "x"])");
  CHECK(message([&] { fibered_from_json(dup); }).find("left") != std::string::npos);

  Rng crng = derived_rng(4, 0);
  Json cat = to_json(gen_random_category(2, 2, crng));
  cat["objects"][0]["projection"][0][0] = Json::parse("[0.5, 0]");
  CHECK(message([&] { category_from_json(cat); }) != "");

  const auto f = scratch("truncated.json");
  write(f, R"({"left": {"type": )");
  const auto msg = message([&] { load_json(f.string()); });
  CHECK(msg.find("truncated.json") != std::string::npos);
  CHECK(message([] { load_json("/nonexistent/nothing.json"); }) != "");
}

TEST_CASE("digest") {
  const Json a = Json::parse(R"({"b": 1, "a": [1.5, "x"]})");
  const Json b = Json::parse(R"({"a": [1.5, "x"], "b": 1})");
  CHECK(digest(a) == digest(b));
  CHECK(digest(a).size() == 64);
  CHECK(digest(a) != digest(Json::parse(R"({"a": [1.5, "y"], "b": 1})")));
  CHECK(digest(Json::object()) == "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a");
}

TEST_CASE("in-process runs") {
  cli::RunConfig c;
  c.command = "reconstruct";
  c.inputs = {data_path("swap2.json").string()};
  const auto r = cli::run(c);
  CHECK(r.status == cli::kPass);
  CHECK(r.document["result"]["bijection"] == Json::parse("[1, 0]"));
  CHECK(r.document["command"] == "reconstruct");
  CHECK(r.document["digest"].get<std::string>().size() == 64);

  c.command = "gen";
  c.inputs.clear();
  c.points = 4;
  const auto g1 = cli::run(c);
  const auto g2 = cli::run(c);
  CHECK(g1.document == g2.document);
  c.seed = 43;
  CHECK(cli::run(c).document != g1.document);

  c.command = "validate";
  c.inputs = {data_path("missing-file.json").string()};
  CHECK_THROWS_AS(cli::run(c), ParseError);
}

TEST_CASE("command line") {
  if (cli_path().empty()) {
    MESSAGE("MORITA_CLI not set");
    return;
  }
  const auto swap = data_path("swap2.json").string();

  auto rec = run_cli("reconstruct --format json --in " + swap);
  CHECK(rec.status == 0);
  const auto jr = Json::parse(rec.text);
  CHECK(jr["pass"] == true);
  CHECK(jr["result"]["bijection"] == Json::parse("[1, 0]"));

  auto phi = run_cli("phi --format json --in " + data_path("identity3.json").string());
  CHECK(phi.status == 0);
  const auto jp = Json::parse(phi.text);
  CHECK(jp["result"]["phi"]["point_map"] == Json::parse("[0, 1, 2]"));
  for (const auto& c : jp["checks"])
    if (c["name"] == "alpha") CHECK(c["residual"].get<double>() == 0.0);

  auto broken = run_cli("validate --in " + data_path("broken.json").string());
  CHECK(broken.status == 1);
  CHECK(broken.text.find("FAIL  left_idempotent") != std::string::npos);

  auto thick = run_cli("imprimitivity --format json --in " + data_path("thick.json").string());
  CHECK(thick.status == 1);
  CHECK(Json::parse(thick.text)["result"]["imprimitivity"] == false);

  const auto junk = scratch("junk.json");
  write(junk, "{ not json");
  CHECK(run_cli("validate --in " + junk.string()).status == 2);
  CHECK(run_cli("validate").status == 2);
  CHECK(run_cli("quotient --kept 9 --in " + swap).status == 2);
  CHECK(run_cli("frobnicate --in " + swap).status == 2);
  CHECK(run_cli("validate --format yaml --in " + swap).status == 2);

  const auto d1 = run_cli("gen bimodule --n 4 --seed 7");
  const auto d2 = run_cli("gen bimodule --n 4 --seed 7");
  CHECK(d1.status == 0);
  CHECK(d1.text == d2.text);

  const auto pres = scratch("pres.json");
  CHECK(run_cli("gen bimodule --n 4 --seed 7 --present --out " + pres.string()).status == 0);
  auto dec = run_cli("decompose --format json --in " + pres.string());
  CHECK(dec.status == 0);
  const auto fib = fibered_from_json(Json::parse(d1.text));
  const auto back = fibered_from_json(Json::parse(dec.text)["result"]["fibered"]);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) CHECK(back.dim(a, b) == fib.dim(a, b));

  const auto cat = data_path("category3.json").string();
  auto cc = run_cli("cocycle --format json --in " + cat);
  CHECK(cc.status == 0);
  auto red = run_cli("cocycle --format json --in " + data_path("reducible.json").string());
  CHECK(red.status == 1);
  CHECK(Json::parse(red.text)["checks"][0]["name"] == "precondition");

  auto r1 = Json::parse(run_cli("picard --format json --seed 3 --in " + cat).text);
  auto r2 = Json::parse(run_cli("picard --format json --seed 3 --in " + cat).text);
  CHECK(strip_time(r1) == strip_time(r2));
}
