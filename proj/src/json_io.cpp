#include "morita/json_io.hpp"

#include "morita/error.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace morita {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ParseError((path.empty() ? std::string("/") : path) + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

const Json& array_field(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_array()) fail(path + "/" + key, "expected an array");
  return v;
}

std::size_t size_from_json(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

double real_from_json(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "non-finite number");
  return v;
}

std::vector<std::string> labels_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of labels");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) fail(path + "/" + std::to_string(i), "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

std::vector<CMatrix> matrices_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of matrices");
  std::vector<CMatrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(matrix_from_json(j[i], path + "/" + std::to_string(i)));
  return out;
}

Json matrices_to_json(const std::vector<CMatrix>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) out.push_back(to_json(m));
  return out;
}

template <class F>
auto rethrow_as_parse(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const PreconditionError& e) {
    fail(path, e.what());
  }
}

double optional_tol(const Json& j, const std::string& path) {
  if (!j.contains("tol")) return kDefaultTol;
  const double t = real_from_json(j["tol"], path + "/tol");
  if (!(t > 0.0)) fail(path + "/tol", "tolerance must be positive");
  return t;
}

}  // namespace

Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

Json to_json(const Algebra& a) { return {{"type", "diagonal"}, {"labels", a.labels()}}; }

Json to_json(const FiberedModule& m) {
  Json fibers = Json::array();
  for (std::size_t p = 0; p < m.points(); ++p)
    if (m.dim(p) > 0) fibers.push_back({{"point", p}, {"dim", m.dim(p)}, {"metric", to_json(m.metric(p))}});
  return {{"base", to_json(m.base())}, {"fibers", fibers}};
}

Json to_json(const FiberedBimodule& m) {
  Json fibers = Json::array();
  for (const auto& f : m.fibers())
    fibers.push_back({{"a", f.a}, {"b", f.b}, {"dim", f.dim}, {"metric", to_json(m.metric(f.a, f.b))}});
  return {{"left", to_json(m.left())}, {"right", to_json(m.right())}, {"fibers", fibers}};
}

Json to_json(const PresentedBimodule& p) {
  Json out = {{"dim", p.dim},
              {"left_idem", matrices_to_json(p.left_idem)},
              {"right_idem", matrices_to_json(p.right_idem)},
              {"right_gram", matrices_to_json(p.right_gram)},
              {"left_gram", matrices_to_json(p.left_gram)}};
  if (!p.left_labels.empty()) out["left_labels"] = p.left_labels;
  if (!p.right_labels.empty()) out["right_labels"] = p.right_labels;
  return out;
}

Json to_json(const CStarCategory& c) {
  Json objects = Json::array();
  for (std::size_t i = 0; i < c.objects(); ++i)
    objects.push_back({{"label", c.labels[i]}, {"projection", to_json(c.projections[i])}});
  Json out = {{"ambient_dim", c.ambient_dim}, {"objects", objects}, {"tol", c.tol}};
  if (!c.ambient.empty()) out["ambient"] = matrices_to_json(c.ambient);
  return out;
}

Json to_json(const Report& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks()) {
    Json residual = std::isfinite(c.residual) ? Json(c.residual) : Json(nullptr);
    checks.push_back({{"name", c.name}, {"residual", residual}, {"pass", c.pass}});
  }
  return checks;
}

Complex complex_from_json(const Json& j, const std::string& path) {
  if (j.is_number()) return {real_from_json(j, path), 0.0};
  if (!j.is_array() || j.size() != 2) fail(path, "expected a complex number [re, im]");
  return {real_from_json(j[0], path + "/0"), real_from_json(j[1], path + "/1")};
}

CMatrix matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = 0;
  if (rows > 0) {
    if (!j[0].is_array()) fail(path + "/0", "expected a row");
    cols = static_cast<Eigen::Index>(j[0].size());
  }
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string rp = path + "/" + std::to_string(i);
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(rp, "ragged matrix row");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)], rp + "/" + std::to_string(k));
  }
  return m;
}

CVector vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a vector");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], path + "/" + std::to_string(i));
  return v;
}

Algebra algebra_from_json(const Json& j, const std::string& path) {
  const Json& type = field(j, "type", path);
  if (type == "diagonal") {
    auto labels = labels_from_json(field(j, "labels", path), path + "/labels");
    return rethrow_as_parse(path, [&] { return Algebra(std::move(labels)); });
  }
  if (type == "presented") {
    const std::size_t d = size_from_json(field(j, "dim", path), path + "/dim");
    auto gens = matrices_from_json(array_field(j, "generators", path), path + "/generators");
    for (std::size_t i = 0; i < gens.size(); ++i)
      if (static_cast<std::size_t>(gens[i].rows()) != d || static_cast<std::size_t>(gens[i].cols()) != d)
        fail(path + "/generators/" + std::to_string(i), "generator is not dim x dim");
    if (gens.empty()) gens.push_back(CMatrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    const double tol = optional_tol(j, path);
    return rethrow_as_parse(path, [&] { return joint_diagonalize(gens, tol).spectrum; });
  }
  fail(path + "/type", "unknown algebra type");
}

FiberedModule module_from_json(const Json& j, const std::string& path) {
  const Algebra base = algebra_from_json(field(j, "base", path), path + "/base");
  std::vector<std::size_t> dims(base.dim(), 0);
  std::vector<CMatrix> metrics(base.dim());
  const Json& fibers = array_field(j, "fibers", path);
  for (std::size_t i = 0; i < fibers.size(); ++i) {
    const std::string fp = path + "/fibers/" + std::to_string(i);
    const std::size_t p = size_from_json(field(fibers[i], "point", fp), fp + "/point");
    if (p >= base.dim()) fail(fp + "/point", "point out of range");
    if (dims[p] != 0) fail(fp, "duplicate fiber");
    dims[p] = size_from_json(field(fibers[i], "dim", fp), fp + "/dim");
    const auto d = static_cast<Eigen::Index>(dims[p]);
    metrics[p] = fibers[i].contains("metric") ? matrix_from_json(fibers[i]["metric"], fp + "/metric")
                                              : CMatrix(CMatrix::Identity(d, d));
  }
  for (std::size_t p = 0; p < base.dim(); ++p)
    if (dims[p] == 0) metrics[p] = CMatrix(0, 0);
  return rethrow_as_parse(path, [&] { return make_fibered_module(base, dims, metrics); });
}

FiberedBimodule fibered_from_json(const Json& j, const std::string& path) {
  const Algebra left = algebra_from_json(field(j, "left", path), path + "/left");
  const Algebra right = algebra_from_json(field(j, "right", path), path + "/right");
  const Json& fibers = array_field(j, "fibers", path);
  std::vector<FiberSpec> specs;
  for (std::size_t i = 0; i < fibers.size(); ++i) {
    const std::string fp = path + "/fibers/" + std::to_string(i);
    FiberSpec s;
    s.a = size_from_json(field(fibers[i], "a", fp), fp + "/a");
    s.b = size_from_json(field(fibers[i], "b", fp), fp + "/b");
    s.dim = size_from_json(field(fibers[i], "dim", fp), fp + "/dim");
    if (s.a >= left.dim()) fail(fp + "/a", "left point out of range");
    if (s.b >= right.dim()) fail(fp + "/b", "right point out of range");
    const auto d = static_cast<Eigen::Index>(s.dim);
    s.metric = fibers[i].contains("metric") ? matrix_from_json(fibers[i]["metric"], fp + "/metric")
                                            : CMatrix(CMatrix::Identity(d, d));
    specs.push_back(std::move(s));
  }
  return rethrow_as_parse(path, [&] { return make_fibered_bimodule(left, right, specs); });
}

PresentedBimodule presented_from_json(const Json& j, const std::string& path) {
  PresentedBimodule p;
  p.dim = size_from_json(field(j, "dim", path), path + "/dim");
  p.left_idem = matrices_from_json(array_field(j, "left_idem", path), path + "/left_idem");
  p.right_idem = matrices_from_json(array_field(j, "right_idem", path), path + "/right_idem");
  p.right_gram = matrices_from_json(array_field(j, "right_gram", path), path + "/right_gram");
  p.left_gram = matrices_from_json(array_field(j, "left_gram", path), path + "/left_gram");
  if (j.contains("left_labels")) p.left_labels = labels_from_json(j["left_labels"], path + "/left_labels");
  if (j.contains("right_labels")) p.right_labels = labels_from_json(j["right_labels"], path + "/right_labels");
  auto check_shapes = [&](const std::vector<CMatrix>& ms, const std::string& key) {
    for (std::size_t i = 0; i < ms.size(); ++i)
      if (static_cast<std::size_t>(ms[i].rows()) != p.dim || static_cast<std::size_t>(ms[i].cols()) != p.dim)
        fail(path + "/" + key + "/" + std::to_string(i), "matrix is not dim x dim");
  };
  check_shapes(p.left_idem, "left_idem");
  check_shapes(p.right_idem, "right_idem");
  check_shapes(p.right_gram, "right_gram");
  check_shapes(p.left_gram, "left_gram");
  if (p.left_idem.empty() || p.right_idem.empty()) fail(path, "both idempotent families must be nonempty");
  if (p.right_gram.size() != p.right_idem.size()) fail(path + "/right_gram", "one Gram matrix per right point");
  if (p.left_gram.size() != p.left_idem.size()) fail(path + "/left_gram", "one Gram matrix per left point");
  if (!p.left_labels.empty() && p.left_labels.size() != p.left_idem.size())
    fail(path + "/left_labels", "one label per left point");
  if (!p.right_labels.empty() && p.right_labels.size() != p.right_idem.size())
    fail(path + "/right_labels", "one label per right point");
  return p;
}

CStarCategory category_from_json(const Json& j, const std::string& path) {
  const std::size_t d = size_from_json(field(j, "ambient_dim", path), path + "/ambient_dim");
  const Json& objects = array_field(j, "objects", path);
  std::vector<std::string> labels;
  std::vector<CMatrix> projections;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string op = path + "/objects/" + std::to_string(i);
    const Json& label = field(objects[i], "label", op);
    if (!label.is_string()) fail(op + "/label", "expected a string");
    labels.push_back(label.get<std::string>());
    projections.push_back(matrix_from_json(field(objects[i], "projection", op), op + "/projection"));
    if (static_cast<std::size_t>(projections.back().rows()) != d ||
        static_cast<std::size_t>(projections.back().cols()) != d)
      fail(op + "/projection", "projection is not ambient_dim x ambient_dim");
  }
  std::vector<CMatrix> ambient;
  if (j.contains("ambient")) ambient = matrices_from_json(j["ambient"], path + "/ambient");
  const double tol = optional_tol(j, path);
  return rethrow_as_parse(path, [&] {
    return category_from_projections(std::move(projections), std::move(labels), std::move(ambient), tol);
  });
}

bool is_presented_bimodule(const Json& j) { return j.is_object() && j.contains("left_idem"); }

Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": byte " + std::to_string(e.byte) + ": malformed JSON");
  }
}

std::string digest(const Json& j) {
  const std::string text = j.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

}  // namespace morita
