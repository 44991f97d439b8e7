#pragma once

// JSON schemas: complex scalars as [re, im], matrices as row-major nested
// arrays. Parse failures raise ParseError naming the JSON path.

#include "morita/bimodule.hpp"
#include "morita/category.hpp"
#include "morita/hilbert_module.hpp"
#include "morita/report.hpp"

#include <json.hpp>

#include <string>

namespace morita {

using Json = nlohmann::json;

Json to_json(Complex z);
Json to_json(const CMatrix& m);
Json to_json(const CVector& v);
Json to_json(const Algebra& a);
Json to_json(const FiberedModule& m);
Json to_json(const FiberedBimodule& m);
Json to_json(const PresentedBimodule& p);
Json to_json(const CStarCategory& c);
Json to_json(const Report& r);

Complex complex_from_json(const Json& j, const std::string& path = "");
CMatrix matrix_from_json(const Json& j, const std::string& path = "");
CVector vector_from_json(const Json& j, const std::string& path = "");
/// "presented" algebras are diagonalized; their points are the characters.
Algebra algebra_from_json(const Json& j, const std::string& path = "");
FiberedModule module_from_json(const Json& j, const std::string& path = "");
FiberedBimodule fibered_from_json(const Json& j, const std::string& path = "");
PresentedBimodule presented_from_json(const Json& j, const std::string& path = "");
CStarCategory category_from_json(const Json& j, const std::string& path = "");

bool is_presented_bimodule(const Json& j);

/// Reads and parses a file; ParseError carries the file name and byte offset.
Json load_json(const std::string& path);

/// SHA-256 hex of the canonical (sorted-key, compact) serialization.
std::string digest(const Json& j);

}  // namespace morita
