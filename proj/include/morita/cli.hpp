#pragma once

#include "morita/error.hpp"
#include "morita/json_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace morita::cli {

enum class Format { text, json };

/// Bad command line: wrong input count, unknown command, invalid option value.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  /// empty means standard output
  std::string output;
  double tol = kDefaultTol;
  std::uint64_t seed = 42;
  std::size_t samples = 50;
  Format format = Format::text;

  /// quotient: left points kept by the ideal
  std::vector<std::size_t> kept;

  /// gen: "bimodule" or "category"
  std::string gen_kind = "bimodule";
  std::size_t points = 3;
  double spread = 10.0;
  std::size_t objects = 3;
  bool present = false;
};

struct RunResult {
  /// the report, or the generated instance for `gen`
  Json document;
  int status = 0;
};

inline constexpr int kPass = 0;
inline constexpr int kCheckFailure = 1;
inline constexpr int kInputError = 2;

const std::vector<std::string>& commands();

/// Throws ParseError for unreadable or malformed input and UsageError for an
/// invalid configuration.
RunResult run(const RunConfig& config);
/// Same, with the inputs already parsed; config.inputs is ignored.
RunResult run(const RunConfig& config, std::vector<Json> inputs);

std::string render(const RunResult& result, Format format);

/// Full command-line entry point: parses argv, runs, writes output.
int main(int argc, char** argv);

}  // namespace morita::cli
