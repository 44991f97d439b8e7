#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace morita {

struct Check {
  std::string name;
  double residual = 0.0;
  bool pass = true;
};

/// Ordered list of named residual checks. Overall pass is the conjunction.
class Report {
 public:
  /// NaN residuals fail.
  void add(std::string name, double residual, double tol) {
    checks_.push_back({std::move(name), residual, residual <= tol});
  }
  /// residual 0 on success, 1 on failure
  void add_flag(std::string name, bool ok) { checks_.push_back({std::move(name), ok ? 0.0 : 1.0, ok}); }
  void merge(const Report& other, std::string_view prefix) {
    for (const auto& c : other.checks_) checks_.push_back({std::string(prefix) + c.name, c.residual, c.pass});
  }

  bool pass() const {
    for (const auto& c : checks_)
      if (!c.pass) return false;
    return true;
  }
  const std::vector<Check>& checks() const noexcept { return checks_; }
  const Check* find(std::string_view name) const {
    for (const auto& c : checks_)
      if (c.name == name) return &c;
    return nullptr;
  }
  /// first failing check, or nullptr
  const Check* first_failure() const {
    for (const auto& c : checks_)
      if (!c.pass) return &c;
    return nullptr;
  }

 private:
  std::vector<Check> checks_;
};

}  // namespace morita
