#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fbh/domain.hpp"

namespace fbh {

/// Flat `section.key = value` run configuration. Unknown keys are a parse
/// error; cross-field constraints are enforced at validation time.
struct RunConfig {
  std::map<std::string, std::string> kv;

  static RunConfig defaults();
  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  void set(const std::string& key, const std::string& value);  // rejects unknown keys
  void apply_override(const std::string& assignment);          // "key=value"

  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t uinteger(const std::string& key) const;
  bool flag(const std::string& key) const;

  /// Cross-field checks: H ∈ [1/2,1), μ ∈ (1/2,1), β > 0, θ > (d-1)/(2H-1)
  /// under the a1' tag, positive tolerances.
  void validate() const;

  /// Canonical serialization (sorted keys), embedded in the manifest; parsing
  /// it back reproduces the run bit-exactly.
  std::string canonical_text() const;

  DomainKind domain_kind() const;
};

}  // namespace fbh
