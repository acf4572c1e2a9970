#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace envsniff {

struct Requirement {
  std::string name;       // as written
  std::string specifier;  // e.g. `==1.0` or `>=1.0,<=2.0`; empty for any version

  std::string str() const { return name + specifier; }
  friend bool operator==(const Requirement&, const Requirement&) = default;
};

/// Reads requirements-format text: one requirement per line, `#` comments,
/// blank lines ignored. Option lines (`-r`, `--index-url`) are skipped.
/// Throws Error on a line that is not a requirement.
std::vector<Requirement> parse_requirements(std::string_view text);

}  // namespace envsniff
