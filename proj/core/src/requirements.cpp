#include "envsniff/requirements.hpp"

#include <regex>
#include <sstream>

#include "envsniff/errors.hpp"

namespace envsniff {

std::vector<Requirement> parse_requirements(std::string_view text) {
  static const std::regex line_re(
      R"(^\s*([A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?)\s*(\[[^\]]*\])?\s*((?:(?:==|!=|>=|<=|~=|>|<|===)\s*[A-Za-z0-9.*+!_-]+\s*,?\s*)*)\s*(;.*)?$)");
  std::vector<Requirement> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t\r")] == '-') continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) throw Error("requirements line " + std::to_string(n) + " not understood: " + line);
    Requirement r;
    r.name = m[1].str();
    for (char c : m[3].str()) {
      if (c != ' ' && c != '\t' && c != '\r') r.specifier += c;
    }
    if (!r.specifier.empty() && r.specifier.back() == ',') r.specifier.pop_back();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace envsniff
