#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "envsniff/api_bank.hpp"
#include "envsniff/resolver.hpp"
#include "envsniff/usage_analysis.hpp"

// Randomized banks for the resolver checks. The generator keeps its own plain
// model of every release so the oracle never reads the library's structures.
namespace synthetic {

struct ApiModel {
  std::set<std::string> keywords;
  bool var_keyword = false;
};

struct LibModel {
  std::string name;
  std::vector<std::string> versions;                      // ascending
  std::vector<std::map<std::string, ApiModel>> releases;  // parallel to versions
  std::vector<std::string> pool;                          // every fqn ever defined
};

struct Case {
  std::uint32_t seed = 0;
  std::vector<LibModel> libs;
  std::vector<envsniff::UsageRecord> usages;

  std::vector<std::shared_ptr<const envsniff::ReleaseApiSet>> releases() const;
  envsniff::UsageSet usage_set() const;
};

struct Limits {
  int max_libraries = 5;
  int max_versions = 8;
  int max_usages = 8;
};

Case generate(std::uint32_t seed, const Limits& limits = {});

struct Expected {
  std::map<std::string, std::vector<std::string>> feasible;     // library → versions
  std::map<std::string, std::set<std::string>> covered_fqns;    // library → kept fqns
  std::set<std::string> unknown;                                // direct calls absent everywhere
  std::set<std::string> demoted;                                // fqns demoted for an empty intersection
};

// Brute force over every version of every library.
Expected enumerate(const Case& c);

struct Verdict {
  bool feasible_equal = true;
  bool maximal = true;
  int ranges = 0;
  std::vector<std::string> problems;
};

// Compares a resolution with the enumeration: feasible sets, unresolved
// reasons, and maximality of every emitted run.
Verdict check(const Case& c, const envsniff::Resolution& r);

}  // namespace synthetic
