#pragma once

#include <string>
#include <vector>

#include "envsniff/api_bank.hpp"
#include "envsniff/usage_analysis.hpp"

namespace envsniff {

struct ResolvePolicy {
  bool pin_latest = false;
  bool include_star_imports = false;
  /// Report usages with several candidate libraries as unresolved instead of
  /// applying the tie-break.
  bool reject_ambiguous = false;
};

enum class ConstraintKind : std::uint8_t { exact, closed_interval, at_least, any };

std::string_view to_string(ConstraintKind k);

struct Constraint {
  ConstraintKind kind = ConstraintKind::any;
  std::string lo;  // exact version, or lower bound
  std::string hi;  // closed_interval only

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct VersionRange {
  std::string library;
  std::vector<std::string> feasible;  // ascending
  Constraint emitted;
  /// Feasible runs left out of the emitted constraint, oldest first.
  std::vector<std::vector<std::string>> excluded_runs;
  std::vector<std::string> assigned;  // distinct fqns this library covers
};

enum class UnresolvedReason : std::uint8_t { unknown_api, empty_intersection, ambiguous_library };

std::string_view to_string(UnresolvedReason r);

struct UnresolvedUsage {
  UsageRecord usage;
  UnresolvedReason reason;
  std::string detail;
};

/// Trace of one distinct (fqn, call) pair.
struct Diagnostic {
  std::string fqn;
  std::vector<std::string> keywords;
  bool reference_only = false;
  std::vector<std::string> candidates;  // libraries exposing the name
  std::string chosen;
  std::vector<std::string> versions;  // versions of `chosen` accepting the call
  std::string note;
};

struct Resolution {
  std::vector<VersionRange> resolved;  // sorted by library
  std::vector<UnresolvedUsage> unresolved_usages;
  std::vector<Diagnostic> diagnostics;
  std::string bank_identity;
  std::vector<std::string> interpreter_lines;  // stdlib tables used, empty = all
};

/// Throws EmptyBank.
Resolution resolve(const UsageSet& usages, const ApiBankIndex& index, const ResolvePolicy& policy = {});

/// `all_versions` is the library's full ascending version list. Fills
/// `range.excluded_runs` and returns the constraint for the newest run.
Constraint choose_emitted_constraint(VersionRange& range, const std::vector<std::string>& all_versions,
                                     const ResolvePolicy& policy = {});

/// `name`, `name==V`, `name>=LO` or `name>=LO,<=HI`.
std::string requirement_line(const VersionRange& range);
/// Pipfile value: `"*"`, `"==V"`, `">= LO"` or `">=LO,<=HI"`.
std::string pipfile_value(const VersionRange& range);

std::string emit_requirements(const Resolution& resolution);
std::string emit_pipfile(const Resolution& resolution);

}  // namespace envsniff
