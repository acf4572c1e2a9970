#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "envsniff/notebook.hpp"

namespace envsniff {

enum class NameClass : std::uint8_t { local, stdlib, library };

std::string_view to_string(NameClass c);

/// Root classification: local when the root is defined in the notebook,
/// stdlib when the (import-resolved) root is a standard module of any of
/// `interpreter_lines` (all embedded lines when empty), library otherwise.
/// `imports` maps bound names to the dotted module or object they stand for.
NameClass classify_name(std::string_view name, const std::set<std::string>& local_defs,
                        const std::map<std::string, std::string>& imports,
                        const std::vector<std::string>& interpreter_lines = {});

/// Observed call site shape.
struct CallShape {
  int positional = 0;
  std::vector<std::string> keywords;  // sorted, unique
  bool star_args = false;
  bool star_kwargs = false;

  friend auto operator<=>(const CallShape&, const CallShape&) = default;
};

enum class UsageOrigin : std::uint8_t { direct_call, alias_call, instance_method, attribute_access };

std::string_view to_string(UsageOrigin o);

struct UsageRecord {
  std::string fqn;
  std::optional<CallShape> call;  // nullopt = reference only
  int cell_position = 0;
  UsageOrigin origin = UsageOrigin::direct_call;
  int line = 0;
  /// From a star import; a guess `module.name` for an otherwise unbound name.
  bool low_confidence = false;
  /// instance_method: the callable whose result is the receiver.
  std::string receiver_origin;

  bool reference_only() const { return !call.has_value(); }

  friend auto operator<=>(const UsageRecord&, const UsageRecord&) = default;
};

struct CellNote {
  int cell_position = 0;
  std::string note;
};

struct UsageSet {
  std::vector<UsageRecord> usages;  // first-occurrence order, duplicates removed
  std::set<std::string> imported_top_levels;
  std::set<std::string> local_names;
  std::set<std::string> unresolved;
  std::vector<CellNote> cell_notes;  // sanitizer notes and excluded cells
};

struct AnalysisOptions {
  std::vector<std::string> interpreter_lines;  // empty = every embedded table
  /// Module names importable from next to the notebook.
  std::set<std::string> sibling_modules;
};

/// Standardizes third-party API references of the cells, processed in
/// document order with one shared symbol table. Cells are sanitized here.
UsageSet collect_usages(const std::vector<CodeCell>& cells, const AnalysisOptions& options = {});

/// The instance-method subset of collect_usages.
std::vector<UsageRecord> trace_instance_calls(const std::vector<CodeCell>& cells, const AnalysisOptions& options = {});

/// Top-level module names next to a notebook: `*.py` files and directories
/// holding source files.
std::set<std::string> sibling_modules_of(const std::string& notebook_path);

}  // namespace envsniff
