#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace envsniff {

struct CodeCell {
  int position = 0;  // index among code cells, document order
  std::optional<int> execution_count;
  std::string source;
};

struct Notebook {
  int nbformat = 4;
  std::vector<CodeCell> cells;
  /// Highest recorded counter exceeds the number of executed cells.
  bool counter_skip = false;
  /// Counters decrease somewhere in document order.
  bool counters_out_of_order = false;
  int max_execution_count = 0;
  int executed_cells = 0;
  std::string language_version;  // from metadata, may be empty
};

/// Accepts format 4 (`cells`) and format 3 (`worksheets[].cells`, `input`,
/// `prompt_number`). Throws MalformedNotebook.
Notebook load_notebook(std::string_view document);

struct SanitizedCell {
  std::string text;
  std::vector<std::string> notes;  // e.g. `line_magic_removed`, `shell_escape_removed`
  bool excluded = false;           // does not parse after sanitizing
  std::string reason;
};

/// Strips kernel syntax: `%` line magics, `%%` cell magics (body kept for
/// timing/capture magics, dropped otherwise), `!` shell escapes and `?`/`??`
/// help requests. Indented magic lines become `pass`.
SanitizedCell sanitize_cell(std::string_view source);

}  // namespace envsniff
