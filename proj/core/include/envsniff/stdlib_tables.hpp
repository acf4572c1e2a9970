#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace envsniff {

/// Interpreter lines with an embedded standard-library module table.
const std::vector<std::string>& supported_interpreter_lines();

/// Top-level standard-library modules of one line (`2.7`, `3.6`, `3.12`),
/// or nullptr for an unknown line.
const std::set<std::string, std::less<>>* stdlib_table(std::string_view line);

/// True when `root` is a standard module of any of `lines` (all lines when empty).
bool is_stdlib_module(std::string_view root, const std::vector<std::string>& lines = {});

/// Builtins of either language line plus names the notebook kernel injects.
bool is_builtin_name(std::string_view name);

}  // namespace envsniff
