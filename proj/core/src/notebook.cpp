#include "envsniff/notebook.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "envsniff/errors.hpp"
#include "envsniff/python_parser.hpp"

namespace envsniff {

using nlohmann::json;

namespace {

std::string joined_source(const json& src) {
  if (src.is_string()) return src.get<std::string>();
  if (src.is_array()) {
    std::string out;
    for (const auto& line : src) {
      if (!line.is_string()) throw MalformedNotebook("source lines must be strings");
      out += line.get<std::string>();
    }
    return out;
  }
  if (src.is_null()) return {};
  throw MalformedNotebook("source must be a string or a list of strings");
}

std::optional<int> counter(const json& cell, const char* key) {
  auto it = cell.find(key);
  if (it == cell.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw MalformedNotebook(std::string(key) + " must be an integer");
  int v = it->get<int>();
  if (v < 1) return std::nullopt;
  return v;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : s) {
    if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));
  return lines;
}

std::string lstrip(const std::string& s) {
  auto p = s.find_first_not_of(" \t");
  return p == std::string::npos ? std::string() : s.substr(p);
}

std::string rstrip(const std::string& s) {
  auto p = s.find_last_not_of(" \t");
  return p == std::string::npos ? std::string() : s.substr(0, p + 1);
}

// cell magics whose body is still ordinary code
const std::set<std::string>& passthrough_cell_magics() {
  static const std::set<std::string> m{"time", "timeit", "capture", "prun", "debug"};
  return m;
}

bool looks_like_help(const std::string& stripped) {
  if (stripped.starts_with("?")) return true;
  if (!stripped.ends_with("?")) return false;
  return stripped.find_first_of("#'\"") == std::string::npos;
}

void note_once(std::vector<std::string>& notes, const char* n) {
  if (std::find(notes.begin(), notes.end(), n) == notes.end()) notes.emplace_back(n);
}

}  // namespace

Notebook load_notebook(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw MalformedNotebook(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedNotebook("top level is not an object");

  Notebook nb;
  nb.nbformat = doc.value("nbformat", doc.contains("worksheets") ? 3 : 4);
  if (doc.contains("metadata") && doc["metadata"].is_object()) {
    const json& md = doc["metadata"];
    if (md.contains("language_info") && md["language_info"].is_object()) {
      nb.language_version = md["language_info"].value("version", "");
    }
  }

  std::vector<const json*> cells;
  if (nb.nbformat >= 4) {
    if (!doc.contains("cells") || !doc["cells"].is_array()) throw MalformedNotebook("missing cells array");
    for (const auto& c : doc["cells"]) cells.push_back(&c);
  } else {
    if (!doc.contains("worksheets") || !doc["worksheets"].is_array()) throw MalformedNotebook("missing worksheets");
    for (const auto& ws : doc["worksheets"]) {
      if (!ws.contains("cells") || !ws["cells"].is_array()) throw MalformedNotebook("worksheet without cells");
      for (const auto& c : ws["cells"]) cells.push_back(&c);
    }
  }

  int last = 0;
  for (const json* c : cells) {
    if (!c->is_object() || !c->contains("cell_type")) throw MalformedNotebook("cell without cell_type");
    if ((*c)["cell_type"] != "code") continue;
    CodeCell cell;
    cell.position = static_cast<int>(nb.cells.size());
    if (nb.nbformat >= 4) {
      cell.source = joined_source(c->value("source", json()));
      cell.execution_count = counter(*c, "execution_count");
    } else {
      cell.source = joined_source(c->value("input", json()));
      cell.execution_count = counter(*c, "prompt_number");
    }
    if (cell.execution_count) {
      ++nb.executed_cells;
      nb.max_execution_count = std::max(nb.max_execution_count, *cell.execution_count);
      if (*cell.execution_count < last) nb.counters_out_of_order = true;
      last = *cell.execution_count;
    }
    nb.cells.push_back(std::move(cell));
  }
  nb.counter_skip = nb.max_execution_count > nb.executed_cells;
  return nb;
}

SanitizedCell sanitize_cell(std::string_view source) {
  SanitizedCell out;
  std::vector<std::string> lines = split_lines(source);

  std::size_t first = 0;
  while (first < lines.size() && lstrip(lines[first]).empty()) ++first;
  if (first < lines.size() && lstrip(lines[first]).starts_with("%%")) {
    std::string head = lstrip(lines[first]).substr(2);
    std::string magic = head.substr(0, head.find_first_of(" \t"));
    if (!passthrough_cell_magics().count(magic)) {
      note_once(out.notes, "cell_magic_removed");
      return out;
    }
    note_once(out.notes, "cell_magic_passthrough");
    lines.erase(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(first) + 1);
  }

  static const std::regex assign_magic(R"(^(\s*[A-Za-z_][\w\.]*(?:\s*,\s*[A-Za-z_][\w\.]*)*\s*=)\s*[!%].*$)");
  std::vector<std::string> kept;
  bool continuing = false;
  for (const auto& line : lines) {
    if (continuing) {
      continuing = rstrip(line).ends_with("\\");
      continue;
    }
    std::string stripped = lstrip(line);
    std::string indent = line.substr(0, line.size() - stripped.size());
    const char* note = nullptr;
    if (stripped.starts_with("!")) {
      note = "shell_escape_removed";
    } else if (stripped.starts_with("%")) {
      note = "line_magic_removed";
    } else if (looks_like_help(rstrip(stripped))) {
      note = "help_removed";
    }
    if (note) {
      note_once(out.notes, note);
      continuing = rstrip(line).ends_with("\\");
      if (!indent.empty()) kept.push_back(indent + "pass");
      continue;
    }
    std::smatch m;
    if (std::regex_match(line, m, assign_magic)) {
      note_once(out.notes, "magic_assignment_rewritten");
      continuing = rstrip(line).ends_with("\\");
      kept.push_back(m[1].str() + " None");
      continue;
    }
    kept.push_back(line);
  }

  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) out.text += '\n';
    out.text += kept[i];
  }
  if (!kept.empty() && source.ends_with('\n')) out.text += '\n';
  if (!out.notes.empty()) {
    // nothing but whitespace left
    if (out.text.find_first_not_of(" \t\n") == std::string::npos) out.text.clear();
  } else {
    out.text = std::string(source);
  }

  if (!out.text.empty()) {
    try {
      py::parse_module_any(out.text);
    } catch (const SyntaxError& e) {
      out.excluded = true;
      out.reason = "unparseable after sanitizing: line " + std::to_string(e.line()) + ": " + e.detail();
      note_once(out.notes, "cell_excluded");
      out.text.clear();
    }
  }
  return out;
}

}  // namespace envsniff
