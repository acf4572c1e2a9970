#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace envsniff {

enum class DefKind : std::uint8_t { function, class_, method };

std::string_view to_string(DefKind kind);
std::optional<DefKind> def_kind_from_string(std::string_view text);

struct KeywordParam {
  std::string name;
  bool has_default = false;

  friend auto operator<=>(const KeywordParam&, const KeywordParam&) = default;
};

/// Callable surface of a definition, `self`/`cls` not yet stripped.
struct Signature {
  std::vector<std::string> positional;  // required positional parameters, in order
  std::set<KeywordParam> keyword;       // defaulted or keyword-only parameters
  bool var_positional = false;          // *args
  bool var_keyword = false;             // **kwargs

  bool accepts_keyword(std::string_view name) const;

  friend bool operator==(const Signature&, const Signature&) = default;
};

std::string to_string(const Signature& sig);

struct Definition {
  std::string name;
  DefKind kind = DefKind::function;
  Signature signature;
  std::optional<std::string> owner_class;  // methods only
  bool is_underscore_named = false;
  bool is_staticmethod = false;
  bool is_classmethod = false;
  std::vector<std::string> bases;  // classes: dotted base expressions as written
  int line = 0;

  friend bool operator==(const Definition&, const Definition&) = default;
};

enum class ImportForm : std::uint8_t { import, from_import, star_import };

struct ImportedName {
  std::string name;
  std::optional<std::string> alias;

  friend bool operator==(const ImportedName&, const ImportedName&) = default;
};

struct RawImport {
  ImportForm form = ImportForm::import;
  std::string source_module;  // absolute dotted name
  std::vector<ImportedName> imported_names;
  int line = 0;

  friend bool operator==(const RawImport&, const RawImport&) = default;
};

struct SourceModule {
  std::string module_path;
  std::string file_path;
  bool is_package = false;  // parsed from a package initializer
  std::vector<Definition> definitions;
  std::vector<RawImport> import_statements;
  std::optional<std::vector<std::string>> dunder_all;  // literal `__all__`, when present
  int skipped_constructs = 0;

  /// Qualified name of a definition: `module.f`, `module.C`, `module.C.m`.
  std::string qualified_name(const Definition& d) const;

  /// Names a star import of this module would bind, before following the
  /// module's own star imports. A literal `__all__` wins.
  std::vector<std::string> public_names() const;

  friend bool operator==(const SourceModule&, const SourceModule&) = default;
};

/// Parses one module. Relative imports are made absolute against
/// `module_path`; `is_package` says the text came from an initializer file.
/// Throws SyntaxError when neither grammar level accepts the text.
SourceModule parse_source(std::string_view text, std::string_view module_path,
                          bool is_package = false);

// ---------------------------------------------------------------------------

enum class EdgeKind : std::uint8_t { name, submodule };

/// `source -name-> target`: `name` from `source` is bound in `target`, under
/// `bound_name` (differs from `name` only for `import ... as ...`).
struct ImportEdge {
  std::string source_module;
  std::string name;
  std::string target_module;
  std::string bound_name;
  EdgeKind kind = EdgeKind::name;

  friend auto operator<=>(const ImportEdge&, const ImportEdge&) = default;
};

std::string to_string(const ImportEdge& e);

struct EdgeNote {
  enum class Kind : std::uint8_t { star_import_unresolved };
  Kind kind;
  std::string module;
  std::string detail;
};

/// Release-wide view used to expand star imports and detect submodule imports.
struct ModuleLookup {
  std::function<bool(std::string_view module)> is_module;
  std::function<std::vector<std::string>(std::string_view module)> public_names;
};

struct EdgeExtraction {
  std::vector<ImportEdge> edges;
  std::vector<EdgeNote> notes;
};

EdgeExtraction extract_import_edges(const SourceModule& mod, const ModuleLookup* lookup = nullptr);

// ---------------------------------------------------------------------------

struct TreeNode {
  enum class Kind : std::uint8_t { package, module, orphan_root };
  std::string name;       // last path component, without `.py`
  std::string dotted;     // full dotted module path; empty for the orphan root
  std::string file_path;  // initializer for packages, source file for modules
  Kind kind = Kind::module;
  bool implicit_namespace = false;
  int parent = -1;
  std::vector<int> children;
};

/// Package/module tree for one unpacked release. Node 0 is a synthetic
/// root; its children are the top-level packages and modules plus the
/// `__orphan__` node holding files that cannot be imported by name.
struct DirectoryTree {
  std::vector<TreeNode> nodes;
  std::vector<std::string> roots;  // top-level importable names

  const TreeNode* find(std::string_view dotted) const;
  std::vector<const TreeNode*> modules() const;  // every non-orphan module and package
  std::vector<std::string> orphan_files() const;
};

DirectoryTree build_directory_tree(const std::vector<std::string>& files);

/// `a/b/__init__.py` → `a.b`; `a/b/c.py` → `a.b.c`. Empty for non-source paths.
std::string module_path_for_file(std::string_view file_path);
/// Inverse of module_path_for_file for the given package flag.
std::string file_path_for_module(std::string_view module_path, bool is_package);

}  // namespace envsniff
