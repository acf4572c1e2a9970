#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "envsniff/pysrc_model.hpp"
#include "envsniff/version.hpp"

namespace envsniff {

/// One callable API of a release. For methods the leading `self`/`cls`
/// parameter is already stripped; a class carries its constructor surface.
struct ApiRecord {
  std::string fqn;
  DefKind kind = DefKind::function;
  Signature signature;
  /// Classes only: some base class lies outside the release, so inherited
  /// members are not fully known.
  bool open_bases = false;

  friend bool operator==(const ApiRecord&, const ApiRecord&) = default;
};

struct BankNote {
  enum class Kind : std::uint8_t { dangling_edge, star_import_unresolved, parse_failure, unresolved_base };
  Kind kind;
  std::string subject;
  std::string detail;

  friend bool operator==(const BankNote&, const BankNote&) = default;
};

std::string_view to_string(BankNote::Kind kind);

struct IngestStats {
  int modules = 0;
  int parse_failures = 0;
  int skipped_constructs = 0;

  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

/// The complete API set of one library at one version.
struct ReleaseApiSet {
  std::string library;  // normalized index name
  std::string version;
  std::map<std::string, ApiRecord> apis;          // canonical fqn → record
  std::map<std::string, std::string> alias_map;   // alias fqn → canonical fqn
  std::vector<std::string> top_level;             // importable top-level names
  std::vector<BankNote> notes;
  IngestStats stats;

  /// Canonical record for a canonical or alias name.
  const ApiRecord* find(std::string_view fqn) const;
  bool contains(std::string_view fqn) const { return find(fqn) != nullptr; }
  /// Every queryable name: canonical fqns and aliases.
  std::set<std::string> all_names() const;

  friend bool operator==(const ReleaseApiSet&, const ReleaseApiSet&) = default;
};

struct ReleaseKey {
  std::string library;
  std::string version;

  friend bool operator==(const ReleaseKey&, const ReleaseKey&) = default;
};

/// (library, version) ordering with versions compared by release rules.
bool release_key_less(const ReleaseKey& a, const ReleaseKey& b);

struct ParamChange {
  std::string fqn;
  Signature before;
  Signature after;

  friend bool operator==(const ParamChange&, const ParamChange&) = default;
};

struct ApiDiff {
  std::set<std::string> added;
  std::set<std::string> removed;
  std::vector<ParamChange> param_changed;  // sorted by fqn

  bool empty() const { return added.empty() && removed.empty() && param_changed.empty(); }
};

// ---- bank construction ------------------------------------------------------

/// Transitive closure under chaining: A -f-> B and B -f-> C give A -f-> C.
/// Original edges are kept; the result is sorted and duplicate free.
std::vector<ImportEdge> compute_import_closure(const std::vector<ImportEdge>& edges);

/// Builds the release API set from the directory tree, the import closure and
/// every parsed module: canonical definitions, re-export aliases (including
/// the methods reachable through aliased classes) and inherited methods.
ReleaseApiSet enhance_tree(const DirectoryTree& tree, const std::vector<ImportEdge>& closure,
                           const std::vector<SourceModule>& modules);

/// Throws LibraryMismatch when the releases belong to different libraries.
ApiDiff diff_releases(const ReleaseApiSet& a, const ReleaseApiSet& b);

// ---- index ------------------------------------------------------------------

/// Keyword names observed at one call site.
struct CallKeywords {
  std::vector<std::string> keywords;
};

struct IndexEntry {
  std::size_t release;      // position in ApiBankIndex::releases()
  const ApiRecord* record;  // canonical record inside that release
};

/// The API bank: immutable after construction, safe for concurrent readers.
class ApiBankIndex {
 public:
  ApiBankIndex() = default;

  /// Throws DuplicateRelease when a (library, version) pair repeats.
  static ApiBankIndex build(std::vector<std::shared_ptr<const ReleaseApiSet>> releases);

  const std::vector<std::shared_ptr<const ReleaseApiSet>>& releases() const { return releases_; }
  const ReleaseApiSet* release(std::string_view library, std::string_view version) const;

  /// Releases containing `fqn` (canonical or alias), sorted by (library,
  /// version). With keywords, versions whose signature rejects any of them
  /// are dropped.
  std::vector<ReleaseKey> query(std::string_view fqn, const CallKeywords* call = nullptr) const;
  std::span<const IndexEntry> entries(std::string_view fqn) const;

  /// Every known version of a library, ascending.
  std::vector<std::string> versions(std::string_view library) const;
  std::vector<std::string> libraries() const;
  const std::set<std::string>* libraries_for_top_level(std::string_view module) const;
  const std::map<std::string, std::set<std::string>>& top_level() const { return top_level_; }

  std::size_t release_count() const { return releases_.size(); }
  std::size_t api_count() const { return api_count_; }
  std::size_t name_count() const { return entries_.size(); }
  bool empty() const { return releases_.empty(); }

  /// Stable identity of the bank contents (hash of the sorted release list).
  std::string identity() const;

 private:
  std::vector<std::shared_ptr<const ReleaseApiSet>> releases_;
  std::map<std::string, std::vector<IndexEntry>, std::less<>> entries_;
  std::map<std::string, std::set<std::string>> top_level_;
  std::map<std::string, std::vector<std::string>, std::less<>> versions_;
  std::size_t api_count_ = 0;
};

/// Convenience wrapper matching the bank query contract.
std::vector<ReleaseKey> query(const ApiBankIndex& index, std::string_view fqn,
                              const CallKeywords* call = nullptr);

}  // namespace envsniff
