#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "envsniff/api_bank.hpp"

namespace envsniff {

/// On-disk bank layout:
///
///   <bank_dir>/releases/<library>/<version>.apirec   one record per release
///   <bank_dir>/index.jsonl                           release list and statistics
///
/// Both files are line-delimited JSON. The first line is a header carrying
/// `format_version`; the last line is `{"checksum": <sha256 of the preceding
/// lines>}`. Release records list one API per line
/// (`{"api","kind","pos","kw","varargs","varkw","open_bases"}`), then aliases
/// (`{"alias","target"}`) and notes (`{"note","subject","detail"}`). The index
/// lists `{"release","version","file","sha256"}` per release and
/// `{"top_level","libraries"}` per importable top-level name; loading rebuilds
/// the in-memory index from the releases and checks it against these lines.
inline constexpr int kBankFormatVersion = 1;

struct LoadedBank {
  std::vector<std::shared_ptr<const ReleaseApiSet>> releases;
  ApiBankIndex index;
};

std::string serialize_release(const ReleaseApiSet& release);
/// Throws CorruptBank or UnsupportedFormat.
ReleaseApiSet deserialize_release(const std::string& text);

std::filesystem::path release_record_path(const std::filesystem::path& bank_dir, const std::string& library,
                                          const std::string& version);

/// Writes one release record (atomically, via rename).
void save_release(const std::filesystem::path& bank_dir, const ReleaseApiSet& release);
/// Writes every release record and the index artifact.
void save_bank(const std::vector<std::shared_ptr<const ReleaseApiSet>>& releases, const ApiBankIndex& index,
               const std::filesystem::path& bank_dir);
/// Rewrites only the index artifact from the given index.
void save_index(const ApiBankIndex& index, const std::filesystem::path& bank_dir);
/// Throws CorruptBank on truncated/mismatching files, UnsupportedFormat on
/// a different store version.
LoadedBank load_bank(const std::filesystem::path& bank_dir);

bool bank_exists(const std::filesystem::path& bank_dir);

/// Loads every release record under `releases/` regardless of the index;
/// used to rebuild the index after incremental ingestion.
std::vector<std::shared_ptr<const ReleaseApiSet>> scan_release_records(const std::filesystem::path& bank_dir);

}  // namespace envsniff
