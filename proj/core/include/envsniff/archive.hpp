#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace envsniff::archive {

struct Entry {
  std::string path;  // `/`-separated, relative
  std::string data;
  bool is_directory = false;
};

/// Reads a zip archive (stored and deflated members). Throws CorruptArchive.
std::vector<Entry> read_zip(std::string_view bytes);

/// Reads a ustar/GNU/pax tar stream. Throws CorruptArchive.
std::vector<Entry> read_tar(std::string_view bytes);

/// Inflates a gzip stream. Throws CorruptArchive.
std::string gunzip(std::string_view bytes);

/// Dispatches on the file name: `.whl`/`.zip`/`.egg` → zip, `.tar.gz`/`.tgz` → gzip+tar,
/// `.tar` → tar. Throws CorruptArchive for unsupported or damaged archives.
std::vector<Entry> read_archive(std::string_view filename, std::string_view bytes);

/// Writes a zip archive with deflated members. Used for fixtures and caches.
std::string write_zip(const std::vector<Entry>& entries);

/// True when `path` is relative and never escapes its root.
bool is_safe_member_path(std::string_view path);

}  // namespace envsniff::archive
