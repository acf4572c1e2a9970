#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "envsniff/api_bank.hpp"
#include "envsniff/archive.hpp"

namespace envsniff {

enum class ArchiveKind : std::uint8_t { wheel, sdist };

std::string_view to_string(ArchiveKind kind);

struct ReleaseRef {
  std::string library;  // normalized index name
  std::string version;
  std::string archive_url;
  std::string filename;
  ArchiveKind archive_kind = ArchiveKind::wheel;
  std::string checksum;  // sha256 hex of the archive bytes

  friend bool operator==(const ReleaseRef&, const ReleaseRef&) = default;
};

struct SkippedRelease {
  std::string version;
  std::string reason;
};

struct ReleaseListing {
  std::string library;
  std::vector<ReleaseRef> refs;  // ascending by version
  std::vector<SkippedRelease> skipped;
};

/// Byte transport for index metadata and archives.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Body of `url`, or nullopt on 404. Throws IndexUnavailable otherwise.
  virtual std::optional<std::string> get(const std::string& url) = 0;
};

struct RetryPolicy {
  int attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{30};
};

/// HTTP(S) transport with bounded exponential backoff on connection errors,
/// 429 and 5xx responses. Counts issued requests.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(RetryPolicy policy = {}) : policy_(policy) {}
  std::optional<std::string> get(const std::string& url) override;
  int requests() const { return requests_.load(); }

 private:
  RetryPolicy policy_;
  std::atomic<int> requests_{0};
};

/// Queries `<index_base>/pypi/<name>/json`. Throws UnknownLibrary,
/// IndexUnavailable.
ReleaseListing list_releases(const std::string& library, const std::string& index_base, Transport& transport);

struct IndexFile {
  std::string filename;
  std::string url;
  std::string packagetype;
  std::string sha256;
  bool yanked = false;
};

/// Picks the archive for one version: the first platform-independent wheel,
/// else any wheel, else a readable sdist. Returns nullopt with `reason` set
/// when nothing usable exists.
std::optional<IndexFile> choose_archive(const std::vector<IndexFile>& files, std::string* reason);

/// Verifies, unpacks and caches under `<cache>/<library>/<version>/<checksum>/`.
/// A warm cache returns without touching the transport. Throws
/// ChecksumMismatch, CorruptArchive.
std::filesystem::path fetch_and_unpack(const ReleaseRef& ref, const std::filesystem::path& cache_dir,
                                       Transport& transport);

/// Selects importable members of an archive: wheels drop `*.dist-info` and
/// map `*.data/purelib|platlib`; sdists keep the packages beside the build
/// script (or under `src/`).
std::map<std::string, std::string> select_release_files(ArchiveKind kind, const std::vector<archive::Entry>& entries);

/// Pipeline over an unpacked tree: directory tree, parse, edges, closure,
/// enhance. Throws EmptyRelease, IngestDegraded (more than half of the
/// modules fail to parse).
ReleaseApiSet ingest_files(const std::string& library, const std::string& version,
                           const std::map<std::string, std::string>& files);
ReleaseApiSet ingest_tree(const std::string& library, const std::string& version,
                          const std::filesystem::path& root);

/// fetch_and_unpack followed by ingest_tree.
ReleaseApiSet ingest_release(const ReleaseRef& ref, const std::filesystem::path& cache_dir, Transport& transport);

struct IngestResult {
  ReleaseRef ref;
  enum class Status : std::uint8_t { ingested, failed } status = Status::failed;
  std::string message;
  std::shared_ptr<const ReleaseApiSet> release;
};

/// Ingests refs in a pool of `parallelism` workers; results keep input order.
std::vector<IngestResult> ingest_many(const std::vector<ReleaseRef>& refs, const std::filesystem::path& cache_dir,
                                      Transport& transport, int parallelism = 4);

}  // namespace envsniff
