#include "envsniff/release_ingest.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "envsniff/errors.hpp"
#include "envsniff/hash.hpp"
#include "envsniff/python_parser.hpp"

namespace envsniff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw IndexUnavailable("unsupported URL: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string resolve_url(const std::string& base, const std::string& ref) {
  if (ref.starts_with("http://") || ref.starts_with("https://")) return ref;
  if (ref.starts_with("/")) return split_url(base).origin + ref;
  std::string b = base;
  while (!b.empty() && b.back() == '/') b.pop_back();
  return b + "/" + ref;
}

bool is_sdist_name(std::string_view f) {
  return f.ends_with(".tar.gz") || f.ends_with(".tgz") || f.ends_with(".zip") || f.ends_with(".tar");
}

// `name-ver[-build]-py-abi-plat.whl` → plat
std::string wheel_platform(std::string_view filename) {
  std::string_view stem = filename.substr(0, filename.size() - 4);
  auto dash = stem.rfind('-');
  return dash == std::string_view::npos ? std::string() : std::string(stem.substr(dash + 1));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string random_token() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream ss;
  ss << std::hex << rng();
  return ss.str();
}

bool is_build_script(std::string_view name) {
  return name == "setup.py" || name == "conftest.py" || name == "noxfile.py" || name == "fabfile.py";
}

}  // namespace

std::string_view to_string(ArchiveKind kind) { return kind == ArchiveKind::wheel ? "wheel" : "sdist"; }

std::optional<std::string> HttpTransport::get(const std::string& url) {
  Url u = split_url(url);
  auto backoff = policy_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, policy_.attempts); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    ++requests_;
    httplib::Client cli(u.origin);
    cli.set_follow_location(true);
    cli.set_connection_timeout(policy_.timeout);
    cli.set_read_timeout(policy_.timeout);
    auto res = cli.Get(u.path);
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status == 404) return std::nullopt;
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status != 429 && res->status < 500) break;
  }
  throw IndexUnavailable(url + ": " + last_error);
}

std::optional<IndexFile> choose_archive(const std::vector<IndexFile>& files, std::string* reason) {
  const IndexFile* any_wheel = nullptr;
  const IndexFile* sdist = nullptr;
  std::vector<std::string> seen;
  for (const auto& f : files) {
    if (f.yanked) {
      seen.push_back(f.filename + " (yanked)");
      continue;
    }
    if (f.filename.ends_with(".whl")) {
      if (wheel_platform(f.filename) == "any") return f;
      if (!any_wheel) any_wheel = &f;
    } else if ((f.packagetype == "sdist" || f.packagetype.empty()) && is_sdist_name(f.filename)) {
      if (!sdist) sdist = &f;
    } else {
      seen.push_back(f.filename + " (" + (f.packagetype.empty() ? "unknown" : f.packagetype) + ")");
    }
  }
  if (any_wheel) return *any_wheel;
  if (sdist) return *sdist;
  if (reason) {
    if (seen.empty()) {
      *reason = "no distribution files";
    } else {
      *reason = "no usable archive:";
      for (const auto& s : seen) *reason += " " + s;
    }
  }
  return std::nullopt;
}

ReleaseListing list_releases(const std::string& library, const std::string& index_base, Transport& transport) {
  std::string name = normalize_library_name(library);
  std::string url = resolve_url(index_base, "pypi/" + name + "/json");
  auto body = transport.get(url);
  if (!body) throw UnknownLibrary(library);

  ReleaseListing out;
  out.library = name;
  try {
    json doc = json::parse(*body);
    for (const auto& [version, files_json] : doc.at("releases").items()) {
      std::vector<IndexFile> files;
      for (const auto& f : files_json) {
        IndexFile file;
        file.filename = f.value("filename", "");
        file.url = f.value("url", "");
        file.packagetype = f.value("packagetype", "");
        if (f.contains("digests")) file.sha256 = f["digests"].value("sha256", "");
        file.yanked = f.value("yanked", false);
        files.push_back(std::move(file));
      }
      std::string reason;
      auto chosen = choose_archive(files, &reason);
      if (!chosen) {
        out.skipped.push_back({version, reason});
        continue;
      }
      ReleaseRef ref;
      ref.library = name;
      ref.version = version;
      ref.filename = chosen->filename;
      ref.archive_url = resolve_url(index_base, chosen->url);
      ref.archive_kind = chosen->filename.ends_with(".whl") ? ArchiveKind::wheel : ArchiveKind::sdist;
      ref.checksum = chosen->sha256;
      out.refs.push_back(std::move(ref));
    }
  } catch (const json::exception& e) {
    throw IndexUnavailable("malformed index response for " + name + ": " + e.what());
  }
  std::sort(out.refs.begin(), out.refs.end(),
            [](const ReleaseRef& a, const ReleaseRef& b) { return Version::parse(a.version) < Version::parse(b.version); });
  return out;
}

std::map<std::string, std::string> select_release_files(ArchiveKind kind, const std::vector<archive::Entry>& entries) {
  std::map<std::string, std::string> out;
  if (kind == ArchiveKind::wheel) {
    for (const auto& e : entries) {
      if (e.is_directory || !archive::is_safe_member_path(e.path)) continue;
      std::string path = e.path;
      std::string first = path.substr(0, path.find('/'));
      if (first.ends_with(".dist-info")) continue;
      if (first.ends_with(".data")) {
        if (first.size() == path.size()) continue;
        std::string rest = path.substr(first.size() + 1);
        std::string scheme = rest.substr(0, rest.find('/'));
        if ((scheme != "purelib" && scheme != "platlib") || rest.size() <= scheme.size() + 1) continue;
        path = rest.substr(scheme.size() + 1);
      }
      out[path] = e.data;
    }
    return out;
  }

  // sdist: strip the single `<name>-<version>/` wrapper directory
  std::string wrapper;
  for (const auto& e : entries) {
    auto slash = e.path.find('/');
    std::string first = e.path.substr(0, slash);
    if (slash == std::string::npos && !e.is_directory) {
      wrapper.clear();
      break;
    }
    if (wrapper.empty()) {
      wrapper = first;
    } else if (first != wrapper) {
      wrapper.clear();
      break;
    }
  }
  std::map<std::string, std::string> files;
  for (const auto& e : entries) {
    if (e.is_directory || !archive::is_safe_member_path(e.path)) continue;
    std::string path = wrapper.empty() ? e.path : e.path.substr(std::min(e.path.size(), wrapper.size() + 1));
    if (!path.empty()) files[path] = e.data;
  }

  std::string prefix;
  bool has_src_packages = std::any_of(files.begin(), files.end(), [](const auto& kv) {
    const std::string& p = kv.first;
    return p.starts_with("src/") && p.ends_with("/__init__.py");
  });
  if (has_src_packages) prefix = "src/";

  std::set<std::string> package_dirs;
  for (const auto& [path, _] : files) {
    if (!path.starts_with(prefix)) continue;
    std::string rel = path.substr(prefix.size());
    auto slash = rel.find('/');
    if (slash != std::string::npos && rel.substr(slash + 1) == "__init__.py") package_dirs.insert(rel.substr(0, slash));
  }
  for (const auto& [path, data] : files) {
    if (!path.starts_with(prefix)) continue;
    std::string rel = path.substr(prefix.size());
    auto slash = rel.find('/');
    if (slash == std::string::npos) {
      if (rel.ends_with(".py") && !is_build_script(rel)) out[rel] = data;
    } else if (package_dirs.count(rel.substr(0, slash))) {
      out[rel] = data;
    }
  }
  return out;
}

fs::path fetch_and_unpack(const ReleaseRef& ref, const fs::path& cache_dir, Transport& transport) {
  fs::path version_dir = cache_dir / normalize_library_name(ref.library) / ref.version;
  if (!ref.checksum.empty()) {
    fs::path cached = version_dir / ref.checksum;
    if (fs::exists(cached)) return cached;
  }

  auto bytes = transport.get(ref.archive_url);
  if (!bytes) throw IndexUnavailable("archive not found: " + ref.archive_url);
  std::string actual = sha256_hex(*bytes);
  if (!ref.checksum.empty() && actual != ref.checksum) {
    throw ChecksumMismatch(ref.filename + ": expected sha256 " + ref.checksum + ", got " + actual);
  }
  fs::path final_dir = version_dir / actual;
  if (fs::exists(final_dir)) return final_dir;

  auto entries = archive::read_archive(ref.filename, *bytes);
  auto files = select_release_files(ref.archive_kind, entries);

  fs::create_directories(version_dir);
  fs::path tmp = version_dir / (".tmp-" + random_token());
  fs::create_directories(tmp);
  for (const auto& [path, data] : files) {
    fs::path p = tmp / path;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << data;
  }
  std::error_code ec;
  fs::rename(tmp, final_dir, ec);
  if (ec) {
    // another worker won the race
    fs::remove_all(tmp);
    if (!fs::exists(final_dir)) throw Error("cannot populate cache at " + final_dir.string() + ": " + ec.message());
  }
  return final_dir;
}

ReleaseApiSet ingest_files(const std::string& library, const std::string& version,
                           const std::map<std::string, std::string>& files) {
  std::vector<std::string> paths;
  for (const auto& [p, _] : files) paths.push_back(p);
  DirectoryTree tree = build_directory_tree(paths);

  std::vector<SourceModule> modules;
  std::vector<BankNote> failures;
  int module_count = 0;
  for (const TreeNode* node : tree.modules()) {
    ++module_count;
    auto it = files.find(node->file_path);
    if (it == files.end()) continue;  // implicit namespace directory
    try {
      SourceModule m = parse_source(py::decode_source(it->second), node->dotted, node->kind == TreeNode::Kind::package);
      m.file_path = node->file_path;
      modules.push_back(std::move(m));
    } catch (const SyntaxError& e) {
      failures.push_back({BankNote::Kind::parse_failure, node->dotted, "line " + std::to_string(e.line()) + ": " + e.detail()});
    }
  }
  int parsed_or_failed = static_cast<int>(modules.size() + failures.size());
  if (parsed_or_failed > 0 && static_cast<int>(failures.size()) * 2 > parsed_or_failed) {
    throw IngestDegraded(library + "==" + version + ": " + std::to_string(failures.size()) + " of " +
                             std::to_string(parsed_or_failed) + " modules failed to parse",
                         parsed_or_failed, static_cast<int>(failures.size()));
  }

  std::map<std::string, const SourceModule*> by_path;
  for (const auto& m : modules) by_path[m.module_path] = &m;
  ModuleLookup lookup;
  lookup.is_module = [&tree](std::string_view name) {
    const TreeNode* n = tree.find(name);
    return n != nullptr && n->kind != TreeNode::Kind::orphan_root;
  };
  lookup.public_names = [&by_path](std::string_view name) -> std::vector<std::string> {
    auto it = by_path.find(std::string(name));
    if (it == by_path.end()) return {};
    return it->second->public_names();
  };

  std::vector<ImportEdge> edges;
  std::vector<BankNote> notes;
  for (const auto& m : modules) {
    EdgeExtraction ex = extract_import_edges(m, &lookup);
    edges.insert(edges.end(), ex.edges.begin(), ex.edges.end());
    for (const auto& n : ex.notes) notes.push_back({BankNote::Kind::star_import_unresolved, n.module, n.detail});
  }

  ReleaseApiSet rel = enhance_tree(tree, compute_import_closure(edges), modules);
  rel.library = normalize_library_name(library);
  rel.version = version;
  rel.stats.modules = parsed_or_failed;
  rel.stats.parse_failures = static_cast<int>(failures.size());
  rel.notes.insert(rel.notes.end(), notes.begin(), notes.end());
  rel.notes.insert(rel.notes.end(), failures.begin(), failures.end());
  return rel;
}

ReleaseApiSet ingest_tree(const std::string& library, const std::string& version, const fs::path& root) {
  std::map<std::string, std::string> files;
  if (fs::exists(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      std::string rel = fs::relative(entry.path(), root).generic_string();
      if (rel.ends_with(".py")) files[rel] = read_file(entry.path());
    }
  }
  return ingest_files(library, version, files);
}

ReleaseApiSet ingest_release(const ReleaseRef& ref, const fs::path& cache_dir, Transport& transport) {
  return ingest_tree(ref.library, ref.version, fetch_and_unpack(ref, cache_dir, transport));
}

std::vector<IngestResult> ingest_many(const std::vector<ReleaseRef>& refs, const fs::path& cache_dir,
                                      Transport& transport, int parallelism) {
  std::vector<IngestResult> results(refs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < refs.size(); i = next++) {
      IngestResult& r = results[i];
      r.ref = refs[i];
      try {
        r.release = std::make_shared<const ReleaseApiSet>(ingest_release(refs[i], cache_dir, transport));
        r.status = IngestResult::Status::ingested;
      } catch (const std::exception& e) {
        r.status = IngestResult::Status::failed;
        r.message = e.what();
      }
    }
  };
  int n = std::clamp<int>(parallelism, 1, std::max<int>(1, static_cast<int>(refs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace envsniff
