#include "envsniff/bank_store.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "envsniff/errors.hpp"
#include "envsniff/hash.hpp"

namespace envsniff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CorruptBank("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomically(const fs::path& target, const std::string& text) {
  fs::create_directories(target.parent_path());
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string with_checksum(const std::string& body) {
  return body + json{{"checksum", sha256_hex(body)}}.dump() + "\n";
}

// Splits a stored file into its JSON lines after verifying the trailer.
std::vector<json> verified_lines(const std::string& text, const std::string& what) {
  if (text.empty() || text.back() != '\n') throw CorruptBank(what + ": truncated (no trailing newline)");
  std::size_t last_start = text.rfind('\n', text.size() - 2);
  last_start = last_start == std::string::npos ? 0 : last_start + 1;
  std::string body = text.substr(0, last_start);
  json trailer;
  try {
    trailer = json::parse(text.substr(last_start));
  } catch (const json::exception&) {
    throw CorruptBank(what + ": unreadable checksum line");
  }
  if (!trailer.is_object() || !trailer.contains("checksum")) throw CorruptBank(what + ": missing checksum line");

  std::vector<json> lines;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    try {
      lines.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw CorruptBank(what + ": malformed line: " + e.what());
    }
  }
  if (lines.empty() || !lines.front().contains("format_version")) throw CorruptBank(what + ": missing header");
  int found = lines.front().value("format_version", -1);
  if (found != kBankFormatVersion) throw UnsupportedFormat(found, kBankFormatVersion);
  if (trailer["checksum"].get<std::string>() != sha256_hex(body)) throw CorruptBank(what + ": checksum mismatch");
  return lines;
}

json signature_json(const ApiRecord& r) {
  json kw = json::array();
  for (const auto& k : r.signature.keyword) kw.push_back({k.name, k.has_default});
  return json{{"api", r.fqn},
              {"kind", to_string(r.kind)},
              {"pos", r.signature.positional},
              {"kw", kw},
              {"varargs", r.signature.var_positional},
              {"varkw", r.signature.var_keyword},
              {"open_bases", r.open_bases}};
}

std::optional<BankNote::Kind> note_kind(const std::string& s) {
  for (auto k : {BankNote::Kind::dangling_edge, BankNote::Kind::star_import_unresolved,
                 BankNote::Kind::parse_failure, BankNote::Kind::unresolved_base}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

}  // namespace

std::string serialize_release(const ReleaseApiSet& release) {
  std::string body;
  json header{{"format_version", kBankFormatVersion},
              {"record", "release"},
              {"library", release.library},
              {"version", release.version},
              {"top_level", release.top_level},
              {"stats",
               {{"modules", release.stats.modules},
                {"parse_failures", release.stats.parse_failures},
                {"skipped_constructs", release.stats.skipped_constructs}}},
              {"api_count", release.apis.size()},
              {"alias_count", release.alias_map.size()}};
  body += header.dump() + "\n";
  for (const auto& [_, rec] : release.apis) body += signature_json(rec).dump() + "\n";
  for (const auto& [alias, target] : release.alias_map) body += json{{"alias", alias}, {"target", target}}.dump() + "\n";
  for (const auto& n : release.notes) {
    body += json{{"note", to_string(n.kind)}, {"subject", n.subject}, {"detail", n.detail}}.dump() + "\n";
  }
  return with_checksum(body);
}

ReleaseApiSet deserialize_release(const std::string& text) {
  std::vector<json> lines = verified_lines(text, "release record");
  ReleaseApiSet rel;
  try {
    const json& h = lines.front();
    if (h.value("record", "") != "release") throw CorruptBank("release record: wrong record type");
    rel.library = h.at("library").get<std::string>();
    rel.version = h.at("version").get<std::string>();
    rel.top_level = h.at("top_level").get<std::vector<std::string>>();
    rel.stats.modules = h.at("stats").at("modules").get<int>();
    rel.stats.parse_failures = h.at("stats").at("parse_failures").get<int>();
    rel.stats.skipped_constructs = h.at("stats").at("skipped_constructs").get<int>();
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const json& l = lines[i];
      if (l.contains("api")) {
        ApiRecord r;
        r.fqn = l.at("api").get<std::string>();
        auto kind = def_kind_from_string(l.at("kind").get<std::string>());
        if (!kind) throw CorruptBank("release record: unknown api kind");
        r.kind = *kind;
        r.signature.positional = l.at("pos").get<std::vector<std::string>>();
        for (const auto& kw : l.at("kw")) r.signature.keyword.insert({kw.at(0).get<std::string>(), kw.at(1).get<bool>()});
        r.signature.var_positional = l.at("varargs").get<bool>();
        r.signature.var_keyword = l.at("varkw").get<bool>();
        r.open_bases = l.value("open_bases", false);
        rel.apis.emplace(r.fqn, std::move(r));
      } else if (l.contains("alias")) {
        rel.alias_map.emplace(l.at("alias").get<std::string>(), l.at("target").get<std::string>());
      } else if (l.contains("note")) {
        auto kind = note_kind(l.at("note").get<std::string>());
        if (!kind) throw CorruptBank("release record: unknown note kind");
        rel.notes.push_back({*kind, l.at("subject").get<std::string>(), l.at("detail").get<std::string>()});
      } else {
        throw CorruptBank("release record: unrecognized line " + std::to_string(i + 1));
      }
    }
    if (h.at("api_count").get<std::size_t>() != rel.apis.size() ||
        h.at("alias_count").get<std::size_t>() != rel.alias_map.size()) {
      throw CorruptBank("release record: counts disagree with header");
    }
  } catch (const json::exception& e) {
    throw CorruptBank(std::string("release record: ") + e.what());
  }
  for (const auto& [alias, target] : rel.alias_map) {
    if (!rel.apis.count(target)) throw CorruptBank("release record: alias " + alias + " targets unknown " + target);
  }
  return rel;
}

fs::path release_record_path(const fs::path& bank_dir, const std::string& library, const std::string& version) {
  return bank_dir / "releases" / normalize_library_name(library) / (version + ".apirec");
}

void save_release(const fs::path& bank_dir, const ReleaseApiSet& release) {
  write_atomically(release_record_path(bank_dir, release.library, release.version), serialize_release(release));
}

void save_index(const ApiBankIndex& index, const fs::path& bank_dir) {
  std::string body;
  json header{{"format_version", kBankFormatVersion},
              {"record", "index"},
              {"release_count", index.release_count()},
              {"api_count", index.api_count()},
              {"name_count", index.name_count()},
              {"identity", index.identity()}};
  body += header.dump() + "\n";
  for (const auto& r : index.releases()) {
    fs::path rec = release_record_path(bank_dir, r->library, r->version);
    std::string file_hash = fs::exists(rec) ? sha256_hex(read_file(rec)) : "";
    body += json{{"release", r->library},
                 {"version", r->version},
                 {"file", fs::relative(rec, bank_dir).generic_string()},
                 {"sha256", file_hash}}
                .dump() +
            "\n";
  }
  for (const auto& [top, libs] : index.top_level()) {
    body += json{{"top_level", top}, {"libraries", libs}}.dump() + "\n";
  }
  write_atomically(bank_dir / "index.jsonl", with_checksum(body));
}

void save_bank(const std::vector<std::shared_ptr<const ReleaseApiSet>>& releases, const ApiBankIndex& index,
               const fs::path& bank_dir) {
  for (const auto& r : releases) save_release(bank_dir, *r);
  save_index(index, bank_dir);
}

bool bank_exists(const fs::path& bank_dir) { return fs::exists(bank_dir / "index.jsonl"); }

LoadedBank load_bank(const fs::path& bank_dir) {
  fs::path index_path = bank_dir / "index.jsonl";
  if (!fs::exists(index_path)) throw CorruptBank("no index at " + index_path.string());
  std::vector<json> lines = verified_lines(read_file(index_path), "index");

  LoadedBank bank;
  std::map<std::string, std::set<std::string>> top_level;
  try {
    const json& h = lines.front();
    if (h.value("record", "") != "index") throw CorruptBank("index: wrong record type");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const json& l = lines[i];
      if (l.contains("release")) {
        fs::path rec = bank_dir / l.at("file").get<std::string>();
        if (!fs::exists(rec)) throw CorruptBank("index references missing record " + rec.string());
        std::string text = read_file(rec);
        if (sha256_hex(text) != l.at("sha256").get<std::string>()) {
          throw CorruptBank("record " + rec.string() + " does not match the index checksum");
        }
        auto rel = std::make_shared<ReleaseApiSet>(deserialize_release(text));
        if (rel->library != l.at("release").get<std::string>() || rel->version != l.at("version").get<std::string>()) {
          throw CorruptBank("record " + rec.string() + " holds a different release");
        }
        bank.releases.push_back(std::move(rel));
      } else if (l.contains("top_level")) {
        top_level[l.at("top_level").get<std::string>()] = l.at("libraries").get<std::set<std::string>>();
      } else {
        throw CorruptBank("index: unrecognized line " + std::to_string(i + 1));
      }
    }
    bank.index = ApiBankIndex::build(bank.releases);
    if (bank.index.release_count() != h.at("release_count").get<std::size_t>() ||
        bank.index.api_count() != h.at("api_count").get<std::size_t>() ||
        bank.index.name_count() != h.at("name_count").get<std::size_t>() ||
        bank.index.identity() != h.at("identity").get<std::string>() || bank.index.top_level() != top_level) {
      throw CorruptBank("index statistics disagree with the release records");
    }
  } catch (const json::exception& e) {
    throw CorruptBank(std::string("index: ") + e.what());
  }
  return bank;
}

std::vector<std::shared_ptr<const ReleaseApiSet>> scan_release_records(const fs::path& bank_dir) {
  std::vector<std::shared_ptr<const ReleaseApiSet>> out;
  fs::path root = bank_dir / "releases";
  if (!fs::exists(root)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".apirec") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(std::make_shared<ReleaseApiSet>(deserialize_release(read_file(f))));
  return out;
}

}  // namespace envsniff
