#include "fixture_index.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "envsniff/hash.hpp"
#include "fixtures.hpp"

namespace fixtures {

FixtureIndex::FixtureIndex() : server_(std::make_unique<httplib::Server>()) {}

FixtureIndex::~FixtureIndex() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void FixtureIndex::add(const std::string& library, const std::string& version, IndexArtifact artifact) {
  files_[artifact.filename] = artifact.bytes;
  libs_[library][version].push_back(std::move(artifact));
}

std::string FixtureIndex::metadata(const std::string& library) const {
  auto it = libs_.find(library);
  nlohmann::json doc{{"info", {{"name", library}}}, {"releases", nlohmann::json::object()}};
  for (const auto& [version, artifacts] : it->second) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& a : artifacts) {
      std::string digest = a.sha256_override.empty() ? envsniff::sha256_hex(a.bytes) : a.sha256_override;
      files.push_back({{"filename", a.filename},
                       {"url", "/files/" + a.filename},
                       {"packagetype", a.packagetype},
                       {"digests", {{"sha256", digest}}},
                       {"yanked", a.yanked}});
    }
    doc["releases"][version] = files;
  }
  return doc.dump();
}

void FixtureIndex::start() {
  server_->Get(R"(/pypi/([^/]+)/json)", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    std::string name = req.matches[1];
    if (!libs_.count(name)) {
      res.status = 404;
      return;
    }
    res.set_content(metadata(name), "application/json");
  });
  server_->Get(R"(/files/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    auto it = files_.find(req.matches[1]);
    if (it == files_.end()) {
      res.status = 404;
      return;
    }
    res.set_content(it->second, "application/octet-stream");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

std::string FixtureIndex::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::optional<std::string> MapTransport::get(const std::string& url) {
  ++calls;
  auto it = bodies.find(url);
  if (it == bodies.end()) return std::nullopt;
  return it->second;
}

void add_toylib_releases(FixtureIndex& index, int last_major) {
  for (int v = 1; v <= last_major; ++v) {
    std::string ver = toylib_version(v);
    index.add("toylib", ver, {wheel_filename("toylib", ver), make_wheel("toylib", ver, toylib_files(v)), "bdist_wheel", false, ""});
  }
  index.add("toylib", "3.1", {"toylib-3.1-py3.6.egg", "not really an egg", "bdist_egg", false, ""});
}

}  // namespace fixtures
