#include "premsel/pipeline/manifest.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "premsel/error.hpp"
#include "premsel/hash.hpp"
#include "premsel/nn/bytes.hpp"

namespace premsel::pipeline {

namespace fs = std::filesystem;

std::string StageManifest::to_json() const {
  nlohmann::ordered_json j;
  j["stage"] = stage;
  j["config_hash"] = to_hex(config_hash);
  auto& in = j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [path, h] : inputs) in[path] = to_hex(h);
  auto& out = j["outputs"] = nlohmann::ordered_json::object();
  for (const auto& [path, h] : outputs) out[path] = to_hex(h);
  j["completed_at"] = completed_at;
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

StageManifest StageManifest::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = parse_hex(j.at("config_hash").get<std::string>());
    for (const auto& [path, h] : j.at("inputs").items()) m.inputs[path] = parse_hex(h.get<std::string>());
    for (const auto& [path, h] : j.at("outputs").items()) m.outputs[path] = parse_hex(h.get<std::string>());
    m.completed_at = j.at("completed_at").get<std::int64_t>();
    m.summary = j.value("summary", std::string());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ChecksumMismatch, std::string("malformed stage manifest: ") + e.what());
  }
}

std::optional<StageManifest> StageManifest::read(const fs::path& file) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(buf.str());
  } catch (const Error&) {
    return std::nullopt;  // unreadable manifest: treat the stage as not run
  }
}

void StageManifest::write(const fs::path& file) const {
  const auto text = to_json();
  nn::write_file(file, std::as_bytes(std::span(text.data(), text.size())));
}

std::map<std::string, std::uint64_t> hash_inputs(const fs::path& root, const std::vector<std::string>& paths,
                                                 const std::string& upstream) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& p : paths) {
    if (!fs::exists(root / p)) {
      throw Error(ErrorCode::UpstreamMissing, p + " not found; run '" + upstream + "' first");
    }
    out[p] = hash_file(root / p);
  }
  return out;
}

bool is_current(const std::optional<StageManifest>& manifest, const fs::path& root, std::uint64_t config_hash,
                const std::map<std::string, std::uint64_t>& inputs) {
  if (!manifest || manifest->config_hash != config_hash || manifest->inputs != inputs) return false;
  for (const auto& [path, h] : manifest->outputs) {
    if (!fs::exists(root / path) || hash_file(root / path) != h) return false;
  }
  return true;
}

WorkDirLock::WorkDirLock(const fs::path& work_dir) : file_(work_dir / ".lock") {
  fs::create_directories(work_dir);
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::WorkDirLocked,
                file_.string() + " exists; another run owns this work directory (remove it if stale)");
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

WorkDirLock::~WorkDirLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

}  // namespace premsel::pipeline
