#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace premsel::pipeline {

/// Record of one completed stage. Paths are relative to the work directory.
struct StageManifest {
  std::string stage;
  std::uint64_t config_hash = 0;
  std::map<std::string, std::uint64_t> inputs;
  std::map<std::string, std::uint64_t> outputs;
  std::int64_t completed_at = 0;  // unix seconds; 0 in deterministic mode
  std::string summary;

  std::string to_json() const;
  static StageManifest from_json(const std::string& text);

  static std::optional<StageManifest> read(const std::filesystem::path& file);
  void write(const std::filesystem::path& file) const;
};

/// Hashes each path (relative to `root`); throws Error(UpstreamMissing) naming
/// `upstream` when one is absent.
std::map<std::string, std::uint64_t> hash_inputs(const std::filesystem::path& root,
                                                 const std::vector<std::string>& paths,
                                                 const std::string& upstream);

/// A stage is current iff its manifest exists, config and input hashes are
/// unchanged, and every recorded output still has its recorded hash.
bool is_current(const std::optional<StageManifest>& manifest, const std::filesystem::path& root,
                std::uint64_t config_hash, const std::map<std::string, std::uint64_t>& inputs);

/// Exclusive lock on a work directory, released on destruction.
/// Throws Error(WorkDirLocked) if another invocation holds it.
class WorkDirLock {
 public:
  explicit WorkDirLock(const std::filesystem::path& work_dir);
  ~WorkDirLock();
  WorkDirLock(const WorkDirLock&) = delete;
  WorkDirLock& operator=(const WorkDirLock&) = delete;

 private:
  std::filesystem::path file_;
};

}  // namespace premsel::pipeline
