#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "premsel/error.hpp"
#include "premsel/pipeline/config.hpp"
#include "premsel/pipeline/manifest.hpp"

namespace premsel::pipeline {

struct StageResult {
  std::string stage;
  bool skipped = false;
  std::string summary;
};

/// Work-directory layout: raw/ vocab/ context/ embeddings/ pairs/ models/ reports/,
/// one manifest per stage. Each stage re-runs only when its inputs or the
/// config keys it reads have changed.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const noexcept { return config_; }
  const std::filesystem::path& work_dir() const noexcept { return root_; }

  StageResult fetch();
  StageResult extract();
  StageResult context();
  StageResult embed();
  StageResult pairs();
  StageResult train();
  StageResult eval();
  StageResult grid();
  StageResult report();

  /// fetch, extract, context, embed, pairs, train, eval, report.
  std::vector<StageResult> run_all();

 private:
  struct StageOutput {
    std::vector<std::string> outputs;
    std::string summary;
  };

  StageResult run_stage(const std::string& name, const std::string& manifest_path,
                        const std::vector<std::string>& config_keys, std::map<std::string, std::uint64_t> inputs,
                        const std::function<StageOutput()>& body);

  std::filesystem::path path(const std::string& relative) const { return root_ / relative; }

  PipelineConfig config_;
  std::filesystem::path root_;
};

/// Process exit status: 2 config errors, 3 data errors, 4 compute errors.
int exit_code(ErrorCode code) noexcept;

}  // namespace premsel::pipeline
