#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "premsel/classifier.hpp"

namespace premsel::pipeline {

/// Flat key=value settings with dotted section keys (embed.epochs=150).
/// Precedence, lowest first: defaults, config file, environment, command line.
class PipelineConfig {
 public:
  PipelineConfig();

  /// Lines are "key = value"; blank lines and lines starting with '#' are ignored.
  /// Throws Error(ConfigError) on malformed lines or unknown keys.
  void merge_text(std::string_view text);
  void merge_file(const std::filesystem::path& path);
  /// PREMSEL_WORK_DIR and PREMSEL_SEED.
  void merge_environment();
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// FNV-1a over "key=value\n" for the given keys, in sorted order.
  std::uint64_t hash_keys(std::span<const std::string> keys) const;

  // Typed views; each throws Error(ConfigError) on an unparsable value.
  std::filesystem::path work_dir() const;
  std::uint64_t seed() const;
  bool deterministic() const;
  bool autoencoder_mode() const;
  std::size_t jobs() const;
  std::size_t embed_n_prime() const;
  std::size_t embed_epochs() const;
  std::size_t embed_batch() const;
  bool embed_summed() const;
  double test_fraction() const;
  std::vector<ClassifierSpec> classifier_specs(std::size_t input_dim) const;
  ClassifierTrainOptions classifier_options() const;
  /// classifier.* settings with grid.protocol / grid.epochs in place of the classifier ones.
  ClassifierTrainOptions grid_options() const;
  float classifier_dropout() const;
  double report_tolerance() const;

  /// Parses every typed key once so bad values surface before any stage runs.
  void validate() const;

 private:
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

}  // namespace premsel::pipeline
