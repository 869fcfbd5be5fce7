#include "premsel/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "premsel/error.hpp"
#include "premsel/hash.hpp"

namespace premsel::pipeline {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorCode::ConfigError, key + " = '" + value + "': expected " + expected);
}

}  // namespace

PipelineConfig::PipelineConfig()
    : values_{
          {"data_url", ""},
          {"data_path", ""},
          {"data_hash", ""},
          {"work_dir", "work"},
          {"seed", "0"},
          {"deterministic", "false"},
          {"autoencoder_mode", "false"},
          {"jobs", "1"},
          {"embed.n_prime", "256"},
          {"embed.epochs", "150"},
          {"embed.batch", "4096"},
          {"embed.variant", "composed"},
          {"pairs.test_fraction", "0.1"},
          {"classifier.specs", "64x64,256x256,512x128,1024x1024"},
          {"classifier.protocol", "final"},
          {"classifier.epochs", ""},
          {"classifier.batch", "4096"},
          {"classifier.dropout", "0.5"},
          {"classifier.learning_rate", "0.0001"},
          {"grid.protocol", "dev"},
          {"grid.epochs", ""},
          {"report.tolerance", "0.025"},
      } {}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  it->second = value;
}

const std::string& PipelineConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  return it->second;
}

void PipelineConfig::merge_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
  }
}

void PipelineConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str());
}

void PipelineConfig::merge_environment() {
  if (const char* dir = std::getenv("PREMSEL_WORK_DIR"); dir != nullptr && *dir != '\0') set("work_dir", dir);
  if (const char* seed = std::getenv("PREMSEL_SEED"); seed != nullptr && *seed != '\0') set("seed", seed);
}

std::uint64_t PipelineConfig::hash_keys(std::span<const std::string> keys) const {
  std::vector<std::string> sorted(keys.begin(), keys.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = kFnvOffset;
  for (const auto& key : sorted) h = fnv1a(key + "=" + get(key) + "\n", h);
  return h;
}

std::size_t PipelineConfig::get_size(const std::string& key) const {
  const auto& v = get(key);
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double PipelineConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "a number");
}

bool PipelineConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::filesystem::path PipelineConfig::work_dir() const {
  const auto& v = get("work_dir");
  if (v.empty()) bad_value("work_dir", v, "a directory path");
  return v;
}

std::uint64_t PipelineConfig::seed() const {
  const auto& v = get("seed");
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value("seed", v, "a 64-bit unsigned integer");
  return out;
}

bool PipelineConfig::deterministic() const { return get_bool("deterministic"); }
bool PipelineConfig::autoencoder_mode() const { return get_bool("autoencoder_mode"); }

std::size_t PipelineConfig::jobs() const {
  const auto jobs = get_size("jobs");
  if (jobs == 0) bad_value("jobs", get("jobs"), "at least 1");
  return jobs;
}

std::size_t PipelineConfig::embed_n_prime() const {
  const auto n = get_size("embed.n_prime");
  if (n == 0) bad_value("embed.n_prime", get("embed.n_prime"), "at least 1");
  return n;
}

std::size_t PipelineConfig::embed_epochs() const { return get_size("embed.epochs"); }

std::size_t PipelineConfig::embed_batch() const {
  const auto n = get_size("embed.batch");
  if (n == 0) bad_value("embed.batch", get("embed.batch"), "at least 1");
  return n;
}

bool PipelineConfig::embed_summed() const {
  const auto& v = get("embed.variant");
  if (v == "composed") return false;
  if (v == "summed") return true;
  bad_value("embed.variant", v, "composed or summed");
}

double PipelineConfig::test_fraction() const {
  const double f = get_double("pairs.test_fraction");
  if (!(f > 0.0 && f < 1.0)) bad_value("pairs.test_fraction", get("pairs.test_fraction"), "a value in (0, 1)");
  return f;
}

float PipelineConfig::classifier_dropout() const {
  const double d = get_double("classifier.dropout");
  if (!(d >= 0.0 && d < 1.0)) bad_value("classifier.dropout", get("classifier.dropout"), "a value in [0, 1)");
  return static_cast<float>(d);
}

std::vector<ClassifierSpec> PipelineConfig::classifier_specs(std::size_t input_dim) const {
  std::vector<ClassifierSpec> specs;
  std::string_view rest = get("classifier.specs");
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) {
      try {
        specs.push_back(parse_spec(item, input_dim, classifier_dropout()));
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, std::string("classifier.specs: ") + e.what());
      }
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (specs.empty()) bad_value("classifier.specs", get("classifier.specs"), "a comma-separated list like 64x64");
  return specs;
}

ClassifierTrainOptions PipelineConfig::classifier_options() const {
  ClassifierTrainOptions o;
  o.protocol = parse_protocol(get("classifier.protocol"));
  if (!get("classifier.epochs").empty()) o.epochs = get_size("classifier.epochs");
  o.batch_size = get_size("classifier.batch");
  if (o.batch_size == 0) bad_value("classifier.batch", get("classifier.batch"), "at least 1");
  o.learning_rate = get_double("classifier.learning_rate");
  o.deterministic = deterministic();
  return o;
}

ClassifierTrainOptions PipelineConfig::grid_options() const {
  auto o = classifier_options();
  o.protocol = parse_protocol(get("grid.protocol"));
  o.epochs.reset();
  if (!get("grid.epochs").empty()) o.epochs = get_size("grid.epochs");
  return o;
}

double PipelineConfig::report_tolerance() const { return get_double("report.tolerance"); }

void PipelineConfig::validate() const {
  (void)work_dir();
  (void)seed();
  (void)deterministic();
  (void)autoencoder_mode();
  (void)jobs();
  (void)embed_n_prime();
  (void)embed_epochs();
  (void)embed_batch();
  (void)embed_summed();
  (void)test_fraction();
  (void)classifier_specs(512);
  (void)classifier_options();
  (void)grid_options();
  (void)report_tolerance();
  if (!get("data_hash").empty()) {
    try {
      (void)parse_hex(get("data_hash"));
    } catch (const Error&) {
      bad_value("data_hash", get("data_hash"), "a 16-digit hex FNV-1a hash");
    }
  }
}

}  // namespace premsel::pipeline
