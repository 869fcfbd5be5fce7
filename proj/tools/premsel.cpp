// premsel: staged premise-selection pipeline.
//   premsel [--config FILE] [--work-dir DIR] [--seed N] [--deterministic] [--jobs N] [--set key=value]... VERB

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "premsel/error.hpp"
#include "premsel/pipeline/config.hpp"
#include "premsel/pipeline/manifest.hpp"
#include "premsel/pipeline/stages.hpp"

namespace {

using premsel::pipeline::Pipeline;
using premsel::pipeline::StageResult;

void print(const StageResult& r) {
  std::cout << r.summary << (r.skipped ? "  [up to date]" : "") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Premise selection from embedded functional signatures"};
  app.require_subcommand(1, 1);
  // Global options may also follow the verb.
  app.fallthrough();

  std::string config_file;
  std::string work_dir;
  std::string seed;
  bool deterministic = false;
  std::string jobs;
  std::vector<std::string> overrides;
  app.add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--work-dir", work_dir, "artifact directory (env PREMSEL_WORK_DIR)");
  app.add_option("--seed", seed, "64-bit seed (env PREMSEL_SEED)");
  app.add_flag("--deterministic", deterministic, "byte-reproducible artifacts");
  app.add_option("--jobs", jobs, "parallel grid cells");
  app.add_option("--set", overrides, "override a config key, key=value")->take_all();

  const std::vector<std::pair<std::string, std::string>> verbs{
      {"fetch", "copy or download the dataset"},
      {"extract", "parse formulae, build vocabulary and signatures"},
      {"context", "compute functor context distributions"},
      {"embed", "train the context model and embed every formula"},
      {"pairs", "build, split and standardize (conjecture, axiom) pairs"},
      {"train", "train the configured classifiers"},
      {"eval", "evaluate trained classifiers on the test split"},
      {"grid", "train and evaluate every architecture in the grid"},
      {"report", "tabulate all evaluation results"},
      {"all", "fetch through report"},
  };
  for (const auto& [name, help] : verbs) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string verb = app.get_subcommands().front()->get_name();

  try {
    premsel::pipeline::PipelineConfig config;
    if (!config_file.empty()) config.merge_file(config_file);
    config.merge_environment();
    if (!work_dir.empty()) config.set("work_dir", work_dir);
    if (!seed.empty()) config.set("seed", seed);
    if (deterministic) config.set("deterministic", "true");
    if (!jobs.empty()) config.set("jobs", jobs);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw premsel::Error(premsel::ErrorCode::ConfigError, "--set expects key=value");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    config.validate();

    std::filesystem::create_directories(config.work_dir());
    premsel::pipeline::WorkDirLock lock(config.work_dir());
    Pipeline pipeline(config);

    if (verb == "all") {
      for (const auto& r : pipeline.run_all()) print(r);
    } else if (verb == "fetch") {
      print(pipeline.fetch());
    } else if (verb == "extract") {
      print(pipeline.extract());
    } else if (verb == "context") {
      print(pipeline.context());
    } else if (verb == "embed") {
      print(pipeline.embed());
    } else if (verb == "pairs") {
      print(pipeline.pairs());
    } else if (verb == "train") {
      print(pipeline.train());
    } else if (verb == "eval") {
      print(pipeline.eval());
    } else if (verb == "grid") {
      print(pipeline.grid());
    } else if (verb == "report") {
      print(pipeline.report());
    }
    return 0;
  } catch (const premsel::Error& e) {
    std::cerr << "premsel " << verb << ": " << e.what() << "\n";
    return premsel::pipeline::exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "premsel " << verb << ": IoFailure: " << e.what() << "\n";
    return 3;
  }
}
