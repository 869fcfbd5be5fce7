#include "premsel/pipeline/stages.hpp"

#include <curl/curl.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "premsel/classifier.hpp"
#include "premsel/embedding.hpp"
#include "premsel/error.hpp"
#include "premsel/hash.hpp"
#include "premsel/nn/bytes.hpp"
#include "premsel/nn/container.hpp"
#include "premsel/nn/serialize.hpp"
#include "premsel/pairs.hpp"
#include "premsel/random.hpp"
#include "premsel/signatures.hpp"
#include "premsel/tptp.hpp"

namespace premsel::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kDataset = "raw/dataset.txt";
constexpr const char* kVocab = "vocab/vocab.txt";
constexpr const char* kSignatures = "vocab/signatures.pstc";
constexpr const char* kFormulae = "vocab/formulae.manifest";
constexpr const char* kStats = "vocab/stats.json";
constexpr const char* kContext = "context/context.pstc";
constexpr const char* kContextModel = "models/context.psnn";
constexpr const char* kEmbeddings = "embeddings/embeddings.pstc";
constexpr const char* kEmbeddingManifest = "embeddings/manifest.txt";
constexpr const char* kEmbeddingHistory = "embeddings/history.jsonl";
constexpr const char* kTrainPairs = "pairs/train.pstc";
constexpr const char* kTestPairs = "pairs/test.pstc";
constexpr const char* kStandardizer = "pairs/standardizer.pstc";
constexpr const char* kReportText = "reports/report.txt";
constexpr const char* kReportJson = "reports/report.json";

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

void write_text(const fs::path& file, const std::string& text) {
  const auto* p = reinterpret_cast<const std::byte*>(text.data());
  nn::write_file(file, std::span<const std::byte>(p, text.size()));
}

std::string read_text(const fs::path& file) {
  const auto bytes = nn::read_file(file);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::istringstream in(read_text(file));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void write_history(const fs::path& file, const nn::TrainingHistory& history) {
  std::string text;
  for (const auto& record : history) text += nn::to_json_line(record) + "\n";
  write_text(file, text);
}

std::vector<RawExampleBlock> load_dataset(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + file.string());
  return parse_dataset_stream(in);
}

FunctorVocab load_vocab(const fs::path& file) { return FunctorVocab(read_lines(file)); }

// CSR: offsets (rows + 1), indices, counts.
void save_signatures(const std::vector<SparseSignature>& sigs, const fs::path& file) {
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<std::uint32_t> counts;
  for (const auto& sig : sigs) {
    for (const auto& e : sig.entries) {
      indices.push_back(e.index);
      counts.push_back(e.count);
    }
    offsets.push_back(indices.size());
  }
  nn::TensorContainer c;
  c.put_vector("offsets", std::move(offsets));
  c.put_vector("indices", std::move(indices));
  c.put_vector("counts", std::move(counts));
  c.save(file);
}

std::vector<SparseSignature> load_signatures(const fs::path& file) {
  const auto c = nn::TensorContainer::load(file);
  const auto& offsets = c.get<std::uint64_t>("offsets");
  const auto& indices = c.get<std::uint32_t>("indices");
  const auto& counts = c.get<std::uint32_t>("counts");
  if (offsets.empty() || indices.size() != counts.size() || offsets.back() != indices.size()) {
    throw Error(ErrorCode::ShapeMismatch, file.string() + ": inconsistent signature offsets");
  }
  std::vector<SparseSignature> sigs(offsets.size() - 1);
  for (std::size_t r = 0; r + 1 < offsets.size(); ++r) {
    if (offsets[r] > offsets[r + 1]) throw Error(ErrorCode::ShapeMismatch, file.string() + ": offsets not sorted");
    for (auto k = offsets[r]; k < offsets[r + 1]; ++k) sigs[r].entries.push_back({indices[k], counts[k]});
  }
  return sigs;
}

void save_context(const ContextMatrix& contexts, const fs::path& file) {
  const auto& m = contexts.storage();
  const auto nnz = static_cast<std::size_t>(m.nonZeros());
  std::vector<std::int64_t> offsets(m.outerIndexPtr(), m.outerIndexPtr() + m.rows() + 1);
  std::vector<std::uint32_t> indices(m.innerIndexPtr(), m.innerIndexPtr() + nnz);
  std::vector<double> values(m.valuePtr(), m.valuePtr() + nnz);
  nn::TensorContainer c;
  c.put_vector("offsets", std::move(offsets));
  c.put_vector("indices", std::move(indices));
  c.put_vector("values", std::move(values));
  c.put_vector("shape", std::vector<std::uint64_t>{static_cast<std::uint64_t>(m.rows()),
                                                   static_cast<std::uint64_t>(m.cols())});
  c.save(file);
}

ContextMatrix load_context(const fs::path& file) {
  const auto c = nn::TensorContainer::load(file);
  const auto& offsets = c.get<std::int64_t>("offsets");
  const auto& indices = c.get<std::uint32_t>("indices");
  const auto& values = c.get<double>("values");
  const auto& shape = c.get<std::uint64_t>("shape");
  if (shape.size() != 2 || offsets.size() != shape[0] + 1 || indices.size() != values.size() ||
      offsets.back() != static_cast<std::int64_t>(values.size())) {
    throw Error(ErrorCode::ShapeMismatch, file.string() + ": inconsistent context matrix");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values.size());
  for (std::size_t r = 0; r < shape[0]; ++r) {
    for (auto k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (indices[k] >= shape[1]) throw Error(ErrorCode::IndexOutOfRange, file.string() + ": column out of range");
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(indices[k]), values[k]);
    }
  }
  ContextMatrix::Storage m(static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return ContextMatrix(std::move(m));
}

PairSet load_pairs(const fs::path& file) { return PairSet::from_container(nn::TensorContainer::load(file)); }

std::size_t write_curl(char* data, std::size_t size, std::size_t count, void* user) {
  auto* out = static_cast<std::ofstream*>(user);
  out->write(data, static_cast<std::streamsize>(size * count));
  return out->good() ? size * count : 0;
}

void download(const std::string& url, const fs::path& target) {
  static std::once_flag init;
  std::call_once(init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
  const auto tmp = fs::path(target.string() + ".part");
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
  CURL* curl = curl_easy_init();
  if (curl == nullptr) throw Error(ErrorCode::NetworkFailure, "curl initialisation failed");
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, &write_curl);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &out);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  out.close();
  if (rc != CURLE_OK) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw Error(ErrorCode::NetworkFailure, "download of " + url + " failed: " + curl_easy_strerror(rc));
  }
  fs::rename(tmp, target);
}

struct Reference {
  double loss;
  double accuracy;
  std::optional<double> fn_rate;
};

// Published (h1, h2) results: development grid and the final retraining.
std::optional<Reference> reference_for(const std::string& protocol, std::size_t h1, std::size_t h2) {
  struct Row {
    std::size_t h1, h2;
    Reference ref;
  };
  static const Row dev[] = {
      {64, 64, {0.5418, 0.7221, {}}},     {128, 64, {0.5295, 0.7275, {}}},   {256, 64, {0.5173, 0.7352, {}}},
      {512, 64, {0.5292, 0.7457, {}}},    {1024, 64, {0.5687, 0.7519, {}}},  {128, 128, {0.5315, 0.7294, {}}},
      {256, 128, {0.5158, 0.7373, {}}},   {512, 128, {0.5224, 0.7449, {}}},  {1024, 128, {0.5523, 0.7547, {}}},
      {256, 256, {0.5195, 0.7363, {}}},   {512, 256, {0.5135, 0.7419, {}}},  {1024, 256, {0.5347, 0.7532, {}}},
      {512, 512, {0.5095, 0.7458, {}}},   {1024, 512, {0.5166, 0.7534, {}}}, {1024, 1024, {0.5024, 0.7576, {}}},
  };
  static const Row final_rows[] = {
      {64, 64, {0.5385, 0.7214, 0.135}},
      {256, 256, {0.5194, 0.7374, 0.1235}},
      {512, 128, {0.5127, 0.7473, 0.0932}},
      {1024, 1024, {0.4895, 0.7645, 0.110}},
  };
  const std::span<const Row> rows = protocol == "dev" ? std::span<const Row>(dev) : std::span<const Row>(final_rows);
  for (const auto& r : rows) {
    if (r.h1 == h1 && r.h2 == h2) return r.ref;
  }
  return std::nullopt;
}

std::vector<std::string> sorted_files(const fs::path& dir, const std::string& prefix, const std::string& suffix) {
  std::vector<std::string> names;
  if (!fs::is_directory(dir)) return names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > prefix.size() + suffix.size() && name.starts_with(prefix) &&
        name.ends_with(suffix)) {
      names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string metrics_summary(const std::string& name, const EvalReport& r) {
  return name + " loss " + fmt("%.4f", r.loss) + " accuracy " + fmt("%.4f", r.accuracy) + " fn_rate_pos " +
         fmt("%.4f", r.fn_rate_pos);
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), root_(config_.work_dir()) {
  config_.validate();
  for (const char* dir : {"raw", "vocab", "context", "embeddings", "pairs", "models", "reports"}) {
    fs::create_directories(root_ / dir);
  }
}

StageResult Pipeline::run_stage(const std::string& name, const std::string& manifest_path,
                                const std::vector<std::string>& config_keys,
                                std::map<std::string, std::uint64_t> inputs,
                                const std::function<StageOutput()>& body) {
  const auto manifest_file = path(manifest_path);
  const auto config_hash = config_.hash_keys(config_keys);
  const auto existing = StageManifest::read(manifest_file);
  if (is_current(existing, root_, config_hash, inputs)) return {name, true, existing->summary};

  StageOutput out;
  try {
    out = body();
  } catch (const Error& e) {
    throw Error(e.code(), name + ": " + e.message());
  }
  StageManifest m;
  m.stage = name;
  m.config_hash = config_hash;
  m.inputs = std::move(inputs);
  m.outputs = hash_inputs(root_, out.outputs, name);
  m.completed_at = config_.deterministic() ? 0 : static_cast<std::int64_t>(std::time(nullptr));
  m.summary = out.summary;
  m.write(manifest_file);
  return {name, false, out.summary};
}

StageResult Pipeline::fetch() {
  const auto& url = config_.get("data_url");
  const auto& local = config_.get("data_path");
  if (url.empty() && local.empty()) throw Error(ErrorCode::ConfigError, "fetch: set data_url or data_path");

  std::optional<fs::path> source;
  if (url.empty()) {
    source = fs::path(local);
  } else if (url.starts_with("file://")) {
    source = fs::path(url.substr(7));
  }
  std::map<std::string, std::uint64_t> inputs;
  if (source) {
    if (!fs::is_regular_file(*source)) throw Error(ErrorCode::IoFailure, "fetch: no such file " + source->string());
    inputs["source"] = hash_file(*source);
  }
  const auto& expected = config_.get("data_hash");

  return run_stage("fetch", "raw/fetch.manifest.json", {"data_url", "data_path", "data_hash"}, inputs, [&] {
    const auto target = path(kDataset);
    const bool cached_ok = !source && !expected.empty() && fs::is_regular_file(target) &&
                           hash_file(target) == parse_hex(expected);
    if (source) {
      fs::copy_file(*source, target, fs::copy_options::overwrite_existing);
    } else if (!cached_ok) {
      download(url, target);
    }
    const auto actual = hash_file(target);
    if (!expected.empty() && actual != parse_hex(expected)) {
      throw Error(ErrorCode::HashMismatch,
                  "dataset hash " + to_hex(actual) + " differs from configured data_hash " + expected);
    }
    return StageOutput{{kDataset},
                       "fetch: " + std::to_string(fs::file_size(target)) + " bytes, hash " + to_hex(actual)};
  });
}

StageResult Pipeline::extract() {
  auto inputs = hash_inputs(root_, {kDataset}, "fetch");
  return run_stage("extract", "vocab/extract.manifest.json", {}, inputs, [&] {
    const auto blocks = load_dataset(path(kDataset));
    const auto stats = corpus_statistics(blocks);
    const auto formulae = unique_formulae(blocks);

    std::vector<FunctorCounts> counts;
    counts.reserve(formulae.size());
    for (const auto& f : formulae) counts.push_back(extract_functors(f));
    const auto vocab = build_vocab(counts);
    std::vector<SparseSignature> sigs;
    sigs.reserve(counts.size());
    for (const auto& c : counts) sigs.push_back(signature_of(c, vocab));

    std::string vocab_text;
    for (const auto& s : vocab.symbols()) vocab_text += s + "\n";
    write_text(path(kVocab), vocab_text);
    save_signatures(sigs, path(kSignatures));
    std::string manifest;
    for (const auto& f : formulae) manifest += to_hex(fnv1a(f)) + "\n";
    write_text(path(kFormulae), manifest);

    json j;
    j["blocks"] = stats.blocks;
    j["unique_formulae"] = stats.unique_formulae;
    j["unique_conjectures"] = stats.unique_conjectures;
    j["unique_axioms"] = stats.unique_axioms;
    j["pairs"] = stats.pairs;
    j["positives"] = stats.positives;
    j["negatives"] = stats.negatives;
    j["min_axioms"] = stats.min_axioms;
    j["max_axioms"] = stats.max_axioms;
    j["mean_axioms"] = stats.mean_axioms;
    j["vocabulary"] = vocab.size();
    write_text(path(kStats), j.dump(2) + "\n");

    return StageOutput{{kVocab, kSignatures, kFormulae, kStats},
                       "extract: " + std::to_string(stats.blocks) + " conjectures, " +
                           std::to_string(stats.unique_formulae) + " unique formulae, " +
                           std::to_string(stats.pairs) + " pairs, vocabulary " + std::to_string(vocab.size())};
  });
}

StageResult Pipeline::context() {
  auto inputs = hash_inputs(root_, {kVocab, kSignatures}, "extract");
  return run_stage("context", "context/context.manifest.json", {}, inputs, [&] {
    const auto vocab = load_vocab(path(kVocab));
    const auto sigs = load_signatures(path(kSignatures));
    const auto contexts = context_matrix(sigs, vocab);
    save_context(contexts, path(kContext));
    return StageOutput{{kContext}, "context: " + std::to_string(contexts.size()) + " distributions, " +
                                       std::to_string(contexts.storage().nonZeros()) + " non-zeros"};
  });
}

StageResult Pipeline::embed() {
  const bool autoencoder = config_.autoencoder_mode();
  auto inputs = hash_inputs(root_, {kVocab, kSignatures, kFormulae}, "extract");
  if (!autoencoder) inputs.merge(hash_inputs(root_, {kContext}, "context"));
  const std::vector<std::string> keys{"seed",         "deterministic", "autoencoder_mode", "embed.n_prime",
                                      "embed.epochs", "embed.batch",   "embed.variant"};
  return run_stage("embed", "embeddings/embed.manifest.json", keys, inputs, [&] {
    const auto vocab = load_vocab(path(kVocab));
    const auto sigs = load_signatures(path(kSignatures));
    std::vector<std::uint64_t> hashes;
    for (const auto& line : read_lines(path(kFormulae))) hashes.push_back(parse_hex(line));
    if (hashes.size() != sigs.size()) {
      throw Error(ErrorCode::ShapeMismatch, "formula manifest and signatures disagree in length");
    }

    EmbeddingOptions opts;
    opts.n_prime = config_.embed_n_prime();
    opts.epochs = config_.embed_epochs();
    opts.batch_size = config_.embed_batch();
    opts.deterministic = config_.deterministic();
    Rng rng(derive_seed(config_.seed(), "embed"));

    TrainedModel trained = [&] {
      if (!autoencoder) return train_context_model(load_context(path(kContext)), opts, rng);
      std::vector<SparseSignature> nonempty;
      std::copy_if(sigs.begin(), sigs.end(), std::back_inserter(nonempty),
                   [](const SparseSignature& s) { return !s.empty(); });
      return train_autoencoder(nonempty, vocab.size(), opts, rng);
    }();

    const auto variant = config_.embed_summed() ? EmbeddingVariant::Summed : EmbeddingVariant::Composed;
    EmbeddingCache cache(embed_all(trained.model, sigs, variant), std::move(hashes));
    nn::save_model(trained.model.net, path(kContextModel));
    cache.save(path(kEmbeddings), path(kEmbeddingManifest));
    write_history(path(kEmbeddingHistory), trained.history);

    std::string summary = "embed: " + std::to_string(vocab.size()) + " functors -> " +
                          std::to_string(opts.n_prime) + " dims, " + std::to_string(cache.size()) + " formulae";
    if (!trained.history.empty()) {
      summary += ", final loss " + fmt("%.4f", trained.history.back().loss) + " accuracy " +
                 fmt("%.4f", trained.history.back().accuracy);
    }
    return StageOutput{{kContextModel, kEmbeddings, kEmbeddingManifest, kEmbeddingHistory}, summary};
  });
}

StageResult Pipeline::pairs() {
  auto inputs = hash_inputs(root_, {kDataset}, "fetch");
  inputs.merge(hash_inputs(root_, {kEmbeddings, kEmbeddingManifest}, "embed"));
  return run_stage("pairs", "pairs/pairs.manifest.json", {"seed", "pairs.test_fraction"}, inputs, [&] {
    const auto blocks = load_dataset(path(kDataset));
    const auto cache = EmbeddingCache::load(path(kEmbeddings), path(kEmbeddingManifest));
    const auto all = build_pairs(blocks, cache);
    Rng rng(derive_seed(config_.seed(), "pairs"));
    auto [train, test] = split(all, config_.test_fraction(), rng);
    const auto stats = fit_standardizer(train.features);
    train.features = apply_standardizer(stats, train.features);
    test.features = apply_standardizer(stats, test.features);
    train.to_container().save(path(kTrainPairs));
    test.to_container().save(path(kTestPairs));
    stats.to_container().save(path(kStandardizer));
    const auto positives = static_cast<std::size_t>(all.labels.sum());
    return StageOutput{{kTrainPairs, kTestPairs, kStandardizer},
                       "pairs: " + std::to_string(all.size()) + " pairs (" + std::to_string(positives) +
                           " positive), train " + std::to_string(train.size()) + " / test " +
                           std::to_string(test.size()) + ", " + std::to_string(all.features.cols()) + " features"};
  });
}

namespace {

const std::vector<std::string> kClassifierKeys{"seed",
                                               "deterministic",
                                               "classifier.specs",
                                               "classifier.protocol",
                                               "classifier.epochs",
                                               "classifier.batch",
                                               "classifier.dropout",
                                               "classifier.learning_rate"};

std::string model_file(const std::string& spec) { return "models/clf_" + spec + ".psnn"; }
std::string meta_file(const std::string& spec) { return "models/clf_" + spec + ".meta.json"; }

}  // namespace

StageResult Pipeline::train() {
  auto inputs = hash_inputs(root_, {kTrainPairs}, "pairs");
  return run_stage("train", "models/train.manifest.json", kClassifierKeys, inputs, [&] {
    const auto data = load_pairs(path(kTrainPairs));
    const auto specs = config_.classifier_specs(static_cast<std::size_t>(data.features.cols()));
    const auto options = config_.classifier_options();
    StageOutput out;
    out.summary = "train:";
    for (const auto& spec : specs) {
      const auto seed = derive_seed(config_.seed(), "train/" + spec.name());
      Rng rng(seed);
      const auto trained = train_classifier(spec, data, options, rng);
      const auto history_file = "models/clf_" + spec.name() + ".history.jsonl";
      nn::save_model(trained.net, path(model_file(spec.name())));
      write_history(path(history_file), trained.history);
      json meta;
      meta["h1"] = spec.h1;
      meta["h2"] = spec.h2;
      meta["params"] = param_count(spec);
      meta["epochs"] = options.resolved_epochs();
      meta["seed"] = seed;
      meta["protocol"] = std::string(to_string(options.protocol));
      write_text(path(meta_file(spec.name())), meta.dump(2) + "\n");
      out.outputs.insert(out.outputs.end(), {model_file(spec.name()), history_file, meta_file(spec.name())});
      out.summary += " " + spec.name();
      if (!trained.history.empty()) out.summary += " (train accuracy " + fmt("%.4f", trained.history.back().accuracy) + ")";
    }
    return out;
  });
}

StageResult Pipeline::eval() {
  auto inputs = hash_inputs(root_, {kTestPairs}, "pairs");
  const auto test_cols = nn::TensorContainer::load(path(kTestPairs)).entry("pairs").cols;
  const auto specs = config_.classifier_specs(static_cast<std::size_t>(test_cols - 1));
  std::vector<std::string> models;
  for (const auto& spec : specs) {
    models.push_back(model_file(spec.name()));
    models.push_back(meta_file(spec.name()));
  }
  inputs.merge(hash_inputs(root_, models, "train"));

  return run_stage("eval", "reports/eval.manifest.json", {"classifier.specs"}, inputs, [&] {
    const auto test = load_pairs(path(kTestPairs));
    StageOutput out;
    out.summary = "eval:";
    for (const auto& spec : specs) {
      const auto meta = json::parse(read_text(path(meta_file(spec.name()))));
      GridCell cell;
      cell.spec = spec;
      cell.params = param_count(spec);
      cell.epochs = meta.at("epochs").get<std::size_t>();
      cell.seed = meta.at("seed").get<std::uint64_t>();
      cell.protocol = parse_protocol(meta.at("protocol").get<std::string>());
      cell.net = nn::load_model(path(model_file(spec.name())));
      cell.report = evaluate(cell.net, test);
      const auto report_file = "reports/eval_" + spec.name() + ".json";
      write_text(path(report_file), cell_json(cell) + "\n");
      out.outputs.push_back(report_file);
      out.summary += (out.summary == "eval:" ? " " : "; ") + metrics_summary(spec.name(), cell.report);
    }
    return out;
  });
}

StageResult Pipeline::grid() {
  auto inputs = hash_inputs(root_, {kTrainPairs, kTestPairs}, "pairs");
  const std::vector<std::string> keys{"seed",
                                      "deterministic",
                                      "grid.protocol",
                                      "grid.epochs",
                                      "classifier.batch",
                                      "classifier.dropout",
                                      "classifier.learning_rate"};
  // Cells finished by an interrupted run with the same inputs and config are reused.
  std::uint64_t stamp = config_.hash_keys(keys);
  for (const auto& [name, h] : inputs) stamp = fnv1a(name + "=" + to_hex(h) + "\n", stamp);

  return run_stage("grid", "reports/grid.manifest.json", keys, inputs, [&] {
    const auto train = load_pairs(path(kTrainPairs));
    const auto test = load_pairs(path(kTestPairs));
    const auto options = config_.grid_options();
    const auto specs = grid_specs(static_cast<std::size_t>(train.features.cols()), config_.classifier_dropout());
    const auto grid_dir = path("reports/grid");
    const auto stamp_file = grid_dir / "stamp.txt";
    fs::create_directories(grid_dir);

    const bool resumable = fs::is_regular_file(stamp_file) && read_text(stamp_file) == to_hex(stamp) + "\n";
    if (!resumable) {
      for (const auto& name : sorted_files(grid_dir, "cell_", "")) fs::remove(grid_dir / name);
      write_text(stamp_file, to_hex(stamp) + "\n");
    }

    auto cell_file = [](const ClassifierSpec& s) { return "reports/grid/cell_" + s.name() + ".json"; };
    auto cell_history = [](const ClassifierSpec& s) { return "reports/grid/cell_" + s.name() + ".history.jsonl"; };
    auto cell_model = [](const ClassifierSpec& s) { return "models/grid_" + s.name() + ".psnn"; };

    std::vector<ClassifierSpec> todo;
    for (const auto& spec : specs) {
      if (!(fs::is_regular_file(path(cell_file(spec))) && fs::is_regular_file(path(cell_model(spec))))) {
        todo.push_back(spec);
      }
    }
    run_grid(train, test, todo, options, derive_seed(config_.seed(), "grid"), config_.jobs(), [&](const GridCell& cell) {
      nn::save_model(cell.net, path(cell_model(cell.spec)));
      write_history(path(cell_history(cell.spec)), cell.history);
      write_text(path(cell_file(cell.spec)), cell_json(cell) + "\n");
    });

    StageOutput out;
    std::string best;
    double best_accuracy = -1.0;
    for (const auto& spec : specs) {
      out.outputs.insert(out.outputs.end(), {cell_file(spec), cell_history(spec), cell_model(spec)});
      const auto j = json::parse(read_text(path(cell_file(spec))));
      const double acc = j.at("accuracy").get<double>();
      if (acc > best_accuracy) {
        best_accuracy = acc;
        best = spec.name();
      }
    }
    out.summary = "grid: " + std::to_string(specs.size()) + " cells (" + std::to_string(specs.size() - todo.size()) +
                  " reused), best " + best + " accuracy " + fmt("%.4f", best_accuracy);
    return out;
  });
}

StageResult Pipeline::report() {
  std::vector<std::string> sources;
  for (const auto& name : sorted_files(path("reports"), "eval_", ".json")) sources.push_back("reports/" + name);
  for (const auto& name : sorted_files(path("reports/grid"), "cell_", ".json")) sources.push_back("reports/grid/" + name);
  if (sources.empty()) throw Error(ErrorCode::NothingToReport, "report: no evaluation results in " + root_.string());
  auto inputs = hash_inputs(root_, sources, "eval");

  return run_stage("report", "reports/report.manifest.json", {"report.tolerance"}, inputs, [&] {
    const double tolerance = config_.report_tolerance();
    struct Row {
      std::string source;
      json cell;
      std::optional<Reference> ref;
      bool match = false;
    };
    std::vector<Row> rows;
    for (const auto& file : sources) {
      Row r;
      r.source = file.starts_with("reports/grid/") ? "grid" : "eval";
      r.cell = json::parse(read_text(path(file)));
      r.ref = reference_for(r.cell.at("protocol").get<std::string>(), r.cell.at("h1").get<std::size_t>(),
                            r.cell.at("h2").get<std::size_t>());
      r.match = r.ref && std::abs(r.cell.at("accuracy").get<double>() - r.ref->accuracy) <= tolerance;
      rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      auto key = [](const Row& r) {
        return std::tuple(r.source, r.cell.at("h1").get<std::size_t>(), r.cell.at("h2").get<std::size_t>());
      };
      return key(a) < key(b);
    });

    std::string text;
    char line[256];
    std::snprintf(line, sizeof line, "%-6s %-10s %-6s %7s %10s %8s %9s %12s %12s %9s %9s  %s\n", "source", "spec",
                  "proto", "epochs", "params", "loss", "accuracy", "fn_rate_pos", "fn_rate_all", "ref_loss", "ref_acc",
                  "match");
    text += line;
    json out = json::array();
    std::size_t matches = 0;
    for (const auto& r : rows) {
      const auto& c = r.cell;
      const auto spec = std::to_string(c.at("h1").get<std::size_t>()) + "x" + std::to_string(c.at("h2").get<std::size_t>());
      const auto ref_loss = r.ref ? fmt("%.4f", r.ref->loss) : std::string("-");
      const auto ref_acc = r.ref ? fmt("%.4f", r.ref->accuracy) : std::string("-");
      std::snprintf(line, sizeof line, "%-6s %-10s %-6s %7zu %10zu %8.4f %9.4f %12.4f %12.4f %9s %9s  %s\n",
                    r.source.c_str(), spec.c_str(), c.at("protocol").get<std::string>().c_str(),
                    c.at("epochs").get<std::size_t>(), c.at("params").get<std::size_t>(), c.at("loss").get<double>(),
                    c.at("accuracy").get<double>(), c.at("fn_rate_pos").get<double>(),
                    c.at("fn_rate_all").get<double>(), ref_loss.c_str(), ref_acc.c_str(),
                    r.ref ? (r.match ? "yes" : "no") : "-");
      text += line;
      json row;
      row["source"] = r.source;
      row["spec"] = spec;
      for (const auto& [k, v] : c.items()) row[k] = v;
      if (r.ref) {
        row["reference_loss"] = r.ref->loss;
        row["reference_accuracy"] = r.ref->accuracy;
        if (r.ref->fn_rate) row["reference_fn_rate"] = *r.ref->fn_rate;
      }
      row["match"] = r.match;
      matches += r.match ? 1 : 0;
      out.push_back(std::move(row));
    }
    write_text(path(kReportText), text);
    write_text(path(kReportJson), out.dump(2) + "\n");
    return StageOutput{{kReportText, kReportJson}, "report: " + std::to_string(rows.size()) + " rows, " +
                                                      std::to_string(matches) + " within tolerance of published results\n" +
                                                      text};
  });
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidSpec:
      return 2;
    case ErrorCode::ShapeMismatch:
    case ErrorCode::StaleCache:
    case ErrorCode::IndexOutOfRange:
      return 4;
    default:
      return 3;
  }
}

std::vector<StageResult> Pipeline::run_all() {
  std::vector<StageResult> results;
  results.push_back(fetch());
  results.push_back(extract());
  if (!config_.autoencoder_mode()) results.push_back(context());
  results.push_back(embed());
  results.push_back(pairs());
  results.push_back(train());
  results.push_back(eval());
  results.push_back(report());
  return results;
}

}  // namespace premsel::pipeline
