#include "dasent/pipeline.hpp"

#include <bit>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dasent/checksum.hpp"
#include "dasent/errors.hpp"
#include "dasent/rng.hpp"
#include "dasent/selftest.hpp"
#include "dasent/text_util.hpp"
#include "dasent/version.hpp"

namespace dasent {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

const fs::path& PipelineConfig::require(std::string_view key, std::string_view command) const {
  auto it = paths.find(std::string(key));
  if (it == paths.end())
    throw ConfigError("config field 'paths." + std::string(key) + "' is required for '" + std::string(command) + "'");
  return it->second;
}

namespace {

std::string optimizer_name(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "sgd") return Optimizer::GradientDescent;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

std::string entropy_name(EntropyMode m) { return m == EntropyMode::AllPairs ? "all_pairs" : "consecutive"; }

EntropyMode parse_entropy(const std::string& s) {
  if (s == "consecutive") return EntropyMode::ConsecutivePairs;
  if (s == "all_pairs") return EntropyMode::AllPairs;
  throw ConfigError("unknown entropy mode '" + s + "' (expected consecutive or all_pairs)");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

json PipelineConfig::to_json() const {
  json p = json::object();
  for (const auto& [k, v] : paths) p[k] = v.generic_string();
  json j;
  j["paths"] = std::move(p);
  j["min_count"] = min_count;
  j["largest_component"] = largest_component;
  j["threshold"] = threshold;
  j["mask"] = mask_name(mask);
  j["entropy"] = entropy_name(entropy);
  j["train"] = {{"epochs", train.epochs},
                {"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"optimizer", optimizer_name(train.optimizer)},
                {"weight_decay", train.weight_decay}};
  j["cv"] = {{"folds", folds}, {"repeats", repeats}, {"threads", threads}};
  j["tipping_points"] = {{"depression", tipping.depression}, {"anxiety", tipping.anxiety}, {"stress", tipping.stress}};
  j["histogram_bin_width"] = histogram_bin_width;
  j["seed"] = seed;
  j["checksums"] = checksums;
  return j;
}

std::string PipelineConfig::checksum() const {
  // Thread count does not affect results.
  auto j = to_json();
  j["cv"].erase("threads");
  return sha256_hex(j.dump());
}

void validate_paths(const PipelineConfig& cfg) {
  for (const auto& [key, path] : cfg.paths) {
    if (key == "model") continue;  // may be an output of `train`
    if (!fs::exists(path)) throw ConfigError("paths." + key + ": '" + path.string() + "' does not exist");
  }
  for (const auto& [key, expected] : cfg.checksums) {
    auto it = cfg.paths.find(key);
    if (it == cfg.paths.end()) throw ConfigError("checksum pinned for unknown path key '" + key + "'");
    if (!fs::exists(it->second)) continue;
    auto actual = sha256_file(it->second);
    if (actual != expected)
      throw ConfigError("checksum mismatch for paths." + key + ": expected " + expected + ", got " + actual);
  }
}

PipelineConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig cfg;
  fs::path base = base_dir;
  if (const char* env = std::getenv(kResourceDirEnv); env && *env) base = env;
  base = fs::absolute(base);
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    if (!p.is_object()) throw ConfigError("config field 'paths' must be an object");
    for (const auto& [key, value] : p.items()) {
      if (std::find(kPathKeys.begin(), kPathKeys.end(), key) == kPathKeys.end())
        throw ConfigError("unknown config field 'paths." + key + "'");
      if (!value.is_string()) throw ConfigError("config field 'paths." + key + "' must be a string");
      fs::path path = value.get<std::string>();
      cfg.paths[key] = path.is_absolute() ? path : base / path;
    }
  }
  cfg.min_count = get_or<long long>(j, "min_count", cfg.min_count);
  if (cfg.min_count < 1) throw ConfigError("min_count must be >= 1");
  cfg.largest_component = get_or<bool>(j, "largest_component", cfg.largest_component);
  cfg.threshold = get_or<double>(j, "threshold", cfg.threshold);
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) throw ConfigError("threshold must be in (0, 1]");
  cfg.mask = parse_mask(get_or<std::string>(j, "mask", std::string(mask_name(cfg.mask))));
  cfg.entropy = parse_entropy(get_or<std::string>(j, "entropy", entropy_name(cfg.entropy)));
  if (j.contains("train")) {
    const auto& t = j.at("train");
    cfg.train.epochs = get_or<std::size_t>(t, "epochs", cfg.train.epochs);
    cfg.train.learning_rate = get_or<double>(t, "learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = get_or<std::size_t>(t, "batch_size", cfg.train.batch_size);
    cfg.train.optimizer = parse_optimizer(get_or<std::string>(t, "optimizer", optimizer_name(cfg.train.optimizer)));
    cfg.train.weight_decay = get_or<double>(t, "weight_decay", cfg.train.weight_decay);
  }
  if (!(cfg.train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (cfg.train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (cfg.train.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (j.contains("cv")) {
    const auto& c = j.at("cv");
    cfg.folds = get_or<std::size_t>(c, "folds", cfg.folds);
    cfg.repeats = get_or<std::size_t>(c, "repeats", cfg.repeats);
    cfg.threads = get_or<std::size_t>(c, "threads", cfg.threads);
  }
  if (cfg.folds < 2) throw ConfigError("cv.folds must be >= 2");
  if (cfg.repeats < 1) throw ConfigError("cv.repeats must be >= 1");
  if (j.contains("tipping_points")) {
    const auto& t = j.at("tipping_points");
    cfg.tipping.depression = get_or<double>(t, "depression", cfg.tipping.depression);
    cfg.tipping.anxiety = get_or<double>(t, "anxiety", cfg.tipping.anxiety);
    cfg.tipping.stress = get_or<double>(t, "stress", cfg.tipping.stress);
  }
  if (cfg.tipping.depression < 0 || cfg.tipping.anxiety < 0 || cfg.tipping.stress < 0)
    throw ConfigError("tipping points must be non-negative");
  cfg.histogram_bin_width = get_or<double>(j, "histogram_bin_width", cfg.histogram_bin_width);
  if (!(cfg.histogram_bin_width > 0.0)) throw ConfigError("histogram_bin_width must be > 0");
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("checksums")) {
    for (const auto& [key, value] : j.at("checksums").items()) {
      if (!value.is_string()) throw ConfigError("checksum for '" + key + "' must be a string");
      cfg.checksums[key] = to_lower(value.get<std::string>());
    }
  }
  validate_paths(cfg);
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Data loading

SemanticNetwork load_network_from_config(const PipelineConfig& cfg, std::string_view command) {
  SemanticNetwork net;
  if (cfg.has("network_cache"))
    net = load_network(cfg.require("network_cache", command));
  else
    net = build_network(read_edge_list(cfg.require("edge_list", command)), cfg.min_count);
  if (cfg.largest_component) net = largest_component(net);
  return net;
}

Corpus load_corpus(const PipelineConfig& cfg, std::string_view command) {
  Corpus c;
  auto raw = read_ert_csv(cfg.require("ert", command));
  if (raw.empty()) throw InputError("ERT csv contains no records");
  c.network = load_network_from_config(cfg, command);
  LemmaMap lemma_map;
  if (cfg.has("lemma_map")) lemma_map = read_lemma_map(cfg.require("lemma_map", command));
  c.lexicon = build_lexicon(raw, lemma_map);
  c.records = lemmatize(std::move(raw), c.lexicon.lemma_map());
  c.weights = compute_position_weights(c.records, c.network);
  return c;
}

Matrix feature_matrix(const FeatureExtractor& extractor, const std::vector<RecallRecord>& records, FeatureMask mask) {
  Matrix x(records.size(), extractor.dimension(mask));
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto fv = extractor.extract(records[i].words, mask);
    std::copy(fv.values.begin(), fv.values.end(), x.row(i).begin());
  }
  return x;
}

// ---------------------------------------------------------------------------
// Predictor bundle

namespace {

constexpr char kBundleMagic[8] = {'D', 'A', 'S', 'B', 'N', 'D', 'L', '\0'};
constexpr std::uint32_t kBundleVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    int c = in.get();
    if (c == EOF) throw InputError("model bundle truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void save_bundle(const PredictorBundle& bundle, const fs::path& path) {
  json meta;
  meta["lemmas"] = bundle.lemmas;
  meta["mask"] = mask_name(bundle.mask);
  meta["entropy"] = entropy_name(bundle.entropy);
  meta["network_nodes"] = bundle.network_nodes;
  meta["network_edges"] = bundle.network_edges;
  meta["config_checksum"] = bundle.config_checksum;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(kBundleMagic, sizeof(kBundleMagic));
  put_u64(out, kBundleVersion);
  auto text = meta.dump();
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_u64(out, bundle.weights.w.size());
  for (double w : bundle.weights.w) put_u64(out, std::bit_cast<std::uint64_t>(w));
  put_u64(out, bundle.models.size());
  for (const auto& [construct, model] : bundle.models) {
    put_u64(out, static_cast<std::uint64_t>(construct));
    write_model(model, out);
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

PredictorBundle load_bundle(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model bundle '" + path.string() + "'");
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kBundleMagic))
    throw InputError("'" + path.string() + "' is not a model bundle");
  if (get_u64(in) != kBundleVersion) throw InputError("unsupported model bundle version");
  auto len = get_u64(in);
  if (len > (1ULL << 30)) throw InputError("corrupt model bundle header");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw InputError("model bundle truncated");
  PredictorBundle b;
  try {
    auto meta = json::parse(text);
    b.lemmas = meta.at("lemmas").get<std::vector<std::string>>();
    b.mask = parse_mask(meta.at("mask").get<std::string>());
    b.entropy = parse_entropy(meta.at("entropy").get<std::string>());
    b.network_nodes = meta.at("network_nodes").get<std::size_t>();
    b.network_edges = meta.at("network_edges").get<std::size_t>();
    b.config_checksum = meta.at("config_checksum").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError("model bundle metadata: " + std::string(e.what()));
  }
  auto nw = get_u64(in);
  if (nw > 4096) throw InputError("corrupt model bundle weights");
  for (std::uint64_t i = 0; i < nw; ++i) b.weights.w.push_back(std::bit_cast<double>(get_u64(in)));
  auto nm = get_u64(in);
  if (nm > 3) throw InputError("corrupt model bundle");
  for (std::uint64_t i = 0; i < nm; ++i) {
    auto c = get_u64(in);
    if (c > 2) throw InputError("corrupt model bundle construct id");
    b.models.emplace(static_cast<Construct>(c), read_model(in));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> paths;
  std::optional<long long> min_count;
  std::optional<double> threshold;
  std::optional<std::string> mask;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> threads;
  bool largest_component = false;
};

struct CommandArgs {
  std::string construct = "all";
  std::string in;
  std::string out;
  bool raw = false;
};

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

PipelineConfig effective_config(const Overrides& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else {
    fs::path base = fs::current_path();
    cfg = parse_config(json::object(), base);
  }
  for (const auto& [key, value] : o.paths) {
    fs::path p = value;
    if (const char* env = std::getenv(kResourceDirEnv); env && *env && p.is_relative()) p = fs::path(env) / p;
    cfg.paths[key] = fs::absolute(p);
  }
  if (o.min_count) cfg.min_count = *o.min_count;
  if (o.threshold) cfg.threshold = *o.threshold;
  if (o.mask && o.mask->find(',') == std::string::npos) cfg.mask = parse_mask(trim(*o.mask));
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.folds) cfg.folds = *o.folds;
  if (o.repeats) cfg.repeats = *o.repeats;
  if (o.threads) cfg.threads = *o.threads;
  if (o.largest_component) cfg.largest_component = true;
  if (cfg.min_count < 1) throw ConfigError("min_count must be >= 1");
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) throw ConfigError("threshold must be in (0, 1]");
  if (cfg.folds < 2) throw ConfigError("folds must be >= 2");
  if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
  validate_paths(cfg);
  return cfg;
}

std::vector<Construct> constructs_from(const std::string& arg) {
  if (arg == "all") return {kConstructs.begin(), kConstructs.end()};
  std::vector<Construct> out;
  for (const auto& part : split(arg, ',')) out.push_back(parse_construct(normalize_token(part)));
  return out;
}

std::vector<FeatureMask> masks_from(const std::optional<std::string>& arg, FeatureMask fallback) {
  if (!arg) return {fallback};
  std::vector<FeatureMask> out;
  for (const auto& part : split(*arg, ',')) out.push_back(parse_mask(trim(part)));
  return out;
}

// Run manifest side-file; the only artifact carrying timestamps.
void write_manifest(const fs::path& artifact, const std::string& command, const PipelineConfig& cfg,
                    const std::vector<std::string>& used_keys, const std::string& started) {
  json inputs = json::object();
  for (const auto& key : used_keys) {
    auto it = cfg.paths.find(key);
    if (it == cfg.paths.end() || !fs::exists(it->second)) continue;
    inputs[key] = {{"path", it->second.generic_string()}, {"sha256", sha256_file(it->second)}};
  }
  json m;
  m["command"] = command;
  m["artifact"] = artifact.generic_string();
  m["config"] = cfg.to_json();
  m["config_checksum"] = cfg.checksum();
  m["inputs"] = std::move(inputs);
  m["seed"] = cfg.seed;
  m["version"] = std::string(kVersion);
  m["started_at"] = started;
  m["finished_at"] = utc_now();
  std::ofstream out(artifact.string() + ".manifest.json");
  out << m.dump(2) << '\n';
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> network_keys(const PipelineConfig& cfg) {
  return cfg.has("network_cache") ? std::vector<std::string>{"network_cache"} : std::vector<std::string>{"edge_list"};
}

int cmd_build_network(const PipelineConfig& cfg, const CommandArgs& args, std::ostream& out) {
  auto started = utc_now();
  auto net = build_network(read_edge_list(cfg.require("edge_list", "build-network")), cfg.min_count);
  if (cfg.largest_component) net = largest_component(net);
  fs::path dest = args.out.empty() ? "network.json" : args.out;
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  save_network(net, dest, cfg.checksum());
  out << "nodes " << net.node_count() << " edges " << net.edge_count() << '\n';
  write_manifest(dest, "build-network", cfg, {"edge_list"}, started);
  return 0;
}

int cmd_features(const PipelineConfig& cfg, const CommandArgs& args, std::ostream& out) {
  auto started = utc_now();
  auto corpus = load_corpus(cfg, "features");
  FeatureExtractor extractor(corpus.network, corpus.lexicon, corpus.weights, cfg.entropy);
  fs::path dest = args.out.empty() ? "features.csv" : args.out;
  auto file = open_output(dest);
  file << "# config_checksum=" << cfg.checksum() << " mask=" << mask_name(cfg.mask)
       << (args.raw ? " raw" : " l2") << '\n';
  file << "id";
  for (const auto& name : extractor.feature_names(cfg.mask)) file << ',' << csv_escape(name);
  file << '\n';
  auto spec = mask_spec(cfg.mask);
  for (const auto& r : corpus.records) {
    auto fv = extractor.extract(r.words, cfg.mask);
    std::vector<double> row = fv.values;
    if (args.raw) {
      row = fv.bow;
      if (spec.coverage) row.push_back(fv.coverage);
      if (spec.entropy) row.push_back(fv.entropy);
      for (std::size_t t = 0; t < kTargets.size(); ++t)
        if (spec.targets[t]) row.push_back(fv.dist[t]);
    }
    file << csv_escape(r.id);
    for (double v : row) file << ',' << format_double(v);
    file << '\n';
  }
  out << "wrote " << corpus.records.size() << " rows x " << extractor.dimension(cfg.mask) << " features to "
      << dest.string() << '\n';
  auto keys = network_keys(cfg);
  keys.insert(keys.end(), {"ert", "lemma_map"});
  write_manifest(dest, "features", cfg, keys, started);
  return 0;
}

int cmd_cv(const PipelineConfig& cfg, const CommandArgs& args, const Overrides& o, std::ostream& out,
           std::ostream& err) {
  auto started = utc_now();
  auto corpus = load_corpus(cfg, "cv");
  FeatureExtractor extractor(corpus.network, corpus.lexicon, corpus.weights, cfg.entropy);
  fs::path dest = args.out.empty() ? "metrics.csv" : args.out;
  auto constructs = constructs_from(args.construct);
  auto masks = masks_from(o.mask, cfg.mask);
  std::ostringstream csv;
  csv << "# config_checksum=" << cfg.checksum() << '\n';
  csv << "construct,mask,mse,mse_std,r2,r2_std\n";
  for (auto mask : masks) {
    auto x = feature_matrix(extractor, corpus.records, mask);
    for (auto c : constructs) {
      std::vector<double> y;
      for (const auto& r : corpus.records) y.push_back(r.score(c));
      CvConfig cv;
      cv.folds = cfg.folds;
      cv.repeats = cfg.repeats;
      cv.master_seed = cfg.seed;
      cv.train = cfg.train;
      cv.threads = cfg.threads;
      auto res = cross_validate(x, y, cv);
      for (const auto& w : res.warnings) err << "warning: " << construct_name(c) << '/' << mask_name(mask) << ": " << w << '\n';
      csv << construct_name(c) << ',' << mask_name(mask) << ',' << format_double(res.mse.mean) << ','
          << format_double(res.mse.std) << ',' << format_double(res.r_squared.mean) << ','
          << format_double(res.r_squared.std) << '\n';
      out << construct_name(c) << ' ' << mask_name(mask) << ": mse " << res.mse.mean << " +- " << res.mse.std
          << ", r2 " << res.r_squared.mean << " +- " << res.r_squared.std << ", r " << res.pearson_r.mean << '\n';
    }
  }
  auto file = open_output(dest);
  file << csv.str();
  file.close();
  auto keys = network_keys(cfg);
  keys.insert(keys.end(), {"ert", "lemma_map"});
  write_manifest(dest, "cv", cfg, keys, started);
  return 0;
}

int cmd_train(const PipelineConfig& cfg, const CommandArgs& args, std::ostream& out) {
  auto started = utc_now();
  auto corpus = load_corpus(cfg, "train");
  FeatureExtractor extractor(corpus.network, corpus.lexicon, corpus.weights, cfg.entropy);
  fs::path dest = !args.out.empty() ? fs::path(args.out) : cfg.has("model") ? cfg.require("model", "train") : "model.bin";
  PredictorBundle bundle;
  bundle.lemmas = corpus.lexicon.lemmas();
  bundle.weights = corpus.weights;
  bundle.mask = cfg.mask;
  bundle.entropy = cfg.entropy;
  bundle.network_nodes = corpus.network.node_count();
  bundle.network_edges = corpus.network.edge_count();
  bundle.config_checksum = cfg.checksum();
  auto x = feature_matrix(extractor, corpus.records, cfg.mask);
  for (auto c : constructs_from(args.construct)) {
    std::vector<double> y;
    for (const auto& r : corpus.records) y.push_back(r.score(c));
    const auto index = static_cast<std::uint64_t>(c);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train-dropout", index);
    tc.batch_size = std::min(tc.batch_size, x.rows);
    auto trained = train(init_model(x.cols, derive_seed(cfg.seed, "train-init", index)), x, y, tc);
    auto fit = evaluate(predict(trained.model, x), y);
    out << construct_name(c) << ": training mse " << fit.mse;
    if (fit.r_squared) out << ", r2 " << *fit.r_squared;
    out << '\n';
    bundle.models.emplace(c, std::move(trained.model));
  }
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  save_bundle(bundle, dest);
  auto keys = network_keys(cfg);
  keys.insert(keys.end(), {"ert", "lemma_map"});
  write_manifest(dest, "train", cfg, keys, started);
  return 0;
}

struct InputDocument {
  std::string id;
  std::string text;
};

std::vector<InputDocument> read_documents(const fs::path& path) {
  auto in = open_input(path);
  std::vector<InputDocument> docs;
  const bool jsonl = path.extension() == ".jsonl";
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (jsonl) {
      try {
        auto j = json::parse(line);
        docs.push_back({j.value("id", "doc-" + std::to_string(docs.size() + 1)), j.at("text").get<std::string>()});
      } catch (const json::exception& e) {
        throw InputError("documents line " + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      docs.push_back({"doc-" + std::to_string(docs.size() + 1), line});
    }
  }
  return docs;
}

ResourceBundle load_resources(const PipelineConfig& cfg, const std::string& command) {
  ResourceBundle res;
  auto set_of = [&](const char* key) {
    std::unordered_set<std::string> s;
    if (cfg.has(key))
      for (auto& t : read_token_list(cfg.require(key, command))) s.insert(std::move(t));
    return s;
  };
  res.stopwords = set_of("stopwords");
  res.negation_cues = set_of("negations");
  if (cfg.has("antonyms")) res.antonyms = read_antonyms(cfg.require("antonyms", command));
  res.pos_lexicon = read_pos_lexicon(cfg.require("pos_lexicon", command));
  if (cfg.has("lemma_map")) res.lemma_map = read_lemma_map(cfg.require("lemma_map", command));
  return res;
}

int cmd_score(const PipelineConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err) {
  auto started = utc_now();
  if (args.in.empty()) throw ConfigError("'score' needs --in <documents>");
  auto bundle = load_bundle(cfg.require("model", "score"));
  auto net = load_network_from_config(cfg, "score");
  if (net.node_count() != bundle.network_nodes || net.edge_count() != bundle.network_edges)
    throw ConfigError("network does not match the one the model was trained on (" + std::to_string(net.node_count()) +
                      "/" + std::to_string(net.edge_count()) + " vs " + std::to_string(bundle.network_nodes) + "/" +
                      std::to_string(bundle.network_edges) + " nodes/edges)");
  auto resources = load_resources(cfg, "score");
  auto embeddings = EmbeddingTable::load(cfg.require("embeddings", "score"));
  for (const auto& w : embeddings.warnings()) err << "warning: " << w << '\n';
  Lexicon lexicon(bundle.lemmas, resources.lemma_map);
  FeatureExtractor extractor(net, lexicon, bundle.weights, bundle.entropy);
  TextMapper mapper(lexicon, embeddings, resources);
  for (const auto& m : mapper.missing_lemmas()) err << "warning: lexicon lemma without embedding: " << m << '\n';
  ParserOptions opts;
  opts.threshold = cfg.threshold;

  auto docs = read_documents(args.in);
  std::vector<std::string> lines(docs.size());
  const auto checksum = cfg.checksum();
  auto work = [&](std::size_t i) {
    auto parsed = mapper.map(docs[i].id, docs[i].text, opts);
    auto fv = document_to_features(parsed, extractor, bundle.mask);
    json das = json::object();
    for (const auto& [c, model] : bundle.models)
      das[std::string(construct_name(c))] = forward(model, fv.values, Mode::Eval);
    json assignments = json::array();
    for (const auto& a : parsed.assignments)
      assignments.push_back({{"word", a.word}, {"lemma", a.lemma}, {"similarity", a.similarity}, {"negated", a.negated}});
    json skipped = json::array();
    for (const auto& s : parsed.skipped) skipped.push_back({{"token", s.token}, {"reason", skip_reason_name(s.reason)}});
    json j;
    j["id"] = parsed.id;
    j["das"] = std::move(das);
    j["sequence"] = parsed.mapped_sequence;
    j["assignments"] = std::move(assignments);
    j["skipped"] = std::move(skipped);
    j["low_confidence"] = fv.low_confidence;
    j["config_checksum"] = checksum;
    lines[i] = j.dump();
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, docs.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::string> errors(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < docs.size(); i += threads) work(i);
        } catch (const std::exception& e) {
          errors[t] = e.what();
        }
      });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (!e.empty()) throw std::runtime_error(e);
  }
  fs::path dest = args.out.empty() ? "scores.jsonl" : args.out;
  auto file = open_output(dest);
  for (const auto& l : lines) file << l << '\n';
  file.close();
  out << "scored " << docs.size() << " document(s) into " << dest.string() << '\n';
  auto keys = network_keys(cfg);
  keys.insert(keys.end(), {"model", "embeddings", "stopwords", "negations", "antonyms", "pos_lexicon", "lemma_map"});
  write_manifest(dest, "score", cfg, keys, started);
  return 0;
}

int cmd_validate(const PipelineConfig& cfg, const CommandArgs& args, std::ostream& out) {
  auto started = utc_now();
  if (args.in.empty()) throw ConfigError("'validate' needs --in <scores.jsonl>");
  auto vad = read_vad(cfg.require("vad", "validate"));
  LemmaMap lemma_map;
  if (cfg.has("lemma_map")) lemma_map = read_lemma_map(cfg.require("lemma_map", "validate"));
  auto in = open_input(args.in);
  std::vector<ScoredDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      ScoredDocument d;
      d.score.id = j.at("id").get<std::string>();
      const auto& das = j.at("das");
      d.score.depression = das.value("depression", 0.0);
      d.score.anxiety = das.value("anxiety", 0.0);
      d.score.stress = das.value("stress", 0.0);
      for (const auto& a : j.value("assignments", json::array()))
        d.words.push_back(normalize_lemma(a.at("word").get<std::string>(), lemma_map));
      for (const auto& s : j.value("skipped", json::array()))
        d.words.push_back(normalize_lemma(s.at("token").get<std::string>(), lemma_map));
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw InputError("scores line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  auto report = validate_corpus(docs, vad, cfg.tipping, cfg.histogram_bin_width);
  auto j = report.to_json();
  j["documents"] = docs.size();
  j["tipping_points"] = {{"depression", cfg.tipping.depression}, {"anxiety", cfg.tipping.anxiety}, {"stress", cfg.tipping.stress}};
  j["config_checksum"] = cfg.checksum();
  fs::path dest = args.out.empty() ? "validation.json" : args.out;
  auto file = open_output(dest);
  file << j.dump(2) << '\n';
  file.close();
  out << "validated " << docs.size() << " document(s) into " << dest.string() << '\n';
  write_manifest(dest, "validate", cfg, {"vad", "lemma_map"}, started);
  return 0;
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "JSON config file");
  auto path_opt = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<std::string>(flag, [&o, key](const std::string& v) { o.paths[key] = v; }, help);
  };
  path_opt("--edges", "edge_list", "free-association edge list (TSV)");
  path_opt("--network", "network_cache", "network cache written by build-network");
  path_opt("--ert", "ert", "emotional recall CSV");
  path_opt("--embeddings", "embeddings", "word embedding text file");
  path_opt("--stopwords", "stopwords", "stopword list");
  path_opt("--negations", "negations", "negation cue list");
  path_opt("--antonyms", "antonyms", "antonym TSV");
  path_opt("--pos", "pos_lexicon", "POS lexicon TSV");
  path_opt("--lemma-map", "lemma_map", "lemma map TSV");
  path_opt("--vad", "vad", "valence/arousal TSV");
  path_opt("--model", "model", "model bundle");
  sub->add_option_function<long long>("--min-count", [&o](long long v) { o.min_count = v; }, "edge threshold");
  sub->add_option_function<double>("--threshold", [&o](double v) { o.threshold = v; }, "similarity threshold");
  sub->add_option_function<std::string>("--mask", [&o](const std::string& v) { o.mask = v; },
                                        "feature mask (comma-separated for cv)");
  sub->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t v) { o.seed = v; }, "master seed");
  sub->add_option_function<std::size_t>("--epochs", [&o](std::size_t v) { o.epochs = v; }, "training epochs");
  sub->add_option_function<std::size_t>("--folds", [&o](std::size_t v) { o.folds = v; }, "cross-validation folds");
  sub->add_option_function<std::size_t>("--repeats", [&o](std::size_t v) { o.repeats = v; }, "cross-validation repeats");
  sub->add_option_function<std::size_t>("--threads", [&o](std::size_t v) { o.threads = v; }, "worker threads");
  sub->add_flag("--largest-component", o.largest_component, "restrict the network to its largest component");
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate depression, anxiety and stress from emotional word sequences", "dasent"};
  app.require_subcommand(1);
  Overrides o;
  CommandArgs a;
  auto* build = app.add_subcommand("build-network", "build the semantic network cache from an edge list");
  auto* features = app.add_subcommand("features", "dump recall feature vectors as CSV");
  auto* train_cmd = app.add_subcommand("train", "train regressors on all recalls and write a model bundle");
  auto* cv = app.add_subcommand("cv", "repeated k-fold cross-validation; writes a metrics CSV");
  auto* score = app.add_subcommand("score", "map documents to emotional words and score them (JSON lines)");
  auto* validate = app.add_subcommand("validate", "affect-lexicon validation of scored documents");
  auto* selftest = app.add_subcommand("selftest", "run the bundled oracle suite");
  for (auto* sub : {build, features, train_cmd, cv, score, validate}) {
    add_common(sub, o);
    sub->add_option("-o,--out", a.out, "output path");
  }
  for (auto* sub : {train_cmd, cv}) sub->add_option("--construct", a.construct, "depression, anxiety, stress or all");
  score->add_option("-i,--in", a.in, "documents: one per line, or .jsonl with {id,text}")->required();
  validate->add_option("-i,--in", a.in, "scores JSON lines from 'score'")->required();
  features->add_flag("--raw", a.raw, "write unnormalized feature values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (selftest->parsed()) return run_selftest(out) ? 0 : 1;
    auto cfg = effective_config(o);
    if (build->parsed()) return cmd_build_network(cfg, a, out);
    if (features->parsed()) return cmd_features(cfg, a, out);
    if (train_cmd->parsed()) return cmd_train(cfg, a, out);
    if (cv->parsed()) return cmd_cv(cfg, a, o, out, err);
    if (score->parsed()) return cmd_score(cfg, a, out, err);
    if (validate->parsed()) return cmd_validate(cfg, a, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const LookupError& e) {
    err << "lookup error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"dasent"};
  for (const auto& s : args) argv.push_back(s.c_str());
  return run_command(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dasent
