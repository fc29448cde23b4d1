// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
// Criteria 1-7 always run. Criteria 8-12 need the restricted study data and
// run only when DASENT_DATA_CONFIG points at a config whose paths name the
// ERT csv, the free-association edge list and the embeddings. Criterion 12
// additionally needs DASENT_NOTES_CORPUS (one document per line or .jsonl).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>
#include <map>
#include <unordered_set>
#include <unistd.h>

#include "dasent/errors.hpp"
#include "dasent/mlp.hpp"
#include "dasent/oracle/oracles.hpp"
#include "dasent/pipeline.hpp"
#include "dasent/recall_features.hpp"
#include "dasent/rng.hpp"
#include "dasent/semnet.hpp"
#include "dasent/stats.hpp"
#include "dasent/text_parser.hpp"
#include "dasent/text_util.hpp"

namespace fs = std::filesystem;
using namespace dasent;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

const fs::path kToy = DASENT_TOY_DIR;

// ---------------------------------------------------------------------------

Outcome graph_oracle() {
  Rng rng(101);
  std::size_t pairs = 0, mismatches = 0;
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 2 + rng.below(29);
    const double p = 0.03 + 0.3 * rng.uniform();
    auto net = build_network(oracle::random_graph(n, p, rng.next()));
    auto fw = oracle::floyd_warshall(net);
    for (NodeId i = 0; i < net.node_count(); ++i)
      for (NodeId j = 0; j < net.node_count(); ++j) {
        auto d = shortest_path_length(net, net.name(i), net.name(j));
        auto expected = fw[i][j] == kUnreachable ? DistanceResult::unreachable() : DistanceResult::of(fw[i][j]);
        ++pairs;
        if (!(d == expected)) ++mismatches;
      }
  }
  return pass_if(mismatches == 0, std::to_string(pairs) + " pairs on 100 graphs, " + std::to_string(mismatches) +
                                      " mismatches vs Floyd-Warshall");
}

Outcome gradient_oracle() {
  double worst = 0.0;
  std::size_t resamples = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(2024, "gradcheck", seed));
    MlpModel model;
    std::vector<double> x(363);
    // Redraw model and input until no unit, including the output, sits
    // within the hinge margin (a rectified output would zero every gradient).
    for (;;) {
      model = init_model(363, rng.next());
      for (auto& layer : model.layers)
        for (auto& b : layer.bias) b = rng.uniform(-0.1, 0.1);
      for (auto& v : x) v = rng.uniform(0.0, 1.0);
      auto m = oracle::preactivation_margin(model, x);
      if (m.min_abs > 1e-4 && m.output > 1e-4) break;
      if (++resamples > 10000) return {Status::Fail, "could not sample a hinge-free point"};
    }
    worst = std::max(worst, gradient_check(model, x, rng.uniform(0.0, 21.0), 1e-5));
  }
  return pass_if(worst <= 1e-4, "363-25-25-1, 20 seeds, max relative error " + fmt(worst, 3) + " (limit 1e-4, " +
                                    std::to_string(resamples) + " hinge resamples)");
}

Outcome walk_oracle() {
  Rng rng(303);
  double worst = 0.0;
  for (int w = 0; w < 50; ++w) {
    auto net = build_network(oracle::random_graph(25, 0.12, rng.next()));
    auto fw = oracle::floyd_warshall(net);
    // Names n0..n29: a few are isolated (never in the network) on purpose.
    std::vector<std::string> walk;
    for (int k = 0; k < 10; ++k) walk.push_back("n" + std::to_string(rng.below(30)));
    worst = std::max(worst, std::abs(coverage(net, walk) - oracle::coverage_from_matrix(fw, net, walk)));
    worst = std::max(worst, std::abs(distance_entropy(net, walk, EntropyMode::ConsecutivePairs) -
                                     oracle::entropy_from_matrix(fw, net, walk, false)));
    worst = std::max(worst, std::abs(distance_entropy(net, walk, EntropyMode::AllPairs) -
                                     oracle::entropy_from_matrix(fw, net, walk, true)));
  }
  return pass_if(worst <= 1e-12, "50 walks, max |delta| " + fmt(worst, 3) + " (limit 1e-12)");
}

Outcome pearson_example() {
  std::vector<double> x{1, 2, 3}, y{1, 2, 4};
  double r = pearson(x, y).statistic;
  return pass_if(std::abs(r - 0.98198) <= 1e-4, "r = " + fmt(r, 7) + " (expected 0.98198)");
}

Outcome kw_example() {
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  auto res = kruskal_wallis(a, b);
  return pass_if(std::abs(res.statistic - 3.857) <= 1e-3,
                 "H = " + fmt(res.statistic, 6) + ", chi-square p = " + fmt(res.p_value, 4));
}

struct KwSweep {
  double exact_worst = 0.0;
  double chi_worst = 0.0;
  double h_worst = 0.0;
};

KwSweep kw_sweep() {
  Rng rng(404);
  KwSweep s;
  for (int c = 0; c < 50; ++c) {
    std::vector<double> a, b;
    for (;;) {
      const std::size_t n = 3 + rng.below(10);  // combined n in [3, 12]
      const std::size_t na = 1 + rng.below(n - 1);
      const bool ties = rng.uniform() < 0.5;
      a.clear();
      b.clear();
      for (std::size_t i = 0; i < n; ++i) {
        double v = ties ? static_cast<double>(rng.below(5)) : rng.uniform(0.0, 10.0);
        (i < na ? a : b).push_back(v);
      }
      std::vector<double> pooled(a);
      pooled.insert(pooled.end(), b.begin(), b.end());
      if (std::adjacent_find(pooled.begin(), pooled.end(), std::not_equal_to<>()) != pooled.end()) break;
    }
    const double oracle_p = oracle::kw_permutation_p(a, b);
    const auto exact = kruskal_wallis(a, b, PValueMethod::Exact);
    const auto chi = kruskal_wallis(a, b, PValueMethod::ChiSquare);
    s.exact_worst = std::max(s.exact_worst, std::abs(exact.p_value - oracle_p));
    s.chi_worst = std::max(s.chi_worst, std::abs(chi.p_value - oracle_p));
    s.h_worst = std::max(s.h_worst, std::abs(exact.statistic - oracle::kw_statistic(a, b)));
  }
  return s;
}

Outcome parser_trace() {
  auto stopwords = read_token_list(kToy / "stopwords.txt");
  auto cues = read_token_list(kToy / "negations.txt");
  ResourceBundle res;
  res.stopwords = {stopwords.begin(), stopwords.end()};
  res.negation_cues = {cues.begin(), cues.end()};
  res.antonyms = read_antonyms(kToy / "antonyms.tsv");
  res.pos_lexicon = read_pos_lexicon(kToy / "pos.tsv");
  res.lemma_map = read_lemma_map(kToy / "lemma_map.tsv");
  auto emb = EmbeddingTable::load(kToy / "embeddings.txt");
  auto records = read_ert_csv(kToy / "ert.csv");
  auto lexicon = build_lexicon(records, res.lemma_map);
  TextMapper mapper(lexicon, emb, res);

  auto doc = mapper.map("trace", "I am not happy");
  const bool trace_ok = doc.assignments.size() == 1 && doc.assignments[0].lemma == "sad" && doc.assignments[0].negated;

  std::ifstream in(kToy / "sentences.txt");
  std::vector<std::string> sentences;
  for (std::string line; std::getline(in, line);)
    if (!trim(line).empty()) sentences.push_back(line);
  const std::array<double, 3> thresholds{0.3, 0.5, 0.7};
  std::array<std::size_t, 3> totals{};
  bool monotone = sentences.size() == 20;
  for (const auto& s : sentences) {
    std::array<std::size_t, 3> counts{};
    for (std::size_t t = 0; t < 3; ++t) {
      ParserOptions opts;
      opts.threshold = thresholds[t];
      auto parsed = mapper.map("s", s, opts);
      counts[t] = parsed.assignments.size();
      totals[t] += counts[t];
      for (const auto& a : parsed.assignments)
        if (a.similarity < thresholds[t]) monotone = false;
    }
    if (!(counts[0] >= counts[1] && counts[1] >= counts[2])) monotone = false;
  }
  const bool strict = totals[2] < totals[1];
  return pass_if(trace_ok && monotone && strict,
                 std::string("'I am not happy' -> ") +
                     (doc.assignments.empty() ? "nothing" : doc.assignments[0].lemma +
                                                                (doc.assignments[0].negated ? " (negated)" : "")) +
                     "; assignments at 0.3/0.5/0.7 over " + std::to_string(sentences.size()) +
                     " sentences: " + std::to_string(totals[0]) + "/" + std::to_string(totals[1]) + "/" +
                     std::to_string(totals[2]));
}

Outcome synthetic_end_to_end() {
  auto corpus = oracle::synthetic_corpus(606, 200, 400);
  auto net = build_network(corpus.edges);
  auto lexicon = build_lexicon(corpus.records, {});
  auto weights = compute_position_weights(corpus.records, net);
  FeatureExtractor extractor(net, lexicon, weights);
  const auto mask = FeatureMask::AllExceptFear;
  auto x = feature_matrix(extractor, corpus.records, mask);
  std::vector<double> y;
  for (const auto& r : corpus.records) y.push_back(r.depression);

  // Seeded 75/25 split.
  std::vector<std::size_t> order(x.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(606, "split"));
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_train = x.rows * 3 / 4;
  std::vector<std::size_t> tr(order.begin(), order.begin() + n_train), te(order.begin() + n_train, order.end());
  auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    for (auto i : idx) out.push_back(y[i]);
    return out;
  };
  TrainConfig tc;
  tc.seed = derive_seed(606, "dropout");
  auto trained = train(init_model(x.cols, derive_seed(606, "init")), select_rows(x, tr), pick(tr), tc);
  auto metrics = evaluate(predict(trained.model, select_rows(x, te)), pick(te));
  const double r = metrics.pearson_r.value_or(0.0);
  return pass_if(r >= 0.8, "400 recalls, 200 nodes, dim " + std::to_string(x.cols) + ", held-out R = " + fmt(r) +
                               ", mse = " + fmt(metrics.mse));
}

Outcome cv_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("dasent-accept-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto run = [&](const std::string& name) {
    std::ostringstream out, err;
    int rc = run_command({"cv", "--config", (kToy / "config.json").string(), "--epochs", "25", "--repeats", "2",
                          "--seed", "9", "--out", (dir / name).string()},
                         out, err);
    if (rc != 0) throw std::runtime_error("cv failed: " + err.str());
    std::ifstream in(dir / name, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  auto a = run("a.csv");
  auto b = run("b.csv");
  fs::remove_all(dir);
  return pass_if(!a.empty() && a == b, "two cv runs, seed 9: " + std::to_string(a.size()) + " bytes, " +
                                           (a == b ? "identical" : "DIFFERENT"));
}

// ---------------------------------------------------------------------------
// Data-conditional criteria

struct StudyData {
  PipelineConfig cfg;
};

std::optional<StudyData> study_data() {
  const char* path = std::getenv("DASENT_DATA_CONFIG");
  if (!path || !*path) return std::nullopt;
  return StudyData{load_config(path)};
}

Outcome network_scale(const StudyData& d) {
  if (!d.cfg.has("edge_list")) return {Status::Skip, "config has no paths.edge_list"};
  auto net = build_network(read_edge_list(d.cfg.require("edge_list", "acceptance")), 2);
  const double dn = std::abs(static_cast<double>(net.node_count()) - 34298.0) / 34298.0;
  const double de = std::abs(static_cast<double>(net.edge_count()) - 328936.0) / 328936.0;
  return pass_if(dn <= 0.01 && de <= 0.01, std::to_string(net.node_count()) + " nodes / " +
                                               std::to_string(net.edge_count()) + " edges (targets 34298 / 328936)");
}

struct CvRow {
  double r2 = 0.0;
};

double cv_r2(const Corpus& corpus, const FeatureExtractor& ex, const PipelineConfig& cfg, FeatureMask mask,
             Construct c) {
  auto x = feature_matrix(ex, corpus.records, mask);
  std::vector<double> y;
  for (const auto& r : corpus.records) y.push_back(r.score(c));
  CvConfig cv;
  cv.folds = cfg.folds;
  cv.repeats = cfg.repeats;
  cv.master_seed = cfg.seed;
  cv.train = cfg.train;
  cv.threads = cfg.threads;
  return cross_validate(x, y, cv).r_squared.mean;
}

Outcome bow_baselines(const Corpus& corpus, const FeatureExtractor& ex, const PipelineConfig& cfg) {
  std::array<double, 3> w{}, b{};
  for (std::size_t i = 0; i < 3; ++i) {
    w[i] = cv_r2(corpus, ex, cfg, FeatureMask::WeightedBow, kConstructs[i]);
    b[i] = cv_r2(corpus, ex, cfg, FeatureMask::BinaryBow, kConstructs[i]);
  }
  bool ok = std::abs(w[0] - 0.40) <= 0.10 && std::abs(b[0] - 0.19) <= 0.10;
  for (std::size_t i = 0; i < 3; ++i) ok = ok && w[i] > b[i];
  return pass_if(ok, "weighted R2 D/A/S " + fmt(w[0], 3) + "/" + fmt(w[1], 3) + "/" + fmt(w[2], 3) +
                         ", binary " + fmt(b[0], 3) + "/" + fmt(b[1], 3) + "/" + fmt(b[2], 3));
}

Outcome mask_comparison(const Corpus& corpus, const FeatureExtractor& ex, const PipelineConfig& cfg) {
  const double d = cv_r2(corpus, ex, cfg, FeatureMask::AllExceptFear, Construct::Depression);
  const double a = cv_r2(corpus, ex, cfg, FeatureMask::AllExceptFear, Construct::Anxiety);
  const double s = cv_r2(corpus, ex, cfg, FeatureMask::AllExceptFear, Construct::Stress);
  const double f = cv_r2(corpus, ex, cfg, FeatureMask::FearOnly, Construct::Anxiety);
  const bool ok = std::abs(d - 0.49) <= 0.10 && std::abs(a - 0.23) <= 0.10 && std::abs(s - 0.28) <= 0.10 && f > 0.0;
  return pass_if(ok, "final mask R2 D/A/S " + fmt(d, 3) + "/" + fmt(a, 3) + "/" + fmt(s, 3) + ", FEAR_ONLY anxiety " +
                         fmt(f, 3));
}

Outcome correlation_signs(const Corpus& corpus, const FeatureExtractor& ex) {
  const std::array<double, 3> published{-0.341, -0.218, -0.357};
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> dist, score;
    for (const auto& r : corpus.records) {
      auto fv = ex.extract(r.words, FeatureMask::AllDistances);
      dist.push_back(fv.dist[i]);
      score.push_back(r.score(kConstructs[i]));
    }
    const double r = pearson(dist, score).statistic;
    ok = ok && r < 0 && std::abs(r - published[i]) <= 0.15;
    detail += std::string(i ? ", " : "") + std::string(construct_name(kConstructs[i])) + " " + fmt(r, 3);
  }
  return pass_if(ok, detail);
}

Outcome notes_validation(const Corpus& corpus, const FeatureExtractor& ex, const PipelineConfig& cfg) {
  const char* notes = std::getenv("DASENT_NOTES_CORPUS");
  if (!notes || !*notes) return {Status::Skip, "DASENT_NOTES_CORPUS not set"};
  for (const char* key : {"embeddings", "pos_lexicon", "vad"})
    if (!cfg.has(key)) return {Status::Skip, std::string("config has no paths.") + key};
  ResourceBundle res;
  auto set_of = [&](const char* key) {
    std::unordered_set<std::string> s;
    if (cfg.has(key))
      for (auto& t : read_token_list(cfg.require(key, "acceptance"))) s.insert(t);
    return s;
  };
  res.stopwords = set_of("stopwords");
  res.negation_cues = set_of("negations");
  if (cfg.has("antonyms")) res.antonyms = read_antonyms(cfg.require("antonyms", "acceptance"));
  res.pos_lexicon = read_pos_lexicon(cfg.require("pos_lexicon", "acceptance"));
  res.lemma_map = corpus.lexicon.lemma_map();
  auto emb = EmbeddingTable::load(cfg.require("embeddings", "acceptance"));
  auto vad = read_vad(cfg.require("vad", "acceptance"));
  TextMapper mapper(corpus.lexicon, emb, res);

  auto x = feature_matrix(ex, corpus.records, cfg.mask);
  std::map<Construct, MlpModel> models;
  for (auto c : kConstructs) {
    std::vector<double> y;
    for (const auto& r : corpus.records) y.push_back(r.score(c));
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train-dropout", static_cast<std::uint64_t>(c));
    models.emplace(c, train(init_model(x.cols, derive_seed(cfg.seed, "train-init", static_cast<std::uint64_t>(c))),
                            x, y, tc)
                          .model);
  }
  std::ifstream in(notes);
  std::vector<ScoredDocument> docs;
  ParserOptions opts;
  opts.threshold = cfg.threshold;
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    auto parsed = mapper.map("note-" + std::to_string(++n), line, opts);
    auto fv = document_to_features(parsed, ex, cfg.mask);
    ScoredDocument d;
    d.score.id = parsed.id;
    d.score.depression = forward(models.at(Construct::Depression), fv.values);
    d.score.anxiety = forward(models.at(Construct::Anxiety), fv.values);
    d.score.stress = forward(models.at(Construct::Stress), fv.values);
    for (const auto& a : parsed.assignments) d.words.push_back(normalize_lemma(a.word, res.lemma_map));
    for (const auto& s : parsed.skipped) d.words.push_back(normalize_lemma(s.token, res.lemma_map));
    docs.push_back(std::move(d));
  }
  auto report = validate_corpus(docs, vad, cfg.tipping, cfg.histogram_bin_width);
  bool ok = true;
  std::string detail = "R_DA/R_DS/R_AS ";
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& c = report.correlations[i];
    ok = ok && c && c->statistic > 0;
    detail += (i ? "/" : "") + (c ? fmt(c->statistic, 3) : std::string("undefined"));
  }
  bool valence_ok = false;
  for (const auto& t : report.tests)
    if (t.construct == Construct::Depression && t.dimension == "valence" && t.high_median && t.low_median) {
      valence_ok = *t.high_median < *t.low_median;
      detail += ", depression valence median high " + fmt(*t.high_median, 3) + " vs low " + fmt(*t.low_median, 3);
    }
  return pass_if(ok && valence_ok, detail);
}

}  // namespace

int main() {
  int failures = 0;
  auto print = [&](const std::string& id, const std::string& name, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    if (o.status == Status::Fail) ++failures;
    std::cout << '[' << tag << "] " << id << ' ' << name << ": " << o.detail << " (" << fmt(secs, 3) << "s)"
              << std::endl;
  };

  print("1", "graph oracle", graph_oracle);
  print("2", "gradient check", gradient_oracle);
  print("3", "entropy/coverage oracle", walk_oracle);
  print("4a", "pearson example", pearson_example);
  print("4b", "kruskal-wallis H example", kw_example);
  KwSweep sweep;
  print("4c", "kruskal-wallis p vs exact permutation (50 cases, n<=12)", [&] {
    sweep = kw_sweep();
    return pass_if(sweep.exact_worst <= 0.02 && sweep.h_worst <= 1e-9,
                   "exact-mode max |dp| " + fmt(sweep.exact_worst, 3) + " (limit 0.02), max |dH| " +
                       fmt(sweep.h_worst, 3));
  });
  std::cout << "[INFO] 4c chi-square approximation max |dp| vs exact permutation: " << fmt(sweep.chi_worst, 3)
            << std::endl;
  print("5", "parser trace and threshold monotonicity", parser_trace);
  print("6", "synthetic end-to-end", synthetic_end_to_end);
  print("7", "cv determinism", cv_determinism);

  std::optional<StudyData> data;
  std::string data_error;
  try {
    data = study_data();
  } catch (const std::exception& e) {
    data_error = e.what();
  }
  if (!data) {
    const std::string why = data_error.empty() ? "DASENT_DATA_CONFIG not set" : "data config error: " + data_error;
    for (const char* c : {"8 network scale", "9 bow baseline r2", "10 feature mask r2",
                          "11 correlation signs", "12 notes corpus validation"})
      std::cout << "[SKIP] " << c << ": " << why << std::endl;
  } else {
    print("8", "network scale", [&] { return network_scale(*data); });
    std::optional<Corpus> corpus;
    std::string corpus_error;
    try {
      corpus = load_corpus(data->cfg, "acceptance");
    } catch (const std::exception& e) {
      corpus_error = e.what();
    }
    if (!corpus) {
      for (const char* c : {"9 bow baseline r2", "10 feature mask r2", "11 correlation signs",
                            "12 notes corpus validation"})
        std::cout << "[FAIL] " << c << ": could not load corpus: " << corpus_error << std::endl;
      failures += 4;
    } else {
      FeatureExtractor ex(corpus->network, corpus->lexicon, corpus->weights, data->cfg.entropy);
      print("9", "bow baseline r2", [&] { return bow_baselines(*corpus, ex, data->cfg); });
      print("10", "feature mask r2", [&] { return mask_comparison(*corpus, ex, data->cfg); });
      print("11", "correlation signs", [&] { return correlation_signs(*corpus, ex); });
      print("12", "notes corpus validation", [&] { return notes_validation(*corpus, ex, data->cfg); });
    }
  }
  std::cout << (failures == 0 ? "acceptance: all criteria passed or skipped" : "acceptance: failures present")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
