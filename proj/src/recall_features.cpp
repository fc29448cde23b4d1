#include "dasent/recall_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dasent/errors.hpp"
#include "dasent/text_util.hpp"

namespace dasent {

std::string_view construct_name(Construct c) {
  switch (c) {
    case Construct::Depression: return "depression";
    case Construct::Anxiety: return "anxiety";
    case Construct::Stress: return "stress";
  }
  return "?";
}

Construct parse_construct(std::string_view name) {
  for (auto c : kConstructs)
    if (construct_name(c) == name) return c;
  throw ConfigError("unknown construct '" + std::string(name) + "' (expected depression, anxiety or stress)");
}

double RecallRecord::score(Construct c) const {
  switch (c) {
    case Construct::Depression: return depression;
    case Construct::Anxiety: return anxiety;
    case Construct::Stress: return stress;
  }
  return 0.0;
}

std::vector<RecallRecord> read_ert_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("ERT csv: missing header");
  auto header = split_csv_line(line);
  for (auto& h : header) h = normalize_token(h);
  const std::size_t expected = kRecallLength + 4;
  bool ok = header.size() == expected && header.front() == "id" && header[expected - 3] == "depression" &&
            header[expected - 2] == "anxiety" && header[expected - 1] == "stress";
  for (std::size_t j = 0; ok && j < kRecallLength; ++j) ok = header[1 + j] == "w" + std::to_string(j + 1);
  if (!ok) throw InputError("ERT csv: header must be id,w1,...,w10,depression,anxiety,stress");

  std::vector<RecallRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    auto where = "ERT csv line " + std::to_string(line_no);
    if (fields.size() != expected)
      throw InputError(where + ": expected " + std::to_string(expected) + " fields, got " +
                       std::to_string(fields.size()));
    RecallRecord r;
    r.id = std::string(trim(fields[0]));
    for (std::size_t j = 0; j < kRecallLength; ++j) {
      auto w = normalize_token(fields[1 + j]);
      if (w.empty()) throw InputError(where + ": empty word w" + std::to_string(j + 1));
      r.words.push_back(std::move(w));
    }
    double* targets[3] = {&r.depression, &r.anxiety, &r.stress};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& f = fields[expected - 3 + k];
      try {
        std::size_t used = 0;
        *targets[k] = std::stod(f, &used);
        if (used != f.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InputError(where + ": bad score '" + f + "'");
      }
      if (!(*targets[k] >= 0.0 && *targets[k] <= kMaxScore))
        throw InputError(where + ": score " + f + " outside [0, 21]");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RecallRecord> read_ert_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_ert_csv(in);
}

LemmaMap read_lemma_map(std::istream& in) {
  LemmaMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t, '\t');
    if (fields.size() != 2 || normalize_token(fields[0]).empty() || normalize_token(fields[1]).empty())
      throw InputError("lemma map line " + std::to_string(line_no) + ": expected form<TAB>lemma");
    map.emplace(normalize_token(fields[0]), normalize_token(fields[1]));
  }
  return map;
}

LemmaMap read_lemma_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_lemma_map(in);
}

Lexicon::Lexicon(std::vector<std::string> lemmas, LemmaMap lemma_map)
    : lemmas_(std::move(lemmas)), lemma_map_(std::move(lemma_map)) {
  for (std::size_t i = 0; i < lemmas_.size(); ++i)
    if (!index_.emplace(lemmas_[i], i).second) throw InputError("duplicate lemma '" + lemmas_[i] + "'");
}

std::optional<std::size_t> Lexicon::find(std::string_view lemma) const {
  auto it = index_.find(std::string(lemma));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string normalize_lemma(std::string_view word, const LemmaMap& lemma_map) {
  auto folded = normalize_token(word);
  auto it = lemma_map.find(folded);
  return it == lemma_map.end() ? folded : it->second;
}

std::string normalize_lemma(std::string_view word, const Lexicon& lexicon) {
  return normalize_lemma(word, lexicon.lemma_map());
}

Lexicon build_lexicon(const std::vector<RecallRecord>& records, LemmaMap lemma_map) {
  if (records.empty()) throw InputError("cannot build a lexicon from zero records");
  std::set<std::string> lemmas;
  for (const auto& r : records)
    for (const auto& w : r.words) lemmas.insert(normalize_lemma(w, lemma_map));
  return Lexicon({lemmas.begin(), lemmas.end()}, std::move(lemma_map));
}

std::vector<RecallRecord> lemmatize(std::vector<RecallRecord> records, const LemmaMap& lemma_map) {
  for (auto& r : records)
    for (auto& w : r.words) w = normalize_lemma(w, lemma_map);
  return records;
}

double PositionWeights::at(std::size_t position) const {
  if (w.empty()) throw ConfigError("empty position weights");
  return w[std::min(position, w.size() - 1)];
}

double median(std::vector<double> values) {
  if (values.empty()) throw UndefinedValueError("median of an empty sample");
  auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

PositionWeights compute_position_weights(const std::vector<RecallRecord>& records, const SemanticNetwork& net) {
  if (records.empty()) throw InputError("cannot compute position weights from zero records");
  std::set<std::string> missing;
  std::size_t positions = 0;
  for (const auto& r : records) {
    positions = std::max(positions, r.words.size());
    for (const auto& w : r.words)
      if (!net.contains(w)) missing.insert(w);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw LookupError(*missing.begin(), "lemmas absent from network: " + list);
  }
  std::vector<double> medians(positions);
  for (std::size_t j = 0; j < positions; ++j) {
    std::vector<double> degrees;
    for (const auto& r : records)
      if (j < r.words.size()) degrees.push_back(static_cast<double>(degree(net, r.words[j])));
    medians[j] = median(std::move(degrees));
  }
  double total = 0.0;
  for (double m : medians) total += m;
  if (!(total > 0.0)) throw UndefinedValueError("all position medians are zero");
  PositionWeights out;
  for (double m : medians) {
    if (!(m > 0.0)) throw UndefinedValueError("zero median degree at a recall position");
    out.w.push_back(m / total);
  }
  return out;
}

BowResult bow(std::span<const std::string> recall, const Lexicon& lexicon) {
  BowResult out{std::vector<double>(lexicon.size(), 0.0), {}};
  for (const auto& token : recall) {
    if (auto k = lexicon.find(token))
      out.counts[*k] += 1.0;
    else
      out.skipped.push_back(token);
  }
  return out;
}

std::vector<double> weighted_bow(std::span<const std::string> recall, const Lexicon& lexicon,
                                 const PositionWeights& weights) {
  std::vector<double> out(lexicon.size(), 0.0);
  for (std::size_t j = 0; j < recall.size(); ++j)
    if (auto k = lexicon.find(recall[j])) out[*k] += weights.at(j);
  return out;
}

WalkDistances walk_distances(const SemanticNetwork& net, std::span<const std::string> recall) {
  WalkDistances out;
  std::vector<NodeId> ids;
  for (const auto& token : recall) {
    if (auto id = net.find(token))
      ids.push_back(*id);
    else
      ++out.unresolved_tokens;
  }
  for (std::size_t j = 0; j + 1 < ids.size(); ++j) {
    auto d = net.distance(ids[j], ids[j + 1]);
    if (d.reachable())
      out.steps.push_back(d.hops());
    else
      ++out.unreachable_pairs;
  }
  return out;
}

double coverage(const SemanticNetwork& net, std::span<const std::string> recall) {
  double total = 0.0;
  for (auto s : walk_distances(net, recall).steps) total += s;
  return total;
}

double shannon_entropy(std::span<const std::uint32_t> lengths) {
  if (lengths.empty()) return 0.0;
  std::map<std::uint32_t, std::size_t> freq;
  for (auto l : lengths) ++freq[l];
  const double n = static_cast<double>(lengths.size());
  double h = 0.0;
  for (const auto& [len, count] : freq) {
    double p = static_cast<double>(count) / n;
    h -= p * std::log(p);
  }
  return h;
}

double distance_entropy(const SemanticNetwork& net, std::span<const std::string> recall, EntropyMode mode) {
  if (mode == EntropyMode::ConsecutivePairs) return shannon_entropy(walk_distances(net, recall).steps);
  std::vector<NodeId> ids;
  for (const auto& token : recall)
    if (auto id = net.find(token)) ids.push_back(*id);
  std::vector<std::uint32_t> lengths;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    auto row = net.distances_from(ids[a]);
    for (std::size_t b = a + 1; b < ids.size(); ++b)
      if (row[ids[b]] != kUnreachable) lengths.push_back(row[ids[b]]);
  }
  return shannon_entropy(lengths);
}

namespace {

constexpr std::array<FeatureMask, 8> kAllMasks = {
    FeatureMask::BinaryBow,        FeatureMask::WeightedBow,  FeatureMask::AllDistances,
    FeatureMask::DasDistancesOnly, FeatureMask::HappySadOnly, FeatureMask::CoverEntropyOnly,
    FeatureMask::AllExceptFear,    FeatureMask::FearOnly,
};

}  // namespace

std::string_view mask_name(FeatureMask mask) {
  switch (mask) {
    case FeatureMask::BinaryBow: return "BINARY_BOW";
    case FeatureMask::WeightedBow: return "WEIGHTED_BOW";
    case FeatureMask::AllDistances: return "ALL_DISTANCES";
    case FeatureMask::DasDistancesOnly: return "DAS_DISTANCES_ONLY";
    case FeatureMask::HappySadOnly: return "HAPPYSAD_ONLY";
    case FeatureMask::CoverEntropyOnly: return "COVER_ENTROPY_ONLY";
    case FeatureMask::AllExceptFear: return "ALL_EXCEPT_FEAR";
    case FeatureMask::FearOnly: return "FEAR_ONLY";
  }
  return "?";
}

FeatureMask parse_mask(std::string_view name) {
  for (auto m : kAllMasks)
    if (mask_name(m) == name) return m;
  throw ConfigError("unknown feature mask '" + std::string(name) + "'");
}

std::span<const FeatureMask> all_masks() { return kAllMasks; }

MaskSpec mask_spec(FeatureMask mask) {
  MaskSpec s;
  auto set_targets = [&s](std::initializer_list<Target> ts) {
    for (auto t : ts) s.targets[static_cast<std::size_t>(t)] = true;
  };
  switch (mask) {
    case FeatureMask::BinaryBow:
      s.weighted = false;
      break;
    case FeatureMask::WeightedBow:
      break;
    case FeatureMask::AllDistances:
      s.coverage = s.entropy = true;
      set_targets({Target::Depression, Target::Anxiety, Target::Stress, Target::Happy, Target::Sad, Target::Fear});
      break;
    case FeatureMask::DasDistancesOnly:
      s.coverage = s.entropy = true;
      set_targets({Target::Depression, Target::Anxiety, Target::Stress});
      break;
    case FeatureMask::HappySadOnly:
      s.coverage = s.entropy = true;
      set_targets({Target::Happy, Target::Sad});
      break;
    case FeatureMask::CoverEntropyOnly:
      s.coverage = s.entropy = true;
      break;
    case FeatureMask::AllExceptFear:
      s.coverage = s.entropy = true;
      set_targets({Target::Depression, Target::Anxiety, Target::Stress, Target::Happy, Target::Sad});
      break;
    case FeatureMask::FearOnly:
      set_targets({Target::Fear});
      break;
  }
  return s;
}

bool l2_normalize(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (!(ss > 0.0)) return false;
  double inv = 1.0 / std::sqrt(ss);
  for (double& x : v) x *= inv;
  return true;
}

FeatureExtractor::FeatureExtractor(const SemanticNetwork& net, const Lexicon& lexicon, PositionWeights weights,
                                   EntropyMode entropy)
    : net_(&net), lexicon_(&lexicon), weights_(std::move(weights)), entropy_(entropy) {
  for (std::size_t t = 0; t < kTargets.size(); ++t) target_rows_[t] = net.distances_from(net.index_of(kTargets[t]));
}

std::size_t FeatureExtractor::dimension(FeatureMask mask) const { return feature_names(mask).size(); }

std::vector<std::string> FeatureExtractor::feature_names(FeatureMask mask) const {
  auto spec = mask_spec(mask);
  std::vector<std::string> names;
  for (const auto& lemma : lexicon_->lemmas()) names.push_back("bow_" + lemma);
  if (spec.coverage) names.emplace_back("coverage");
  if (spec.entropy) names.emplace_back("entropy");
  for (std::size_t t = 0; t < kTargets.size(); ++t)
    if (spec.targets[t]) names.push_back("dist_" + std::string(kTargets[t]));
  return names;
}

FeatureVector FeatureExtractor::extract(std::span<const std::string> recall, FeatureMask mask) const {
  auto spec = mask_spec(mask);
  FeatureVector fv;
  fv.mask = mask;
  auto counts = bow(recall, *lexicon_);
  fv.skip_list = std::move(counts.skipped);
  fv.bow = spec.weighted ? weighted_bow(recall, *lexicon_, weights_) : std::move(counts.counts);

  auto walk = walk_distances(*net_, recall);
  fv.unresolved_tokens = walk.unresolved_tokens;
  fv.unreachable_pairs = walk.unreachable_pairs;
  for (auto s : walk.steps) fv.coverage += s;
  fv.entropy = entropy_ == EntropyMode::ConsecutivePairs ? shannon_entropy(walk.steps)
                                                         : distance_entropy(*net_, recall, entropy_);
  for (const auto& token : recall) {
    auto id = net_->find(token);
    if (!id) continue;
    for (std::size_t t = 0; t < kTargets.size(); ++t) {
      auto d = target_rows_[t][*id];
      if (d != kUnreachable) fv.dist[t] += d;
    }
  }

  fv.values = fv.bow;
  if (spec.coverage) fv.values.push_back(fv.coverage);
  if (spec.entropy) fv.values.push_back(fv.entropy);
  for (std::size_t t = 0; t < kTargets.size(); ++t)
    if (spec.targets[t]) fv.values.push_back(fv.dist[t]);
  fv.zero_vector = !l2_normalize(fv.values);
  fv.low_confidence = recall.empty();
  return fv;
}

FeatureVector feature_vector(std::span<const std::string> recall, const FeatureExtractor& extractor,
                             FeatureMask mask) {
  return extractor.extract(recall, mask);
}

}  // namespace dasent
