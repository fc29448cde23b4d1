#include "dasent/text_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dasent/errors.hpp"
#include "dasent/text_util.hpp"

namespace dasent {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ShapeError("cosine similarity of vectors with " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()) + " entries");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (!(nu > 0.0) || !(nv > 0.0)) throw UndefinedValueError("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

bool EmbeddingTable::add(std::string token, std::vector<double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_)
    throw ShapeError("embedding for '" + token + "' has " + std::to_string(vec.size()) + " dims, expected " +
                     std::to_string(dim_));
  double ss = 0.0;
  for (double x : vec) ss += x * x;
  if (!(ss > 0.0)) {
    warnings_.push_back("dropped zero vector for '" + token + "'");
    return false;
  }
  if (index_.contains(token)) {
    warnings_.push_back("duplicate embedding for '" + token + "' ignored");
    return false;
  }
  index_.emplace(std::move(token), norms_.size());
  vectors_.insert(vectors_.end(), vec.begin(), vec.end());
  norms_.push_back(std::sqrt(ss));
  return true;
}

EmbeddingTable EmbeddingTable::load(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    std::istringstream fields{std::string(t)};
    std::string token;
    fields >> token;
    std::vector<double> vec;
    std::string num;
    while (fields >> num) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(num, &used));
        if (used != num.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InputError("embedding line " + std::to_string(line_no) + ": bad number '" + num + "'");
      }
    }
    if (line_no == 1 && vec.size() == 1 && token.find_first_not_of("0123456789") == std::string::npos &&
        vec[0] == std::floor(vec[0])) {
      continue;  // `count dim` header
    }
    if (vec.empty()) throw InputError("embedding line " + std::to_string(line_no) + ": no vector");
    try {
      table.add(normalize_token(token), std::move(vec));
    } catch (const ShapeError& e) {
      throw InputError("embedding line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load(in);
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(vectors_.data() + it->second * dim_, dim_);
}

std::optional<double> EmbeddingTable::similarity(std::string_view a, std::string_view b) const {
  auto ia = index_.find(std::string(a));
  auto ib = index_.find(std::string(b));
  if (ia == index_.end() || ib == index_.end()) return std::nullopt;
  const double* u = vectors_.data() + ia->second * dim_;
  const double* v = vectors_.data() + ib->second * dim_;
  double dot = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) dot += u[i] * v[i];
  return std::clamp(dot / (norms_[ia->second] * norms_[ib->second]), -1.0, 1.0);
}

std::string_view pos_name(Pos p) {
  switch (p) {
    case Pos::Noun: return "NOUN";
    case Pos::Adj: return "ADJ";
    case Pos::Adv: return "ADV";
    case Pos::Verb: return "VERB";
    case Pos::Other: return "OTHER";
  }
  return "OTHER";
}

Pos parse_pos(std::string_view tag) {
  if (tag.empty()) throw InputError("empty POS tag");
  std::string t(tag);
  for (auto& c : t) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto p : {Pos::Noun, Pos::Adj, Pos::Adv, Pos::Verb, Pos::Other})
    if (pos_name(p) == t) return p;
  // Penn Treebank tags.
  if (t.starts_with("NN")) return Pos::Noun;
  if (t.starts_with("JJ")) return Pos::Adj;
  if (t.starts_with("RB")) return Pos::Adv;
  if (t.starts_with("VB")) return Pos::Verb;
  return Pos::Other;  // PRON, DET, ADP, ...
}

bool is_content_pos(Pos p) { return p != Pos::Other; }

Pos ResourceBundle::pos_of(std::string_view token) const {
  auto it = pos_lexicon.find(std::string(token));
  if (it != pos_lexicon.end()) return it->second;
  it = pos_lexicon.find(normalize_lemma(token, lemma_map));
  return it == pos_lexicon.end() ? Pos::Other : it->second;
}

std::unordered_map<std::string, std::string> read_antonyms(std::istream& in) {
  std::unordered_map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = split(t, '\t');
    if (f.size() != 2 || normalize_token(f[0]).empty() || normalize_token(f[1]).empty())
      throw InputError("antonym line " + std::to_string(line_no) + ": expected word<TAB>antonym");
    out.emplace(normalize_token(f[0]), normalize_token(f[1]));
  }
  return out;
}

std::unordered_map<std::string, Pos> read_pos_lexicon(std::istream& in) {
  std::unordered_map<std::string, Pos> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = split(t, '\t');
    if (f.size() != 2) throw InputError("POS lexicon line " + std::to_string(line_no) + ": expected token<TAB>TAG");
    try {
      out.emplace(normalize_token(f[0]), parse_pos(trim(f[1])));
    } catch (const InputError& e) {
      throw InputError("POS lexicon line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::unordered_map<std::string, std::string> read_antonyms(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_antonyms(in);
}

std::unordered_map<std::string, Pos> read_pos_lexicon(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_pos_lexicon(in);
}

namespace {

bool is_word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) || c == '\'';
}

bool is_space_byte(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

void emit_word(std::string word, std::vector<std::string>& out) {
  // Strip quote-style apostrophes at the edges.
  while (!word.empty() && word.front() == '\'') word.erase(word.begin());
  while (!word.empty() && word.back() == '\'') word.pop_back();
  if (word.empty()) return;
  word = to_lower(word);
  if (word.size() > 3 && word.ends_with("n't")) {
    std::string stem = word.substr(0, word.size() - 3);
    if (stem == "ca") stem = "can";
    else if (stem == "wo") stem = "will";
    else if (stem == "sha") stem = "shall";
    out.push_back(std::move(stem));
    out.emplace_back("n't");
    return;
  }
  auto apos = word.find('\'');
  if (apos != std::string::npos && apos > 0) {
    out.push_back(word.substr(0, apos));
    out.push_back(word.substr(apos));
    return;
  }
  out.push_back(std::move(word));
}

}  // namespace

std::vector<std::vector<std::string>> segment_and_tokenize(std::string_view text) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  std::string word;
  auto flush_word = [&] {
    if (!word.empty()) emit_word(std::move(word), current);
    word.clear();
  };
  auto flush_sentence = [&] {
    flush_word();
    if (!current.empty()) sentences.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (is_word_byte(c)) {
      word.push_back(c);
      continue;
    }
    flush_word();
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_space_byte(text[i + 1])))
      flush_sentence();
  }
  flush_sentence();
  return sentences;
}

std::string_view skip_reason_name(SkipReason r) {
  switch (r) {
    case SkipReason::BelowThreshold: return "below-threshold";
    case SkipReason::NoAntonym: return "no-antonym";
    case SkipReason::NoEmbedding: return "no-embedding";
    case SkipReason::Filtered: return "filtered";
  }
  return "filtered";
}

TextMapper::TextMapper(const Lexicon& lexicon, const EmbeddingTable& embeddings, const ResourceBundle& resources)
    : lexicon_(&lexicon), embeddings_(&embeddings), resources_(&resources) {
  for (std::size_t k = 0; k < lexicon.size(); ++k) {
    if (embeddings.contains(lexicon.lemmas()[k]))
      candidates_.push_back(k);
    else
      missing_.push_back(lexicon.lemmas()[k]);
  }
}

std::optional<TextMapper::Match> TextMapper::best_match(const std::string& query, const ParserOptions& opts) const {
  const auto lemma = normalize_lemma(query, resources_->lemma_map);
  if (lexicon_->contains(query)) return Match{query, 1.0};
  if (lexicon_->contains(lemma)) return Match{lemma, 1.0};

  std::string probe = embeddings_->contains(query) ? query : lemma;
  if (!embeddings_->contains(probe)) return std::nullopt;

  std::vector<bool> allowed;
  if (opts.neighborhood) {
    if (auto src = opts.neighborhood->find(probe)) {
      auto dist = opts.neighborhood->distances_from(*src);
      allowed.assign(lexicon_->size(), false);
      for (std::size_t k = 0; k < lexicon_->size(); ++k) {
        auto id = opts.neighborhood->find(lexicon_->lemmas()[k]);
        allowed[k] = id && dist[*id] <= opts.neighborhood_hops;
      }
    }
  }

  std::optional<Match> best;
  // Candidates are in lexicographic order and only a strictly larger score
  // replaces the incumbent, so ties go to the smallest lemma.
  for (auto k : candidates_) {
    if (!allowed.empty() && !allowed[k]) continue;
    const auto& cand = lexicon_->lemmas()[k];
    double sim = *embeddings_->similarity(probe, cand);
    if (!best || sim > best->similarity) best = Match{cand, sim};
  }
  if (!best) return Match{std::string(), -1.0};
  return best;
}

ParsedDocument TextMapper::map(std::string_view id, std::string_view text, const ParserOptions& opts) const {
  if (!(opts.threshold > 0.0 && opts.threshold <= 1.0)) throw ConfigError("similarity threshold must be in (0, 1]");
  ParsedDocument doc;
  doc.id = std::string(id);
  std::size_t position = 0;
  for (const auto& sentence : segment_and_tokenize(text)) {
    bool negated = false;
    for (const auto& token : sentence) {
      const std::size_t pos = position++;
      if (resources_->negation_cues.contains(token)) {
        negated = true;
        doc.skipped.push_back({token, SkipReason::Filtered, pos});
        continue;
      }
      if (resources_->stopwords.contains(token) || !is_content_pos(resources_->pos_of(token))) {
        doc.skipped.push_back({token, SkipReason::Filtered, pos});
        continue;
      }
      std::string query = token;
      if (negated) {
        auto it = resources_->antonyms.find(token);
        if (it == resources_->antonyms.end())
          it = resources_->antonyms.find(normalize_lemma(token, resources_->lemma_map));
        if (it == resources_->antonyms.end()) {
          doc.skipped.push_back({token, SkipReason::NoAntonym, pos});
          continue;
        }
        query = it->second;
      }
      auto match = best_match(query, opts);
      if (!match) {
        doc.skipped.push_back({token, SkipReason::NoEmbedding, pos});
        continue;
      }
      if (match->lemma.empty() || match->similarity < opts.threshold) {
        doc.skipped.push_back({token, SkipReason::BelowThreshold, pos});
        continue;
      }
      doc.mapped_sequence.push_back(match->lemma);
      doc.assignments.push_back({token, match->lemma, match->similarity, negated, pos});
      negated = false;
    }
  }
  return doc;
}

ParsedDocument map_document(std::string_view text, const Lexicon& lexicon, const EmbeddingTable& embeddings,
                            const ResourceBundle& resources, double threshold) {
  ParserOptions opts;
  opts.threshold = threshold;
  return TextMapper(lexicon, embeddings, resources).map("", text, opts);
}

FeatureVector document_to_features(const ParsedDocument& parsed, const FeatureExtractor& extractor,
                                   FeatureMask mask) {
  auto fv = extractor.extract(parsed.mapped_sequence, mask);
  fv.low_confidence = parsed.mapped_sequence.empty();
  return fv;
}

}  // namespace dasent
