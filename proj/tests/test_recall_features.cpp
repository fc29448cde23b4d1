#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dasent/errors.hpp"
#include "dasent/oracle/oracles.hpp"
#include "dasent/recall_features.hpp"
#include "dasent/rng.hpp"

using namespace dasent;

namespace {

SemanticNetwork graph(std::vector<std::pair<std::string, std::string>> edges) {
  std::vector<AssociationTriple> t;
  for (auto& [a, b] : edges) t.push_back({a, b, 2});
  return build_network(t);
}

RecallRecord record(std::vector<std::string> words, double d = 0, double a = 0, double s = 0) {
  RecallRecord r;
  r.id = "r";
  r.words = std::move(words);
  r.depression = d;
  r.anxiety = a;
  r.stress = s;
  return r;
}

// Network that contains the six targets plus extra words.
SemanticNetwork target_net() {
  return graph({{"depression", "sad"},
                {"sad", "happy"},
                {"happy", "joy"},
                {"sad", "fear"},
                {"fear", "anxiety"},
                {"anxiety", "stress"},
                {"stress", "work"},
                {"joy", "hope"}});
}

}  // namespace

TEST_CASE("normalize_lemma examples") {
  LemmaMap m{{"depressed", "depression"}, {"worried", "worry"}};
  CHECK(normalize_lemma("depressed", m) == "depression");
  CHECK(normalize_lemma("anger", m) == "anger");
  CHECK(normalize_lemma("Worried", m) == "worry");
  CHECK(normalize_lemma(" WORRIED ", m) == "worry");
}

TEST_CASE("build_lexicon examples") {
  std::vector<std::string> ten{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  CHECK(build_lexicon({record(ten)}, {}).size() == 10);
  std::vector<std::string> other{"a", "b", "c", "k", "l", "m", "n", "o", "p", "q"};
  auto lex = build_lexicon({record(ten), record(other)}, {});
  CHECK(lex.size() == 17);
  CHECK(std::is_sorted(lex.lemmas().begin(), lex.lemmas().end()));
  CHECK_THROWS_AS(build_lexicon({}, {}), InputError);
  auto mapped = build_lexicon({record({"Depressed", "depression", "sad"})}, {{"depressed", "depression"}});
  CHECK(mapped.lemmas() == std::vector<std::string>{"depression", "sad"});
}

TEST_CASE("ERT csv parsing") {
  std::istringstream ok(
      "id,w1,w2,w3,w4,w5,w6,w7,w8,w9,w10,depression,anxiety,stress\n"
      "p1,Sad,a,b,c,d,e,f,g,h,i,3,4.5,21\n");
  auto recs = read_ert_csv(ok);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].words.size() == 10);
  CHECK(recs[0].words[0] == "sad");
  CHECK(recs[0].score(Construct::Anxiety) == 4.5);
  std::istringstream range(
      "id,w1,w2,w3,w4,w5,w6,w7,w8,w9,w10,depression,anxiety,stress\n"
      "p1,a,a,b,c,d,e,f,g,h,i,3,4,22\n");
  CHECK_THROWS_AS(read_ert_csv(range), InputError);
  std::istringstream header("id,w1,depression\n");
  CHECK_THROWS_AS(read_ert_csv(header), InputError);
  std::istringstream short_row(
      "id,w1,w2,w3,w4,w5,w6,w7,w8,w9,w10,depression,anxiety,stress\n"
      "p1,a,b,3,4,5\n");
  CHECK_THROWS_AS(read_ert_csv(short_row), InputError);
}

TEST_CASE("median uses the mean of the two middle values") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(median({7}) == 7.0);
}

TEST_CASE("position weights: uniform degrees give 0.1 each") {
  // Ring of 10 nodes: every degree is 2.
  std::vector<std::pair<std::string, std::string>> e;
  std::vector<std::string> words;
  for (int i = 0; i < 10; ++i) {
    words.push_back("w" + std::to_string(i));
    e.emplace_back("w" + std::to_string(i), "w" + std::to_string((i + 1) % 10));
  }
  auto net = graph(e);
  auto w = compute_position_weights({record(words)}, net);
  REQUIRE(w.size() == 10);
  for (double x : w.w) CHECK(x == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("position weights: two-position toy gives 0.75/0.25") {
  // hub has degree 3, leaf degree 1.
  auto net = graph({{"hub", "x"}, {"hub", "y"}, {"hub", "z"}});
  auto w = compute_position_weights({record({"hub", "x"})}, net);
  REQUIRE(w.size() == 2);
  CHECK(w.w[0] == doctest::Approx(0.75));
  CHECK(w.w[1] == doctest::Approx(0.25));
  CHECK(w.at(5) == w.w[1]);  // past the end reuses the last weight
}

TEST_CASE("position weights are proportional to position medians") {
  // Star centers with k leaves have degree k.
  std::vector<std::pair<std::string, std::string>> e;
  std::vector<double> med{5, 4, 4, 3, 3, 2, 2, 2, 1, 1};
  std::vector<std::string> words;
  for (int j = 0; j < 10; ++j) {
    std::string c = "c" + std::to_string(j);
    words.push_back(c);
    for (int k = 0; k < med[j]; ++k) e.emplace_back(c, c + "_leaf" + std::to_string(k));
  }
  auto w = compute_position_weights({record(words)}, graph(e));
  const double total = std::accumulate(med.begin(), med.end(), 0.0);
  double sum = 0;
  for (int j = 0; j < 10; ++j) {
    CHECK(w.w[j] == doctest::Approx(med[j] / total));
    sum += w.w[j];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("position weights list every missing lemma") {
  auto net = graph({{"a", "b"}});
  try {
    compute_position_weights({record({"a", "zz"}), record({"qq", "b"})}, net);
    FAIL("expected LookupError");
  } catch (const LookupError& e) {
    std::string what = e.what();
    CHECK(what.find("zz") != std::string::npos);
    CHECK(what.find("qq") != std::string::npos);
  }
}

TEST_CASE("swapping equal-degree words across records leaves weights unchanged") {
  auto net = graph({{"a", "x"}, {"b", "y"}, {"a", "b"}, {"c", "z"}});
  // deg(a) == deg(b) == 2
  auto w1 = compute_position_weights({record({"a", "c"}), record({"c", "b"})}, net);
  auto w2 = compute_position_weights({record({"b", "c"}), record({"c", "a"})}, net);
  CHECK(w1.w == w2.w);
}

TEST_CASE("bow examples") {
  Lexicon lex({"anger", "hope", "sad"}, {});
  std::vector<std::string> seq{"anger", "hope", "anger"};
  CHECK(bow(seq, lex).counts == std::vector<double>{2, 1, 0});
  std::vector<std::string> none{"x", "y"};
  auto r = bow(none, lex);
  CHECK(r.counts == std::vector<double>{0, 0, 0});
  CHECK(r.skipped == none);
}

TEST_CASE("bow count conservation") {
  Rng rng(4);
  Lexicon lex({"a", "b", "c", "d"}, {});
  for (int t = 0; t < 100; ++t) {
    std::vector<std::string> seq;
    for (int i = 0; i < 10; ++i) seq.push_back(std::string(1, static_cast<char>('a' + rng.below(7))));
    auto r = bow(seq, lex);
    CHECK(std::accumulate(r.counts.begin(), r.counts.end(), 0.0) + r.skipped.size() == seq.size());
  }
}

TEST_CASE("weighted_bow examples") {
  Lexicon lex({"a", "b"}, {});
  PositionWeights w{{0.75, 0.25}};
  std::vector<std::string> ab{"a", "b"}, aa{"a", "a"};
  CHECK(weighted_bow(ab, lex, w) == std::vector<double>{0.75, 0.25});
  CHECK(weighted_bow(aa, lex, w)[0] == doctest::Approx(1.0));
  PositionWeights uniform{std::vector<double>(10, 0.1)};
  Lexicon lex3({"a", "b", "c"}, {});
  std::vector<std::string> seq{"a", "c", "a", "q", "b", "a", "c", "c", "a", "b"};
  auto wb = weighted_bow(seq, lex3, uniform);
  auto b = bow(seq, lex3).counts;
  for (std::size_t k = 0; k < 3; ++k) CHECK(wb[k] == doctest::Approx(0.1 * b[k]).epsilon(1e-15));
  // Positions beyond the weight vector reuse the last weight.
  std::vector<std::string> longer{"b", "b", "a"};
  CHECK(weighted_bow(longer, lex, w) == std::vector<double>{0.25, 1.0});
}

TEST_CASE("coverage examples") {
  auto abc = graph({{"a", "b"}, {"b", "c"}});
  std::vector<std::string> one{"a"}, acb{"a", "c", "b"}, aab{"a", "a", "b"};
  CHECK(coverage(abc, one) == 0.0);
  CHECK(coverage(abc, acb) == 3.0);
  CHECK(coverage(graph({{"a", "b"}}), aab) == 1.0);
  // Unknown tokens are dropped before pairing; unreachable pairs skipped.
  auto split = graph({{"a", "b"}, {"c", "d"}});
  std::vector<std::string> w{"a", "zz", "b", "c", "d"};
  CHECK(coverage(split, w) == 2.0);
  auto wd = walk_distances(split, w);
  CHECK(wd.unresolved_tokens == 1);
  CHECK(wd.unreachable_pairs == 1);
}

TEST_CASE("coverage properties") {
  Rng rng(21);
  for (int t = 0; t < 30; ++t) {
    auto net = build_network(oracle::random_graph(20, 0.2, rng.next()));
    std::vector<std::string> walk;
    for (int i = 0; i < 10; ++i) walk.push_back("n" + std::to_string(rng.below(20)));
    auto rev = walk;
    std::reverse(rev.begin(), rev.end());
    CHECK(coverage(net, walk) == coverage(net, rev));
    auto steps = walk_distances(net, walk).steps;
    if (!steps.empty()) CHECK(coverage(net, walk) >= *std::max_element(steps.begin(), steps.end()));
  }
}

TEST_CASE("distance_entropy examples") {
  // Path a-b-c-d-e.
  auto p = graph({{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "e"}});
  std::vector<std::string> equal{"a", "b", "c", "d"};  // 1,1,1
  CHECK(distance_entropy(p, equal) == 0.0);
  std::vector<std::string> one_two{"a", "b", "d"};  // 1,2
  CHECK(distance_entropy(p, one_two) == doctest::Approx(std::log(2.0)));
  std::vector<std::string> w1122{"a", "b", "c", "e", "c"};  // 1,1,2,2
  CHECK(distance_entropy(p, w1122) == doctest::Approx(std::log(2.0)));
  std::vector<std::string> single{"a"};
  CHECK(distance_entropy(p, single) == 0.0);
  std::vector<std::uint32_t> lens{1, 2, 2};
  CHECK(shannon_entropy(lens) == doctest::Approx(-(1.0 / 3) * std::log(1.0 / 3) - (2.0 / 3) * std::log(2.0 / 3)));
}

TEST_CASE("entropy bounds and oracle agreement") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    auto net = build_network(oracle::random_graph(20, 0.15, rng.next()));
    auto fw = oracle::floyd_warshall(net);
    std::vector<std::string> walk;
    for (int i = 0; i < 10; ++i) walk.push_back("n" + std::to_string(rng.below(22)));
    auto steps = walk_distances(net, walk).steps;
    std::set<std::uint32_t> distinct(steps.begin(), steps.end());
    double e = distance_entropy(net, walk);
    CHECK(e >= 0.0);
    if (!distinct.empty()) CHECK(e <= std::log(static_cast<double>(distinct.size())) + 1e-12);
    CHECK(std::abs(e - oracle::entropy_from_matrix(fw, net, walk)) <= 1e-12);
    CHECK(std::abs(distance_entropy(net, walk, EntropyMode::AllPairs) -
                   oracle::entropy_from_matrix(fw, net, walk, true)) <= 1e-12);
  }
}

TEST_CASE("mask names round-trip") {
  for (auto m : all_masks()) CHECK(parse_mask(mask_name(m)) == m);
  CHECK(all_masks().size() == 8);
  CHECK_THROWS_AS(parse_mask("NOT_A_MASK"), ConfigError);
}

TEST_CASE("feature vector assembly") {
  auto net = target_net();
  Lexicon lex({"happy", "joy", "sad", "work"}, {});
  PositionWeights w{std::vector<double>(10, 0.1)};
  FeatureExtractor ex(net, lex, w);
  std::vector<std::string> recall{"sad", "joy"};

  SUBCASE("ALL_EXCEPT_FEAR is BOW + coverage + entropy + five distances") {
    CHECK(ex.dimension(FeatureMask::AllExceptFear) == 4 + 7);
    auto names = ex.feature_names(FeatureMask::AllExceptFear);
    CHECK(names.front() == "bow_happy");
    CHECK(names[4] == "coverage");
    CHECK(names[5] == "entropy");
    CHECK(names.back() == "dist_sad");
    CHECK(std::find(names.begin(), names.end(), "dist_fear") == names.end());
    auto fv = ex.extract(recall, FeatureMask::AllExceptFear);
    double norm = 0;
    for (double v : fv.values) norm += v * v;
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-12);
    CHECK(fv.coverage == 2.0);  // sad-happy-joy
    CHECK(fv.target_distance(Target::Depression) == 1 + 3);
    CHECK(fv.target_distance(Target::Fear) == 1 + 3);
  }
  SUBCASE("dimensions per mask") {
    CHECK(ex.dimension(FeatureMask::BinaryBow) == 4);
    CHECK(ex.dimension(FeatureMask::WeightedBow) == 4);
    CHECK(ex.dimension(FeatureMask::AllDistances) == 4 + 8);
    CHECK(ex.dimension(FeatureMask::DasDistancesOnly) == 4 + 5);
    CHECK(ex.dimension(FeatureMask::HappySadOnly) == 4 + 4);
    CHECK(ex.dimension(FeatureMask::CoverEntropyOnly) == 4 + 2);
    CHECK(ex.dimension(FeatureMask::FearOnly) == 4 + 1);
    for (auto m : all_masks()) CHECK(ex.feature_names(m).size() == ex.dimension(m));
  }
  SUBCASE("binary BOW uses raw counts before normalization") {
    std::vector<std::string> rep{"sad", "sad", "joy"};
    auto fv = ex.extract(rep, FeatureMask::BinaryBow);
    CHECK(fv.values[2] == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(fv.values[1] == doctest::Approx(1.0 / std::sqrt(5.0)));
  }
  SUBCASE("all-zero vector passes through with the flag") {
    std::vector<std::string> nothing{"unknownword"};
    auto fv = ex.extract(nothing, FeatureMask::WeightedBow);
    CHECK(fv.zero_vector);
    for (double v : fv.values) CHECK(v == 0.0);
    CHECK(fv.skip_list == nothing);
  }
  SUBCASE("feature_vector wrapper matches extract") {
    CHECK(feature_vector(recall, ex, FeatureMask::AllDistances).values ==
          ex.extract(recall, FeatureMask::AllDistances).values);
  }
}

TEST_CASE("extractor requires every target in the network") {
  auto net = graph({{"sad", "happy"}});
  Lexicon lex({"sad"}, {});
  CHECK_THROWS_AS(FeatureExtractor(net, lex, PositionWeights{{1.0}}), LookupError);
}

TEST_CASE("l2_normalize") {
  std::vector<double> v{3, 4};
  CHECK(l2_normalize(v));
  CHECK(v[0] == doctest::Approx(0.6));
  std::vector<double> z{0, 0};
  CHECK_FALSE(l2_normalize(z));
  CHECK(z == std::vector<double>{0, 0});
}
