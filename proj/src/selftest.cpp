#include "dasent/selftest.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "dasent/mlp.hpp"
#include "dasent/oracle/oracles.hpp"
#include "dasent/rng.hpp"
#include "dasent/semnet.hpp"
#include "dasent/stats.hpp"
#include "dasent/text_parser.hpp"

namespace dasent {

namespace {

bool report(std::ostream& out, const char* name, bool ok, const std::string& detail) {
  out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
  return ok;
}

bool check_bfs(std::ostream& out) {
  std::size_t mismatches = 0;
  for (std::uint64_t g = 0; g < 20; ++g) {
    auto net = build_network(oracle::random_graph(15, 0.15, derive_seed(7, "selftest-graph", g)));
    auto fw = oracle::floyd_warshall(net);
    for (NodeId i = 0; i < net.node_count(); ++i) {
      auto row = net.distances_from(i);
      for (NodeId j = 0; j < net.node_count(); ++j)
        if (row[j] != fw[i][j]) ++mismatches;
    }
  }
  return report(out, "bfs", mismatches == 0, std::to_string(mismatches) + " mismatches vs Floyd-Warshall");
}

bool check_gradient(std::ostream& out) {
  auto model = init_model(40, 3);
  Rng rng(5);
  std::vector<double> x(40);
  for (auto& v : x) v = rng.uniform();
  double err = gradient_check(model, x, 3.0);
  std::ostringstream s;
  s << "max relative error " << err;
  return report(out, "gradient", err <= 1e-4, s.str());
}

bool check_stats(std::ostream& out) {
  std::vector<double> a{1, 2, 3}, b{4, 5, 6}, c{1, 2, 4};
  auto kw = kruskal_wallis(a, b);
  auto r = pearson(a, c);
  bool ok = std::abs(kw.statistic - 3.857) <= 1e-3 && std::abs(r.statistic - 0.98198) <= 1e-4;
  std::ostringstream s;
  s << "H " << kw.statistic << ", r " << r.statistic;
  return report(out, "stats", ok, s.str());
}

bool check_parser(std::ostream& out) {
  EmbeddingTable emb;
  emb.add("happy", {1.0, 0.1, 0.0});
  emb.add("sad", {0.0, 1.0, 0.1});
  emb.add("glad", {0.95, 0.2, 0.1});
  ResourceBundle res;
  res.stopwords = {"i", "am"};
  res.negation_cues = {"not", "n't"};
  res.antonyms = {{"happy", "sad"}};
  res.pos_lexicon = {{"happy", Pos::Adj}, {"sad", Pos::Adj}, {"glad", Pos::Adj}};
  Lexicon lex({"happy", "sad"}, {});
  TextMapper mapper(lex, emb, res);
  auto doc = mapper.map("t", "I am not happy.");
  bool ok = doc.assignments.size() == 1 && doc.assignments[0].lemma == "sad" && doc.assignments[0].negated;
  return report(out, "parser", ok, ok ? "'I am not happy' -> sad (negated)" : "unexpected mapping");
}

}  // namespace

bool run_selftest(std::ostream& out) {
  bool ok = true;
  ok &= check_bfs(out);
  ok &= check_gradient(out);
  ok &= check_stats(out);
  ok &= check_parser(out);
  out << (ok ? "selftest passed" : "selftest FAILED") << '\n';
  return ok;
}

}  // namespace dasent
