#include "dasent/oracle/oracles.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <limits>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>

#include "dasent/rng.hpp"

namespace dasent::oracle {

DistanceMatrix floyd_warshall(const SemanticNetwork& net) {
  const std::size_t n = net.node_count();
  const std::uint64_t inf = std::numeric_limits<std::uint64_t>::max() / 4;
  std::vector<std::vector<std::uint64_t>> d(n, std::vector<std::uint64_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [u, v] : net.edges()) {
    d[u][v] = 1;
    d[v][u] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  DistanceMatrix out(n, std::vector<std::uint32_t>(n, kUnreachable));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (d[i][j] < inf) out[i][j] = static_cast<std::uint32_t>(d[i][j]);
  return out;
}

namespace {

std::vector<std::size_t> resolve(const SemanticNetwork& net, std::span<const std::string> walk) {
  std::vector<std::size_t> ids;
  for (const auto& w : walk)
    if (auto id = net.find(w)) ids.push_back(*id);
  return ids;
}

std::vector<std::uint32_t> pair_lengths(const DistanceMatrix& d, const std::vector<std::size_t>& ids, bool all_pairs) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (!all_pairs && j != i + 1) break;
      auto len = d[ids[i]][ids[j]];
      if (len != kUnreachable) out.push_back(len);
    }
  }
  return out;
}

}  // namespace

double coverage_from_matrix(const DistanceMatrix& d, const SemanticNetwork& net, std::span<const std::string> walk) {
  double total = 0.0;
  for (auto len : pair_lengths(d, resolve(net, walk), false)) total += len;
  return total;
}

double entropy_from_matrix(const DistanceMatrix& d, const SemanticNetwork& net, std::span<const std::string> walk,
                           bool all_pairs) {
  auto lengths = pair_lengths(d, resolve(net, walk), all_pairs);
  if (lengths.empty()) return 0.0;
  std::map<std::uint32_t, double> freq;
  for (auto l : lengths) freq[l] += 1.0;
  double h = 0.0;
  for (const auto& [len, count] : freq) {
    double p = count / static_cast<double>(lengths.size());
    h -= p * std::log(p);
  }
  return h;
}

double kw_statistic(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double n = static_cast<double>(pooled.size());
  auto rank = [&](double x) {
    double less = 0, equal = 0;
    for (double y : pooled) {
      if (y < x) less += 1;
      else if (y == x) equal += 1;
    }
    return less + (equal + 1.0) / 2.0;
  };
  double ra = 0, rb = 0;
  for (double x : a) ra += rank(x);
  for (double x : b) rb += rank(x);
  double h = 12.0 / (n * (n + 1.0)) * (ra * ra / a.size() + rb * rb / b.size()) - 3.0 * (n + 1.0);
  std::map<double, double> ties;
  for (double x : pooled) ties[x] += 1;
  double t = 0;
  for (const auto& [v, c] : ties) t += c * c * c - c;
  double corr = 1.0 - t / (n * n * n - n);
  if (corr <= 0.0) return 0.0;
  return h / corr;
}

double kw_permutation_p(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  if (n > 22) throw std::invalid_argument("kw_permutation_p: sample too large to enumerate");
  const double observed = kw_statistic(a, b);
  std::size_t total = 0, extreme = 0;
  std::vector<double> ga, gb;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
    ga.clear();
    gb.clear();
    for (std::size_t i = 0; i < n; ++i) (mask >> i & 1u ? ga : gb).push_back(pooled[i]);
    ++total;
    if (kw_statistic(ga, gb) >= observed - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

std::vector<AssociationTriple> random_graph(std::size_t nodes, double edge_prob, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AssociationTriple> out;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = i + 1; j < nodes; ++j)
      if (rng.uniform() < edge_prob) out.push_back({"n" + std::to_string(i), "n" + std::to_string(j), 2});
  return out;
}

PreactivationMargin preactivation_margin(const MlpModel& model, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end());
  PreactivationMargin m{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& layer : model.layers) {
    std::vector<double> z(layer.out);
    for (std::size_t j = 0; j < layer.out; ++j) {
      double acc = layer.bias[j];
      for (std::size_t i = 0; i < layer.in; ++i) acc += a[i] * layer.weights[i * layer.out + j];
      z[j] = acc;
      m.min_abs = std::min(m.min_abs, std::abs(acc));
    }
    if (&layer == &model.layers.back()) m.output = z.front();
    for (auto& v : z) v = std::max(v, 0.0);
    a = std::move(z);
  }
  return m;
}

SyntheticCorpus synthetic_corpus(std::uint64_t seed, std::size_t nodes, std::size_t recalls) {
  if (nodes < kTargets.size() + kRecallLength) throw std::invalid_argument("synthetic_corpus: too few nodes");
  Rng rng(seed);
  std::vector<std::string> names;
  for (auto t : kTargets) names.emplace_back(t);
  for (std::size_t i = names.size(); i < nodes; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%03zu", i);
    names.emplace_back(buf);
  }
  // Random spanning tree keeps the graph connected; extra edges add cycles.
  std::vector<std::size_t> perm(nodes);
  for (std::size_t i = 0; i < nodes; ++i) perm[i] = i;
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::size_t>> adj(nodes);
  SyntheticCorpus corpus;
  auto add_edge = [&](std::size_t u, std::size_t v) {
    if (u == v || std::find(adj[u].begin(), adj[u].end(), v) != adj[u].end()) return;
    adj[u].push_back(v);
    adj[v].push_back(u);
    corpus.edges.push_back({names[u], names[v], 2});
  };
  for (std::size_t i = 1; i < nodes; ++i) add_edge(perm[i], perm[static_cast<std::size_t>(rng.below(i))]);
  for (std::size_t e = 0; e < nodes; ++e)
    add_edge(static_cast<std::size_t>(rng.below(nodes)), static_cast<std::size_t>(rng.below(nodes)));

  auto bfs = [&](std::size_t src) {
    std::vector<std::uint32_t> dist(nodes, kUnreachable);
    std::queue<std::size_t> q;
    dist[src] = 0;
    q.push(src);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : adj[u])
        if (dist[v] == kUnreachable) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    return dist;
  };
  std::array<std::vector<std::uint32_t>, 3> target_dist;
  for (std::size_t c = 0; c < 3; ++c) target_dist[c] = bfs(c);

  // Each recall has a latent closeness to one random target: with probability
  // u a word is drawn from that target's 2-hop neighbourhood.
  std::array<std::vector<std::size_t>, 3> near;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t v = kTargets.size(); v < nodes; ++v)
      if (target_dist[c][v] <= 2) near[c].push_back(v);
  std::vector<std::array<double, 3>> sums;
  for (std::size_t r = 0; r < recalls; ++r) {
    RecallRecord rec;
    rec.id = "s" + std::to_string(r);
    const std::size_t focus = static_cast<std::size_t>(rng.below(3));
    const double u = rng.uniform();
    std::array<double, 3> s{};
    for (std::size_t k = 0; k < kRecallLength; ++k) {
      std::size_t v;
      if (rng.uniform() < u && !near[focus].empty())
        v = near[focus][static_cast<std::size_t>(rng.below(near[focus].size()))];
      else
        v = kTargets.size() + static_cast<std::size_t>(rng.below(nodes - kTargets.size()));
      rec.words.push_back(names[v]);
      for (std::size_t c = 0; c < 3; ++c) s[c] += target_dist[c][v];
    }
    sums.push_back(s);
    corpus.records.push_back(std::move(rec));
  }
  for (std::size_t c = 0; c < 3; ++c) {
    double lo = sums[0][c], hi = sums[0][c];
    for (const auto& s : sums) {
      lo = std::min(lo, s[c]);
      hi = std::max(hi, s[c]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t r = 0; r < recalls; ++r) {
      double clean = kMaxScore * (hi - sums[r][c]) / span;
      double noisy = clean + 0.1 * kMaxScore * rng.normal();
      double score = std::clamp(noisy, 0.0, kMaxScore);
      auto& rec = corpus.records[r];
      (c == 0 ? rec.depression : c == 1 ? rec.anxiety : rec.stress) = score;
    }
  }
  return corpus;
}

}  // namespace dasent::oracle
