#include "dasent/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "dasent/errors.hpp"
#include "dasent/text_util.hpp"

namespace dasent {

namespace {

constexpr std::size_t kExactLimit = 100;

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Midranks (1-based) of the pooled sample, doubled so they are integers.
std::vector<long long> doubled_midranks(const std::vector<double>& pooled, double& tie_term) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pooled[a] < pooled[b]; });
  std::vector<long long> ranks(n);
  tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // positions i..j (0-based) share rank ((i+1)+(j+1))/2
    const long long twice = static_cast<long long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = twice;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

double h_statistic(long long twice_rank_sum_a, long long twice_total, std::size_t na, std::size_t nb,
                   double tie_correction) {
  const double n = static_cast<double>(na + nb);
  const double ra = static_cast<double>(twice_rank_sum_a) / 2.0;
  const double rb = static_cast<double>(twice_total - twice_rank_sum_a) / 2.0;
  double h = 12.0 / (n * (n + 1.0)) * (ra * ra / static_cast<double>(na) + rb * rb / static_cast<double>(nb)) -
             3.0 * (n + 1.0);
  h /= tie_correction;
  return std::max(0.0, h);
}

double exact_p(const std::vector<long long>& ranks, std::size_t na, long long observed_twice_sum) {
  // dp[k][s]: number of size-k subsets with doubled rank sum s.
  long long max_sum = 0;
  for (auto r : ranks) max_sum += r;
  std::vector<std::vector<double>> dp(na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  dp[0][0] = 1.0;
  std::size_t seen = 0;
  for (auto r : ranks) {
    ++seen;
    for (std::size_t k = std::min(na, seen); k >= 1; --k) {
      auto& dst = dp[k];
      const auto& src = dp[k - 1];
      for (long long s = max_sum; s >= r; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
    }
  }
  // H is a convex function of the group-a rank sum centered at na(n+1)/2,
  // so "at least as extreme" is a distance comparison in doubled units.
  const long long n = static_cast<long long>(ranks.size());
  const long long center = static_cast<long long>(na) * (n + 1);
  const long long obs = std::llabs(observed_twice_sum - center);
  double extreme = 0.0, total = 0.0;
  for (long long s = 0; s <= max_sum; ++s) {
    double c = dp[na][static_cast<std::size_t>(s)];
    if (c == 0.0) continue;
    total += c;
    if (std::llabs(s - center) >= obs) extreme += c;
  }
  return extreme / total;
}

}  // namespace

StatResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson: series lengths differ");
  if (x.size() < 3) throw InputError("pearson: need at least 3 observations");
  if (is_constant(x) || is_constant(y)) throw UndefinedValueError("pearson: constant series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  StatResult out;
  out.n = {x.size()};
  out.statistic = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = n - 2.0;
  const double r2 = out.statistic * out.statistic;
  if (df <= 0.0) {
    out.p_value = 1.0;
  } else if (r2 >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t = std::abs(out.statistic) * std::sqrt(df / (1.0 - r2));
    boost::math::students_t dist(df);
    out.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
  }
  return out;
}

StatResult kruskal_wallis(std::span<const double> group_a, std::span<const double> group_b, PValueMethod method) {
  if (group_a.empty() || group_b.empty()) throw InputError("kruskal_wallis: both groups need at least one value");
  if (group_a.size() + group_b.size() < 3) throw InputError("kruskal_wallis: need at least 3 values combined");
  std::vector<double> pooled(group_a.begin(), group_a.end());
  pooled.insert(pooled.end(), group_b.begin(), group_b.end());
  for (double v : pooled)
    if (!std::isfinite(v)) throw InputError("kruskal_wallis: non-finite value");
  StatResult out;
  out.n = {group_a.size(), group_b.size()};
  if (is_constant(pooled)) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  const std::size_t na = group_a.size(), nb = group_b.size();
  const double n = static_cast<double>(pooled.size());
  double tie_term = 0.0;
  auto ranks = doubled_midranks(pooled, tie_term);
  const double correction = 1.0 - tie_term / (n * n * n - n);
  long long twice_a = 0, twice_total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    twice_total += ranks[i];
    if (i < na) twice_a += ranks[i];
  }
  out.statistic = h_statistic(twice_a, twice_total, na, nb, correction);
  if (method == PValueMethod::Exact) {
    if (pooled.size() > kExactLimit)
      throw ConfigError("exact Kruskal-Wallis p-value limited to " + std::to_string(kExactLimit) + " values");
    out.p_value = std::clamp(exact_p(ranks, na, twice_a), 0.0, 1.0);
  } else {
    boost::math::chi_squared dist(1.0);
    out.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, out.statistic)), 0.0, 1.0);
  }
  return out;
}

VadTable read_vad(std::istream& in) {
  VadTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = split(t, '\t');
    auto where = "VAD line " + std::to_string(line_no);
    if (f.size() != 3) throw InputError(where + ": expected token<TAB>valence<TAB>arousal");
    VadEntry e;
    try {
      e.valence = std::stod(f[1]);
      e.arousal = std::stod(f[2]);
    } catch (const std::exception&) {
      throw InputError(where + ": bad number");
    }
    if (!(e.valence >= 0.0 && e.valence <= 1.0) || !(e.arousal >= 0.0 && e.arousal <= 1.0))
      throw InputError(where + ": valence/arousal outside [0, 1]");
    auto token = normalize_token(f[0]);
    if (token.empty()) throw InputError(where + ": empty token");
    table.emplace(std::move(token), e);
  }
  return table;
}

VadTable read_vad(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_vad(in);
}

VadProfile vad_profile(std::span<const std::string> tokens, const VadTable& vad) {
  VadProfile p;
  std::vector<double> valence, arousal;
  for (const auto& t : tokens) {
    auto it = vad.find(t);
    if (it == vad.end()) continue;
    valence.push_back(it->second.valence);
    arousal.push_back(it->second.arousal);
  }
  p.matched = valence.size();
  p.coverage = tokens.empty() ? 0.0 : static_cast<double>(p.matched) / static_cast<double>(tokens.size());
  if (p.matched > 0) {
    p.median_valence = median(valence);
    p.median_arousal = median(arousal);
  }
  return p;
}

double TippingPoints::at(Construct c) const {
  switch (c) {
    case Construct::Depression: return depression;
    case Construct::Anxiety: return anxiety;
    case Construct::Stress: return stress;
  }
  return 0.0;
}

double DocumentScore::score(Construct c) const {
  switch (c) {
    case Construct::Depression: return depression;
    case Construct::Anxiety: return anxiety;
    case Construct::Stress: return stress;
  }
  return 0.0;
}

Partition partition_by_tipping(std::span<const DocumentScore> scores, const TippingPoints& tp, Construct construct) {
  Partition p;
  const double cut = tp.at(construct);
  for (const auto& s : scores) (s.score(construct) > cut ? p.high : p.low).push_back(s);
  return p;
}

ValidationReport validate_corpus(std::span<const ScoredDocument> docs, const VadTable& vad, const TippingPoints& tp,
                                 double histogram_bin_width, std::size_t min_docs_per_partition) {
  if (!(histogram_bin_width > 0.0)) throw ConfigError("histogram bin width must be > 0");
  ValidationReport report;
  std::array<std::vector<double>, 3> series;
  for (const auto& d : docs)
    for (std::size_t c = 0; c < 3; ++c) series[c].push_back(d.score.score(kConstructs[c]));

  constexpr std::array<std::pair<std::size_t, std::size_t>, 3> pairs = {{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      report.correlations[i] = pearson(series[pairs[i].first], series[pairs[i].second]);
    } catch (const std::exception& e) {
      report.correlation_notes[i] = std::string("skipped: ") + e.what();
    }
  }

  std::vector<DocumentScore> scores;
  for (const auto& d : docs) scores.push_back(d.score);
  const std::array<std::pair<Construct, bool>, 3> plan = {
      {{Construct::Depression, true}, {Construct::Anxiety, false}, {Construct::Stress, true}}};
  for (auto [construct, use_valence] : plan) {
    ValidationReport::PartitionTest test;
    test.construct = construct;
    test.dimension = use_valence ? "valence" : "arousal";
    std::vector<double> high, low;
    const double cut = tp.at(construct);
    for (const auto& d : docs) {
      bool is_high = d.score.score(construct) > cut;
      (is_high ? test.high_docs : test.low_docs)++;
      for (const auto& w : d.words) {
        auto it = vad.find(w);
        if (it == vad.end()) continue;
        (is_high ? high : low).push_back(use_valence ? it->second.valence : it->second.arousal);
      }
    }
    if (!high.empty()) test.high_median = median(high);
    if (!low.empty()) test.low_median = median(low);
    if (test.high_docs < min_docs_per_partition || test.low_docs < min_docs_per_partition) {
      test.note = "skipped: fewer than " + std::to_string(min_docs_per_partition) + " documents in a partition";
    } else if (high.empty() || low.empty()) {
      test.note = "skipped: no affect-rated words in a partition";
    } else {
      try {
        test.test = kruskal_wallis(high, low);
      } catch (const std::exception& e) {
        test.note = std::string("skipped: ") + e.what();
      }
    }
    report.tests.push_back(std::move(test));
  }

  for (std::size_t c = 0; c < 3; ++c) {
    auto& h = report.histograms[c];
    h.bin_width = histogram_bin_width;
    for (double v : series[c]) {
      auto bin = static_cast<std::size_t>(std::max(0.0, std::floor(v / histogram_bin_width)));
      if (h.counts.size() <= bin) h.counts.resize(bin + 1, 0);
      ++h.counts[bin];
    }
  }
  return report;
}

nlohmann::json ValidationReport::to_json() const {
  using nlohmann::json;
  auto stat = [](const StatResult& s) { return json{{"statistic", s.statistic}, {"p_value", s.p_value}, {"n", s.n}}; };
  json j;
  constexpr std::array<const char*, 3> labels = {"depression_anxiety", "depression_stress", "anxiety_stress"};
  json corr = json::object();
  for (std::size_t i = 0; i < 3; ++i)
    corr[labels[i]] = correlations[i] ? stat(*correlations[i]) : json{{"skipped", correlation_notes[i]}};
  j["correlations"] = std::move(corr);
  json tj = json::array();
  for (const auto& t : tests) {
    json e{{"construct", construct_name(t.construct)},
           {"dimension", t.dimension},
           {"high_docs", t.high_docs},
           {"low_docs", t.low_docs}};
    e["high_median"] = t.high_median ? json(*t.high_median) : json(nullptr);
    e["low_median"] = t.low_median ? json(*t.low_median) : json(nullptr);
    if (t.test) e["kruskal_wallis"] = stat(*t.test);
    if (!t.note.empty()) e["note"] = t.note;
    tj.push_back(std::move(e));
  }
  j["tests"] = std::move(tj);
  json hj = json::object();
  for (std::size_t c = 0; c < 3; ++c)
    hj[std::string(construct_name(kConstructs[c]))] = {{"bin_width", histograms[c].bin_width},
                                                       {"counts", histograms[c].counts}};
  j["histograms"] = std::move(hj);
  return j;
}

}  // namespace dasent
