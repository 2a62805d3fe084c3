#include "lexshare/tagstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lexshare/error.hpp"
#include "lexshare/rng.hpp"

namespace lexshare {

namespace {

// Order-independent sum: the same multiset of terms always yields the same double.
double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  long double acc = 0.0L;
  for (double t : terms) acc += t;
  return static_cast<double>(acc);
}

void require_nonempty(std::uint64_t total, const char* what) {
  if (total == 0) throw UndefinedError(std::string(what) + " of an empty distribution is undefined");
}

void require_layer(const Corpus& corpus, const std::string& layer) {
  if (!corpus.empty() && !corpus.has_layer(layer)) throw LookupError("corpus has no layer '" + layer + "'");
}

}  // namespace

void TagDistribution::add(const std::string& tag, std::uint64_t n) {
  counts[tag] += n;
  total += n;
}

double TagDistribution::probability(const std::string& tag) const {
  if (total == 0) return 0.0;
  const auto it = counts.find(tag);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

void JointTagDistribution::add(const std::string& a, const std::string& b, std::uint64_t n) {
  counts[{a, b}] += n;
  total += n;
  marginal_a.add(a, n);
  marginal_b.add(b, n);
}

JointTagDistribution JointTagDistribution::transposed() const {
  JointTagDistribution t;
  for (const auto& [key, n] : counts) t.counts[{key.second, key.first}] = n;
  t.total = total;
  t.marginal_a = marginal_b;
  t.marginal_b = marginal_a;
  return t;
}

TagDistribution tag_distribution(const Corpus& corpus, const std::string& layer) {
  require_layer(corpus, layer);
  TagDistribution d;
  for (const auto& s : corpus.sentences)
    for (const auto& tag : s.layer(layer)) d.add(tag);
  return d;
}

JointTagDistribution joint_distribution(const Corpus& corpus, const std::string& layer_a, const std::string& layer_b) {
  require_layer(corpus, layer_a);
  require_layer(corpus, layer_b);
  JointTagDistribution j;
  for (const auto& s : corpus.sentences) {
    const auto a = s.layer(layer_a);
    const auto b = s.layer(layer_b);
    for (std::size_t i = 0; i < a.size(); ++i) j.add(a[i], b[i]);
  }
  return j;
}

double entropy(const TagDistribution& d) {
  require_nonempty(d.total, "entropy");
  const auto total = static_cast<double>(d.total);
  std::vector<double> terms;
  for (const auto& [tag, n] : d.counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / total;
    terms.push_back(-p * std::log2(p));
  }
  return canonical_sum(terms);
}

double mutual_information(const JointTagDistribution& j) {
  require_nonempty(j.total, "mutual information");
  const auto total = static_cast<double>(j.total);
  std::vector<double> terms;
  for (const auto& [key, n] : j.counts) {
    if (n == 0) continue;
    const auto na = static_cast<double>(j.marginal_a.counts.at(key.first));
    const auto nb = static_cast<double>(j.marginal_b.counts.at(key.second));
    // p(a,b) / (p(a) p(b)) = n N / (na nb); the product in the denominator commutes exactly.
    const double ratio = (static_cast<double>(n) * total) / (na * nb);
    terms.push_back(static_cast<double>(n) / total * std::log2(ratio));
  }
  return std::max(0.0, canonical_sum(terms));
}

double conditional_entropy(const JointTagDistribution& j) {
  require_nonempty(j.total, "conditional entropy");
  const auto total = static_cast<double>(j.total);
  std::vector<double> terms;
  for (const auto& [key, n] : j.counts) {
    if (n == 0) continue;
    const auto na = static_cast<double>(j.marginal_a.counts.at(key.first));
    terms.push_back(-static_cast<double>(n) / total * std::log2(static_cast<double>(n) / na));
  }
  return std::max(0.0, canonical_sum(terms));
}

double joint_entropy(const JointTagDistribution& j) {
  require_nonempty(j.total, "joint entropy");
  const auto total = static_cast<double>(j.total);
  std::vector<double> terms;
  for (const auto& [key, n] : j.counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / total;
    terms.push_back(-p * std::log2(p));
  }
  return canonical_sum(terms);
}

std::vector<double> mid_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t k = i;
    while (k + 1 < order.size() && xs[order[k + 1]] == xs[order[i]]) ++k;
    const double rank = (static_cast<double>(i) + static_cast<double>(k)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= k; ++m) ranks[order[m]] = rank;
    i = k + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedError("correlation is undefined for a constant sample");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult spearman_rho(std::span<const double> xs, std::span<const double> ys, const PermutationTest& test) {
  if (xs.size() != ys.size())
    throw ArityError("spearman_rho: sample sizes differ (" + std::to_string(xs.size()) + " vs " +
                     std::to_string(ys.size()) + ")");
  if (xs.size() < 3) throw ArityError("spearman_rho needs at least 3 pairs, got " + std::to_string(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw UndefinedError("spearman_rho: non-finite sample");

  const auto rx = mid_ranks(xs);
  auto ry = mid_ranks(ys);
  CorrelationResult result;
  result.n = xs.size();
  result.rho = pearson(rx, ry);
  result.permutations = test.permutations;
  result.seed = test.seed;

  Rng rng(test.seed);
  const double threshold = std::abs(result.rho) - 1e-12;
  std::uint64_t extreme = 0;
  for (std::uint64_t k = 0; k < test.permutations; ++k) {
    rng.shuffle(ry);
    if (std::abs(pearson(rx, ry)) >= threshold) ++extreme;
  }
  result.p_value = static_cast<double>(extreme + 1) / static_cast<double>(test.permutations + 1);
  return result;
}

}  // namespace lexshare
