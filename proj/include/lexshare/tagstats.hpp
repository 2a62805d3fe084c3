#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lexshare/corpus.hpp"

namespace lexshare {

// Exact plug-in counts; probabilities are only formed when a statistic is evaluated.
struct TagDistribution {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(const std::string& tag, std::uint64_t n = 1);
  double probability(const std::string& tag) const;
  bool operator==(const TagDistribution&) const = default;
};

struct JointTagDistribution {
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
  std::uint64_t total = 0;
  TagDistribution marginal_a;
  TagDistribution marginal_b;

  void add(const std::string& a, const std::string& b, std::uint64_t n = 1);
  JointTagDistribution transposed() const;
  bool operator==(const JointTagDistribution&) const = default;
};

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::uint64_t permutations = 0;
  std::uint64_t seed = 0;
};

// Two-sided permutation test settings for spearman_rho. p = (1 + #{|rho_perm| >= |rho|}) / (1 + permutations).
struct PermutationTest {
  std::uint64_t permutations = 10000;
  std::uint64_t seed = 20180501;
};

TagDistribution tag_distribution(const Corpus& corpus, const std::string& layer);
JointTagDistribution joint_distribution(const Corpus& corpus, const std::string& layer_a,
                                        const std::string& layer_b);

// All in bits.
double entropy(const TagDistribution& d);
double mutual_information(const JointTagDistribution& j);
// H(b | a) for a joint over (a, b).
double conditional_entropy(const JointTagDistribution& j);
double joint_entropy(const JointTagDistribution& j);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> mid_ranks(std::span<const double> xs);
double pearson(std::span<const double> xs, std::span<const double> ys);

CorrelationResult spearman_rho(std::span<const double> xs, std::span<const double> ys,
                               const PermutationTest& test = {});

}  // namespace lexshare
