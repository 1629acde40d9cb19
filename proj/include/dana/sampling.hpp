#pragma once

#include <random>
#include <vector>

#include "dana/errors.hpp"

namespace dana {

// Log-uniform distribution over sampling ranks: P(rank r) =
// (ln(r+2) - ln(r+1)) / ln(n+1). Ranks are assigned by degree descending
// (ties by ascending index) so high-degree vertices are drawn more often;
// degree_order=false keeps raw index order.
class LogUniformSampler {
 public:
  LogUniformSampler(const std::vector<int>& degrees, bool degree_order = true);

  int size() const { return static_cast<int>(order_.size()); }
  double rank_prob(int rank) const;
  double vertex_prob(int vertex) const;
  const std::vector<double>& cdf() const { return cdf_; }

  int draw(std::mt19937_64& rng) const;  // returns a vertex index

  // Distinct vertices, without replacement, by rejection.
  std::vector<int> sample_candidates(int count, std::mt19937_64& rng) const;

 private:
  std::vector<int> order_;  // rank -> vertex
  std::vector<int> rank_of_;
  std::vector<double> cdf_;  // cumulative over ranks
};

// U indices uniform over [0,n), with replacement.
std::vector<int> sample_vertex_batch(int n, int u, std::mt19937_64& rng);

// C indices uniform over [0,n) \ {exclude}, with replacement.
std::vector<int> sample_uniform_negatives(int n, int c, int exclude, std::mt19937_64& rng);

// Subset of size z drawn without replacement (partial Fisher-Yates).
std::vector<int> sample_subset(int n, int z, std::mt19937_64& rng);

}  // namespace dana
