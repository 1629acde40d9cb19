#include "dana/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dana {

LogUniformSampler::LogUniformSampler(const std::vector<int>& degrees, bool degree_order) {
  int n = static_cast<int>(degrees.size());
  if (n < 1) throw ValidationError("LogUniformSampler: empty vertex set");
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  if (degree_order) {
    std::stable_sort(order_.begin(), order_.end(), [&degrees](int a, int b) {
      if (degrees[a] != degrees[b]) return degrees[a] > degrees[b];
      return a < b;
    });
  }
  rank_of_.resize(n);
  for (int r = 0; r < n; ++r) rank_of_[order_[r]] = r;
  cdf_.resize(n);
  double denom = std::log(static_cast<double>(n) + 1.0);
  for (int r = 0; r < n; ++r) cdf_[r] = std::log(static_cast<double>(r) + 2.0) / denom;
  cdf_.back() = 1.0;
}

double LogUniformSampler::rank_prob(int rank) const {
  double denom = std::log(static_cast<double>(size()) + 1.0);
  return (std::log(rank + 2.0) - std::log(rank + 1.0)) / denom;
}

double LogUniformSampler::vertex_prob(int vertex) const { return rank_prob(rank_of_[vertex]); }

int LogUniformSampler::draw(std::mt19937_64& rng) const {
  double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  int rank = static_cast<int>(it - cdf_.begin());
  if (rank >= size()) rank = size() - 1;
  return order_[rank];
}

std::vector<int> LogUniformSampler::sample_candidates(int count, std::mt19937_64& rng) const {
  if (count < 1 || count > size())
    throw ValidationError("sample_candidates: count " + std::to_string(count) +
                          " outside [1," + std::to_string(size()) + "]");
  std::vector<bool> taken(size(), false);
  std::vector<int> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    int v = draw(rng);
    if (!taken[v]) {
      taken[v] = true;
      out.push_back(v);
    }
  }
  return out;
}

std::vector<int> sample_vertex_batch(int n, int u, std::mt19937_64& rng) {
  if (u < 1) throw ValidationError("sample_vertex_batch: batch size must be >= 1");
  std::vector<int> out(u);
  for (int i = 0; i < u; ++i) out[i] = static_cast<int>(rng() % static_cast<uint64_t>(n));
  return out;
}

std::vector<int> sample_uniform_negatives(int n, int c, int exclude, std::mt19937_64& rng) {
  if (n < 2) throw ValidationError("sample_uniform_negatives: need n >= 2");
  std::vector<int> out(c);
  for (int i = 0; i < c; ++i) {
    int v = static_cast<int>(rng() % static_cast<uint64_t>(n - 1));
    if (v >= exclude) ++v;
    out[i] = v;
  }
  return out;
}

std::vector<int> sample_subset(int n, int z, std::mt19937_64& rng) {
  if (z > n) throw ValidationError("sample_subset: subset larger than population");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < z; ++i) {
    int j = i + static_cast<int>(rng() % static_cast<uint64_t>(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(z);
  return pool;
}

}  // namespace dana
