#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dana/tensor.hpp"

namespace dana {

// Per test anchor, 1-based rank of the true counterpart in each direction,
// under descending cosine similarity with ties broken by ascending index.
struct RankTable {
  std::vector<int> a_to_b;
  std::vector<int> b_to_a;
};

RankTable rank_anchors(const DenseMatrix& ra, const DenseMatrix& rb,
                       const std::vector<std::pair<int, int>>& test_pairs);

double hits_at_k(const RankTable& t, int k);
double mrr(const RankTable& t);

struct LinkpredMetrics {
  double map = 0.0;
  std::vector<std::pair<int, double>> recall_at;  // (k, recall)
};

LinkpredMetrics linkpred_metrics(const DenseMatrix& r,
                                 const std::vector<std::pair<int, int>>& train_edges,
                                 const std::vector<std::pair<int, int>>& test_edges,
                                 const std::vector<int>& ks);

struct ProbeResult {
  double accuracy = 0.0;
  // Predicted domain (0 = A, 1 = B) for every vertex, A rows first.
  std::vector<int> predictions;
};

// Post-hoc linear separability diagnostic: logistic probe trained by 500
// full-batch gradient steps at learning rate 0.1 on a stratified split.
ProbeResult domain_probe(const DenseMatrix& ra, const DenseMatrix& rb, double heldout_fraction,
                         uint64_t seed);

}  // namespace dana
