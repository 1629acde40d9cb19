#include "dana/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace dana {

static std::vector<double> row_norms(const DenseMatrix& m) {
  std::vector<double> out(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += m.at(r, c) * m.at(r, c);
    out[r] = std::sqrt(s);
  }
  return out;
}

// Rank of `target` among all rows of `cands` by cosine similarity with
// `query`; zero-norm vectors score 0 against everything.
static int cosine_rank(const DenseMatrix& query_mat, int query, const DenseMatrix& cands,
                       const std::vector<double>& cand_norms, double query_norm, int target) {
  auto cosine = [&](int c) {
    if (query_norm < 1e-300 || cand_norms[c] < 1e-300) return 0.0;
    double dot = 0.0;
    for (int k = 0; k < query_mat.cols; ++k) dot += query_mat.at(query, k) * cands.at(c, k);
    return dot / (query_norm * cand_norms[c]);
  };
  double target_sim = cosine(target);
  int rank = 1;
  for (int c = 0; c < cands.rows; ++c) {
    if (c == target) continue;
    double s = cosine(c);
    if (s > target_sim || (s == target_sim && c < target)) ++rank;
  }
  return rank;
}

RankTable rank_anchors(const DenseMatrix& ra, const DenseMatrix& rb,
                       const std::vector<std::pair<int, int>>& test_pairs) {
  std::vector<double> na = row_norms(ra), nb = row_norms(rb);
  RankTable t;
  for (auto [i, j] : test_pairs) {
    t.a_to_b.push_back(cosine_rank(ra, i, rb, nb, na[i], j));
    t.b_to_a.push_back(cosine_rank(rb, j, ra, na, nb[j], i));
  }
  return t;
}

double hits_at_k(const RankTable& t, int k) {
  if (k < 1) throw ValidationError("hits_at_k: k must be >= 1");
  if (t.a_to_b.empty()) throw ValidationError("hits_at_k: empty test set");
  int hits = 0;
  for (int r : t.a_to_b) hits += r <= k ? 1 : 0;
  for (int r : t.b_to_a) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / (2.0 * static_cast<double>(t.a_to_b.size()));
}

double mrr(const RankTable& t) {
  if (t.a_to_b.empty()) throw ValidationError("mrr: empty rank table");
  double s = 0.0;
  for (int r : t.a_to_b) s += 1.0 / r;
  for (int r : t.b_to_a) s += 1.0 / r;
  return s / (2.0 * static_cast<double>(t.a_to_b.size()));
}

LinkpredMetrics linkpred_metrics(const DenseMatrix& r,
                                 const std::vector<std::pair<int, int>>& train_edges,
                                 const std::vector<std::pair<int, int>>& test_edges,
                                 const std::vector<int>& ks) {
  std::set<std::pair<int, int>> train_set(train_edges.begin(), train_edges.end());
  for (auto e : test_edges)
    if (train_set.count(e))
      throw ValidationError("linkpred_metrics: test edge present in train set");
  // Group test targets per source vertex.
  std::vector<std::vector<int>> targets(r.rows);
  for (auto [i, j] : test_edges) targets[i].push_back(j);

  double map_sum = 0.0;
  std::vector<double> recall_sums(ks.size(), 0.0);
  int qualifying = 0;
  for (int src = 0; src < r.rows; ++src) {
    if (targets[src].empty()) continue;
    ++qualifying;
    std::set<int> excluded;  // train targets of this source, plus the source itself
    excluded.insert(src);
    for (int k = 0; k < r.rows; ++k) {
      if (train_set.count({src, k})) excluded.insert(k);
    }
    std::vector<std::pair<double, int>> scored;  // (score, candidate)
    for (int c = 0; c < r.rows; ++c) {
      if (excluded.count(c)) continue;
      double dot = 0.0;
      for (int k = 0; k < r.cols; ++k) dot += r.at(src, k) * r.at(c, k);
      scored.emplace_back(dot, c);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::set<int> tset(targets[src].begin(), targets[src].end());
    double ap = 0.0;
    int found = 0;
    for (size_t pos = 0; pos < scored.size(); ++pos) {
      if (tset.count(scored[pos].second)) {
        ++found;
        ap += static_cast<double>(found) / static_cast<double>(pos + 1);
      }
      for (size_t ki = 0; ki < ks.size(); ++ki)
        if (static_cast<int>(pos + 1) == ks[ki])
          recall_sums[ki] += static_cast<double>(found) / static_cast<double>(tset.size());
    }
    // Recall at k beyond the candidate list saturates at full recall.
    for (size_t ki = 0; ki < ks.size(); ++ki)
      if (ks[ki] > static_cast<int>(scored.size()))
        recall_sums[ki] += static_cast<double>(found) / static_cast<double>(tset.size());
    ap /= static_cast<double>(tset.size());
    map_sum += ap;
  }
  if (qualifying == 0) throw ValidationError("linkpred_metrics: no source vertex has test edges");
  LinkpredMetrics out;
  out.map = map_sum / qualifying;
  for (size_t ki = 0; ki < ks.size(); ++ki)
    out.recall_at.emplace_back(ks[ki], recall_sums[ki] / qualifying);
  return out;
}

ProbeResult domain_probe(const DenseMatrix& ra, const DenseMatrix& rb, double heldout_fraction,
                         uint64_t seed) {
  if (ra.rows == 0 || rb.rows == 0) throw ValidationError("domain_probe: empty embedding set");
  if (ra.cols != rb.cols) throw DimensionError("domain_probe: embedding widths differ");
  int k = ra.cols;
  int n = ra.rows + rb.rows;
  auto feat = [&](int i, int c) { return i < ra.rows ? ra.at(i, c) : rb.at(i - ra.rows, c); };
  auto label = [&](int i) { return i < ra.rows ? 0 : 1; };

  // Stratified split.
  std::mt19937_64 rng(seed);
  auto shuffle_ids = [&rng](int count, int base) {
    std::vector<int> ids(count);
    std::iota(ids.begin(), ids.end(), base);
    for (int i = count - 1; i > 0; --i) {
      int j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
      std::swap(ids[i], ids[j]);
    }
    return ids;
  };
  std::vector<int> train_ids, test_ids;
  for (auto& ids : {shuffle_ids(ra.rows, 0), shuffle_ids(rb.rows, ra.rows)}) {
    int nh = static_cast<int>(heldout_fraction * static_cast<double>(ids.size()));
    nh = std::clamp(nh, 1, static_cast<int>(ids.size()) - 1);
    test_ids.insert(test_ids.end(), ids.begin(), ids.begin() + nh);
    train_ids.insert(train_ids.end(), ids.begin() + nh, ids.end());
  }

  // Logistic regression, 500 full-batch steps, lr 0.1, no regularization.
  std::vector<double> w(k, 0.0);
  double b = 0.0;
  double lr = 0.1;
  double inv_m = 1.0 / static_cast<double>(train_ids.size());
  for (int step = 0; step < 500; ++step) {
    std::vector<double> gw(k, 0.0);
    double gb = 0.0;
    for (int i : train_ids) {
      double z = b;
      for (int c = 0; c < k; ++c) z += w[c] * feat(i, c);
      double p = 1.0 / (1.0 + std::exp(-std::clamp(z, -30.0, 30.0)));
      double err = p - static_cast<double>(label(i));
      for (int c = 0; c < k; ++c) gw[c] += err * feat(i, c);
      gb += err;
    }
    for (int c = 0; c < k; ++c) w[c] -= lr * inv_m * gw[c];
    b -= lr * inv_m * gb;
  }

  ProbeResult out;
  out.predictions.resize(n);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    double z = b;
    for (int c = 0; c < k; ++c) z += w[c] * feat(i, c);
    out.predictions[i] = z >= 0.0 ? 1 : 0;
  }
  for (int i : test_ids)
    if (out.predictions[i] == label(i)) ++correct;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(test_ids.size());
  return out;
}

}  // namespace dana
