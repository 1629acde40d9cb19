#include "dana/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace dana {

std::vector<int> Graph::out_degrees() const {
  std::vector<int> d(n, 0);
  for (int r = 0; r < n; ++r) d[r] = adj.offs[r + 1] - adj.offs[r];
  return d;
}

std::vector<int> Graph::in_degrees() const {
  std::vector<int> d(n, 0);
  for (size_t k = 0; k < adj.idx.size(); ++k) d[adj.idx[k]] += 1;
  return d;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> e;
  e.reserve(adj.nnz());
  for (int r = 0; r < n; ++r)
    for (int k = adj.offs[r]; k < adj.offs[r + 1]; ++k) e.emplace_back(r, adj.idx[k]);
  return e;
}

static std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

Graph load_edge_list(const std::string& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list: " + path);
  Graph g;
  g.directed = directed;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  auto intern = [&g](const std::string& id) {
    auto it = g.index_of.find(id);
    if (it != g.index_of.end()) return it->second;
    int idx = static_cast<int>(g.ids.size());
    g.ids.push_back(id);
    g.index_of[id] = idx;
    return idx;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_fields(line);
    if (f.empty()) continue;
    if (f.size() != 2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'src<TAB>dst', got '" +
                       line + "'");
    int s = intern(f[0]);
    int d = intern(f[1]);
    if (s == d) {
      ++g.dropped_self_loops;
      continue;
    }
    edges.emplace_back(s, d);
  }
  g.n = static_cast<int>(g.ids.size());
  if (g.n == 0) throw ValidationError("empty graph: " + path);
  Graph built = graph_from_edges(std::move(edges), g.n, directed);
  built.ids = std::move(g.ids);
  built.index_of = std::move(g.index_of);
  built.dropped_self_loops = g.dropped_self_loops;
  return built;
}

Graph graph_from_edges(std::vector<std::pair<int, int>> edges, int n, bool directed) {
  Graph g;
  g.n = n;
  g.directed = directed;
  std::set<std::pair<int, int>> uniq;
  for (auto [s, d] : edges) {
    if (s == d) {
      ++g.dropped_self_loops;
      continue;
    }
    uniq.insert({s, d});
    if (!directed) uniq.insert({d, s});
  }
  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(uniq.size());
  for (auto [s, d] : uniq) trip.emplace_back(s, d, 1.0);
  g.adj = SparseMatrix::from_triplets(n, n, std::move(trip));
  if (g.ids.empty()) {
    g.ids.resize(n);
    for (int i = 0; i < n; ++i) {
      g.ids[i] = std::to_string(i);
      g.index_of[g.ids[i]] = i;
    }
  }
  return g;
}

ConvKernel build_sym_kernel(const Graph& g, bool renormalized) {
  if (g.directed) throw ModeError("build_sym_kernel requires an undirected graph");
  std::vector<double> deg(g.n, 0.0);
  for (int r = 0; r < g.n; ++r)
    for (int k = g.adj.offs[r]; k < g.adj.offs[r + 1]; ++k) deg[r] += g.adj.val[k];
  for (int r = 0; r < g.n; ++r) {
    if (renormalized) deg[r] += 1.0;  // degrees of M+I
    if (deg[r] <= 0.0) deg[r] = 1.0;
  }
  std::vector<std::tuple<int, int, double>> trip;
  for (int r = 0; r < g.n; ++r) {
    trip.emplace_back(r, r, 1.0 / deg[r]);  // self-loop entry of M+I
    for (int k = g.adj.offs[r]; k < g.adj.offs[r + 1]; ++k) {
      int c = g.adj.idx[k];
      trip.emplace_back(r, c, g.adj.val[k] / std::sqrt(deg[r] * deg[c]));
    }
  }
  ConvKernel out;
  out.forward = SparseMatrix::from_triplets(g.n, g.n, std::move(trip));
  return out;
}

static SparseMatrix row_normalized_with_loops(const SparseMatrix& m) {
  std::vector<double> deg(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r)
    for (int k = m.offs[r]; k < m.offs[r + 1]; ++k) deg[r] += m.val[k];
  std::vector<std::tuple<int, int, double>> trip;
  for (int r = 0; r < m.rows; ++r) {
    double d = deg[r] > 0.0 ? deg[r] : 1.0;
    trip.emplace_back(r, r, 1.0 / d);
    for (int k = m.offs[r]; k < m.offs[r + 1]; ++k) trip.emplace_back(r, m.idx[k], m.val[k] / d);
  }
  return SparseMatrix::from_triplets(m.rows, m.cols, std::move(trip));
}

ConvKernel build_directed_kernels(const Graph& g) {
  if (!g.directed) throw ModeError("build_directed_kernels requires a directed graph");
  ConvKernel out;
  out.forward = row_normalized_with_loops(g.adj);
  out.reverse = row_normalized_with_loops(g.adj.transposed());
  return out;
}

std::vector<std::pair<int, int>> load_anchors(const std::string& path, const Graph& ga,
                                              const Graph& gb) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open anchor list: " + path);
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_fields(line);
    if (f.empty()) continue;
    if (f.size() != 2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'idA<TAB>idB'");
    auto ia = ga.index_of.find(f[0]);
    if (ia == ga.index_of.end())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": id '" + f[0] +
                            "' not present in network A");
    auto ib = gb.index_of.find(f[1]);
    if (ib == gb.index_of.end())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": id '" + f[1] +
                            "' not present in network B");
    pairs.emplace_back(ia->second, ib->second);
  }
  validate_anchor_matching(pairs);
  return pairs;
}

void validate_anchor_matching(const std::vector<std::pair<int, int>>& pairs) {
  std::set<int> seen_a, seen_b;
  for (auto [a, b] : pairs) {
    if (!seen_a.insert(a).second)
      throw ValidationError("anchor vertex A#" + std::to_string(a) + " appears in two pairs");
    if (!seen_b.insert(b).second)
      throw ValidationError("anchor vertex B#" + std::to_string(b) + " appears in two pairs");
  }
}

AnchorSet split_anchors(const std::vector<std::pair<int, int>>& pairs, double ratio,
                        uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw ValidationError("train ratio must lie in (0,1), got " + std::to_string(ratio));
  if (pairs.size() < 2) throw ValidationError("need at least 2 anchor pairs to split");
  std::vector<std::pair<int, int>> shuffled = pairs;
  std::mt19937_64 rng(seed);
  // Fisher-Yates; avoids std::shuffle's unspecified algorithm
  for (size_t i = shuffled.size() - 1; i > 0; --i) {
    size_t j = rng() % (i + 1);
    std::swap(shuffled[i], shuffled[j]);
  }
  size_t ntrain = static_cast<size_t>(ratio * static_cast<double>(pairs.size()));
  if (ntrain == 0 || ntrain == pairs.size())
    throw ValidationError("degenerate split: train or test set would be empty");
  AnchorSet out;
  out.seed = seed;
  out.ratio = ratio;
  out.train.assign(shuffled.begin(), shuffled.begin() + ntrain);
  out.test.assign(shuffled.begin() + ntrain, shuffled.end());
  return out;
}

TwinningCase twinning_generate(const Graph& g, const DenseMatrix& layout) {
  if (g.directed) throw ModeError("twinning_generate requires an undirected graph");
  if (layout.rows != g.n || layout.cols != 2)
    throw DimensionError("layout shape " + layout.shape_str() + " does not match " +
                         std::to_string(g.n) + " vertices x 2");
  TwinningCase tc;
  tc.a = g;
  tc.b = g;  // identical edges by construction
  tc.h0a = layout;
  tc.h0b = layout;
  for (int r = 0; r < g.n; ++r) tc.h0b.at(r, 0) = -tc.h0b.at(r, 0);
  for (int i = 0; i < g.n; ++i) tc.anchors.emplace_back(i, i);
  return tc;
}

DenseMatrix load_layout(const std::string& path, const Graph& g) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout fixture: " + path);
  DenseMatrix layout(g.n, 2);
  std::vector<bool> seen(g.n, false);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_fields(line);
    if (f.size() != 3)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'id<TAB>x<TAB>y'");
    auto it = g.index_of.find(f[0]);
    if (it == g.index_of.end())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown vertex id '" + f[0] +
                            "'");
    layout.at(it->second, 0) = std::stod(f[1]);
    layout.at(it->second, 1) = std::stod(f[2]);
    seen[it->second] = true;
  }
  for (int i = 0; i < g.n; ++i)
    if (!seen[i]) throw ValidationError("layout missing vertex '" + g.ids[i] + "'");
  return layout;
}

}  // namespace dana
