#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dana/tensor.hpp"

namespace dana {

// A loaded network: vocabulary plus binary CSR adjacency without self-loops.
struct Graph {
  std::vector<std::string> ids;                     // dense index -> external id
  std::unordered_map<std::string, int> index_of;    // external id -> dense index
  int n = 0;
  SparseMatrix adj;
  bool directed = false;
  int dropped_self_loops = 0;

  std::vector<int> out_degrees() const;
  std::vector<int> in_degrees() const;
  std::vector<std::pair<int, int>> edges() const;  // CSR order
};

struct ConvKernel {
  SparseMatrix forward;
  std::optional<SparseMatrix> reverse;  // present iff built for a directed graph
};

struct AnchorSet {
  std::vector<std::pair<int, int>> train;
  std::vector<std::pair<int, int>> test;
  uint64_t seed = 0;
  double ratio = 0.8;
};

Graph load_edge_list(const std::string& path, bool directed);
Graph graph_from_edges(std::vector<std::pair<int, int>> edges, int n, bool directed);

// F = D^{-1/2}(M+I)D^{-1/2}, D_ii = sum_j M_ij; isolated vertices use D_ii = 1.
// renormalized=true uses degrees of M+I instead.
ConvKernel build_sym_kernel(const Graph& g, bool renormalized = false);

// F = D^{-1}(M+I) over out-degrees, F~ over in-degrees of M^T; zero degree -> 1.
ConvKernel build_directed_kernels(const Graph& g);

std::vector<std::pair<int, int>> load_anchors(const std::string& path, const Graph& ga,
                                              const Graph& gb);

// Validates the one-to-one matching constraint on already-resolved index pairs.
void validate_anchor_matching(const std::vector<std::pair<int, int>>& pairs);

AnchorSet split_anchors(const std::vector<std::pair<int, int>>& pairs, double ratio,
                        uint64_t seed);

struct TwinningCase {
  Graph a;
  Graph b;
  std::vector<std::pair<int, int>> anchors;
  DenseMatrix h0a;  // n x 2 coordinates
  DenseMatrix h0b;  // mirrored about the y-axis
};

TwinningCase twinning_generate(const Graph& g, const DenseMatrix& layout);

// Layout fixture: "id<TAB>x<TAB>y" per line, ids resolved against g's vocabulary.
DenseMatrix load_layout(const std::string& path, const Graph& g);

}  // namespace dana
