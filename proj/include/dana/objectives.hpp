#pragma once

#include <utility>
#include <vector>

#include "dana/model.hpp"
#include "dana/tensor.hpp"

namespace dana {

struct LossReport {
  double total = 0.0;
  double alignment = 0.0;
  double domain = 0.0;
  double regularization = 0.0;
};

// One training step's sampled inputs (Algorithm batch).
struct Batch {
  std::vector<std::pair<int, int>> anchors;  // S_Z
  std::vector<int> vbatch_a;                 // V_U^A
  std::vector<int> vbatch_b;                 // V_U^B
  std::vector<int> cand_a;                   // candidate set in network A
  std::vector<int> cand_b;                   // candidate set in network B
  // MSE mode: C negatives per anchor, row-major (anchors.size() x C).
  std::vector<int> neg_a;
  std::vector<int> neg_b;
  int mse_negatives = 0;
};

// Bidirectional anchor negative log-likelihood. Candidate sets are shared
// across the batch; missing positives are appended. Full vertex sets give the
// exact softmax likelihood.
Tape::Var anchor_nll(Tape& tape, Tape::Var ra, Tape::Var rb,
                     const std::vector<std::pair<int, int>>& anchors,
                     std::vector<int> cand_a, std::vector<int> cand_b);

// Summed cross-entropy of true domains given rows x 2 probabilities.
Tape::Var domain_ce(Tape& tape, Tape::Var probs, std::vector<int> labels,
                    long* clamp_count = nullptr);

struct TotalLoss {
  Tape::Var var;  // 1x1
  LossReport report;
};

// Eq-7 objective via the gradient reversal layer: one backward pass yields
// generator and discriminator gradients simultaneously.
TotalLoss total_loss(Tape& tape, const AlignmentModel& model, const Batch& batch, double gamma,
                     double lambda, long* clamp_count = nullptr);

// Distance-contrast baseline over unsquared Euclidean norms.
Tape::Var mse_loss(Tape& tape, Tape::Var ra, Tape::Var rb,
                   const std::vector<std::pair<int, int>>& anchors,
                   const std::vector<int>& neg_a, const std::vector<int>& neg_b, int c);

// Single-network structural proximity loss with C noise edges per edge.
Tape::Var linkpred_loss(Tape& tape, Tape::Var r, const std::vector<std::pair<int, int>>& edges,
                        const std::vector<int>& negatives, int c);

}  // namespace dana
