#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dana/eval.hpp"
#include "dana/graph.hpp"
#include "dana/model.hpp"
#include "dana/objectives.hpp"
#include "dana/sampling.hpp"

namespace dana {

struct TrainConfig {
  Mode mode = Mode::DANA;
  int layers = 2;
  int embed_dim = 100;
  int input_dim = 0;       // 0: default (hidden width)
  int hidden_dim = 0;      // 0: default (per-track output width)
  double gamma = 1.0;
  double lambda = 0.01;
  double lr = 0.001;
  int batch_vertices = 512;   // U
  int anchor_batch = 0;       // Z; 0 means full training set
  int candidates = 128;       // per network, clamped to n
  int mse_negatives = 50;     // C for the MSE baseline
  int epochs = 500;
  uint64_t seed = 1;
  double train_ratio = 0.8;
  InitScheme init = InitScheme::Scaled;
  bool within_track = false;
  bool renormalized_kernel = false;
  bool early_stop = false;        // stop when alignment improves < 1e-5 over 25 epochs
  int eval_every = 25;            // 0 disables periodic test-split evaluation
  bool degree_rank_order = true;  // log-uniform ranks by degree (false: raw index)

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  LossReport loss;
  double seconds = 0.0;
  std::optional<double> hits1;
  std::optional<double> hits10;
  std::optional<double> eval_mrr;
};

struct TrainResult {
  AlignmentModel model;
  std::vector<EpochLog> log;
};

TrainResult train(const Graph& ga, const Graph& gb, const AnchorSet& anchors,
                  const TrainConfig& cfg);

// Split entry points: build a freshly initialized model for the config, and
// run the training loop on an existing model (used when H0 comes from data).
AlignmentModel prepare_model(const Graph& ga, const Graph& gb, const TrainConfig& cfg);
TrainResult train_model(AlignmentModel model, const Graph& ga, const Graph& gb,
                        const AnchorSet& anchors, const TrainConfig& cfg);

// Embeddings of both networks from a trained model (plain forward pass).
DenseMatrix infer_embeddings(const AlignmentModel& model, bool network_a);

// ---- checkpointing --------------------------------------------------------

// Directory with a key-value manifest plus one TSV per unique parameter at
// 17 significant digits; reload reproduces forward outputs within 1e-12.
void save_checkpoint(const std::string& dir, const AlignmentModel& model, const TrainConfig& cfg,
                     int epoch, const std::map<std::string, std::string>& extra = {});

// Manifest key-value pairs (excluding param entries).
std::map<std::string, std::string> read_manifest(const std::string& dir);

struct Checkpoint {
  AlignmentModel model;
  TrainConfig cfg;
  int epoch = 0;
};

Checkpoint load_checkpoint(const std::string& dir, const Graph& ga, const Graph& gb);

// ---- case study -----------------------------------------------------------

struct CaseStudyModelOutput {
  std::string mode;
  DenseMatrix neuron_weights;  // 2 x 10
  DenseMatrix emb_a;
  DenseMatrix emb_b;
  ProbeResult probe;
  double hits1 = 0.0, hits3 = 0.0, hits5 = 0.0;
};

struct CaseStudyResult {
  CaseStudyModelOutput dana_s;
  CaseStudyModelOutput dna_s;
};

// Twinning-network experiment on the bundled karate fixture: trains DANA-S
// and DNA-S with 1-layer GCNs over mirrored 2-D coordinates, k_L = 10,
// 50% anchor split, and reports probe and alignment diagnostics.
CaseStudyResult run_case_study(const std::string& edges_path, const std::string& layout_path,
                               uint64_t seed, int epochs = 500);

void export_case_study(const CaseStudyResult& cs, const std::string& out_dir);

// ---- single-network link prediction ---------------------------------------

struct LinkpredRun {
  LinkpredMetrics metrics;
  int train_edges = 0;
  int test_edges = 0;
};

// Holds out 10% of edges, trains one encoder with the structural proximity
// loss (direction-aware when directed_conv is set), reports mAP and Recall@k.
LinkpredRun run_linkpred(const Graph& g, bool directed_conv, int dim, int layers, double lr,
                         double lambda, int epochs, int negatives, uint64_t seed,
                         const std::vector<int>& ks);

// ---- serialization helpers ------------------------------------------------

void write_matrix_tsv(const std::string& path, const DenseMatrix& m,
                      const std::vector<std::string>* row_ids = nullptr);
DenseMatrix read_matrix_tsv(const std::string& path);

}  // namespace dana
