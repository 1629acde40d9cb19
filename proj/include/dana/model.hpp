#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dana/graph.hpp"
#include "dana/tensor.hpp"

namespace dana {

enum class Mode { DANA, DANA_S, DANA_SD, DNA, DNA_S, MSE_DNA };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode m);
bool mode_adversarial(Mode m);
bool mode_shared(Mode m);
bool mode_directed(Mode m);

enum class InitScheme { Scaled, Literal };

struct GcnEncoder {
  ParamPtr h0;                   // n x k0
  std::vector<ParamPtr> weights; // W_1..W_L
  // Directed mode only: second track over in-going neighbourhoods.
  ParamPtr h0_rev;
  std::vector<ParamPtr> weights_rev;
  ConvKernel kernel;
};

struct DomainClassifier {
  ParamPtr w1;  // k x h
  ParamPtr b1;  // 1 x h
  ParamPtr w2;  // h x 2
  ParamPtr b2;  // 1 x 2
};

struct ModelConfig {
  Mode mode = Mode::DANA;
  int layers = 2;
  int embed_dim = 100;  // final embedding dimension (split across tracks when directed)
  int input_dim = 0;    // k0; 0 means hidden width
  int hidden_dim = 0;   // k_1..k_{L-1}; 0 means per-track output width
  InitScheme init = InitScheme::Scaled;
  bool within_track = false;  // directed recursion H_l from H_{l-1} instead of H~_{l-1}
};

struct AlignmentModel {
  ModelConfig cfg;
  GcnEncoder enc_a;
  GcnEncoder enc_b;
  DomainClassifier classifier;
  bool adversarial = false;
  bool shared = false;
  bool directed = false;

  // Unique parameters (shared weights listed once), with stable names.
  std::vector<ParamPtr> parameters() const;
  void zero_grads() const;
};

// Kernels must already be attached to the config via the graph arguments.
AlignmentModel init_model(const ModelConfig& cfg, const ConvKernel& kernel_a,
                          const ConvKernel& kernel_b, int na, int nb, uint64_t seed);

// Forward pass of one encoder; returns the n x k embedding variable.
Tape::Var encode(Tape& tape, const GcnEncoder& e, const ModelConfig& cfg);

// Softmax probabilities (rows x 2) of the domain classifier over embeddings r.
// When adversarial is true the input is routed through a gradient reversal layer.
Tape::Var classify_domain(Tape& tape, const DomainClassifier& c, Tape::Var r, bool adversarial);

// Deterministic normal sampler (Box-Muller over a 64-bit generator) so that
// initialization is bit-stable across standard library versions.
DenseMatrix random_normal(int rows, int cols, double stddev, std::mt19937_64& rng);

}  // namespace dana
