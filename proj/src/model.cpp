#include "dana/model.hpp"

#include <cmath>

namespace dana {

Mode parse_mode(const std::string& name) {
  if (name == "DANA") return Mode::DANA;
  if (name == "DANA-S") return Mode::DANA_S;
  if (name == "DANA-SD") return Mode::DANA_SD;
  if (name == "DNA") return Mode::DNA;
  if (name == "DNA-S") return Mode::DNA_S;
  if (name == "MSE-DNA") return Mode::MSE_DNA;
  throw ConfigError("unknown mode '" + name +
                    "' (expected DANA, DANA-S, DANA-SD, DNA, DNA-S or MSE-DNA)");
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::DANA: return "DANA";
    case Mode::DANA_S: return "DANA-S";
    case Mode::DANA_SD: return "DANA-SD";
    case Mode::DNA: return "DNA";
    case Mode::DNA_S: return "DNA-S";
    case Mode::MSE_DNA: return "MSE-DNA";
  }
  return "?";
}

bool mode_adversarial(Mode m) {
  return m == Mode::DANA || m == Mode::DANA_S || m == Mode::DANA_SD;
}
bool mode_shared(Mode m) {
  return m == Mode::DANA_S || m == Mode::DANA_SD || m == Mode::DNA_S;
}
bool mode_directed(Mode m) { return m == Mode::DANA_SD; }

DenseMatrix random_normal(int rows, int cols, double stddev, std::mt19937_64& rng) {
  DenseMatrix out(rows, cols);
  auto uniform01 = [&rng] {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  };
  for (size_t i = 0; i < out.v.size(); i += 2) {
    double u1 = uniform01(), u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    out.v[i] = stddev * r * std::cos(2.0 * M_PI * u2);
    if (i + 1 < out.v.size()) out.v[i + 1] = stddev * r * std::sin(2.0 * M_PI * u2);
  }
  return out;
}

std::vector<ParamPtr> AlignmentModel::parameters() const {
  std::vector<ParamPtr> out;
  auto add_enc = [&out](const GcnEncoder& e, bool skip_weights) {
    out.push_back(e.h0);
    if (!skip_weights)
      for (const auto& w : e.weights) out.push_back(w);
    if (e.h0_rev) out.push_back(e.h0_rev);
    if (!skip_weights)
      for (const auto& w : e.weights_rev) out.push_back(w);
  };
  add_enc(enc_a, false);
  add_enc(enc_b, shared);  // shared weights already listed under encoder A
  out.push_back(classifier.w1);
  out.push_back(classifier.b1);
  out.push_back(classifier.w2);
  out.push_back(classifier.b2);
  return out;
}

void AlignmentModel::zero_grads() const {
  for (const auto& p : parameters()) p->zero_grad();
}

AlignmentModel init_model(const ModelConfig& cfg, const ConvKernel& kernel_a,
                          const ConvKernel& kernel_b, int na, int nb, uint64_t seed) {
  if (cfg.layers < 1 || cfg.embed_dim < 1) throw ConfigError("layers and dims must be positive");
  AlignmentModel m;
  m.cfg = cfg;
  m.adversarial = mode_adversarial(cfg.mode);
  m.shared = mode_shared(cfg.mode);
  m.directed = mode_directed(cfg.mode);
  if (m.directed) {
    if (!kernel_a.reverse || !kernel_b.reverse)
      throw ConfigError("mode " + mode_name(cfg.mode) + " requires directed kernels");
    if (cfg.embed_dim % 2 != 0)
      throw ConfigError("directed modes need an even embedding dimension");
  }

  int track_out = m.directed ? cfg.embed_dim / 2 : cfg.embed_dim;
  int hidden = cfg.hidden_dim > 0 ? cfg.hidden_dim : track_out;
  int k0 = cfg.input_dim > 0 ? cfg.input_dim : hidden;

  std::mt19937_64 rng(seed);
  auto make_weight = [&](int rows, int cols, const std::string& name) {
    double sd = cfg.init == InitScheme::Scaled ? 1.0 / std::sqrt(static_cast<double>(rows)) : 1.0;
    return std::make_shared<Parameter>(random_normal(rows, cols, sd, rng), name);
  };
  auto make_h0 = [&](int rows, int cols, const std::string& name) {
    return std::make_shared<Parameter>(random_normal(rows, cols, 1.0, rng), name);
  };

  auto layer_dims = [&](int l) {  // input width of layer l (1-based)
    return l == 1 ? k0 : hidden;
  };
  auto layer_out = [&](int l) { return l == cfg.layers ? track_out : hidden; };

  auto build_enc = [&](int n, const ConvKernel& kernel, const std::string& tag) {
    GcnEncoder e;
    e.kernel = kernel;
    e.h0 = make_h0(n, k0, tag + ".H0");
    for (int l = 1; l <= cfg.layers; ++l)
      e.weights.push_back(make_weight(layer_dims(l), layer_out(l), tag + ".W" + std::to_string(l)));
    if (m.directed) {
      e.h0_rev = make_h0(n, k0, tag + ".H0r");
      for (int l = 1; l <= cfg.layers; ++l)
        e.weights_rev.push_back(
            make_weight(layer_dims(l), layer_out(l), tag + ".Wr" + std::to_string(l)));
    }
    return e;
  };

  m.enc_a = build_enc(na, kernel_a, "encA");
  m.enc_b = build_enc(nb, kernel_b, "encB");
  if (m.shared) {
    m.enc_b.weights = m.enc_a.weights;
    m.enc_b.weights_rev = m.enc_a.weights_rev;
  }

  int k = cfg.embed_dim;
  int h = k;  // classifier hidden width defaults to the embedding dimension
  if (cfg.init == InitScheme::Literal) {
    m.classifier.w1 = std::make_shared<Parameter>(random_normal(k, h, 1.0, rng), "cls.W1");
    m.classifier.b1 = std::make_shared<Parameter>(random_normal(1, h, 1.0, rng), "cls.b1");
    m.classifier.w2 = std::make_shared<Parameter>(random_normal(h, 2, 1.0, rng), "cls.W2");
    m.classifier.b2 = std::make_shared<Parameter>(random_normal(1, 2, 1.0, rng), "cls.b2");
  } else {
    m.classifier.w1 = make_weight(k, h, "cls.W1");
    m.classifier.b1 = std::make_shared<Parameter>(DenseMatrix(1, h), "cls.b1");
    m.classifier.w2 = make_weight(h, 2, "cls.W2");
    m.classifier.b2 = std::make_shared<Parameter>(DenseMatrix(1, 2), "cls.b2");
  }
  return m;
}

Tape::Var encode(Tape& tape, const GcnEncoder& e, const ModelConfig& cfg) {
  if (!e.h0_rev) {
    Tape::Var h = tape.leaf(e.h0);
    for (const auto& w : e.weights)
      h = tape.relu(tape.matmul(tape.spmm(e.kernel.forward, h), tape.leaf(w)));
    return h;
  }
  if (!e.kernel.reverse) throw ModeError("directed encoder requires a reverse kernel");
  // Two-track recursion: by default each track consumes the other track's
  // previous state (cross-coupled); within_track switches to H_l from H_{l-1}.
  Tape::Var h = tape.leaf(e.h0);
  Tape::Var hr = tape.leaf(e.h0_rev);
  for (size_t l = 0; l < e.weights.size(); ++l) {
    Tape::Var src_fwd = cfg.within_track ? h : hr;
    Tape::Var src_rev = cfg.within_track ? hr : h;
    Tape::Var nh =
        tape.relu(tape.matmul(tape.spmm(e.kernel.forward, src_fwd), tape.leaf(e.weights[l])));
    Tape::Var nhr =
        tape.relu(tape.matmul(tape.spmm(*e.kernel.reverse, src_rev), tape.leaf(e.weights_rev[l])));
    h = nh;
    hr = nhr;
  }
  return tape.concat_cols(h, hr);
}

Tape::Var classify_domain(Tape& tape, const DomainClassifier& c, Tape::Var r, bool adversarial) {
  Tape::Var x = tape.grl(r, adversarial);
  Tape::Var hidden =
      tape.relu(tape.add_rowvec(tape.matmul(x, tape.leaf(c.w1)), tape.leaf(c.b1)));
  Tape::Var logits = tape.add_rowvec(tape.matmul(hidden, tape.leaf(c.w2)), tape.leaf(c.b2));
  return tape.softmax_rows(logits);
}

}  // namespace dana
