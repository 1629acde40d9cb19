#include "dana/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace dana {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (gamma < 0.0 || lambda < 0.0) throw ConfigError("gamma and lambda must be >= 0");
  if (train_ratio <= 0.0 || train_ratio >= 1.0) throw ConfigError("train ratio must be in (0,1)");
  if (layers < 1 || embed_dim < 1) throw ConfigError("layers and dims must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_vertices < 1) throw ConfigError("vertex batch must be >= 1");
}

static ConvKernel kernel_for(const Graph& g, Mode mode, bool renormalized) {
  if (mode_directed(mode)) {
    if (!g.directed)
      throw ConfigError("mode " + mode_name(mode) + " requires directed input graphs");
    return build_directed_kernels(g);
  }
  if (g.directed) {
    // Conventional GCN on a directed graph: relaxed spatial kernel, out-going
    // neighbourhoods only.
    ConvKernel k = build_directed_kernels(g);
    k.reverse.reset();
    return k;
  }
  return build_sym_kernel(g, renormalized);
}

static ModelConfig model_config_of(const TrainConfig& cfg) {
  ModelConfig mc;
  mc.mode = cfg.mode;
  mc.layers = cfg.layers;
  mc.embed_dim = cfg.embed_dim;
  mc.input_dim = cfg.input_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.init = cfg.init;
  mc.within_track = cfg.within_track;
  return mc;
}

AlignmentModel prepare_model(const Graph& ga, const Graph& gb, const TrainConfig& cfg) {
  cfg.validate();
  ConvKernel ka = kernel_for(ga, cfg.mode, cfg.renormalized_kernel);
  ConvKernel kb = kernel_for(gb, cfg.mode, cfg.renormalized_kernel);
  return init_model(model_config_of(cfg), ka, kb, ga.n, gb.n, cfg.seed);
}

TrainResult train_model(AlignmentModel model, const Graph& ga, const Graph& gb,
                        const AnchorSet& anchors, const TrainConfig& cfg) {
  cfg.validate();
  if (anchors.train.empty()) throw ValidationError("train: empty training anchor set");

  LogUniformSampler samp_a(ga.out_degrees(), cfg.degree_rank_order);
  LogUniformSampler samp_b(gb.out_degrees(), cfg.degree_rank_order);
  std::mt19937_64 rng(cfg.seed ^ 0xda7a5eedULL);

  int cand_a_count = std::min(cfg.candidates, ga.n);
  int cand_b_count = std::min(cfg.candidates, gb.n);
  auto params = model.parameters();

  TrainResult out;
  out.model = model;
  double best_align = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    Batch batch;
    batch.vbatch_a = sample_vertex_batch(ga.n, cfg.batch_vertices, rng);
    batch.vbatch_b = sample_vertex_batch(gb.n, cfg.batch_vertices, rng);
    if (cfg.anchor_batch > 0 && cfg.anchor_batch < static_cast<int>(anchors.train.size())) {
      for (int i : sample_subset(static_cast<int>(anchors.train.size()), cfg.anchor_batch, rng))
        batch.anchors.push_back(anchors.train[i]);
    } else {
      batch.anchors = anchors.train;
    }
    if (cfg.mode == Mode::MSE_DNA) {
      batch.mse_negatives = cfg.mse_negatives;
      for (auto [i, j] : batch.anchors) {
        auto na = sample_uniform_negatives(ga.n, cfg.mse_negatives, i, rng);
        auto nb = sample_uniform_negatives(gb.n, cfg.mse_negatives, j, rng);
        batch.neg_a.insert(batch.neg_a.end(), na.begin(), na.end());
        batch.neg_b.insert(batch.neg_b.end(), nb.begin(), nb.end());
      }
    } else {
      batch.cand_a = samp_a.sample_candidates(cand_a_count, rng);
      batch.cand_b = samp_b.sample_candidates(cand_b_count, rng);
    }

    Tape tape;
    TotalLoss loss = total_loss(tape, out.model, batch, cfg.gamma, cfg.lambda);
    if (!std::isfinite(loss.report.total)) {
      std::string culprit = tape.first_nonfinite();
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                         " (first non-finite tensor: " + (culprit.empty() ? "loss" : culprit) +
                         ")");
    }
    tape.backward(loss.var);
    for (auto& p : params) adam_step(*p, cfg.lr);
    out.model.zero_grads();

    EpochLog log;
    log.epoch = epoch;
    log.loss = loss.report;
    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.eval_every > 0 && !anchors.test.empty() &&
        (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      DenseMatrix ra = infer_embeddings(out.model, true);
      DenseMatrix rb = infer_embeddings(out.model, false);
      RankTable t = rank_anchors(ra, rb, anchors.test);
      log.hits1 = hits_at_k(t, 1);
      log.hits10 = hits_at_k(t, std::min(10, std::min(ga.n, gb.n)));
      log.eval_mrr = mrr(t);
    }
    out.log.push_back(log);

    if (cfg.early_stop) {
      if (loss.report.alignment < best_align - 1e-5) {
        best_align = loss.report.alignment;
        since_best = 0;
      } else if (++since_best >= 25) {
        break;
      }
    }
  }
  return out;
}

TrainResult train(const Graph& ga, const Graph& gb, const AnchorSet& anchors,
                  const TrainConfig& cfg) {
  return train_model(prepare_model(ga, gb, cfg), ga, gb, anchors, cfg);
}

DenseMatrix infer_embeddings(const AlignmentModel& model, bool network_a) {
  Tape tape;
  Tape::Var r = encode(tape, network_a ? model.enc_a : model.enc_b, model.cfg);
  return tape.value(r);
}

// ---- checkpointing --------------------------------------------------------

static std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_matrix_tsv(const std::string& path, const DenseMatrix& m,
                      const std::vector<std::string>* row_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (int r = 0; r < m.rows; ++r) {
    if (row_ids) out << (*row_ids)[r];
    for (int c = 0; c < m.cols; ++c) {
      if (c > 0 || row_ids) out << '\t';
      out << fmt17(m.at(r, c));
    }
    out << '\n';
  }
}

DenseMatrix read_matrix_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::vector<double> row;
    double x;
    while (is >> x) row.push_back(x);
    if (!rows.empty() && row.size() != rows[0].size())
      throw ParseError(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  DenseMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      m.at(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  return m;
}

static std::string param_filename(const std::string& name) {
  std::string s = name;
  for (char& ch : s)
    if (ch == '.') ch = '_';
  return s + ".tsv";
}

void save_checkpoint(const std::string& dir, const AlignmentModel& model, const TrainConfig& cfg,
                     int epoch, const std::map<std::string, std::string>& extra) {
  fs::create_directories(dir);
  std::ofstream man(dir + "/manifest.txt");
  if (!man) throw IoError("cannot write checkpoint manifest in " + dir);
  man << "mode=" << mode_name(cfg.mode) << '\n';
  man << "layers=" << cfg.layers << '\n';
  man << "dim=" << cfg.embed_dim << '\n';
  man << "input_dim=" << cfg.input_dim << '\n';
  man << "hidden_dim=" << cfg.hidden_dim << '\n';
  man << "seed=" << cfg.seed << '\n';
  man << "epoch=" << epoch << '\n';
  man << "gamma=" << fmt17(cfg.gamma) << '\n';
  man << "lambda=" << fmt17(cfg.lambda) << '\n';
  man << "lr=" << fmt17(cfg.lr) << '\n';
  man << "init=" << (cfg.init == InitScheme::Scaled ? "scaled" : "literal") << '\n';
  man << "within_track=" << (cfg.within_track ? 1 : 0) << '\n';
  man << "renormalized_kernel=" << (cfg.renormalized_kernel ? 1 : 0) << '\n';
  for (const auto& [k, v] : extra) man << k << '=' << v << '\n';
  for (const auto& p : model.parameters()) {
    man << "param=" << p->name << '\n';
    write_matrix_tsv(dir + "/" + param_filename(p->name), p->value);
  }
}

std::map<std::string, std::string> read_manifest(const std::string& dir) {
  std::ifstream man(dir + "/manifest.txt");
  if (!man) throw IoError("cannot read checkpoint manifest in " + dir);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(man, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos || line.substr(0, eq) == "param") continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

Checkpoint load_checkpoint(const std::string& dir, const Graph& ga, const Graph& gb) {
  std::ifstream man(dir + "/manifest.txt");
  if (!man) throw IoError("cannot read checkpoint manifest in " + dir);
  std::map<std::string, std::string> kv;
  std::vector<std::string> param_names;
  std::string line;
  while (std::getline(man, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "param")
      param_names.push_back(val);
    else
      kv[key] = val;
  }
  Checkpoint ck;
  ck.cfg.mode = parse_mode(kv.at("mode"));
  ck.cfg.layers = std::stoi(kv.at("layers"));
  ck.cfg.embed_dim = std::stoi(kv.at("dim"));
  ck.cfg.input_dim = std::stoi(kv.at("input_dim"));
  ck.cfg.hidden_dim = std::stoi(kv.at("hidden_dim"));
  ck.cfg.seed = std::stoull(kv.at("seed"));
  ck.epoch = std::stoi(kv.at("epoch"));
  ck.cfg.gamma = std::stod(kv.at("gamma"));
  ck.cfg.lambda = std::stod(kv.at("lambda"));
  ck.cfg.lr = std::stod(kv.at("lr"));
  ck.cfg.init = kv.at("init") == "literal" ? InitScheme::Literal : InitScheme::Scaled;
  ck.cfg.within_track = kv.at("within_track") == "1";
  ck.cfg.renormalized_kernel = kv.at("renormalized_kernel") == "1";

  ck.model = prepare_model(ga, gb, ck.cfg);
  auto params = ck.model.parameters();
  for (const auto& name : param_names) {
    auto it = std::find_if(params.begin(), params.end(),
                           [&name](const ParamPtr& p) { return p->name == name; });
    if (it == params.end()) throw ValidationError("checkpoint parameter '" + name +
                                                  "' does not match the model layout");
    DenseMatrix m = read_matrix_tsv(dir + "/" + param_filename(name));
    if (m.rows != (*it)->value.rows || m.cols != (*it)->value.cols)
      throw DimensionError("checkpoint parameter '" + name + "' has shape " + m.shape_str() +
                           ", expected " + (*it)->value.shape_str());
    (*it)->value = std::move(m);
  }
  return ck;
}

// ---- case study -----------------------------------------------------------

static CaseStudyModelOutput case_study_one(const TwinningCase& tc, const AnchorSet& split,
                                           Mode mode, uint64_t seed, int epochs) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.layers = 1;
  cfg.embed_dim = 10;
  cfg.input_dim = 2;
  cfg.gamma = 1.0;
  cfg.lambda = 0.01;
  cfg.lr = 0.001;
  cfg.batch_vertices = tc.a.n;
  cfg.candidates = tc.b.n;  // full softmax at this scale
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.train_ratio = 0.5;
  cfg.eval_every = 0;

  AlignmentModel model = prepare_model(tc.a, tc.b, cfg);
  model.enc_a.h0->value = tc.h0a;  // coordinates as initial features
  model.enc_b.h0->value = tc.h0b;
  TrainResult tr = train_model(std::move(model), tc.a, tc.b, split, cfg);

  CaseStudyModelOutput out;
  out.mode = mode_name(mode);
  out.neuron_weights = tr.model.enc_a.weights[0]->value;
  out.emb_a = infer_embeddings(tr.model, true);
  out.emb_b = infer_embeddings(tr.model, false);
  out.probe = domain_probe(out.emb_a, out.emb_b, 0.3, seed + 101);
  RankTable t = rank_anchors(out.emb_a, out.emb_b, split.test);
  out.hits1 = hits_at_k(t, 1);
  out.hits3 = hits_at_k(t, 3);
  out.hits5 = hits_at_k(t, 5);
  return out;
}

CaseStudyResult run_case_study(const std::string& edges_path, const std::string& layout_path,
                               uint64_t seed, int epochs) {
  Graph g = load_edge_list(edges_path, false);
  DenseMatrix layout = load_layout(layout_path, g);
  TwinningCase tc = twinning_generate(g, layout);
  AnchorSet split = split_anchors(tc.anchors, 0.5, seed);
  CaseStudyResult out;
  out.dana_s = case_study_one(tc, split, Mode::DANA_S, seed, epochs);
  out.dna_s = case_study_one(tc, split, Mode::DNA_S, seed, epochs);
  return out;
}

static void export_one(const CaseStudyModelOutput& m, const std::string& dir) {
  fs::create_directories(dir);
  write_matrix_tsv(dir + "/neuron_weights.tsv", m.neuron_weights);
  write_matrix_tsv(dir + "/embeddings_a.tsv", m.emb_a);
  write_matrix_tsv(dir + "/embeddings_b.tsv", m.emb_b);
  std::ofstream probe(dir + "/probe.tsv");
  probe << "# accuracy\t" << fmt17(m.probe.accuracy) << '\n';
  for (size_t i = 0; i < m.probe.predictions.size(); ++i)
    probe << i << '\t' << m.probe.predictions[i] << '\n';
  std::ofstream hits(dir + "/alignment.tsv");
  hits << "hits@1\t" << fmt17(m.hits1) << '\n';
  hits << "hits@3\t" << fmt17(m.hits3) << '\n';
  hits << "hits@5\t" << fmt17(m.hits5) << '\n';
}

void export_case_study(const CaseStudyResult& cs, const std::string& out_dir) {
  export_one(cs.dana_s, out_dir + "/dana-s");
  export_one(cs.dna_s, out_dir + "/dna-s");
}

// ---- single-network link prediction ---------------------------------------

LinkpredRun run_linkpred(const Graph& g, bool directed_conv, int dim, int layers, double lr,
                         double lambda, int epochs, int negatives, uint64_t seed,
                         const std::vector<int>& ks) {
  if (!g.directed) throw ModeError("run_linkpred expects a directed graph");
  auto all_edges = g.edges();
  if (all_edges.size() < 2) throw ValidationError("run_linkpred: too few edges to split");
  std::mt19937_64 rng(seed);
  for (size_t i = all_edges.size() - 1; i > 0; --i) {
    size_t j = rng() % (i + 1);
    std::swap(all_edges[i], all_edges[j]);
  }
  size_t ntrain = static_cast<size_t>(0.9 * static_cast<double>(all_edges.size()));
  if (ntrain == all_edges.size()) --ntrain;
  std::vector<std::pair<int, int>> train_edges(all_edges.begin(), all_edges.begin() + ntrain);
  std::vector<std::pair<int, int>> test_edges(all_edges.begin() + ntrain, all_edges.end());
  if (test_edges.empty()) throw ValidationError("run_linkpred: empty held-out edge set");

  Graph train_g = graph_from_edges(train_edges, g.n, true);
  ConvKernel kernel = build_directed_kernels(train_g);
  if (!directed_conv) kernel.reverse.reset();

  ModelConfig mc;
  mc.layers = layers;
  mc.embed_dim = dim;
  GcnEncoder enc;
  enc.kernel = kernel;
  int track_out = directed_conv ? dim / 2 : dim;
  int k0 = track_out;
  std::mt19937_64 init_rng(seed ^ 0x11ULL);
  auto weight = [&](int rows, int cols, const std::string& n) {
    return std::make_shared<Parameter>(
        random_normal(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)), init_rng), n);
  };
  enc.h0 = std::make_shared<Parameter>(random_normal(g.n, k0, 1.0, init_rng), "enc.H0");
  for (int l = 1; l <= layers; ++l)
    enc.weights.push_back(weight(l == 1 ? k0 : track_out, track_out, "enc.W" + std::to_string(l)));
  if (directed_conv) {
    enc.h0_rev = std::make_shared<Parameter>(random_normal(g.n, k0, 1.0, init_rng), "enc.H0r");
    for (int l = 1; l <= layers; ++l)
      enc.weights_rev.push_back(
          weight(l == 1 ? k0 : track_out, track_out, "enc.Wr" + std::to_string(l)));
  }
  std::vector<ParamPtr> params;
  params.push_back(enc.h0);
  for (auto& w : enc.weights) params.push_back(w);
  if (enc.h0_rev) params.push_back(enc.h0_rev);
  for (auto& w : enc.weights_rev) params.push_back(w);

  std::mt19937_64 batch_rng(seed ^ 0xda7a5eedULL);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    std::vector<int> negs;
    negs.reserve(train_edges.size() * negatives);
    for (auto [i, j] : train_edges) {
      (void)j;
      auto nv = sample_uniform_negatives(g.n, negatives, i, batch_rng);
      negs.insert(negs.end(), nv.begin(), nv.end());
    }
    Tape tape;
    Tape::Var r = encode(tape, enc, mc);
    Tape::Var loss = linkpred_loss(tape, r, train_edges, negs, negatives);
    Tape::Var reg = tape.constant(DenseMatrix(1, 1));
    for (auto& p : params) reg = tape.add(reg, tape.frobenius_sq(tape.leaf(p)));
    Tape::Var total = tape.add(loss, tape.scale(reg, lambda));
    if (!std::isfinite(tape.scalar(total)))
      throw NumericError("run_linkpred: non-finite loss at epoch " + std::to_string(epoch));
    tape.backward(total);
    for (auto& p : params) adam_step(*p, lr);
    for (auto& p : params) p->zero_grad();
  }

  Tape tape;
  DenseMatrix r = tape.value(encode(tape, enc, mc));
  LinkpredRun out;
  out.metrics = linkpred_metrics(r, train_edges, test_edges, ks);
  out.train_edges = static_cast<int>(train_edges.size());
  out.test_edges = static_cast<int>(test_edges.size());
  return out;
}

}  // namespace dana
