#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dana/pipeline.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

json loss_json(const dana::LossReport& l) {
  return json{{"total", l.total},
              {"alignment", l.alignment},
              {"domain", l.domain},
              {"regularization", l.regularization}};
}

void write_epochs_jsonl(const std::string& path, const std::vector<dana::EpochLog>& logs) {
  std::ofstream out(path);
  if (!out) throw dana::IoError("cannot write " + path);
  for (const auto& e : logs) {
    // Wall-clock time is deliberately left out so strict-mode reruns are
    // byte-identical.
    json j{{"epoch", e.epoch}, {"loss", loss_json(e.loss)}};
    if (e.hits1) j["hits@1"] = *e.hits1;
    if (e.hits10) j["hits@10"] = *e.hits10;
    if (e.eval_mrr) j["mrr"] = *e.eval_mrr;
    out << j.dump() << '\n';
  }
}

json alignment_metrics(const dana::DenseMatrix& ra, const dana::DenseMatrix& rb,
                       const std::vector<std::pair<int, int>>& test,
                       const std::vector<int>& ks) {
  dana::RankTable t = dana::rank_anchors(ra, rb, test);
  json j;
  for (int k : ks) j["hits@" + std::to_string(k)] = dana::hits_at_k(t, k);
  j["mrr"] = dana::mrr(t);
  j["test_anchors"] = static_cast<int>(test.size());
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw dana::IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

void export_embeddings_tsv(const std::string& path, const dana::DenseMatrix& m,
                           const dana::Graph& g) {
  dana::write_matrix_tsv(path, m, &g.ids);
}

struct TrainArgs {
  std::string edges_a, edges_b, anchors, out;
  std::string mode = "DANA";
  bool directed = false;
  dana::TrainConfig cfg;
};

int cmd_train(const TrainArgs& a) {
  dana::TrainConfig cfg = a.cfg;
  cfg.mode = dana::parse_mode(a.mode);
  bool directed = a.directed || dana::mode_directed(cfg.mode);
  dana::Graph ga = dana::load_edge_list(a.edges_a, directed);
  dana::Graph gb = dana::load_edge_list(a.edges_b, directed);
  auto pairs = dana::load_anchors(a.anchors, ga, gb);
  dana::AnchorSet split = dana::split_anchors(pairs, cfg.train_ratio, cfg.seed);

  dana::TrainResult tr = dana::train(ga, gb, split, cfg);

  fs::create_directories(a.out);
  write_epochs_jsonl(a.out + "/epochs.jsonl", tr.log);
  dana::DenseMatrix ra = dana::infer_embeddings(tr.model, true);
  dana::DenseMatrix rb = dana::infer_embeddings(tr.model, false);
  export_embeddings_tsv(a.out + "/embeddings_a.tsv", ra, ga);
  export_embeddings_tsv(a.out + "/embeddings_b.tsv", rb, gb);

  json metrics;
  metrics["mode"] = dana::mode_name(cfg.mode);
  metrics["epochs_run"] = static_cast<int>(tr.log.size());
  metrics["final_loss"] = loss_json(tr.log.back().loss);
  metrics["alignment"] = alignment_metrics(ra, rb, split.test, {1, 5, 10, 30, 50});
  write_json(a.out + "/metrics.json", metrics);

  std::map<std::string, std::string> extra{{"edges_a", a.edges_a},
                                           {"edges_b", a.edges_b},
                                           {"anchors", a.anchors},
                                           {"directed", directed ? "1" : "0"},
                                           {"train_ratio", std::to_string(cfg.train_ratio)}};
  dana::save_checkpoint(a.out + "/checkpoint", tr.model, cfg,
                        static_cast<int>(tr.log.size()), extra);
  std::cout << "trained " << dana::mode_name(cfg.mode) << " for " << tr.log.size()
            << " epochs; metrics in " << a.out << "/metrics.json\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& anchors_path,
             const std::vector<int>& ks, const std::string& out_path) {
  auto kv = dana::read_manifest(checkpoint);
  bool directed = kv.at("directed") == "1";
  dana::Graph ga = dana::load_edge_list(kv.at("edges_a"), directed);
  dana::Graph gb = dana::load_edge_list(kv.at("edges_b"), directed);
  dana::Checkpoint ck = dana::load_checkpoint(checkpoint, ga, gb);
  std::string anchors = anchors_path.empty() ? kv.at("anchors") : anchors_path;
  auto pairs = dana::load_anchors(anchors, ga, gb);
  dana::AnchorSet split =
      dana::split_anchors(pairs, std::stod(kv.at("train_ratio")), ck.cfg.seed);

  dana::DenseMatrix ra = dana::infer_embeddings(ck.model, true);
  dana::DenseMatrix rb = dana::infer_embeddings(ck.model, false);
  json metrics;
  metrics["mode"] = dana::mode_name(ck.cfg.mode);
  metrics["alignment"] = alignment_metrics(ra, rb, split.test, ks);
  if (!out_path.empty()) write_json(out_path, metrics);
  std::cout << metrics.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-adversarial network alignment pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value config file; command line overrides it");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train an alignment model");
  train->add_option("--edges-a", ta.edges_a, "Edge list of network A")->required();
  train->add_option("--edges-b", ta.edges_b, "Edge list of network B")->required();
  train->add_option("--anchors", ta.anchors, "Anchor ground-truth file")->required();
  train->add_option("--mode", ta.mode, "DANA | DANA-S | DANA-SD | DNA | DNA-S | MSE-DNA");
  train->add_flag("--directed", ta.directed, "Load edge lists as directed graphs");
  train->add_option("--dim", ta.cfg.embed_dim, "Embedding dimension");
  train->add_option("--layers", ta.cfg.layers, "GCN layers");
  train->add_option("--input-dim", ta.cfg.input_dim, "H0 width (0 = default)");
  train->add_option("--gamma", ta.cfg.gamma, "Domain-loss weighting factor");
  train->add_option("--lambda", ta.cfg.lambda, "Regularization factor");
  train->add_option("--lr", ta.cfg.lr, "Adam learning rate");
  train->add_option("--epochs", ta.cfg.epochs, "Epoch budget");
  train->add_option("--batch-vertices", ta.cfg.batch_vertices, "Vertex batch size U");
  train->add_option("--anchor-batch", ta.cfg.anchor_batch, "Anchor batch Z (0 = full train set)");
  train->add_option("--candidates", ta.cfg.candidates, "Sampled softmax candidates per network");
  train->add_option("--mse-negatives", ta.cfg.mse_negatives, "Negatives per anchor (MSE mode)");
  train->add_option("--train-ratio", ta.cfg.train_ratio, "Anchor train fraction");
  train->add_option("--seed", ta.cfg.seed, "Random seed");
  train->add_option("--eval-every", ta.cfg.eval_every, "Periodic eval interval (0 = off)");
  train->add_flag("--early-stop", ta.cfg.early_stop, "Stop when alignment loss plateaus");
  train->add_option("--out", ta.out, "Output directory")->required();

  std::string ck_path, ev_anchors, ev_out;
  std::vector<int> ev_ks{1, 5, 10, 30, 50};
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", ck_path, "Checkpoint directory")->required();
  eval->add_option("--anchors", ev_anchors, "Anchor file (default: the one used in training)");
  eval->add_option("--k", ev_ks, "Hits@k cutoffs");
  eval->add_option("--out", ev_out, "Optional metrics.json path");

  std::string cs_out, cs_edges = "data/karate_edges.tsv", cs_layout = "data/karate_layout.tsv";
  uint64_t cs_seed = 1;
  int cs_epochs = 500;
  auto* casestudy = app.add_subcommand("casestudy", "Twinning-network case study");
  casestudy->add_option("--out", cs_out, "Output directory")->required();
  casestudy->add_option("--edges", cs_edges, "Undirected edge list fixture");
  casestudy->add_option("--layout", cs_layout, "2-D layout fixture");
  casestudy->add_option("--seed", cs_seed, "Random seed");
  casestudy->add_option("--epochs", cs_epochs, "Epoch budget");

  std::string lp_edges, lp_out, lp_dirconv = "on";
  int lp_dim = 32, lp_layers = 2, lp_epochs = 200, lp_neg = 5;
  double lp_lr = 0.001, lp_lambda = 0.01;
  uint64_t lp_seed = 1;
  std::vector<int> lp_ks{3, 5, 10};
  auto* linkpred = app.add_subcommand("linkpred", "Single-network link prediction");
  linkpred->add_option("--edges", lp_edges, "Directed edge list")->required();
  linkpred->add_option("--directed-conv", lp_dirconv, "on | off")
      ->check(CLI::IsMember({"on", "off"}));
  linkpred->add_option("--dim", lp_dim, "Embedding dimension");
  linkpred->add_option("--layers", lp_layers, "GCN layers");
  linkpred->add_option("--lr", lp_lr, "Adam learning rate");
  linkpred->add_option("--lambda", lp_lambda, "Regularization factor");
  linkpred->add_option("--epochs", lp_epochs, "Epoch budget");
  linkpred->add_option("--negatives", lp_neg, "Noise edges per observed edge");
  linkpred->add_option("--seed", lp_seed, "Random seed");
  linkpred->add_option("--k", lp_ks, "Recall@k cutoffs");
  linkpred->add_option("--out", lp_out, "Output directory")->required();

  std::string ex_ck, ex_out;
  auto* exp = app.add_subcommand("export-embeddings", "Write embeddings from a checkpoint");
  exp->add_option("--checkpoint", ex_ck, "Checkpoint directory")->required();
  exp->add_option("--out", ex_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(ck_path, ev_anchors, ev_ks, ev_out);
    if (*casestudy) {
      dana::CaseStudyResult cs = dana::run_case_study(cs_edges, cs_layout, cs_seed, cs_epochs);
      dana::export_case_study(cs, cs_out);
      json j{{"dana-s", {{"probe_accuracy", cs.dana_s.probe.accuracy},
                         {"hits@1", cs.dana_s.hits1},
                         {"hits@3", cs.dana_s.hits3},
                         {"hits@5", cs.dana_s.hits5}}},
             {"dna-s", {{"probe_accuracy", cs.dna_s.probe.accuracy},
                        {"hits@1", cs.dna_s.hits1},
                        {"hits@3", cs.dna_s.hits3},
                        {"hits@5", cs.dna_s.hits5}}}};
      write_json(cs_out + "/metrics.json", j);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*linkpred) {
      dana::Graph g = dana::load_edge_list(lp_edges, true);
      dana::LinkpredRun run = dana::run_linkpred(g, lp_dirconv == "on", lp_dim, lp_layers, lp_lr,
                                                 lp_lambda, lp_epochs, lp_neg, lp_seed, lp_ks);
      json j{{"model", lp_dirconv == "on" ? "GCN-D" : "GCN"},
             {"mAP", run.metrics.map},
             {"train_edges", run.train_edges},
             {"test_edges", run.test_edges}};
      for (auto [k, r] : run.metrics.recall_at) j["recall@" + std::to_string(k)] = r;
      fs::create_directories(lp_out);
      write_json(lp_out + "/metrics.json", j);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*exp) {
      auto kv = dana::read_manifest(ex_ck);
      bool directed = kv.at("directed") == "1";
      dana::Graph ga = dana::load_edge_list(kv.at("edges_a"), directed);
      dana::Graph gb = dana::load_edge_list(kv.at("edges_b"), directed);
      dana::Checkpoint ck = dana::load_checkpoint(ex_ck, ga, gb);
      fs::create_directories(ex_out);
      export_embeddings_tsv(ex_out + "/embeddings_a.tsv", dana::infer_embeddings(ck.model, true),
                            ga);
      export_embeddings_tsv(ex_out + "/embeddings_b.tsv", dana::infer_embeddings(ck.model, false),
                            gb);
      std::cout << "embeddings written to " << ex_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
