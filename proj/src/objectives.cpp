#include "dana/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dana {

static std::vector<int> union_with(std::vector<int> cand, const std::vector<int>& required) {
  std::set<int> have(cand.begin(), cand.end());
  for (int r : required)
    if (have.insert(r).second) cand.push_back(r);
  return cand;
}

Tape::Var anchor_nll(Tape& tape, Tape::Var ra, Tape::Var rb,
                     const std::vector<std::pair<int, int>>& anchors,
                     std::vector<int> cand_a, std::vector<int> cand_b) {
  if (anchors.empty()) throw ValidationError("anchor_nll: empty anchor batch");
  std::vector<int> pos_a, pos_b;
  pos_a.reserve(anchors.size());
  pos_b.reserve(anchors.size());
  for (auto [i, j] : anchors) {
    pos_a.push_back(i);
    pos_b.push_back(j);
  }
  cand_a = union_with(std::move(cand_a), pos_a);
  cand_b = union_with(std::move(cand_b), pos_b);

  Tape::Var anch_a = tape.gather_rows(ra, pos_a);  // Z x k
  Tape::Var anch_b = tape.gather_rows(rb, pos_b);
  Tape::Var cands_a = tape.gather_rows(ra, cand_a);
  Tape::Var cands_b = tape.gather_rows(rb, cand_b);

  Tape::Var pos_dot = tape.rowwise_dot(anch_a, anch_b);  // Z x 1, r_i^A . r_j^B

  // log p(v_j^B | v_i^A) = pos - LSE over candidates in B; symmetric for A.
  Tape::Var lse_b = tape.log_sum_exp_rows(tape.matmul_nt(anch_a, cands_b));
  Tape::Var lse_a = tape.log_sum_exp_rows(tape.matmul_nt(anch_b, cands_a));
  Tape::Var logp_ba = tape.sub(pos_dot, lse_b);
  Tape::Var logp_ab = tape.sub(pos_dot, lse_a);

  // -log 1/2 (p + q) = ln 2 - LSE(log p, log q), per anchor.
  Tape::Var mix = tape.log_sum_exp_rows(tape.concat_cols(logp_ba, logp_ab));
  double z = static_cast<double>(anchors.size());
  return tape.offset(tape.scale(tape.sum_all(mix), -1.0), z * std::log(2.0));
}

Tape::Var domain_ce(Tape& tape, Tape::Var probs, std::vector<int> labels, long* clamp_count) {
  return tape.nll_from_probs(probs, std::move(labels), clamp_count);
}

TotalLoss total_loss(Tape& tape, const AlignmentModel& model, const Batch& batch, double gamma,
                     double lambda, long* clamp_count) {
  Tape::Var ra = encode(tape, model.enc_a, model.cfg);
  Tape::Var rb = encode(tape, model.enc_b, model.cfg);

  Tape::Var align;
  if (model.cfg.mode == Mode::MSE_DNA) {
    align = mse_loss(tape, ra, rb, batch.anchors, batch.neg_a, batch.neg_b, batch.mse_negatives);
  } else {
    align = anchor_nll(tape, ra, rb, batch.anchors, batch.cand_a, batch.cand_b);
  }

  // Domain cross-entropy over the sampled vertex batches; label 0 = network A.
  // Without the adversarial flag the embeddings are detached so the domain
  // term trains only the classifier.
  Tape::Var emb_a = tape.gather_rows(ra, batch.vbatch_a);
  Tape::Var emb_b = tape.gather_rows(rb, batch.vbatch_b);
  if (!model.adversarial) {
    emb_a = tape.constant(tape.value(emb_a));
    emb_b = tape.constant(tape.value(emb_b));
  }
  Tape::Var probs_a = classify_domain(tape, model.classifier, emb_a, model.adversarial);
  Tape::Var probs_b = classify_domain(tape, model.classifier, emb_b, model.adversarial);
  Tape::Var dom = tape.add(
      domain_ce(tape, probs_a, std::vector<int>(batch.vbatch_a.size(), 0), clamp_count),
      domain_ce(tape, probs_b, std::vector<int>(batch.vbatch_b.size(), 1), clamp_count));

  // Squared Frobenius regularization of generator and discriminator parameters.
  Tape::Var reg = tape.constant(DenseMatrix(1, 1));
  auto add_reg = [&](const ParamPtr& p) { reg = tape.add(reg, tape.frobenius_sq(tape.leaf(p))); };
  for (const auto& p : model.parameters()) add_reg(p);

  Tape::Var total = tape.add(align, tape.add(tape.scale(dom, gamma), tape.scale(reg, lambda)));

  TotalLoss out;
  out.var = total;
  out.report.alignment = tape.scalar(align);
  out.report.domain = tape.scalar(dom);
  out.report.regularization = tape.scalar(reg);
  out.report.total = tape.scalar(total);
  return out;
}

Tape::Var mse_loss(Tape& tape, Tape::Var ra, Tape::Var rb,
                   const std::vector<std::pair<int, int>>& anchors,
                   const std::vector<int>& neg_a, const std::vector<int>& neg_b, int c) {
  if (anchors.empty()) throw ValidationError("mse_loss: empty anchor batch");
  if (c < 1 || neg_a.size() != anchors.size() * static_cast<size_t>(c) ||
      neg_b.size() != anchors.size() * static_cast<size_t>(c))
    throw ValidationError("mse_loss: expected exactly " + std::to_string(c) +
                          " negatives per anchor per network");
  std::vector<int> pos_a, pos_b, rep_a, rep_b;
  for (auto [i, j] : anchors) {
    pos_a.push_back(i);
    pos_b.push_back(j);
    for (int t = 0; t < c; ++t) {
      rep_a.push_back(i);
      rep_b.push_back(j);
    }
  }
  Tape::Var anch_a = tape.gather_rows(ra, pos_a);
  Tape::Var anch_b = tape.gather_rows(rb, pos_b);
  Tape::Var pos_term = tape.sum_all(tape.rowwise_norm(tape.sub(anch_a, anch_b)));

  Tape::Var na = tape.sum_all(tape.rowwise_norm(
      tape.sub(tape.gather_rows(ra, rep_a), tape.gather_rows(rb, neg_b))));
  Tape::Var nb = tape.sum_all(tape.rowwise_norm(
      tape.sub(tape.gather_rows(ra, neg_a), tape.gather_rows(rb, rep_b))));
  Tape::Var neg_term = tape.scale(tape.add(na, nb), 1.0 / (2.0 * c));
  return tape.sub(pos_term, neg_term);
}

Tape::Var linkpred_loss(Tape& tape, Tape::Var r, const std::vector<std::pair<int, int>>& edges,
                        const std::vector<int>& negatives, int c) {
  if (c < 1) throw ValidationError("linkpred_loss: need at least one negative per edge");
  if (edges.empty()) throw ValidationError("linkpred_loss: empty edge batch");
  if (negatives.size() != edges.size() * static_cast<size_t>(c))
    throw ValidationError("linkpred_loss: expected " + std::to_string(c) + " negatives per edge");
  std::vector<int> src, dst, rep_src;
  for (auto [i, j] : edges) {
    src.push_back(i);
    dst.push_back(j);
    for (int t = 0; t < c; ++t) rep_src.push_back(i);
  }
  Tape::Var pos = tape.sum_all(tape.logsigmoid(
      tape.rowwise_dot(tape.gather_rows(r, dst), tape.gather_rows(r, src))));
  Tape::Var neg = tape.sum_all(tape.logsigmoid(tape.scale(
      tape.rowwise_dot(tape.gather_rows(r, negatives), tape.gather_rows(r, rep_src)), -1.0)));
  return tape.scale(tape.add(pos, tape.scale(neg, 1.0 / c)), -1.0);
}

}  // namespace dana
