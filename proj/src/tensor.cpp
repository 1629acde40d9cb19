#include "dana/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dana {

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix out(n, n);
  for (int i = 0; i < n; ++i) out.at(i, i) = 1.0;
  return out;
}

bool DenseMatrix::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string DenseMatrix::shape_str() const {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::vector<std::tuple<int, int, double>> triplets) {
  for (const auto& [r, c, x] : triplets) {
    (void)x;
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw IndexError("sparse triplet (" + std::to_string(r) + "," + std::to_string(c) +
                       ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  SparseMatrix s(rows, cols);
  for (size_t i = 0; i < triplets.size();) {
    auto [r, c, x] = triplets[i];
    double acc = x;
    size_t j = i + 1;
    while (j < triplets.size() && std::get<0>(triplets[j]) == r && std::get<1>(triplets[j]) == c) {
      acc += std::get<2>(triplets[j]);
      ++j;
    }
    s.idx.push_back(c);
    s.val.push_back(acc);
    s.offs[r + 1] = static_cast<int>(s.val.size());
    i = j;
  }
  for (int r = 0; r < rows; ++r)
    if (s.offs[r + 1] < s.offs[r]) s.offs[r + 1] = s.offs[r];
  return s;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix s(n, n);
  s.idx.resize(n);
  s.val.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    s.idx[i] = i;
    s.offs[i + 1] = i + 1;
  }
  return s;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int k = offs[r]; k < offs[r + 1]; ++k) d.at(r, idx[k]) = val[k];
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<std::tuple<int, int, double>> t;
  t.reserve(nnz());
  for (int r = 0; r < rows; ++r)
    for (int k = offs[r]; k < offs[r + 1]; ++k) t.emplace_back(idx[k], r, val[k]);
  return from_triplets(cols, rows, std::move(t));
}

// ---- raw kernels ----------------------------------------------------------

static void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.rows, "matmul shape mismatch: " + a.shape_str() + " x " + b.shape_str());
  DenseMatrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.v[static_cast<size_t>(k) * b.cols];
      double* orow = &out.v[static_cast<size_t>(i) * out.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  return out;
}

DenseMatrix dense_matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.cols, "matmul_nt shape mismatch: " + a.shape_str() + " x " + b.shape_str() + "^T");
  DenseMatrix out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.rows; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(j, k);
      out.at(i, j) = s;
    }
  return out;
}

DenseMatrix dense_matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows == b.rows, "matmul_tn shape mismatch: " + a.shape_str() + "^T x " + b.shape_str());
  DenseMatrix out(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k)
    for (int i = 0; i < a.cols; ++i) {
      double aki = a.at(k, i);
      if (aki == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out.at(i, j) += aki * b.at(k, j);
    }
  return out;
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d) {
  require(s.cols == d.rows, "spmm shape mismatch: sparse " + std::to_string(s.rows) + "x" +
                                std::to_string(s.cols) + " x dense " + d.shape_str());
  DenseMatrix out(s.rows, d.cols);
  for (int r = 0; r < s.rows; ++r)
    for (int k = s.offs[r]; k < s.offs[r + 1]; ++k) {
      double w = s.val[k];
      const double* drow = &d.v[static_cast<size_t>(s.idx[k]) * d.cols];
      double* orow = &out.v[static_cast<size_t>(r) * out.cols];
      for (int j = 0; j < d.cols; ++j) orow[j] += w * drow[j];
    }
  return out;
}

DenseMatrix spmm_tn(const SparseMatrix& s, const DenseMatrix& d) {
  require(s.rows == d.rows, "spmm_tn shape mismatch");
  DenseMatrix out(s.cols, d.cols);
  for (int r = 0; r < s.rows; ++r)
    for (int k = s.offs[r]; k < s.offs[r + 1]; ++k) {
      double w = s.val[k];
      const double* drow = &d.v[static_cast<size_t>(r) * d.cols];
      double* orow = &out.v[static_cast<size_t>(s.idx[k]) * out.cols];
      for (int j = 0; j < d.cols; ++j) orow[j] += w * drow[j];
    }
  return out;
}

DenseMatrix relu(const DenseMatrix& x) {
  DenseMatrix out = x;
  for (double& t : out.v) t = std::max(0.0, t);
  return out;
}

double frobenius_sq(const DenseMatrix& x) {
  double s = 0.0;
  for (double t : x.v) s += t * t;
  return s;
}

DenseMatrix log_sum_exp_rows(const DenseMatrix& x) {
  require(x.cols >= 1, "log_sum_exp_rows needs at least one column");
  DenseMatrix out(x.rows, 1);
  for (int r = 0; r < x.rows; ++r) {
    double mx = x.at(r, 0);
    for (int c = 1; c < x.cols; ++c) mx = std::max(mx, x.at(r, c));
    double s = 0.0;
    for (int c = 0; c < x.cols; ++c) s += std::exp(x.at(r, c) - mx);
    out.at(r, 0) = mx + std::log(s);
  }
  return out;
}

void adam_step(Parameter& p, double lr, double beta1, double beta2, double eps) {
  if (!p.grad.all_finite())
    throw NumericError("adam_step: non-finite gradient in parameter '" + p.name + "'");
  p.steps += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p.steps));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p.steps));
  for (size_t i = 0; i < p.value.v.size(); ++i) {
    double g = p.grad.v[i];
    p.m.v[i] = beta1 * p.m.v[i] + (1.0 - beta1) * g;
    p.v.v[i] = beta2 * p.v.v[i] + (1.0 - beta2) * g * g;
    double mhat = p.m.v[i] / bc1;
    double vhat = p.v.v[i] / bc2;
    p.value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

DenseMatrix finite_diff_grad(const std::function<double(const DenseMatrix&)>& f,
                             const DenseMatrix& x, double h) {
  DenseMatrix g(x.rows, x.cols);
  DenseMatrix p = x;
  for (size_t i = 0; i < x.v.size(); ++i) {
    double orig = p.v[i];
    p.v[i] = orig + h;
    double fp = f(p);
    p.v[i] = orig - h;
    double fm = f(p);
    p.v[i] = orig;
    g.v[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---- tape -----------------------------------------------------------------

Tape::Var Tape::push(DenseMatrix value, std::string op) {
  Node n;
  n.value = std::move(value);
  n.grad = DenseMatrix(n.value.rows, n.value.cols);
  n.op = std::move(op);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::leaf(const ParamPtr& p) {
  auto it = leaf_cache_.find(p.get());
  if (it != leaf_cache_.end()) return it->second;
  Var v = push(p->value, "leaf:" + p->name);
  nodes_[v].param = p;
  leaf_cache_[p.get()] = v;
  return v;
}

Tape::Var Tape::constant(DenseMatrix c) { return push(std::move(c), "const"); }

double Tape::scalar(Var x) const {
  const DenseMatrix& m = nodes_[x].value;
  if (m.rows != 1 || m.cols != 1) throw DimensionError("scalar() on non-1x1 value " + m.shape_str());
  return m.v[0];
}

Tape::Var Tape::matmul(Var a, Var b) {
  Var out = push(dense_matmul(value(a), value(b)), "matmul");
  nodes_[out].back = [this, a, b, out] {
    const DenseMatrix& up = nodes_[out].grad;
    DenseMatrix ga = dense_matmul_nt(up, nodes_[b].value);  // up * b^T
    DenseMatrix gb = dense_matmul_tn(nodes_[a].value, up);  // a^T * up
    for (size_t i = 0; i < ga.v.size(); ++i) nodes_[a].grad.v[i] += ga.v[i];
    for (size_t i = 0; i < gb.v.size(); ++i) nodes_[b].grad.v[i] += gb.v[i];
  };
  return out;
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  Var out = push(dense_matmul_nt(value(a), value(b)), "matmul_nt");
  nodes_[out].back = [this, a, b, out] {
    const DenseMatrix& up = nodes_[out].grad;
    DenseMatrix ga = dense_matmul(up, nodes_[b].value);     // up * b
    DenseMatrix gb = dense_matmul_tn(up, nodes_[a].value);  // up^T * a
    for (size_t i = 0; i < ga.v.size(); ++i) nodes_[a].grad.v[i] += ga.v[i];
    for (size_t i = 0; i < gb.v.size(); ++i) nodes_[b].grad.v[i] += gb.v[i];
  };
  return out;
}

Tape::Var Tape::spmm(const SparseMatrix& s, Var d) {
  Var out = push(dana::spmm(s, value(d)), "spmm");
  SparseMatrix st = s.transposed();
  nodes_[out].back = [this, st, d, out] {
    DenseMatrix gd = dana::spmm(st, nodes_[out].grad);
    for (size_t i = 0; i < gd.v.size(); ++i) nodes_[d].grad.v[i] += gd.v[i];
  };
  return out;
}

Tape::Var Tape::relu(Var x) {
  Var out = push(dana::relu(value(x)), "relu");
  nodes_[out].back = [this, x, out] {
    const DenseMatrix& in = nodes_[x].value;
    const DenseMatrix& up = nodes_[out].grad;
    for (size_t i = 0; i < in.v.size(); ++i)
      if (in.v[i] > 0.0) nodes_[x].grad.v[i] += up.v[i];
  };
  return out;
}

Tape::Var Tape::concat_cols(Var x, Var y) {
  const DenseMatrix& a = value(x);
  const DenseMatrix& b = value(y);
  if (a.rows != b.rows)
    throw DimensionError("concat_cols row mismatch: " + a.shape_str() + " vs " + b.shape_str());
  DenseMatrix out(a.rows, a.cols + b.cols);
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) out.at(r, c) = a.at(r, c);
    for (int c = 0; c < b.cols; ++c) out.at(r, a.cols + c) = b.at(r, c);
  }
  Var o = push(std::move(out), "concat_cols");
  nodes_[o].back = [this, x, y, o] {
    const DenseMatrix& up = nodes_[o].grad;
    DenseMatrix& gx = nodes_[x].grad;
    DenseMatrix& gy = nodes_[y].grad;
    for (int r = 0; r < up.rows; ++r) {
      for (int c = 0; c < gx.cols; ++c) gx.at(r, c) += up.at(r, c);
      for (int c = 0; c < gy.cols; ++c) gy.at(r, c) += up.at(r, gx.cols + c);
    }
  };
  return o;
}

Tape::Var Tape::gather_rows(Var x, std::vector<int> idx) {
  const DenseMatrix& in = value(x);
  for (int i : idx)
    if (i < 0 || i >= in.rows)
      throw IndexError("gather_rows: index " + std::to_string(i) + " out of range for " +
                       std::to_string(in.rows) + " rows");
  DenseMatrix out(static_cast<int>(idx.size()), in.cols);
  for (size_t r = 0; r < idx.size(); ++r)
    for (int c = 0; c < in.cols; ++c) out.at(static_cast<int>(r), c) = in.at(idx[r], c);
  Var o = push(std::move(out), "gather_rows");
  nodes_[o].back = [this, x, o, idx = std::move(idx)] {
    const DenseMatrix& up = nodes_[o].grad;
    DenseMatrix& gx = nodes_[x].grad;
    for (size_t r = 0; r < idx.size(); ++r)
      for (int c = 0; c < gx.cols; ++c) gx.at(idx[r], c) += up.at(static_cast<int>(r), c);
  };
  return o;
}

Tape::Var Tape::grl(Var x, bool active) {
  if (!active) return x;
  Var out = push(value(x), "grl");
  nodes_[out].back = [this, x, out] {
    const DenseMatrix& up = nodes_[out].grad;
    for (size_t i = 0; i < up.v.size(); ++i) nodes_[x].grad.v[i] -= up.v[i];
  };
  return out;
}

Tape::Var Tape::frobenius_sq(Var x) {
  DenseMatrix out(1, 1);
  out.v[0] = dana::frobenius_sq(value(x));
  Var o = push(std::move(out), "frobenius_sq");
  nodes_[o].back = [this, x, o] {
    double up = nodes_[o].grad.v[0];
    const DenseMatrix& in = nodes_[x].value;
    for (size_t i = 0; i < in.v.size(); ++i) nodes_[x].grad.v[i] += 2.0 * in.v[i] * up;
  };
  return o;
}

Tape::Var Tape::log_sum_exp_rows(Var x) {
  Var o = push(dana::log_sum_exp_rows(value(x)), "log_sum_exp_rows");
  nodes_[o].back = [this, x, o] {
    const DenseMatrix& in = nodes_[x].value;
    const DenseMatrix& lse = nodes_[o].value;
    const DenseMatrix& up = nodes_[o].grad;
    for (int r = 0; r < in.rows; ++r)
      for (int c = 0; c < in.cols; ++c)
        nodes_[x].grad.at(r, c) += up.at(r, 0) * std::exp(in.at(r, c) - lse.at(r, 0));
  };
  return o;
}

Tape::Var Tape::softmax_rows(Var x) {
  const DenseMatrix& in = value(x);
  DenseMatrix lse = dana::log_sum_exp_rows(in);
  DenseMatrix out(in.rows, in.cols);
  for (int r = 0; r < in.rows; ++r)
    for (int c = 0; c < in.cols; ++c) out.at(r, c) = std::exp(in.at(r, c) - lse.at(r, 0));
  Var o = push(std::move(out), "softmax_rows");
  nodes_[o].back = [this, x, o] {
    const DenseMatrix& p = nodes_[o].value;
    const DenseMatrix& up = nodes_[o].grad;
    for (int r = 0; r < p.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < p.cols; ++c) dot += up.at(r, c) * p.at(r, c);
      for (int c = 0; c < p.cols; ++c)
        nodes_[x].grad.at(r, c) += p.at(r, c) * (up.at(r, c) - dot);
    }
  };
  return o;
}

Tape::Var Tape::rowwise_dot(Var a, Var b) {
  const DenseMatrix& x = value(a);
  const DenseMatrix& y = value(b);
  if (x.rows != y.rows || x.cols != y.cols)
    throw DimensionError("rowwise_dot shape mismatch: " + x.shape_str() + " vs " + y.shape_str());
  DenseMatrix out(x.rows, 1);
  for (int r = 0; r < x.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < x.cols; ++c) s += x.at(r, c) * y.at(r, c);
    out.at(r, 0) = s;
  }
  Var o = push(std::move(out), "rowwise_dot");
  nodes_[o].back = [this, a, b, o] {
    const DenseMatrix& x = nodes_[a].value;
    const DenseMatrix& y = nodes_[b].value;
    const DenseMatrix& up = nodes_[o].grad;
    for (int r = 0; r < x.rows; ++r)
      for (int c = 0; c < x.cols; ++c) {
        nodes_[a].grad.at(r, c) += up.at(r, 0) * y.at(r, c);
        nodes_[b].grad.at(r, c) += up.at(r, 0) * x.at(r, c);
      }
  };
  return o;
}

Tape::Var Tape::rowwise_norm(Var x) {
  const DenseMatrix& in = value(x);
  DenseMatrix out(in.rows, 1);
  for (int r = 0; r < in.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < in.cols; ++c) s += in.at(r, c) * in.at(r, c);
    out.at(r, 0) = std::sqrt(s);
  }
  Var o = push(std::move(out), "rowwise_norm");
  nodes_[o].back = [this, x, o] {
    const DenseMatrix& in = nodes_[x].value;
    const DenseMatrix& nrm = nodes_[o].value;
    const DenseMatrix& up = nodes_[o].grad;
    for (int r = 0; r < in.rows; ++r) {
      double n = nrm.at(r, 0);
      if (n < 1e-12) continue;  // subgradient 0 at the kink
      for (int c = 0; c < in.cols; ++c)
        nodes_[x].grad.at(r, c) += up.at(r, 0) * in.at(r, c) / n;
    }
  };
  return o;
}

Tape::Var Tape::logsigmoid(Var x) {
  const DenseMatrix& in = value(x);
  DenseMatrix out(in.rows, in.cols);
  for (size_t i = 0; i < in.v.size(); ++i) {
    double t = std::clamp(in.v[i], -30.0, 30.0);
    // log sigma(t) = -log(1 + exp(-t)), stable for both signs
    out.v[i] = t < 0.0 ? t - std::log1p(std::exp(t)) : -std::log1p(std::exp(-t));
  }
  Var o = push(std::move(out), "logsigmoid");
  nodes_[o].back = [this, x, o] {
    const DenseMatrix& in = nodes_[x].value;
    const DenseMatrix& up = nodes_[o].grad;
    for (size_t i = 0; i < in.v.size(); ++i) {
      double t = std::clamp(in.v[i], -30.0, 30.0);
      double sig_neg = 1.0 / (1.0 + std::exp(t));  // sigma(-t)
      nodes_[x].grad.v[i] += up.v[i] * sig_neg;
    }
  };
  return o;
}

Tape::Var Tape::add(Var a, Var b) {
  const DenseMatrix& x = value(a);
  const DenseMatrix& y = value(b);
  if (x.rows != y.rows || x.cols != y.cols)
    throw DimensionError("add shape mismatch: " + x.shape_str() + " vs " + y.shape_str());
  DenseMatrix out = x;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += y.v[i];
  Var o = push(std::move(out), "add");
  nodes_[o].back = [this, a, b, o] {
    const DenseMatrix& up = nodes_[o].grad;
    for (size_t i = 0; i < up.v.size(); ++i) {
      nodes_[a].grad.v[i] += up.v[i];
      nodes_[b].grad.v[i] += up.v[i];
    }
  };
  return o;
}

Tape::Var Tape::sub(Var a, Var b) {
  const DenseMatrix& x = value(a);
  const DenseMatrix& y = value(b);
  if (x.rows != y.rows || x.cols != y.cols)
    throw DimensionError("sub shape mismatch: " + x.shape_str() + " vs " + y.shape_str());
  DenseMatrix out = x;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= y.v[i];
  Var o = push(std::move(out), "sub");
  nodes_[o].back = [this, a, b, o] {
    const DenseMatrix& up = nodes_[o].grad;
    for (size_t i = 0; i < up.v.size(); ++i) {
      nodes_[a].grad.v[i] += up.v[i];
      nodes_[b].grad.v[i] -= up.v[i];
    }
  };
  return o;
}

Tape::Var Tape::add_rowvec(Var x, Var b) {
  const DenseMatrix& in = value(x);
  const DenseMatrix& bias = value(b);
  if (bias.rows != 1 || bias.cols != in.cols)
    throw DimensionError("add_rowvec: bias " + bias.shape_str() + " vs input " + in.shape_str());
  DenseMatrix out = in;
  for (int r = 0; r < in.rows; ++r)
    for (int c = 0; c < in.cols; ++c) out.at(r, c) += bias.at(0, c);
  Var o = push(std::move(out), "add_rowvec");
  nodes_[o].back = [this, x, b, o] {
    const DenseMatrix& up = nodes_[o].grad;
    for (int r = 0; r < up.rows; ++r)
      for (int c = 0; c < up.cols; ++c) {
        nodes_[x].grad.at(r, c) += up.at(r, c);
        nodes_[b].grad.at(0, c) += up.at(r, c);
      }
  };
  return o;
}

Tape::Var Tape::scale(Var x, double s) {
  DenseMatrix out = value(x);
  for (double& t : out.v) t *= s;
  Var o = push(std::move(out), "scale");
  nodes_[o].back = [this, x, o, s] {
    const DenseMatrix& up = nodes_[o].grad;
    for (size_t i = 0; i < up.v.size(); ++i) nodes_[x].grad.v[i] += s * up.v[i];
  };
  return o;
}

Tape::Var Tape::offset(Var x, double c) {
  DenseMatrix out = value(x);
  for (double& t : out.v) t += c;
  Var o = push(std::move(out), "offset");
  nodes_[o].back = [this, x, o] {
    const DenseMatrix& up = nodes_[o].grad;
    for (size_t i = 0; i < up.v.size(); ++i) nodes_[x].grad.v[i] += up.v[i];
  };
  return o;
}

Tape::Var Tape::sum_all(Var x) {
  DenseMatrix out(1, 1);
  for (double t : value(x).v) out.v[0] += t;
  Var o = push(std::move(out), "sum_all");
  nodes_[o].back = [this, x, o] {
    double up = nodes_[o].grad.v[0];
    for (size_t i = 0; i < nodes_[x].grad.v.size(); ++i) nodes_[x].grad.v[i] += up;
  };
  return o;
}

Tape::Var Tape::nll_from_probs(Var probs, std::vector<int> labels, long* clamp_count) {
  const DenseMatrix& p = value(probs);
  if (static_cast<int>(labels.size()) != p.rows)
    throw DimensionError("nll_from_probs: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(p.rows) + " rows");
  DenseMatrix out(1, 1);
  for (int r = 0; r < p.rows; ++r) {
    double pr = p.at(r, labels[r]);
    if (pr < 1e-12) {
      pr = 1e-12;
      if (clamp_count) ++*clamp_count;
    }
    out.v[0] -= std::log(pr);
  }
  Var o = push(std::move(out), "nll_from_probs");
  nodes_[o].back = [this, probs, o, labels = std::move(labels)] {
    double up = nodes_[o].grad.v[0];
    const DenseMatrix& p = nodes_[probs].value;
    for (int r = 0; r < p.rows; ++r) {
      double pr = std::max(p.at(r, labels[r]), 1e-12);
      nodes_[probs].grad.at(r, labels[r]) -= up / pr;
    }
  };
  return o;
}

void Tape::backward(Var scalar_loss) {
  const DenseMatrix& l = nodes_[scalar_loss].value;
  if (l.rows != 1 || l.cols != 1)
    throw DimensionError("backward requires a 1x1 loss, got " + l.shape_str());
  nodes_[scalar_loss].grad.v[0] = 1.0;
  for (Var i = static_cast<Var>(nodes_.size()) - 1; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
  for (auto& n : nodes_)
    if (n.param)
      for (size_t i = 0; i < n.grad.v.size(); ++i) n.param->grad.v[i] += n.grad.v[i];
}

std::string Tape::first_nonfinite() const {
  for (const auto& n : nodes_)
    if (!n.value.all_finite()) return n.op;
  return "";
}

}  // namespace dana
