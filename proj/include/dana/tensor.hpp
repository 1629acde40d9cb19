#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "dana/errors.hpp"

namespace dana {

// Row-major dense matrix of 64-bit reals.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }

  static DenseMatrix identity(int n);
  bool all_finite() const;
  std::string shape_str() const;
};

// CSR sparse matrix. Column indices strictly increasing within each row.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> offs;  // length rows+1
  std::vector<int> idx;
  std::vector<double> val;

  SparseMatrix() = default;
  SparseMatrix(int r, int c) : rows(r), cols(c), offs(static_cast<size_t>(r) + 1, 0) {}

  size_t nnz() const { return val.size(); }

  // Triplets may contain duplicates; duplicate entries are summed.
  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<std::tuple<int, int, double>> triplets);
  static SparseMatrix identity(int n);
  DenseMatrix to_dense() const;
  SparseMatrix transposed() const;
};

// Trainable dense matrix with accumulated gradient and Adam state.
struct Parameter {
  DenseMatrix value;
  DenseMatrix grad;
  DenseMatrix m;
  DenseMatrix v;
  long steps = 0;
  std::string name;

  Parameter() = default;
  explicit Parameter(DenseMatrix init, std::string n = "")
      : value(std::move(init)), name(std::move(n)) {
    grad = DenseMatrix(value.rows, value.cols);
    m = DenseMatrix(value.rows, value.cols);
    v = DenseMatrix(value.rows, value.cols);
  }

  void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0); }
};

using ParamPtr = std::shared_ptr<Parameter>;

// ---- raw (non-recording) kernels -----------------------------------------

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix dense_matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a * b^T
DenseMatrix dense_matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // a^T * b
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d);
DenseMatrix spmm_tn(const SparseMatrix& s, const DenseMatrix& d);  // s^T * d
DenseMatrix relu(const DenseMatrix& x);
double frobenius_sq(const DenseMatrix& x);
DenseMatrix log_sum_exp_rows(const DenseMatrix& x);

// Bias-corrected Adam, applied in place. Throws NumericError on non-finite grad.
void adam_step(Parameter& p, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Central finite differences, entrywise.
DenseMatrix finite_diff_grad(const std::function<double(const DenseMatrix&)>& f,
                             const DenseMatrix& x, double h = 1e-4);

// ---- reverse-mode tape ----------------------------------------------------

// Records forward operations; backward() replays their adjoint rules in
// reverse order and accumulates into the grad field of every leaf Parameter.
class Tape {
 public:
  using Var = int;

  Var leaf(const ParamPtr& p);
  Var constant(DenseMatrix c);

  const DenseMatrix& value(Var x) const { return nodes_[x].value; }
  const DenseMatrix& grad(Var x) const { return nodes_[x].grad; }
  double scalar(Var x) const;

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var spmm(const SparseMatrix& s, Var d);
  Var relu(Var x);
  Var concat_cols(Var x, Var y);
  Var gather_rows(Var x, std::vector<int> idx);
  Var grl(Var x, bool active = true);  // identity forward, negated backward
  Var frobenius_sq(Var x);             // 1x1
  Var log_sum_exp_rows(Var x);         // n x 1
  Var softmax_rows(Var x);
  Var rowwise_dot(Var a, Var b);   // n x 1
  Var rowwise_norm(Var x);         // n x 1, Euclidean row norms
  Var logsigmoid(Var x);           // elementwise log sigma, inputs clamped to +-30
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_rowvec(Var x, Var b);  // b is 1 x cols, broadcast over rows
  Var scale(Var x, double s);
  Var offset(Var x, double c);  // x + c elementwise
  Var sum_all(Var x);           // 1x1
  // Summed negative log-likelihood of true labels from per-row probabilities.
  // Probabilities below 1e-12 are clamped; clamp_count (if given) is bumped.
  Var nll_from_probs(Var probs, std::vector<int> labels, long* clamp_count = nullptr);

  void backward(Var scalar_loss);

  // Name of the first recorded node whose value contains a non-finite entry,
  // or empty string if all values are finite.
  std::string first_nonfinite() const;

 private:
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    std::function<void()> back;  // empty for leaves/constants
    ParamPtr param;              // non-null for parameter leaves
    std::string op;
  };

  Var push(DenseMatrix value, std::string op);
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, Var> leaf_cache_;
};

}  // namespace dana
