#include <doctest.h>

#include <cmath>
#include <random>

#include "dana/tensor.hpp"

using namespace dana;

namespace {

DenseMatrix random_dense(int rows, int cols, std::mt19937_64& rng) {
  DenseMatrix m(rows, cols);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : m.v) x = u(rng);
  return m;
}

SparseMatrix random_sparse(int rows, int cols, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::tuple<int, int, double>> trip;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (u(rng) < 2.0 * density - 1.0) trip.emplace_back(r, c, u(rng));
  return SparseMatrix::from_triplets(rows, cols, std::move(trip));
}

double max_rel_err(const DenseMatrix& analytic, const DenseMatrix& numeric) {
  double worst = 0.0;
  for (size_t i = 0; i < analytic.v.size(); ++i) {
    double denom = std::max(1.0, std::abs(analytic.v[i]));
    worst = std::max(worst, std::abs(analytic.v[i] - numeric.v[i]) / denom);
  }
  return worst;
}

// Gradient check for a scalar-valued tape program of one input parameter.
template <typename Builder>
void check_gradient(const DenseMatrix& x0, Builder build, double tol = 1e-4) {
  auto p = std::make_shared<Parameter>(x0);
  Tape tape;
  tape.backward(build(tape, tape.leaf(p)));
  DenseMatrix fd = finite_diff_grad(
      [&build](const DenseMatrix& x) {
        auto q = std::make_shared<Parameter>(x);
        Tape t;
        return t.scalar(build(t, t.leaf(q)));
      },
      x0);
  CHECK(max_rel_err(p->grad, fd) < tol);
}

}  // namespace

TEST_CASE("dense_matmul basics") {
  DenseMatrix x(2, 3);
  for (size_t i = 0; i < x.v.size(); ++i) x.v[i] = static_cast<double>(i) - 2.5;
  DenseMatrix ix = dense_matmul(DenseMatrix::identity(2), x);
  for (size_t i = 0; i < x.v.size(); ++i) CHECK(ix.v[i] == x.v[i]);

  DenseMatrix a(2, 2);
  a.v = {1, 2, 3, 4};
  DenseMatrix b(2, 1);
  b.v = {1, 1};
  DenseMatrix c = dense_matmul(a, b);
  CHECK(c.at(0, 0) == doctest::Approx(3));
  CHECK(c.at(1, 0) == doctest::Approx(7));

  CHECK_THROWS_AS(dense_matmul(a, DenseMatrix(3, 2)), DimensionError);
}

TEST_CASE("matmul gradient of sum(A*B) equals broadcast column sums of B") {
  std::mt19937_64 rng(1);
  DenseMatrix a0 = random_dense(3, 4, rng);
  DenseMatrix b0 = random_dense(4, 2, rng);
  auto pa = std::make_shared<Parameter>(a0);
  auto pb = std::make_shared<Parameter>(b0);
  Tape tape;
  tape.backward(tape.sum_all(tape.matmul(tape.leaf(pa), tape.leaf(pb))));
  // d sum(AB) / dA_ik = sum_j B_kj
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) {
      double colsum = 0.0;
      for (int j = 0; j < 2; ++j) colsum += b0.at(k, j);
      CHECK(pa->grad.at(i, k) == doctest::Approx(colsum).epsilon(1e-10));
    }
  DenseMatrix fd = finite_diff_grad(
      [&b0](const DenseMatrix& a) {
        DenseMatrix p = dense_matmul(a, b0);
        double s = 0.0;
        for (double t : p.v) s += t;
        return s;
      },
      a0);
  CHECK(max_rel_err(pa->grad, fd) < 1e-4);
}

TEST_CASE("spmm identity and dense oracle") {
  std::mt19937_64 rng(2);
  DenseMatrix d = random_dense(5, 3, rng);
  DenseMatrix out = spmm(SparseMatrix::identity(5), d);
  for (size_t i = 0; i < d.v.size(); ++i) CHECK(out.v[i] == d.v[i]);

  SparseMatrix s = random_sparse(10, 10, 0.3, rng);
  DenseMatrix x = random_dense(10, 4, rng);
  DenseMatrix got = spmm(s, x);
  DenseMatrix want = dense_matmul(s.to_dense(), x);
  for (size_t i = 0; i < got.v.size(); ++i)
    CHECK(got.v[i] == doctest::Approx(want.v[i]).epsilon(1e-12));

  CHECK_THROWS_AS(spmm(s, DenseMatrix(4, 4)), DimensionError);
}

TEST_CASE("spmm matches densified product on random matrices up to 50x50") {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 20; ++it) {
    int n = 2 + static_cast<int>(rng() % 49);
    int m = 2 + static_cast<int>(rng() % 49);
    int k = 1 + static_cast<int>(rng() % 6);
    SparseMatrix s = random_sparse(n, m, 0.2, rng);
    DenseMatrix d = random_dense(m, k, rng);
    DenseMatrix got = spmm(s, d);
    DenseMatrix want = dense_matmul(s.to_dense(), d);
    for (size_t i = 0; i < got.v.size(); ++i) CHECK(std::abs(got.v[i] - want.v[i]) < 1e-12);
  }
}

TEST_CASE("relu forward and mask backward") {
  DenseMatrix x(1, 2);
  x.v = {-1, 2};
  DenseMatrix y = relu(x);
  CHECK(y.v[0] == 0);
  CHECK(y.v[1] == 2);

  DenseMatrix pos(2, 2, 0.5);
  DenseMatrix same = relu(pos);
  for (size_t i = 0; i < same.v.size(); ++i) CHECK(same.v[i] == pos.v[i]);

  auto p = std::make_shared<Parameter>(x);
  Tape tape;
  Tape::Var out = tape.relu(tape.leaf(p));
  tape.backward(tape.scale(tape.sum_all(out), 3.0));  // upstream [3,3]
  CHECK(p->grad.v[0] == 0);
  CHECK(p->grad.v[1] == 3);
}

TEST_CASE("concat_cols shapes, neutral element, gradient") {
  Tape tape;
  std::mt19937_64 rng(4);
  Tape::Var x = tape.constant(random_dense(4, 2, rng));
  Tape::Var y = tape.constant(random_dense(4, 3, rng));
  CHECK(tape.value(tape.concat_cols(x, y)).cols == 5);

  Tape::Var empty = tape.constant(DenseMatrix(4, 0));
  const DenseMatrix& same = tape.value(tape.concat_cols(x, empty));
  for (size_t i = 0; i < same.v.size(); ++i) CHECK(same.v[i] == tape.value(x).v[i]);

  CHECK_THROWS_AS(tape.concat_cols(x, tape.constant(DenseMatrix(3, 1))), DimensionError);

  check_gradient(random_dense(3, 2, rng), [](Tape& t, Tape::Var in) {
    return t.sum_all(t.concat_cols(in, t.relu(in)));
  });
}

TEST_CASE("gather_rows identity, duplicates, empty, bounds") {
  std::mt19937_64 rng(5);
  DenseMatrix x0 = random_dense(3, 2, rng);
  auto p = std::make_shared<Parameter>(x0);
  Tape tape;
  Tape::Var x = tape.leaf(p);
  const DenseMatrix& same = tape.value(tape.gather_rows(x, {0, 1, 2}));
  for (size_t i = 0; i < same.v.size(); ++i) CHECK(same.v[i] == x0.v[i]);

  Tape::Var dup = tape.gather_rows(x, {2, 2});
  CHECK(tape.value(dup).rows == 2);
  tape.backward(tape.sum_all(dup));
  CHECK(p->grad.at(2, 0) == doctest::Approx(2));
  CHECK(p->grad.at(0, 0) == 0);

  Tape t2;
  CHECK(t2.value(t2.gather_rows(t2.constant(x0), {})).rows == 0);
  CHECK_THROWS_AS(t2.gather_rows(t2.constant(x0), {3}), IndexError);
}

TEST_CASE("grl: identity forward, negated backward, double application") {
  DenseMatrix x0(1, 2);
  x0.v = {0.5, -2};
  auto p = std::make_shared<Parameter>(x0);
  Tape tape;
  Tape::Var g = tape.grl(tape.leaf(p));
  const DenseMatrix& fwd = tape.value(g);
  CHECK(fwd.v[0] == 0.5);  // bitwise identity
  CHECK(fwd.v[1] == -2.0);
  tape.backward(tape.sum_all(g));
  CHECK(p->grad.v[0] == -1);
  CHECK(p->grad.v[1] == -1);

  auto q = std::make_shared<Parameter>(x0);
  Tape t2;
  t2.backward(t2.sum_all(t2.grl(t2.grl(t2.leaf(q)))));
  CHECK(q->grad.v[0] == 1);
  CHECK(q->grad.v[1] == 1);
}

TEST_CASE("frobenius_sq value and gradient") {
  CHECK(frobenius_sq(DenseMatrix(3, 3)) == 0);
  DenseMatrix x(1, 2);
  x.v = {3, 4};
  CHECK(frobenius_sq(x) == doctest::Approx(25));

  auto p = std::make_shared<Parameter>(x);
  Tape tape;
  tape.backward(tape.frobenius_sq(tape.leaf(p)));
  CHECK(p->grad.v[0] == doctest::Approx(6));
  CHECK(p->grad.v[1] == doctest::Approx(8));
  DenseMatrix fd = finite_diff_grad([](const DenseMatrix& m) { return frobenius_sq(m); }, x);
  CHECK(max_rel_err(p->grad, fd) < 1e-4);
}

TEST_CASE("log_sum_exp_rows values and shift invariance") {
  DenseMatrix x(3, 2);
  x.v = {0, 0, 1000, 1000, 1, 0};
  DenseMatrix l = log_sum_exp_rows(x);
  CHECK(l.at(0, 0) == doctest::Approx(std::log(2.0)));
  CHECK(l.at(1, 0) == doctest::Approx(1000 + std::log(2.0)));
  CHECK(l.at(2, 0) == doctest::Approx(std::log(std::exp(1.0) + 1.0)));

  std::mt19937_64 rng(6);
  DenseMatrix a = random_dense(4, 5, rng);
  DenseMatrix b = a;
  for (int c = 0; c < b.cols; ++c) b.at(2, c) += 17.25;
  DenseMatrix la = log_sum_exp_rows(a), lb = log_sum_exp_rows(b);
  CHECK(std::abs(lb.at(2, 0) - la.at(2, 0) - 17.25) < 1e-9);
}

TEST_CASE("adam single step, fixed point, quadratic convergence") {
  Parameter p(DenseMatrix(1, 1));
  p.grad.v[0] = 1.0;
  adam_step(p, 0.001);
  CHECK(p.value.v[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(p.steps == 1);

  Parameter q(DenseMatrix(2, 2, 0.7));
  adam_step(q, 0.1);  // zero grad, zero moments
  for (double x : q.value.v) CHECK(x == 0.7);

  Parameter theta(DenseMatrix(1, 1, 1.0));
  for (int i = 0; i < 5000 && std::abs(theta.value.v[0]) >= 1e-3; ++i) {
    theta.grad.v[0] = 2.0 * theta.value.v[0];
    adam_step(theta, 0.01);
    theta.zero_grad();
  }
  CHECK(std::abs(theta.value.v[0]) < 1e-3);

  Parameter bad(DenseMatrix(1, 1));
  bad.grad.v[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(bad, 0.001), NumericError);
}

TEST_CASE("finite_diff_grad on known functions") {
  DenseMatrix x(1, 2);
  x.v = {3, 4};
  DenseMatrix g1 = finite_diff_grad(
      [](const DenseMatrix& m) {
        double s = 0;
        for (double t : m.v) s += t;
        return s;
      },
      x);
  for (double t : g1.v) CHECK(t == doctest::Approx(1.0).epsilon(1e-6));

  DenseMatrix g2 = finite_diff_grad([](const DenseMatrix& m) { return frobenius_sq(m); }, x);
  CHECK(g2.v[0] == doctest::Approx(6).epsilon(1e-6));
  CHECK(g2.v[1] == doctest::Approx(8).epsilon(1e-6));

  DenseMatrix y(1, 2);
  y.v = {1, 0};
  DenseMatrix g3 =
      finite_diff_grad([](const DenseMatrix& m) { return log_sum_exp_rows(m).v[0]; }, y);
  CHECK(g3.v[0] == doctest::Approx(0.7311).epsilon(1e-3));
  CHECK(g3.v[1] == doctest::Approx(0.2689).epsilon(1e-3));
}

TEST_CASE("property: analytic vs finite-difference gradients on random shapes") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 10; ++it) {
    int r = 1 + static_cast<int>(rng() % 8);
    int c = 1 + static_cast<int>(rng() % 8);
    DenseMatrix x = random_dense(r, c, rng);
    DenseMatrix w = random_dense(c, 3, rng);
    SparseMatrix s = random_sparse(r, r, 0.4, rng);
    std::vector<int> idx;
    for (int i = 0; i < r; ++i) idx.push_back(static_cast<int>(rng() % r));

    check_gradient(x, [&](Tape& t, Tape::Var in) {
      Tape::Var h = t.relu(t.matmul(t.spmm(s, in), t.constant(w)));
      Tape::Var g = t.gather_rows(h, idx);
      Tape::Var lse = t.log_sum_exp_rows(t.concat_cols(g, t.scale(g, -0.5)));
      return t.add(t.sum_all(lse), t.frobenius_sq(in));
    });
    check_gradient(x, [&](Tape& t, Tape::Var in) {
      return t.sum_all(t.logsigmoid(t.rowwise_dot(in, t.scale(in, 0.3))));
    });
    check_gradient(x, [&](Tape& t, Tape::Var in) {
      Tape::Var sm = t.softmax_rows(in);
      std::vector<int> labels(static_cast<size_t>(t.value(in).rows), 0);
      return t.add(t.nll_from_probs(sm, labels), t.sum_all(t.rowwise_norm(t.offset(in, 2.5))));
    });
  }
}

TEST_CASE("shared leaf: same parameter used twice accumulates both paths") {
  std::mt19937_64 rng(8);
  DenseMatrix x0 = random_dense(2, 2, rng);
  auto p = std::make_shared<Parameter>(x0);
  Tape tape;
  Tape::Var a = tape.leaf(p);
  Tape::Var b = tape.leaf(p);
  CHECK(a == b);
  tape.backward(tape.add(tape.sum_all(a), tape.frobenius_sq(b)));
  for (size_t i = 0; i < x0.v.size(); ++i)
    CHECK(p->grad.v[i] == doctest::Approx(1.0 + 2.0 * x0.v[i]));
}
