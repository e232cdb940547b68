#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "grad_check.hpp"
#include "graph_static.hpp"
#include "ops.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace sdgl;
using testing::Mat;
using testing::loop_loss;
using testing::random_tensor;

namespace {

void check_adjacency(const Tensor& a, double tol = 1e-9) {
  const std::size_t n = a.dim(a.rank() - 1);
  for (std::size_t r = 0; r < a.numel() / n; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(a[r * n + j] > 0.0);
      s += a[r * n + j];
    }
    CHECK(std::fabs(s - 1.0) <= tol);
  }
}

}  // namespace

TEST_CASE("zero embeddings give the uniform graph") {
  const Tensor a = build_static_graph(Tensor::zeros({4, 3}));
  for (double v : a.data()) CHECK(v == 0.25);
}

TEST_CASE("large identity embeddings concentrate on the diagonal") {
  Tensor m = Tensor::zeros({3, 3});
  for (std::size_t i = 0; i < 3; ++i) m.mutable_data()[i * 4] = 10.0;
  const Tensor a = build_static_graph(m);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i * 4] == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t j = 0; j < 3; ++j)
      if (j != i) CHECK(a[i * 3 + j] == doctest::Approx(std::exp(-100.0)).epsilon(1e-9));
  }
}

TEST_CASE("static graph matches softmax(relu(M M^T)) and satisfies adjacency invariants") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(9), d = 1 + rng.below(6);
    const double spread = rng.uniform(0.1, 3.0);
    const Tensor m = random_tensor({n, d}, rng, -spread, spread);
    const Tensor a = build_static_graph(m);
    check_adjacency(a);
    const Mat mm = Mat::from(m);
    const Mat ref = testing::softmax_rows(
        testing::map(testing::mm(mm, testing::tr(mm)), [](double v) { return std::max(v, 0.0); }));
    CHECK(testing::max_abs_diff(Mat::from(a), ref) <= 1e-14);
  }
}

TEST_CASE("static graph rejects bad embeddings") {
  CHECK_THROWS_AS(build_static_graph(Tensor::zeros({1, 3})), DimensionError);
  CHECK_THROWS_AS(build_static_graph(Tensor({2, 1}, {1.0, INFINITY})), NumericError);
}

TEST_CASE("embedding init is finite and dynamic starts as a copy") {
  Rng rng(1);
  const NodeEmbeddings e = NodeEmbeddings::init(6, 4, 0.9, rng);
  CHECK(e.static_emb.requires_grad());
  CHECK(!e.dynamic_emb.requires_grad());
  CHECK(testing::bit_equal(e.static_emb, e.dynamic_emb));
  CHECK(e.static_emb.impl() != e.dynamic_emb.impl());
  for (double v : e.static_emb.data()) CHECK(std::isfinite(v));
  Rng bad(1);
  CHECK_THROWS_AS(NodeEmbeddings::init(3, 2, 1.0, bad), ConfigError);
  CHECK_THROWS_AS(NodeEmbeddings::init(3, 2, -0.1, bad), ConfigError);
}

TEST_CASE("identical node windows with a uniform graph leave only the Frobenius term") {
  Rng rng(2);
  const std::size_t B = 3, N = 5, h = 4;
  Tensor x = Tensor::zeros({B, N, h});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < h; ++t) {
      const double v = rng.normal();
      for (std::size_t i = 0; i < N; ++i) x.mutable_data()[(b * N + i) * h + t] = v;
    }
  const Tensor uniform = Tensor::full({N, N}, 1.0 / N);
  const double gamma = 0.37;
  CHECK(graph_regularization_loss(x, uniform, gamma).item() == doctest::Approx(gamma).epsilon(1e-14));
  CHECK(graph_regularization_loss(x, Tensor::zeros({N, N}), 0.0).item() == 0.0);
  // Any adjacency: only the sparsity term survives.
  const Tensor a = build_static_graph(random_tensor({N, 2}, rng));
  double fro = 0.0;
  for (double v : a.data()) fro += v * v;
  CHECK(graph_regularization_loss(x, a, gamma).item() == doctest::Approx(gamma * fro).epsilon(1e-14));
}

TEST_CASE("regularization loss matches the double-loop oracle") {
  // Hand-chosen N=3, h=2 case first.
  const Tensor x({1, 3, 2}, {0, 1, 2, 3, -1, 0.5});
  const Tensor a({3, 3}, {0.2, 0.5, 0.3, 0.1, 0.1, 0.8, 0.6, 0.2, 0.2});
  // Pairs: |x0-x1|^2=8, |x0-x2|^2=1.25, |x1-x2|^2=15.25
  const double hand = 0.5 * 8 + 0.3 * 1.25 + 0.1 * 8 + 0.8 * 15.25 + 0.6 * 1.25 + 0.2 * 15.25;
  double fro = 0.0;
  for (double v : a.data()) fro += v * v;
  CHECK(std::fabs(graph_regularization_loss(x, a, 0.1).item() - (hand + 0.1 * fro)) <= 1e-12);
  CHECK(std::fabs(loop_loss(x, a, 0.1) - (hand + 0.1 * fro)) <= 1e-12);

  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    const std::size_t B = 1 + rng.below(4), N = 2 + rng.below(6), h = 1 + rng.below(8);
    const Tensor xs = random_tensor({B, N, h}, rng);
    const Tensor as = build_static_graph(random_tensor({N, 3}, rng));
    const double gamma = rng.uniform(0.0, 2.0);
    const double got = graph_regularization_loss(xs, as, gamma).item();
    CHECK(std::fabs(got - loop_loss(xs, as, gamma)) <= 1e-12);
    CHECK(got >= 0.0);
  }
}

TEST_CASE("regularization loss is permutation equivariant") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t B = 2, N = 6, h = 5;
    const Tensor x = random_tensor({B, N, h}, rng);
    const Tensor a = build_static_graph(random_tensor({N, 3}, rng));
    std::vector<std::size_t> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = N - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    Tensor xp = Tensor::zeros({B, N, h}), ap = Tensor::zeros({N, N});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t t = 0; t < h; ++t)
          xp.mutable_data()[(b * N + i) * h + t] = x[(b * N + perm[i]) * h + t];
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) ap.mutable_data()[i * N + j] = a[perm[i] * N + perm[j]];
    const double l0 = graph_regularization_loss(x, a, 0.5).item();
    const double l1 = graph_regularization_loss(xp, ap, 0.5).item();
    CHECK(std::fabs(l0 - l1) <= 1e-10);
  }
}

TEST_CASE("regularization loss rejects mismatched shapes") {
  CHECK_THROWS_AS(graph_regularization_loss(Tensor::zeros({1, 3, 2}), Tensor::zeros({4, 4}), 0.1),
                  DimensionError);
  CHECK_THROWS_AS(graph_regularization_loss(Tensor::zeros({3, 2}), Tensor::zeros({3, 3}), 0.1),
                  DimensionError);
}

TEST_CASE("gradients with respect to embeddings and inputs match finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    Tensor m = random_tensor({5, 3}, rng, -1, 1, true);
    Tensor x = random_tensor({2, 5, 4}, rng, -1, 1, true);
    const GradCheckReport r = grad_check(
        [&] { return graph_regularization_loss(x, build_static_graph(m), 0.3); }, {m, x});
    INFO(r.max_rel_error);
    CHECK(r.pass);
  }
}

TEST_CASE("momentum update examples") {
  NodeEmbeddings e;
  e.static_emb = Tensor::full({2, 2}, 1.0, true);
  e.dynamic_emb = Tensor::zeros({2, 2});
  e.momentum = 0.9;
  e.momentum_update();
  for (double v : e.dynamic_emb.data()) CHECK(v == 0.9 * 0.0 + (1.0 - 0.9) * 1.0);

  Rng rng(3);
  e.static_emb = random_tensor({3, 2}, rng, -1, 1, true);
  e.dynamic_emb = random_tensor({3, 2}, rng);
  e.momentum = 0.0;
  e.momentum_update();
  CHECK(testing::bit_equal(e.dynamic_emb, e.static_emb));
  CHECK(!e.static_emb.has_grad());

  e.momentum = 1.0;
  CHECK_THROWS_AS(e.momentum_update(), ConfigError);
}

TEST_CASE("momentum update is exactly p*M_d + (1-p)*M_s") {
  Rng rng(4);
  NodeEmbeddings e;
  e.static_emb = random_tensor({4, 3}, rng, -1, 1, true);
  e.dynamic_emb = random_tensor({4, 3}, rng);
  e.momentum = 0.73;
  const Tensor before = e.dynamic_emb.clone();
  e.momentum_update();
  for (std::size_t i = 0; i < before.numel(); ++i) {
    CHECK(e.dynamic_emb[i] == 0.73 * before[i] + (1.0 - 0.73) * e.static_emb[i]);
  }
}

TEST_CASE("frozen static embeddings pull the dynamic ones in geometrically") {
  Rng rng(5);
  NodeEmbeddings e;
  e.static_emb = random_tensor({5, 4}, rng, -1, 1, true);
  e.dynamic_emb = random_tensor({5, 4}, rng, -2, 2);
  e.momentum = 0.9;
  auto gap = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < e.static_emb.numel(); ++i)
      m = std::max(m, std::fabs(e.dynamic_emb[i] - e.static_emb[i]));
    return m;
  };
  std::vector<double> initial(e.static_emb.numel());
  for (std::size_t i = 0; i < initial.size(); ++i) initial[i] = e.dynamic_emb[i] - e.static_emb[i];
  const double g0 = gap();
  for (int n = 1; n <= 50; ++n) {
    e.momentum_update();
    const double pn = std::pow(0.9, n);
    CHECK(gap() <= pn * g0 + 1e-12);
    for (std::size_t i = 0; i < initial.size(); ++i) {
      CHECK(std::fabs((e.dynamic_emb[i] - e.static_emb[i]) - pn * initial[i]) <= 1e-12);
    }
  }
}
