#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "snsr/errors.hpp"
#include "snsr/graph.hpp"
#include "snsr/spectral.hpp"

using namespace snsr;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected snsr::Error");
  return ErrorCode::io_error;
}

ReasoningGraph path3() {
  const Edge e[] = {{0, 1, 1.0}, {1, 2, 1.0}};
  return build_graph(default_nodes(3), e);
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("single edge is symmetric") {
  const Edge e[] = {{0, 1, 1.0}};
  const auto g = build_graph(default_nodes(2), e);
  const Eigen::MatrixXd a = oracle::dense_adjacency(g);
  CHECK(a(0, 1) == 1.0);
  CHECK(a(1, 0) == 1.0);
  CHECK(a(0, 0) == 0.0);
  CHECK(g.edge_count() == 1);
}

TEST_CASE("path degrees") {
  const auto d = path3().degrees();
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 2.0);
  CHECK(d[2] == 1.0);
}

TEST_CASE("duplicate edges are summed in either orientation") {
  const Edge e[] = {{0, 1, 0.5}, {1, 0, 0.5}};
  CHECK(oracle::dense_adjacency(build_graph(default_nodes(2), e))(0, 1) == 1.0);

  std::mt19937_64 rng(3);
  std::vector<Edge> edges;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(12, 12);
  for (int k = 0; k < 80; ++k) {
    std::size_t i = oracle::pick(rng, 12), j = oracle::pick(rng, 12);
    if (i == j) continue;
    const double w = oracle::uniform(rng, 0.0, 2.0);
    edges.push_back({i, j, w});
    acc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += w;
    acc(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += w;
  }
  const auto g = build_graph(default_nodes(12), edges);
  CHECK((oracle::dense_adjacency(g) - acc).cwiseAbs().maxCoeff() < 1e-14);
  g.validate();
}

TEST_CASE("construction errors") {
  const Edge out[] = {{0, 5, 1.0}};
  const Edge neg[] = {{0, 1, -1.0}};
  const Edge loop[] = {{1, 1, 1.0}};
  CHECK(code_of([&] { build_graph(default_nodes(2), out); }) == ErrorCode::index_out_of_range);
  CHECK(code_of([&] { build_graph(default_nodes(2), neg); }) == ErrorCode::negative_weight);
  CHECK(code_of([&] { build_graph(default_nodes(2), loop); }) == ErrorCode::self_loop);
}

TEST_CASE("similarity of identical and orthogonal rows") {
  NodeEmbedding emb{Eigen::MatrixXd(3, 2)};
  emb.vectors << 1, 0, 1, 0, 0, 1;
  const Eigen::MatrixXd a = oracle::dense_adjacency(similarity_adjacency(emb, 0.5));
  CHECK(a(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a(0, 2) == 0.0);
  CHECK(a(1, 2) == 0.0);
}

TEST_CASE("similarity matches all-pairs cosine") {
  std::mt19937_64 rng(11);
  NodeEmbedding emb{Eigen::MatrixXd(8, 4)};
  for (Eigen::Index i = 0; i < 8; ++i) emb.vectors.row(i) = oracle::random_vector(rng, 4).transpose();
  const Eigen::MatrixXd a = oracle::dense_adjacency(similarity_adjacency(emb, 0.3));
  for (Eigen::Index i = 0; i < 8; ++i) {
    for (Eigen::Index j = 0; j < 8; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (Eigen::Index k = 0; k < 4; ++k) {
        dot += emb.vectors(i, k) * emb.vectors(j, k);
        ni += emb.vectors(i, k) * emb.vectors(i, k);
        nj += emb.vectors(j, k) * emb.vectors(j, k);
      }
      const double c = dot / std::sqrt(ni * nj);
      const double want = (i != j && c >= 0.3) ? c : 0.0;
      CHECK(std::abs(a(i, j) - want) < 1e-12);
    }
  }
}

TEST_CASE("similarity is permutation equivariant") {
  std::mt19937_64 rng(5);
  NodeEmbedding emb{Eigen::MatrixXd(10, 3)};
  for (Eigen::Index i = 0; i < 10; ++i) emb.vectors.row(i) = oracle::random_vector(rng, 3).transpose();
  std::vector<Eigen::Index> perm(10);
  for (Eigen::Index i = 0; i < 10; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  NodeEmbedding permuted{Eigen::MatrixXd(10, 3)};
  for (Eigen::Index i = 0; i < 10; ++i) permuted.vectors.row(i) = emb.vectors.row(perm[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd a = oracle::dense_adjacency(similarity_adjacency(emb, 0.2));
  const Eigen::MatrixXd b = oracle::dense_adjacency(similarity_adjacency(permuted, 0.2));
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 10; ++j)
      CHECK(b(i, j) == a(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
}

TEST_CASE("zero embedding row reports its node") {
  NodeEmbedding emb{Eigen::MatrixXd::Zero(3, 2)};
  emb.vectors(0, 0) = 1.0;
  emb.vectors(2, 1) = 1.0;
  try {
    similarity_adjacency(emb, 0.1);
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_vector);
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 1);
  }
}

TEST_CASE("combinatorial laplacian of P3 and empty graph") {
  const Eigen::MatrixXd l = combinatorial_laplacian(path3()).dense();
  Eigen::MatrixXd want(3, 3);
  want << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK(l == want);
  const auto empty = combinatorial_laplacian(build_graph(default_nodes(4), {}));
  CHECK(empty.dense().isZero(0.0));
}

TEST_CASE("quadratic form equals weighted edge differences") {
  std::mt19937_64 rng(21);
  const auto g = oracle::random_graph(rng, 20, 0.2);
  const auto lap = combinatorial_laplacian(g);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd x = oracle::random_vector(rng, 20);
    double want = 0.0;
    for (const auto& e : g.edges()) {
      const double d = x[static_cast<Eigen::Index>(e.i)] - x[static_cast<Eigen::Index>(e.j)];
      want += e.weight * d * d;
    }
    const double got = x.dot(lap.matrix * x);
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, want));
  }
}

TEST_CASE("laplacian PSD, row sums and constant null vector") {
  std::mt19937_64 rng(8);
  for (int gi = 0; gi < 5; ++gi) {
    const auto g = oracle::random_graph(rng, 25, 0.15);
    const auto lap = combinatorial_laplacian(g);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(25);
    const Eigen::VectorXd l1 = lap.matrix * ones;
    const double scale = lap.degrees.maxCoeff();
    CHECK(l1.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scale));
    for (int t = 0; t < 1000; ++t) {
      Eigen::VectorXd x = oracle::random_vector(rng, 25);
      x.normalize();
      CHECK(x.dot(lap.matrix * x) >= -1e-9);
    }
  }
}

TEST_CASE("zero eigenvalues count connected components") {
  // three components: a triangle, a path of 4, an isolated node
  const Edge e[] = {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 2}, {5, 6, 1}};
  const auto g = build_graph(default_nodes(8), e);
  const auto ev = oracle::jacobi(combinatorial_laplacian(g).dense()).values;
  int zeros = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) zeros += std::abs(ev[i]) < 1e-8;
  CHECK(zeros == 3);

  const auto b = eigendecompose(combinatorial_laplacian(g));
  int lib_zeros = 0;
  for (Eigen::Index i = 0; i < b.eigenvalues.size(); ++i) lib_zeros += std::abs(b.eigenvalues[i]) < 1e-8;
  CHECK(lib_zeros == 3);
}

TEST_CASE("normalized laplacian") {
  const Edge e[] = {{0, 1, 1.0}};
  const auto lap = normalized_laplacian(build_graph(default_nodes(2), e));
  Eigen::MatrixXd want(2, 2);
  want << 1, -1, -1, 1;
  CHECK((lap.dense() - want).cwiseAbs().maxCoeff() < 1e-15);
  const auto ev = oracle::jacobi(lap.dense()).values;
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("normalized laplacian keeps isolated nodes at unit diagonal") {
  const Edge e[] = {{0, 1, 2.0}};
  const Eigen::MatrixXd l = normalized_laplacian(build_graph(default_nodes(3), e)).dense();
  CHECK(l(2, 2) == 1.0);
  CHECK(l.row(2).cwiseAbs().sum() == 1.0);
}

TEST_CASE("normalized spectrum within [0, 2] against the dense oracle") {
  std::mt19937_64 rng(30);
  for (int gi = 0; gi < 5; ++gi) {
    const auto g = oracle::random_graph(rng, 30, 0.2);
    const Eigen::MatrixXd l = normalized_laplacian(g).dense();
    CHECK((l - oracle::normalized(oracle::dense_adjacency(g))).cwiseAbs().maxCoeff() < 1e-14);
    const auto ev = oracle::jacobi(l).values;
    CHECK(ev.maxCoeff() <= 2.0 + 1e-9);
    CHECK(ev.minCoeff() >= -1e-9);
  }
}

}
