#include "snsr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snsr/errors.hpp"

namespace snsr {

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::entity: return "entity";
    case NodeKind::fact: return "fact";
    case NodeKind::proposition: return "proposition";
  }
  return "proposition";
}

NodeKind parse_node_kind(std::string_view text) {
  if (text == "entity") return NodeKind::entity;
  if (text == "fact") return NodeKind::fact;
  if (text == "proposition") return NodeKind::proposition;
  fail(ErrorCode::parse_error, "unknown node kind '" + std::string(text) + "'");
}

std::string_view to_string(LaplacianKind kind) noexcept {
  return kind == LaplacianKind::normalized ? "normalized" : "combinatorial";
}

LaplacianKind parse_laplacian_kind(std::string_view text) {
  if (text == "combinatorial") return LaplacianKind::combinatorial;
  if (text == "normalized") return LaplacianKind::normalized;
  fail(ErrorCode::parse_error, "unknown laplacian kind '" + std::string(text) + "'");
}

ReasoningGraph make_graph_unchecked(std::vector<NodeMeta> nodes, SparseMatrix adjacency) {
  adjacency.makeCompressed();
  return ReasoningGraph(std::move(nodes), std::move(adjacency));
}

namespace {

void check_node_ids(const std::vector<NodeMeta>& nodes) {
  if (nodes.empty()) fail(ErrorCode::bad_params, "graph needs at least one node");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != i) {
      fail(ErrorCode::index_out_of_range,
           "node ids must be dense and ordered; position " + std::to_string(i) +
               " holds id " + std::to_string(nodes[i].id),
           i);
    }
  }
}

}  // namespace

Eigen::VectorXd ReasoningGraph::degrees() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  for (Eigen::Index r = 0; r < adjacency_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(adjacency_, r); it; ++it) d[r] += it.value();
  }
  return d;
}

std::vector<Edge> ReasoningGraph::edges() const {
  std::vector<Edge> out;
  for (Eigen::Index r = 0; r < adjacency_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(adjacency_, r); it; ++it) {
      if (it.col() > r && it.value() != 0.0) {
        out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(it.col()),
                       it.value()});
      }
    }
  }
  return out;
}

std::size_t ReasoningGraph::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < adjacency_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(adjacency_, r); it; ++it) {
      if (it.col() > r && it.value() != 0.0) ++count;
    }
  }
  return count;
}

void ReasoningGraph::validate() const {
  check_node_ids(nodes_);
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  if (adjacency_.rows() != n || adjacency_.cols() != n) {
    fail(ErrorCode::dimension_mismatch, "adjacency shape does not match node count");
  }
  for (Eigen::Index r = 0; r < adjacency_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(adjacency_, r); it; ++it) {
      const double w = it.value();
      if (!std::isfinite(w)) fail(ErrorCode::non_finite_value, "non-finite edge weight", r);
      if (w < 0.0) fail(ErrorCode::negative_weight, "negative edge weight", r);
      if (it.col() == r && w != 0.0) fail(ErrorCode::self_loop, "self-loop on node", r);
      if (adjacency_.coeff(it.col(), r) != w) {
        fail(ErrorCode::dimension_mismatch, "adjacency is not symmetric", r);
      }
    }
  }
}

ReasoningGraph build_graph(std::vector<NodeMeta> nodes, std::span<const Edge> edges) {
  check_node_ids(nodes);
  const std::size_t n = nodes.size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size());
  for (const Edge& e : edges) {
    if (e.i >= n || e.j >= n) {
      fail(ErrorCode::index_out_of_range,
           "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
               ") out of range for " + std::to_string(n) + " nodes",
           std::max(e.i, e.j));
    }
    if (!std::isfinite(e.weight)) fail(ErrorCode::non_finite_value, "non-finite edge weight", e.i);
    if (e.weight < 0.0) {
      fail(ErrorCode::negative_weight, "edge (" + std::to_string(e.i) + ", " +
                                           std::to_string(e.j) + ") has negative weight",
           e.i);
    }
    if (e.i == e.j) fail(ErrorCode::self_loop, "self-loop on node " + std::to_string(e.i), e.i);
    const auto i = static_cast<int>(e.i);
    const auto j = static_cast<int>(e.j);
    triplets.emplace_back(i, j, e.weight);
    triplets.emplace_back(j, i, e.weight);
  }
  SparseMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // setFromTriplets sums duplicates, which is the documented merge rule.
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.prune(0.0);
  return make_graph_unchecked(std::move(nodes), std::move(a));
}

std::vector<NodeMeta> default_nodes(std::size_t n) {
  std::vector<NodeMeta> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = i;
    nodes[i].label = "v" + std::to_string(i);
  }
  return nodes;
}

void NodeEmbedding::validate() const {
  if (vectors.rows() == 0) fail(ErrorCode::bad_params, "embedding has no rows");
  if (vectors.cols() == 0) fail(ErrorCode::bad_params, "embedding width must be >= 1");
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    if (!vectors.row(r).allFinite()) {
      fail(ErrorCode::non_finite_value, "embedding row " + std::to_string(r) + " is not finite",
           static_cast<std::size_t>(r));
    }
  }
}

ReasoningGraph similarity_adjacency(const NodeEmbedding& emb, double threshold,
                                    std::vector<NodeMeta> nodes) {
  emb.validate();
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::bad_params, "similarity threshold must lie in [0, 1]");
  }
  const Eigen::Index n = emb.vectors.rows();
  if (nodes.empty()) nodes = default_nodes(static_cast<std::size_t>(n));
  if (nodes.size() != static_cast<std::size_t>(n)) {
    fail(ErrorCode::dimension_mismatch, "node list and embedding rows differ in length");
  }

  Eigen::VectorXd norms = emb.vectors.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms[i] == 0.0) {
      fail(ErrorCode::zero_vector, "embedding of node " + std::to_string(i) + " has zero norm",
           static_cast<std::size_t>(i));
    }
  }

  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double c = emb.vectors.row(i).dot(emb.vectors.row(j)) / (norms[i] * norms[j]);
      c = std::clamp(c, 0.0, 1.0);
      if (c > 0.0 && c >= threshold) {
        edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), c});
      }
    }
  }
  return build_graph(std::move(nodes), edges);
}

LaplacianMatrix combinatorial_laplacian(const ReasoningGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  LaplacianMatrix out;
  out.kind = LaplacianKind::combinatorial;
  out.degrees = g.degrees();
  const SparseMatrix& a = g.adjacency();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros() + n));
  for (Eigen::Index r = 0; r < n; ++r) {
    triplets.emplace_back(r, r, out.degrees[r]);
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      triplets.emplace_back(r, it.col(), -it.value());
    }
  }
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

LaplacianMatrix normalized_laplacian(const ReasoningGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  LaplacianMatrix out;
  out.kind = LaplacianKind::normalized;
  out.degrees = g.degrees();
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt[i] = out.degrees[i] > 0.0 ? 1.0 / std::sqrt(out.degrees[i]) : 0.0;
  }
  const SparseMatrix& a = g.adjacency();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros() + n));
  for (Eigen::Index r = 0; r < n; ++r) {
    triplets.emplace_back(r, r, 1.0);
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      triplets.emplace_back(r, it.col(), -it.value() * inv_sqrt[r] * inv_sqrt[it.col()]);
    }
  }
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

LaplacianMatrix laplacian(const ReasoningGraph& g, LaplacianKind kind) {
  return kind == LaplacianKind::normalized ? normalized_laplacian(g) : combinatorial_laplacian(g);
}

}  // namespace snsr
