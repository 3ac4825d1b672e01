#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace snsr {

/// Compressed row storage; both triangles of symmetric matrices are stored.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class NodeKind { entity, fact, proposition };

std::string_view to_string(NodeKind kind) noexcept;
NodeKind parse_node_kind(std::string_view text);

struct NodeMeta {
  std::size_t id = 0;
  std::string label;
  NodeKind kind = NodeKind::proposition;
};

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;
};

/// Weighted undirected graph of propositions/entities. Instances are only
/// produced by build_graph()/similarity_adjacency(), which enforce symmetry,
/// an empty diagonal and non-negative weights; they are immutable afterwards.
class ReasoningGraph {
 public:
  ReasoningGraph() = default;

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<NodeMeta>& nodes() const noexcept { return nodes_; }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }

  /// d_i = sum_j A_ij
  Eigen::VectorXd degrees() const;
  /// Undirected edges with i < j, in row-major order.
  std::vector<Edge> edges() const;
  std::size_t edge_count() const;

  /// Re-checks every structural invariant; throws snsr::Error on violation.
  void validate() const;

 private:
  friend ReasoningGraph build_graph(std::vector<NodeMeta>, std::span<const Edge>);
  friend ReasoningGraph make_graph_unchecked(std::vector<NodeMeta>, SparseMatrix);

  ReasoningGraph(std::vector<NodeMeta> nodes, SparseMatrix adjacency)
      : nodes_(std::move(nodes)), adjacency_(std::move(adjacency)) {}

  std::vector<NodeMeta> nodes_;
  SparseMatrix adjacency_;
};

/// Assembles the symmetric adjacency. Duplicate edges (in either
/// orientation) are summed.
ReasoningGraph build_graph(std::vector<NodeMeta> nodes, std::span<const Edge> edges);

/// Anonymous proposition nodes 0..n-1 labelled "v<i>".
std::vector<NodeMeta> default_nodes(std::size_t n);

struct NodeEmbedding {
  Eigen::MatrixXd vectors;  // one row per node

  std::size_t size() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  void validate() const;
};

/// A_ij = cos(v_i, v_j) when the cosine is >= threshold and i != j, else 0.
/// Negative cosines are clamped to 0 so the graph stays non-negative.
ReasoningGraph similarity_adjacency(const NodeEmbedding& emb, double threshold,
                                    std::vector<NodeMeta> nodes = {});

enum class LaplacianKind { combinatorial, normalized };

std::string_view to_string(LaplacianKind kind) noexcept;
LaplacianKind parse_laplacian_kind(std::string_view text);

struct LaplacianMatrix {
  LaplacianKind kind = LaplacianKind::combinatorial;
  SparseMatrix matrix;
  Eigen::VectorXd degrees;

  std::size_t size() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

/// L = D - A
LaplacianMatrix combinatorial_laplacian(const ReasoningGraph& g);

/// I - D^{-1/2} A D^{-1/2}. Isolated nodes keep a unit diagonal and no
/// off-diagonal entries, which keeps the spectrum inside [0, 2].
LaplacianMatrix normalized_laplacian(const ReasoningGraph& g);

LaplacianMatrix laplacian(const ReasoningGraph& g, LaplacianKind kind);

}  // namespace snsr
