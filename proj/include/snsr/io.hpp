#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "snsr/graph.hpp"
#include "snsr/spectral.hpp"

namespace snsr::io {

// Graph text format:
//   N <count>
//   node <id> <kind> <label...>
//   edge <i> <j> <weight>
// Node lines are optional; missing nodes get default labels. '#' starts a
// comment.
ReasoningGraph parse_graph_text(std::string_view text);
std::string format_graph_text(const ReasoningGraph& g);

// JSON form: {"nodes": [{"id", "kind", "label"}...], "edges": [[i, j, w]...]}
ReasoningGraph parse_graph_json(std::string_view text);
std::string format_graph_json(const ReasoningGraph& g);

/// Picks the format from the extension (.json or anything else = text).
ReasoningGraph load_graph(const std::filesystem::path& path);
void save_graph(const std::filesystem::path& path, const ReasoningGraph& g);

/// One row per node, comma separated, no header.
NodeEmbedding parse_embeddings_csv(std::string_view text);

/// One value per line.
Eigen::VectorXd parse_signal_csv(std::string_view text);
std::string format_signal_csv(const Eigen::VectorXd& x);
Eigen::VectorXd load_signal(const std::filesystem::path& path);

/// {"lambda_max": <real>, "coefficients": [...]}
ChebyshevFilter parse_filter_json(std::string_view text);
std::string format_filter_json(const ChebyshevFilter& f);
ChebyshevFilter load_filter(const std::filesystem::path& path);

}  // namespace snsr::io
