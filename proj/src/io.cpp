#include "snsr/io.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snsr/errors.hpp"
#include "snsr/text.hpp"

namespace snsr::io {

using nlohmann::json;

namespace {

std::string line_ctx(std::size_t line_no) { return "line " + std::to_string(line_no); }

std::vector<NodeMeta> fill_nodes(std::size_t n, std::vector<std::optional<NodeMeta>>& seen) {
  std::vector<NodeMeta> nodes = default_nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) nodes[i] = *seen[i];
  }
  return nodes;
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string(what) + ": " + e.what());
  }
}

}  // namespace

ReasoningGraph parse_graph_text(std::string_view text) {
  std::optional<std::size_t> n;
  std::vector<std::optional<NodeMeta>> seen;
  std::vector<Edge> edges;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    const std::string_view line = text::strip_comment(raw);
    if (line.empty()) continue;
    const auto tok = text::split_ws(line);
    const std::string ctx = line_ctx(line_no);
    if (tok[0] == "N") {
      if (tok.size() != 2 || n) fail(ErrorCode::parse_error, ctx + ": expected a single 'N <count>'");
      n = text::parse_index(tok[1], ctx);
      if (*n == 0) fail(ErrorCode::parse_error, ctx + ": graph needs at least one node");
      seen.assign(*n, std::nullopt);
      continue;
    }
    if (!n) fail(ErrorCode::parse_error, ctx + ": 'N <count>' must come first");
    if (tok[0] == "node") {
      if (tok.size() < 3) fail(ErrorCode::parse_error, ctx + ": expected 'node <id> <kind> <label>'");
      NodeMeta m;
      m.id = text::parse_index(tok[1], ctx);
      if (m.id >= *n) fail(ErrorCode::index_out_of_range, ctx + ": node id out of range", m.id);
      if (seen[m.id]) fail(ErrorCode::parse_error, ctx + ": duplicate node id", m.id);
      m.kind = parse_node_kind(tok[2]);
      if (tok.size() > 3) {
        const auto start = static_cast<std::size_t>(tok[3].data() - line.data());
        m.label = std::string(line.substr(start));
      } else {
        m.label = "v" + std::to_string(m.id);
      }
      seen[m.id] = std::move(m);
    } else if (tok[0] == "edge") {
      if (tok.size() != 4) fail(ErrorCode::parse_error, ctx + ": expected 'edge <i> <j> <weight>'");
      edges.push_back({text::parse_index(tok[1], ctx), text::parse_index(tok[2], ctx),
                       text::parse_double(tok[3], ctx)});
    } else {
      fail(ErrorCode::parse_error, ctx + ": unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (!n) fail(ErrorCode::parse_error, "graph file has no 'N <count>' header");
  return build_graph(fill_nodes(*n, seen), edges);
}

std::string format_graph_text(const ReasoningGraph& g) {
  std::string out = "N " + std::to_string(g.size()) + "\n";
  for (const auto& m : g.nodes()) {
    out += "node " + std::to_string(m.id) + " " + std::string(to_string(m.kind)) + " " + m.label + "\n";
  }
  for (const auto& e : g.edges()) {
    out += "edge " + std::to_string(e.i) + " " + std::to_string(e.j) + " " +
           text::format_double(e.weight) + "\n";
  }
  return out;
}

ReasoningGraph parse_graph_json(std::string_view text) {
  const json doc = parse_json(text, "graph JSON");
  try {
    const auto& jn = doc.at("nodes");
    const std::size_t n = jn.size();
    if (n == 0) fail(ErrorCode::parse_error, "graph JSON has no nodes");
    std::vector<std::optional<NodeMeta>> seen(n);
    for (const auto& item : jn) {
      NodeMeta m;
      m.id = item.at("id").get<std::size_t>();
      if (m.id >= n) fail(ErrorCode::index_out_of_range, "graph JSON node id out of range", m.id);
      if (seen[m.id]) fail(ErrorCode::parse_error, "graph JSON duplicate node id", m.id);
      m.kind = parse_node_kind(item.value("kind", std::string("proposition")));
      m.label = item.value("label", "v" + std::to_string(m.id));
      seen[m.id] = std::move(m);
    }
    std::vector<Edge> edges;
    for (const auto& e : doc.value("edges", json::array())) {
      if (e.is_array()) {
        if (e.size() != 3) fail(ErrorCode::parse_error, "graph JSON edge must be [i, j, w]");
        edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
      } else {
        edges.push_back({e.at("i").get<std::size_t>(), e.at("j").get<std::size_t>(),
                         e.at("weight").get<double>()});
      }
    }
    return build_graph(fill_nodes(n, seen), edges);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("graph JSON: ") + e.what());
  }
}

std::string format_graph_json(const ReasoningGraph& g) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& m : g.nodes()) {
    doc["nodes"].push_back({{"id", m.id}, {"kind", std::string(to_string(m.kind))}, {"label", m.label}});
  }
  doc["edges"] = json::array();
  for (const auto& e : g.edges()) doc["edges"].push_back(json::array({e.i, e.j, e.weight}));
  return doc.dump(1) + "\n";
}

ReasoningGraph load_graph(const std::filesystem::path& path) {
  const std::string body = text::read_file(path);
  return path.extension() == ".json" ? parse_graph_json(body) : parse_graph_text(body);
}

void save_graph(const std::filesystem::path& path, const ReasoningGraph& g) {
  text::write_file(path, path.extension() == ".json" ? format_graph_json(g) : format_graph_text(g));
}

NodeEmbedding parse_embeddings_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto cell : text::split(line, ',')) row.push_back(text::parse_double(cell, line_ctx(line_no)));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::shape_mismatch, line_ctx(line_no) + ": ragged embedding row", rows.size());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::parse_error, "embedding CSV is empty");
  NodeEmbedding emb;
  emb.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      emb.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  emb.validate();
  return emb;
}

Eigen::VectorXd parse_signal_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    const std::string_view line = text::strip_comment(raw);
    if (line.empty()) continue;
    const double v = text::parse_double(line, line_ctx(line_no));
    if (!std::isfinite(v)) fail(ErrorCode::non_finite_value, line_ctx(line_no) + ": non-finite signal value", values.size());
    values.push_back(v);
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string format_signal_csv(const Eigen::VectorXd& x) {
  std::string out;
  for (Eigen::Index i = 0; i < x.size(); ++i) out += text::format_double(x[i]) + "\n";
  return out;
}

Eigen::VectorXd load_signal(const std::filesystem::path& path) {
  return parse_signal_csv(text::read_file(path));
}

ChebyshevFilter parse_filter_json(std::string_view text) {
  const json doc = parse_json(text, "filter JSON");
  ChebyshevFilter f;
  try {
    f.lambda_max = doc.at("lambda_max").get<double>();
    f.coefficients = doc.at("coefficients").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("filter JSON: ") + e.what());
  }
  f.validate();
  return f;
}

std::string format_filter_json(const ChebyshevFilter& f) {
  json doc{{"lambda_max", f.lambda_max}, {"coefficients", f.coefficients}};
  return doc.dump(1) + "\n";
}

ChebyshevFilter load_filter(const std::filesystem::path& path) {
  return parse_filter_json(text::read_file(path));
}

}  // namespace snsr::io
