#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "snsr/errors.hpp"
#include "snsr/io.hpp"
#include "snsr/text.hpp"

using namespace snsr;

namespace {

template <class F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected snsr::Error");
  return ErrorCode::io_error;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("graph text format") {
  const auto g = io::parse_graph_text(
      "# small graph\n"
      "N 3\n"
      "node 0 fact it rains\n"
      "node 2 entity street\n"
      "edge 0 1 0.5\n"
      "edge 1 2 2\n");
  CHECK(g.size() == 3);
  CHECK(g.nodes()[0].label == "it rains");
  CHECK(g.nodes()[0].kind == NodeKind::fact);
  CHECK(g.nodes()[1].label == "v1");
  CHECK(g.degrees()[1] == 2.5);
  const std::string once = io::format_graph_text(g);
  CHECK(io::format_graph_text(io::parse_graph_text(once)) == once);
  CHECK(code_of([] { io::parse_graph_text("edge 0 1 1\n"); }) == ErrorCode::parse_error);
  CHECK(code_of([] { io::parse_graph_text("N 2\nnode 0 fact a\nnode 0 fact b\n"); }) == ErrorCode::parse_error);
  CHECK(code_of([] { io::parse_graph_text("N 2\nedge 0 2 1\n"); }) == ErrorCode::index_out_of_range);
  CHECK(code_of([] { io::parse_graph_text("N 2\nedge 0 1 -1\n"); }) == ErrorCode::negative_weight);
}

TEST_CASE("graph json format") {
  std::mt19937_64 rng(1);
  const auto g = oracle::random_graph(rng, 15, 0.3);
  const auto back = io::parse_graph_json(io::format_graph_json(g));
  CHECK(io::format_graph_text(back) == io::format_graph_text(g));
  const auto obj = io::parse_graph_json(
      R"({"nodes":[{"id":0,"kind":"entity","label":"a"},{"id":1,"kind":"fact","label":"b"}],
          "edges":[{"i":0,"j":1,"weight":0.25}]})");
  CHECK(obj.adjacency().coeff(1, 0) == 0.25);
  CHECK(code_of([] { io::parse_graph_json("{nope"); }) == ErrorCode::parse_error);
}

TEST_CASE("files pick the format by extension") {
  const auto dir = std::filesystem::temp_directory_path() / "snsr_io_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(2);
  const auto g = oracle::random_graph(rng, 9, 0.4);
  io::save_graph(dir / "g.json", g);
  io::save_graph(dir / "g.txt", g);
  CHECK(text::read_file(dir / "g.json").front() == '{');
  CHECK(io::format_graph_text(io::load_graph(dir / "g.json")) == io::format_graph_text(io::load_graph(dir / "g.txt")));
  CHECK(code_of([&] { io::load_graph(dir / "missing.txt"); }) == ErrorCode::io_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("signals, embeddings and filters") {
  Eigen::VectorXd x(3);
  x << 0.1, -2.0, 1e-300;
  CHECK(io::parse_signal_csv(io::format_signal_csv(x)) == x);
  CHECK(code_of([] { io::parse_signal_csv("1\nabc\n"); }) == ErrorCode::parse_error);
  const auto emb = io::parse_embeddings_csv("1,0,0\n0,1,0\n");
  CHECK(emb.vectors.rows() == 2);
  CHECK(emb.vectors.cols() == 3);
  CHECK(code_of([] { io::parse_embeddings_csv("1,0\n0\n"); }) == ErrorCode::shape_mismatch);
  const ChebyshevFilter f{{0.5, -0.25, 1.0 / 3.0}, 1.7};
  const auto back = io::parse_filter_json(io::format_filter_json(f));
  CHECK(back.coefficients == f.coefficients);
  CHECK(back.lambda_max == f.lambda_max);
  CHECK(code_of([] { io::parse_filter_json(R"({"lambda_max": -1, "coefficients": [1]})"); }) == ErrorCode::bad_params);
}

}
