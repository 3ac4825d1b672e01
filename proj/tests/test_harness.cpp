#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <random>
#include <set>

#include "oracles.hpp"
#include "snsr/errors.hpp"
#include "snsr/harness.hpp"
#include "snsr/io.hpp"
#include "snsr/text.hpp"

using namespace snsr;
namespace fs = std::filesystem;

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

/// Plain fixpoint iteration over the task's clauses seeded with its premises.
std::vector<bool> naive_closure(const SyntheticTask& t) {
  const auto map = t.mapping();
  std::vector<bool> on(t.kb.atom_count(), false);
  for (auto p : t.premises) on[*map[p]] = true;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& c : t.kb.clauses()) {
      if (on[c.head]) continue;
      if (std::all_of(c.body.begin(), c.body.end(), [&](AtomId a) { return on[a]; })) {
        on[c.head] = true;
        changed = true;
      }
    }
  }
  return on;
}

void check_labels(const SyntheticTask& t) {
  const auto on = naive_closure(t);
  const auto map = t.mapping();
  for (const auto& [node, truth] : t.labels) CHECK(on[*map[node]] == truth);
  CHECK(t.labels.size() + t.premises.size() == t.graph.size());
}

std::string dump(const SyntheticTask& t) {
  return io::format_graph_text(t.graph) + format_kb(t.kb) + io::format_signal_csv(t.x0);
}

std::string read_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) out += fs::relative(f, root).string() + "\n" + text::read_file(f);
  return out;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("depth one without distractors") {
  const auto t = gen_transitive(1, 1, 0);
  CHECK(t.graph.size() == 2);
  REQUIRE(t.labels.size() == 1);
  CHECK(t.labels[0].second);
  CHECK(t.premises.size() == 1);
  CHECK(t.x0[static_cast<Eigen::Index>(t.premises[0])] == 1.0);
  CHECK(t.graph.nodes()[t.labels[0].first].label == "p0_1");
}

TEST_CASE("generators are deterministic per seed") {
  CHECK(dump(gen_transitive(5, 3, 17)) == dump(gen_transitive(5, 3, 17)));
  CHECK(dump(gen_transitive(5, 3, 17)) != dump(gen_transitive(5, 3, 18)));
  CHECK(dump(gen_kinship(5, 4)) == dump(gen_kinship(5, 4)));
  CHECK(dump(gen_conflict(3, 2)) == dump(gen_conflict(3, 2)));
}

TEST_CASE("transitive labels equal an independent closure") {
  const auto t = gen_transitive(5, 4, 0);
  CHECK(t.graph.size() == 24);
  check_labels(t);
  std::size_t positives = 0;
  for (const auto& l : t.labels) positives += l.second;
  CHECK(positives == 5);
  for (std::uint64_t s = 0; s < 30; ++s) check_labels(gen_transitive(1 + s % 8, 1 + s % 4, s));
}

TEST_CASE("width two makes half the nodes distractors") {
  const auto t = gen_transitive(4, 2, 3);
  std::size_t distractors = 0;
  for (const auto& n : t.graph.nodes()) distractors += n.label.rfind("p1_", 0) == 0;
  CHECK(distractors * 2 == t.graph.size());
}

TEST_CASE("kinship with two generations") {
  const auto t = gen_kinship(2, 0);
  std::size_t positives = 0;
  for (const auto& [node, truth] : t.labels) {
    if (!truth) continue;
    ++positives;
    CHECK(t.graph.nodes()[node].label == "f0_grandparent_P0_P2");
  }
  CHECK(positives == 1);
  check_labels(t);
}

TEST_CASE("kinship pedigree of length four") {
  const auto t = gen_kinship(4, 1);
  check_labels(t);
  std::set<std::string> pos, neg_main;
  for (const auto& [node, truth] : t.labels) {
    const std::string& name = t.graph.nodes()[node].label;
    if (truth) {
      pos.insert(name);
    } else if (name.rfind("f0_", 0) == 0) {
      neg_main.insert(name);
    }
  }
  const std::set<std::string> want{"f0_grandparent_P0_P2",      "f0_grandparent_P1_P3",
                                   "f0_grandparent_P2_P4",      "f0_great_grandparent_P0_P3",
                                   "f0_great_grandparent_P1_P4", "f0_great2_grandparent_P0_P4"};
  CHECK(pos == want);
  CHECK(neg_main.empty());
  std::set<std::string> premises;
  for (auto p : t.premises) premises.insert(t.graph.nodes()[p].label);
  CHECK(premises == std::set<std::string>{"f0_parent_P0_P1", "f0_parent_P1_P2", "f0_parent_P2_P3", "f0_parent_P3_P4"});
}

TEST_CASE("conflict tasks carry an exclusive pair") {
  std::size_t with_both = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto t = gen_conflict(3, s);
    check_labels(t);
    REQUIRE(t.kb.exclusive().size() == 1);
    KnowledgeBase kb = t.kb;
    const auto map = t.mapping();
    for (auto p : t.premises) kb.add_fact(*map[p]);
    const auto conflicts = detect_conflicts(kb, forward_chain(kb));
    CHECK(conflicts.size() == (t.premises.size() == 2 ? 1u : 0u));
    with_both += t.premises.size() == 2;
  }
  CHECK(with_both > 5);
  CHECK(with_both < 35);
}

TEST_CASE("generator parameter errors") {
  CHECK(code_of([] { gen_transitive(0, 1, 0); }) == ErrorCode::bad_params);
  CHECK(code_of([] { gen_transitive(9, 1, 0); }) == ErrorCode::bad_params);
  CHECK(code_of([] { gen_transitive(2, 0, 0); }) == ErrorCode::bad_params);
  CHECK(code_of([] { gen_kinship(1, 0); }) == ErrorCode::bad_params);
  CHECK(code_of([] { gen_conflict(0, 0); }) == ErrorCode::bad_params);
}

TEST_CASE("dataset splits are disjoint and sized") {
  const Dataset d = gen_dataset(DatasetSpec{});
  CHECK(d.train.size() == 800);
  CHECK(d.val.size() == 100);
  CHECK(d.test.size() == 100);
  std::set<std::uint64_t> train, val, test;
  for (const auto& t : d.train) train.insert(t.meta.seed);
  for (const auto& t : d.val) val.insert(t.meta.seed);
  for (const auto& t : d.test) test.insert(t.meta.seed);
  CHECK(train.size() + val.size() + test.size() == 1000);
  std::set<std::uint64_t> all = train;
  all.insert(val.begin(), val.end());
  all.insert(test.begin(), test.end());
  CHECK(all.size() == 1000);
  std::size_t max_depth = 0;
  for (const auto& t : d.train) max_depth = std::max(max_depth, t.meta.depth);
  CHECK(max_depth == 5);
}

TEST_CASE("datasets round trip on disk byte for byte") {
  const auto root = fs::temp_directory_path() / "snsr_harness_ds";
  fs::remove_all(root);
  const DatasetSpec spec{TaskFamily::kinship, 30, 3, 2, 5};
  save_dataset(root / "a", gen_dataset(spec));
  save_dataset(root / "b", gen_dataset(spec));
  CHECK(read_tree(root / "a") == read_tree(root / "b"));
  const Dataset back = load_dataset(root / "a");
  CHECK(back.train.size() == 24);
  save_dataset(root / "c", back);
  CHECK(read_tree(root / "a") == read_tree(root / "c"));
  REQUIRE(back.val.size() == 3);
  CHECK(back.val[1].labels == gen_dataset(spec).val[1].labels);
  fs::remove_all(root);
}

TEST_CASE("evaluate with an oracle solver") {
  const Dataset d = gen_dataset({TaskFamily::transitive, 40, 5, 2, 3});
  Solver copy = [](const SyntheticTask& t) {
    TaskAnswer a;
    a.truth.assign(t.graph.size(), false);
    for (const auto& [node, truth] : t.labels) a.truth[node] = truth;
    return a;
  };
  const auto r = evaluate(copy, d.train);
  CHECK(r.accuracy == 1.0);
  CHECK(r.consistency == 1.0);
  CHECK(r.tasks == d.train.size());
  CHECK(r.latency.samples == d.train.size());
  CHECK(r.latency.median_ms > 0.0);
  const std::vector<SyntheticTask> none;
  CHECK(code_of([&] { evaluate(copy, none); }) == ErrorCode::empty_dataset);
}

TEST_CASE("pipeline evaluation is reproducible and order invariant") {
  const Dataset d = gen_dataset({TaskFamily::transitive, 100, 5, 2, 7});
  std::vector<SyntheticTask> tasks = d.train;
  tasks.insert(tasks.end(), d.val.begin(), d.val.end());
  tasks.insert(tasks.end(), d.test.begin(), d.test.end());
  REQUIRE(tasks.size() == 100);
  const Solver s = pipeline_solver(make_model(PipelineConfig{}, default_rules()));
  const auto a = evaluate(s, tasks);
  const auto b = evaluate(s, tasks);
  CHECK(a.accuracy == b.accuracy);
  CHECK(format_report_json(a, false) == format_report_json(b, false));
  std::mt19937_64 rng(1);
  std::shuffle(tasks.begin(), tasks.end(), rng);
  const auto c = evaluate(s, tasks);
  CHECK(c.correct == a.correct);
  CHECK(c.total == a.total);
  CHECK(format_report_json(a, false).find("timing") == std::string::npos);
  CHECK(format_report_json(a, true).find("timing") != std::string::npos);
}

TEST_CASE("conflicts lower the consistency rate") {
  const Dataset d = gen_dataset({TaskFamily::conflict, 60, 2, 2, 1});
  Solver truth = [](const SyntheticTask& t) {
    KnowledgeBase kb = t.kb;
    const auto map = t.mapping();
    for (auto p : t.premises) kb.add_fact(*map[p]);
    const auto chain = forward_chain(kb);
    TaskAnswer a;
    for (std::size_t i = 0; i < t.graph.size(); ++i) a.truth.push_back(chain.contains(*map[i]));
    a.conflicts = detect_conflicts(kb, chain).size();
    return a;
  };
  std::size_t clean = 0;
  for (const auto& t : d.train) clean += truth(t).conflicts == 0;
  const auto r = evaluate(truth, d.train);
  CHECK(r.accuracy == 1.0);
  CHECK(r.consistency == doctest::Approx(static_cast<double>(clean) / d.train.size()));
  CHECK(r.consistency < 1.0);
}

TEST_CASE("latency summary") {
  const auto s = summarize_latency({5.0, 1.0, 3.0, 2.0, 4.0});
  CHECK(s.median_ms == 3.0);
  CHECK(s.p95_ms == 5.0);
  CHECK(s.samples == 5);
  CHECK(summarize_latency({1.0, 2.0}).median_ms == 1.5);
}

TEST_CASE("random sparse graphs have the requested size") {
  for (auto model : {GraphModel::small_world, GraphModel::uniform}) {
    const auto g = random_sparse_graph(1000, 3, model);
    CHECK(g.edge_count() == 1000);
    CHECK(g.size() == 250);
    g.validate();
    CHECK(io::format_graph_text(g) == io::format_graph_text(random_sparse_graph(1000, 3, model)));
  }
  CHECK(random_sparse_graph(20, 0).size() == 16);
}

TEST_CASE("log-log slope") {
  const double x[] = {1.0, 10.0, 100.0};
  const double y[] = {3.0, 30.0 * std::sqrt(10.0), 300.0 * 10.0};
  CHECK(*loglog_slope(x, y) == doctest::Approx(1.5).epsilon(1e-12));
  const double one[] = {1.0};
  CHECK_FALSE(loglog_slope(one, one).has_value());
}

TEST_CASE("scaling benchmark") {
  const std::size_t single[] = {1000};
  const auto r1 = scaling_benchmark(single, 5);
  CHECK(r1.rows.size() == 1);
  CHECK_FALSE(r1.slope.has_value());
  CHECK(r1.rows[0].median_ms > 0.0);

  // Ratios come from interleaved best-of-21 batches: a single-core sandbox
  // is too noisy for medians of back-to-back runs.
  struct Case {
    LaplacianMatrix lap;
    ChebyshevFilter f;
    GraphSignal x;
    double best = 1e300;
  };
  auto make_case = [](std::size_t edges, std::size_t k) {
    Case c{combinatorial_laplacian(random_sparse_graph(edges, 1)), {}, {}};
    c.f.coefficients.assign(k + 1, 0.1);
    c.f.lambda_max = lambda_max_bound(c.lap);
    c.x = vertex_signal(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(c.lap.size())));
    return c;
  };
  Case cases[] = {make_case(100000, 5), make_case(200000, 5), make_case(200000, 10)};
  double sink = 0.0;
  for (int round = 0; round < 21; ++round) {
    for (auto& c : cases) {
      const auto t0 = std::chrono::steady_clock::now();
      for (int rep = 0; rep < 4; ++rep) sink += chebyshev_filter(c.lap, c.f, c.x).values[0];
      c.best = std::min(c.best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
  }
  CHECK(std::isfinite(sink));
  const double edge_ratio = cases[1].best / cases[0].best;
  const double k_ratio = cases[2].best / cases[1].best;
  INFO("doubling |E| ratio " << edge_ratio << ", doubling K ratio " << k_ratio);
  CHECK(edge_ratio >= 1.5);
  CHECK(edge_ratio <= 2.6);
  CHECK(k_ratio >= 1.6);
  CHECK(k_ratio <= 2.4);
}

}
