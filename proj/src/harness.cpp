#include "snsr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include <json.hpp>

#include "snsr/errors.hpp"
#include "snsr/io.hpp"
#include "snsr/text.hpp"

namespace snsr {

using nlohmann::ordered_json;

std::string_view to_string(TaskFamily f) noexcept {
  switch (f) {
    case TaskFamily::transitive: return "transitive";
    case TaskFamily::kinship: return "kinship";
    case TaskFamily::conflict: return "conflict";
  }
  return "transitive";
}

TaskFamily parse_task_family(std::string_view text) {
  if (text == "transitive") return TaskFamily::transitive;
  if (text == "kinship") return TaskFamily::kinship;
  if (text == "conflict") return TaskFamily::conflict;
  fail(ErrorCode::parse_error, "unknown task family '" + std::string(text) + "'");
}

NodeAtomMap SyntheticTask::mapping() const {
  std::vector<std::string> labels;
  labels.reserve(graph.size());
  for (const auto& n : graph.nodes()) labels.push_back(n.label);
  return map_by_label(labels, kb);
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::uint64_t task_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finaliser over a golden-ratio stride
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr double kCrossLo = 0.1;
constexpr double kCrossHi = 0.4;

/// Tasks are assembled in a canonical node order, then shuffled.
struct TaskBuilder {
  std::vector<std::string> names;
  std::vector<Edge> edges;
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> clauses;  // head, body
  std::vector<std::pair<std::size_t, std::size_t>> exclusive;
  std::vector<std::size_t> premises;

  std::size_t add(std::string name) {
    names.push_back(std::move(name));
    return names.size() - 1;
  }

  void link(std::size_t a, std::size_t b, double w) { edges.push_back({a, b, w}); }

  SyntheticTask finish(std::mt19937_64& rng, TaskMeta meta) const {
    const std::size_t n = names.size();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[draw_index(rng, i)]);

    SyntheticTask t;
    t.meta = meta;
    std::vector<NodeMeta> nodes(n);
    for (std::size_t c = 0; c < n; ++c) nodes[perm[c]] = {perm[c], names[c], NodeKind::proposition};
    std::vector<Edge> mapped;
    mapped.reserve(edges.size());
    for (const auto& e : edges) mapped.push_back({perm[e.i], perm[e.j], e.weight});
    t.graph = build_graph(std::move(nodes), mapped);

    for (const auto& name : names) t.kb.declare(name);
    for (const auto& [head, body] : clauses) t.kb.add_clause(head, body);
    for (const auto& [a, b] : exclusive) t.kb.add_exclusive(a, b);

    t.x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    KnowledgeBase oracle = t.kb;
    for (std::size_t p : premises) {
      t.premises.push_back(perm[p]);
      t.x0[static_cast<Eigen::Index>(perm[p])] = 1.0;
      oracle.add_fact(p);
    }
    std::sort(t.premises.begin(), t.premises.end());
    const ChainResult closure = forward_chain(oracle);
    for (std::size_t c = 0; c < n; ++c) {
      if (std::find(premises.begin(), premises.end(), c) != premises.end()) continue;
      t.labels.emplace_back(perm[c], closure.contains(c));
    }
    std::sort(t.labels.begin(), t.labels.end());
    return t;
  }
};

/// Adds `width` chains of depth + 1 implication nodes; returns their ids.
std::vector<std::vector<std::size_t>> add_chains(TaskBuilder& b, std::size_t depth, std::size_t width,
                                                 std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> chains(width);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t i = 0; i <= depth; ++i) {
      chains[c].push_back(b.add("p" + std::to_string(c) + "_" + std::to_string(i)));
      if (i > 0) {
        b.link(chains[c][i - 1], chains[c][i], 1.0);
        b.clauses.push_back({chains[c][i], {chains[c][i - 1]}});
      }
    }
  }
  for (std::size_t c = 1; c < width; ++c) {
    const std::size_t k = 1 + draw_index(rng, 2);
    for (std::size_t e = 0; e < k; ++e) {
      const std::size_t from = chains[c][draw_index(rng, depth + 1)];
      const auto& other = chains[draw_index(rng, c)];
      const std::size_t to = other[draw_index(rng, other.size())];
      b.link(from, to, draw_uniform(rng, kCrossLo, kCrossHi));
    }
  }
  return chains;
}

std::string relation_name(std::size_t k) {
  if (k == 1) return "parent";
  if (k == 2) return "grandparent";
  if (k == 3) return "great_grandparent";
  return "great" + std::to_string(k - 2) + "_grandparent";
}

/// rel_k(i, i+k) nodes of one family, indexed [k-1][i].
std::vector<std::vector<std::size_t>> add_family(TaskBuilder& b, std::size_t family, std::size_t length) {
  std::vector<std::vector<std::size_t>> rel(length);
  for (std::size_t k = 1; k <= length; ++k) {
    for (std::size_t i = 0; i + k <= length; ++i) {
      rel[k - 1].push_back(b.add("f" + std::to_string(family) + "_" + relation_name(k) + "_P" +
                                 std::to_string(i) + "_P" + std::to_string(i + k)));
      if (k == 1) continue;
      const std::size_t head = rel[k - 1][i];
      const std::size_t shorter = rel[k - 2][i];       // rel_{k-1}(i, i+k-1)
      const std::size_t step = rel[0][i + k - 1];      // parent(i+k-1, i+k)
      b.link(head, shorter, 1.0);
      b.link(head, step, 1.0);
      b.clauses.push_back({head, {shorter, step}});
    }
  }
  return rel;
}

}  // namespace

SyntheticTask gen_transitive(std::size_t depth, std::size_t width, std::uint64_t seed) {
  if (depth < 1 || depth > 8) fail(ErrorCode::bad_params, "transitive depth must lie in [1, 8]");
  if (width < 1) fail(ErrorCode::bad_params, "transitive width must be >= 1");
  std::mt19937_64 rng(seed);
  TaskBuilder b;
  const auto chains = add_chains(b, depth, width, rng);
  b.premises.push_back(chains[0][0]);
  return b.finish(rng, {TaskFamily::transitive, depth, width, seed});
}

SyntheticTask gen_kinship(std::size_t chain_length, std::uint64_t seed) {
  if (chain_length < 2 || chain_length > 12) fail(ErrorCode::bad_params, "kinship chain length must lie in [2, 12]");
  std::mt19937_64 rng(seed);
  TaskBuilder b;
  const auto main = add_family(b, 0, chain_length);
  const auto other = add_family(b, 1, 1 + draw_index(rng, chain_length));
  std::vector<std::size_t> main_nodes, other_nodes;
  for (const auto& row : main) main_nodes.insert(main_nodes.end(), row.begin(), row.end());
  for (const auto& row : other) other_nodes.insert(other_nodes.end(), row.begin(), row.end());
  const std::size_t k = 1 + draw_index(rng, 2);
  for (std::size_t e = 0; e < k; ++e) {
    const std::size_t from = other_nodes[draw_index(rng, other_nodes.size())];
    const std::size_t to = main_nodes[draw_index(rng, main_nodes.size())];
    b.link(from, to, draw_uniform(rng, kCrossLo, kCrossHi));
  }
  b.premises = main[0];
  return b.finish(rng, {TaskFamily::kinship, chain_length, 2, seed});
}

SyntheticTask gen_conflict(std::size_t depth, std::uint64_t seed) {
  if (depth < 1 || depth > 8) fail(ErrorCode::bad_params, "conflict depth must lie in [1, 8]");
  std::mt19937_64 rng(seed);
  TaskBuilder b;
  const auto chains = add_chains(b, depth, 3, rng);
  b.exclusive.emplace_back(chains[0][depth], chains[1][depth]);
  b.premises.push_back(chains[0][0]);
  if (draw_index(rng, 2) == 1) b.premises.push_back(chains[1][0]);
  return b.finish(rng, {TaskFamily::conflict, depth, 3, seed});
}

Dataset gen_dataset(const DatasetSpec& spec) {
  if (spec.count == 0) fail(ErrorCode::empty_dataset, "dataset needs at least one task");
  if (spec.max_depth < 1) fail(ErrorCode::bad_params, "max_depth must be >= 1");
  if (!(spec.train_fraction >= 0.0 && spec.val_fraction >= 0.0 &&
        spec.train_fraction + spec.val_fraction <= 1.0)) {
    fail(ErrorCode::bad_params, "split fractions must be non-negative and sum to at most 1");
  }
  Dataset d;
  d.spec = spec;
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.count)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(spec.count)));
  for (std::size_t i = 0; i < spec.count; ++i) {
    std::mt19937_64 rng(task_seed(spec.seed, i));
    const std::size_t depth = 1 + draw_index(rng, spec.max_depth);
    const std::uint64_t s = rng();
    SyntheticTask t;
    switch (spec.family) {
      case TaskFamily::transitive: t = gen_transitive(depth, spec.width, s); break;
      case TaskFamily::kinship: t = gen_kinship(depth + 1, s); break;
      case TaskFamily::conflict: t = gen_conflict(depth, s); break;
    }
    if (i < n_train) {
      d.train.push_back(std::move(t));
    } else if (i < n_train + n_val) {
      d.val.push_back(std::move(t));
    } else {
      d.test.push_back(std::move(t));
    }
  }
  return d;
}

void save_task(const std::filesystem::path& dir, const SyntheticTask& task) {
  io::save_graph(dir / "graph.txt", task.graph);
  text::write_file(dir / "kb.txt", format_kb(task.kb));
  text::write_file(dir / "signal.csv", io::format_signal_csv(task.x0));
  std::string labels = "node,label\n";
  for (const auto& [node, truth] : task.labels) labels += std::to_string(node) + "," + (truth ? "1" : "0") + "\n";
  text::write_file(dir / "labels.csv", labels);
  ordered_json meta{{"family", std::string(to_string(task.meta.family))},
                    {"depth", task.meta.depth},
                    {"width", task.meta.width},
                    {"seed", task.meta.seed},
                    {"premises", task.premises}};
  text::write_file(dir / "meta.json", meta.dump(1) + "\n");
}

SyntheticTask load_task(const std::filesystem::path& dir) {
  SyntheticTask t;
  t.graph = io::load_graph(dir / "graph.txt");
  t.kb = load_kb(dir / "kb.txt");
  t.x0 = io::load_signal(dir / "signal.csv");
  if (static_cast<std::size_t>(t.x0.size()) != t.graph.size()) {
    fail(ErrorCode::dimension_mismatch, dir.string() + ": signal length does not match the graph");
  }
  const std::string label_text = text::read_file(dir / "labels.csv");
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(label_text, '\n')) {
    ++line_no;
    const std::string_view line = text::strip_comment(raw);
    if (line.empty() || (line_no == 1 && line.front() == 'n')) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != 2) fail(ErrorCode::parse_error, dir.string() + "/labels.csv: expected 'node,label'");
    const std::size_t node = text::parse_index(cells[0], "labels.csv");
    if (node >= t.graph.size()) fail(ErrorCode::index_out_of_range, "label for unknown node", node);
    t.labels.emplace_back(node, text::parse_index(cells[1], "labels.csv") != 0);
  }
  std::sort(t.labels.begin(), t.labels.end());
  try {
    const auto meta = nlohmann::json::parse(text::read_file(dir / "meta.json"));
    t.meta.family = parse_task_family(meta.at("family").get<std::string>());
    t.meta.depth = meta.at("depth").get<std::size_t>();
    t.meta.width = meta.at("width").get<std::size_t>();
    t.meta.seed = meta.at("seed").get<std::uint64_t>();
    t.premises = meta.value("premises", std::vector<std::size_t>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, dir.string() + "/meta.json: " + e.what());
  }
  return t;
}

namespace {

std::string task_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "task_%05zu", index);
  return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  ordered_json manifest{{"family", std::string(to_string(data.spec.family))},
                        {"count", data.spec.count},
                        {"max_depth", data.spec.max_depth},
                        {"width", data.spec.width},
                        {"seed", data.spec.seed},
                        {"train_fraction", data.spec.train_fraction},
                        {"val_fraction", data.spec.val_fraction}};
  std::size_t index = 0;
  ordered_json splits = ordered_json::object();
  for (const auto& [name, tasks] : {std::pair{"train", &data.train}, std::pair{"val", &data.val},
                                    std::pair{"test", &data.test}}) {
    ordered_json list = ordered_json::array();
    for (const auto& t : *tasks) {
      const std::string rel = std::string(name) + "/" + task_dir_name(index++);
      save_task(dir / rel, t);
      list.push_back(rel);
    }
    splits[name] = list;
  }
  manifest["splits"] = splits;
  text::write_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  try {
    const auto m = nlohmann::json::parse(text::read_file(dir / "manifest.json"));
    d.spec.family = parse_task_family(m.at("family").get<std::string>());
    d.spec.count = m.at("count").get<std::size_t>();
    d.spec.max_depth = m.at("max_depth").get<std::size_t>();
    d.spec.width = m.at("width").get<std::size_t>();
    d.spec.seed = m.at("seed").get<std::uint64_t>();
    d.spec.train_fraction = m.value("train_fraction", 0.8);
    d.spec.val_fraction = m.value("val_fraction", 0.1);
    const auto& splits = m.at("splits");
    for (const auto& [name, out] : {std::pair{"train", &d.train}, std::pair{"val", &d.val},
                                    std::pair{"test", &d.test}}) {
      for (const auto& rel : splits.value(name, nlohmann::json::array())) {
        out->push_back(load_task(dir / rel.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, (dir / "manifest.json").string() + ": " + e.what());
  }
  return d;
}

TaskAnswer answer_from_output(const SyntheticTask& task, const PipelineOutput& out) {
  const NodeAtomMap map = task.mapping();
  TaskAnswer a;
  a.truth.resize(task.graph.size());
  for (std::size_t i = 0; i < a.truth.size(); ++i) a.truth[i] = map[i] && out.chain.contains(*map[i]);
  a.conflicts = out.conflicts.size();
  return a;
}

Solver pipeline_solver(const Model& model) {
  return [model](const SyntheticTask& task) {
    return answer_from_output(task, run_pipeline(model, task.graph, task.x0, task.kb, task.mapping()));
  };
}

std::size_t count_correct(const SyntheticTask& task, const TaskAnswer& answer) {
  if (answer.truth.size() != task.graph.size()) {
    fail(ErrorCode::shape_mismatch, "answer covers " + std::to_string(answer.truth.size()) +
                                        " nodes for a " + std::to_string(task.graph.size()) + "-node task");
  }
  std::size_t correct = 0;
  for (const auto& [node, truth] : task.labels) correct += answer.truth[node] == truth ? 1 : 0;
  return correct;
}

LatencyStats summarize_latency(std::vector<double> samples_ms) {
  LatencyStats s;
  s.samples = samples_ms.size();
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  s.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

EvalReport evaluate(const Solver& solver, std::span<const SyntheticTask> tasks, std::size_t warmup) {
  if (tasks.empty()) fail(ErrorCode::empty_dataset, "cannot evaluate on an empty task list");
  for (std::size_t w = 0; w < warmup; ++w) (void)solver(tasks[w % tasks.size()]);
  EvalReport r;
  std::vector<double> times;
  times.reserve(tasks.size());
  std::size_t clean = 0;
  for (const auto& t : tasks) {
    const auto start = std::chrono::steady_clock::now();
    const TaskAnswer a = solver(t);
    times.push_back(elapsed_ms(start));
    r.correct += count_correct(t, a);
    r.total += t.labels.size();
    clean += a.conflicts == 0 ? 1 : 0;
  }
  if (r.total == 0) fail(ErrorCode::empty_labels, "no labelled nodes in the evaluation set");
  r.tasks = tasks.size();
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.consistency = static_cast<double>(clean) / static_cast<double>(r.tasks);
  r.latency = summarize_latency(std::move(times));
  return r;
}

LatencyStats measure_latency(const Solver& solver, std::span<const SyntheticTask> tasks,
                             std::size_t reps, std::size_t warmup) {
  if (tasks.empty()) fail(ErrorCode::empty_dataset, "cannot time an empty task list");
  for (std::size_t w = 0; w < warmup; ++w) (void)solver(tasks[w % tasks.size()]);
  std::vector<double> times;
  for (std::size_t r = 0; r < reps; ++r) {
    for (const auto& t : tasks) {
      const auto start = std::chrono::steady_clock::now();
      (void)solver(t);
      times.push_back(elapsed_ms(start));
    }
  }
  return summarize_latency(std::move(times));
}

std::string format_report_json(const EvalReport& r, bool include_timing) {
  ordered_json doc{{"accuracy", r.accuracy},
                   {"correct", r.correct},
                   {"total", r.total},
                   {"tasks", r.tasks},
                   {"consistency", r.consistency}};
  if (include_timing) {
    doc["timing"] = {{"median_ms_per_query", r.latency.median_ms},
                     {"p95_ms_per_query", r.latency.p95_ms},
                     {"samples", r.latency.samples},
                     {"warmup_excluded", kWarmupQueries}};
  }
  return doc.dump(1) + "\n";
}

std::string_view to_string(GraphModel m) noexcept {
  return m == GraphModel::small_world ? "small-world" : "uniform";
}

GraphModel parse_graph_model(std::string_view text) {
  if (text == "small-world") return GraphModel::small_world;
  if (text == "uniform") return GraphModel::uniform;
  fail(ErrorCode::parse_error, "unknown graph model '" + std::string(text) + "'");
}

ReasoningGraph random_sparse_graph(std::size_t edges, std::uint64_t seed, GraphModel model) {
  const std::size_t n = std::max<std::size_t>(16, edges / 4);
  if (edges > n * (n - 1) / 2) fail(ErrorCode::bad_params, "too many edges for the node count");
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges * 2);
  std::vector<Edge> list;
  list.reserve(edges);
  auto try_add = [&](std::size_t i, std::size_t j) {
    if (i == j) return false;
    if (i > j) std::swap(i, j);
    if (!seen.insert(static_cast<std::uint64_t>(i) * n + j).second) return false;
    list.push_back({i, j, 1.0});
    return true;
  };
  if (model == GraphModel::small_world) {
    constexpr double kRewire = 0.1;
    for (std::size_t d = 1; list.size() < edges && d < n; ++d) {
      for (std::size_t i = 0; i < n && list.size() < edges; ++i) {
        if (draw_uniform(rng, 0.0, 1.0) < kRewire) {
          while (!try_add(i, draw_index(rng, n))) {
          }
        } else if (!try_add(i, (i + d) % n)) {
          while (!try_add(i, draw_index(rng, n))) {
          }
        }
      }
    }
  }
  while (list.size() < edges) try_add(draw_index(rng, n), draw_index(rng, n));
  return build_graph(default_nodes(n), list);
}

std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::shape_mismatch, "slope fit needs paired samples");
  if (x.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail(ErrorCode::bad_params, "log-log fit needs positive samples");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

ScalingResult scaling_benchmark(std::span<const std::size_t> sizes, std::size_t order, std::uint64_t seed,
                                GraphModel model) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) fail(ErrorCode::bad_params, "benchmark sizes must be ascending");
  }
  ScalingResult res;
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const ReasoningGraph g = random_sparse_graph(sizes[s], seed + s, model);
    const LaplacianMatrix lap = combinatorial_laplacian(g);
    const ChebyshevFilter f =
        fit_chebyshev(custom_response([](double l) { return std::exp(-l); }), order, lambda_max_bound(lap));
    std::mt19937_64 rng(seed ^ 0xC0FFEEULL);
    Eigen::VectorXd xv(static_cast<Eigen::Index>(g.size()));
    for (Eigen::Index i = 0; i < xv.size(); ++i) xv[i] = draw_uniform(rng, -1.0, 1.0);
    const GraphSignal x = vertex_signal(std::move(xv));

    // Batch calls so each timed sample spans at least a few milliseconds.
    auto start = std::chrono::steady_clock::now();
    double sink = chebyshev_filter(lap, f, x).values[0];
    const double one = std::max(elapsed_ms(start), 1e-4);
    const auto inner = static_cast<std::size_t>(std::clamp(5.0 / one, 1.0, 1e5));
    std::vector<double> samples;
    for (int rep = 0; rep < 7; ++rep) {
      start = std::chrono::steady_clock::now();
      for (std::size_t k = 0; k < inner; ++k) sink += chebyshev_filter(lap, f, x).values[0];
      samples.push_back(elapsed_ms(start) / static_cast<double>(inner));
    }
    if (!std::isfinite(sink)) fail(ErrorCode::non_finite_response, "benchmark filter diverged");
    const double median = summarize_latency(samples).median_ms;
    res.rows.push_back({sizes[s], g.size(), median});
    xs.push_back(static_cast<double>(sizes[s]));
    ys.push_back(median);
  }
  res.slope = loglog_slope(xs, ys);
  return res;
}

}  // namespace snsr
