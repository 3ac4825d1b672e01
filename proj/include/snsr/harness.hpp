#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "snsr/graph.hpp"
#include "snsr/pipeline.hpp"
#include "snsr/symbolic.hpp"

namespace snsr {

enum class TaskFamily { transitive, kinship, conflict };

std::string_view to_string(TaskFamily f) noexcept;
TaskFamily parse_task_family(std::string_view text);

struct TaskMeta {
  TaskFamily family = TaskFamily::transitive;
  std::size_t depth = 1;
  std::size_t width = 1;
  std::uint64_t seed = 0;
};

/// Node labels double as atom names, so the node -> atom map is implied.
/// Premise nodes carry x0 = 1 and are not labelled; every other node is a
/// query whose label is its membership in the closure of KB + premises.
struct SyntheticTask {
  ReasoningGraph graph;
  Eigen::VectorXd x0;
  KnowledgeBase kb;                                // clauses and exclusions, no facts
  std::vector<std::size_t> premises;               // node ids, sorted
  std::vector<std::pair<std::size_t, bool>> labels;  // (node, truth), sorted by node
  TaskMeta meta;

  NodeAtomMap mapping() const;
};

/// `width` implication chains of depth + 1 nodes; chain 0 carries the
/// premise and the rest are distractors joined to earlier chains by one or
/// two weak cross edges. width = 2 makes half the nodes distractors.
SyntheticTask gen_transitive(std::size_t depth, std::size_t width, std::uint64_t seed);

/// A parent chain P0..PL whose relation-instance nodes compose
/// parent o rel_k -> rel_{k+1}, plus an unrelated distractor family.
SyntheticTask gen_kinship(std::size_t chain_length, std::uint64_t seed);

/// Two implication chains whose heads are mutually exclusive, plus a
/// distractor chain. The second chain's premise is present half the time.
SyntheticTask gen_conflict(std::size_t depth, std::uint64_t seed);

/// Uniform draws that do not depend on the standard library's
/// distribution implementations.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n);
double draw_uniform(std::mt19937_64& rng, double lo, double hi);

/// Decorrelated per-task seed.
std::uint64_t task_seed(std::uint64_t base, std::uint64_t index);

struct DatasetSpec {
  TaskFamily family = TaskFamily::transitive;
  std::size_t count = 1000;
  std::size_t max_depth = 5;  // depth drawn uniformly from 1..max_depth
  std::size_t width = 2;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<SyntheticTask> train;
  std::vector<SyntheticTask> val;
  std::vector<SyntheticTask> test;
};

/// Task i is generated from task_seed(spec.seed, i) and lands in a split by
/// its index, so the splits never share a task.
Dataset gen_dataset(const DatasetSpec& spec);

// On disk: <dir>/manifest.json plus <dir>/<split>/task_<index>/{graph.txt,
// kb.txt, signal.csv, labels.csv, meta.json}.
void save_task(const std::filesystem::path& dir, const SyntheticTask& task);
SyntheticTask load_task(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

struct TaskAnswer {
  std::vector<bool> truth;  // predicted truth per node
  std::size_t conflicts = 0;
};

using Solver = std::function<TaskAnswer(const SyntheticTask&)>;

/// Runs the full pipeline; a node is answered true when its atom is in the
/// closure.
Solver pipeline_solver(const Model& model);
TaskAnswer answer_from_output(const SyntheticTask& task, const PipelineOutput& out);

/// Correct labelled nodes in one answer.
std::size_t count_correct(const SyntheticTask& task, const TaskAnswer& answer);

struct LatencyStats {
  double median_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t samples = 0;
};

LatencyStats summarize_latency(std::vector<double> samples_ms);

struct EvalReport {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t tasks = 0;
  double consistency = 0.0;  // fraction of tasks without detected conflicts
  LatencyStats latency;      // one query = one task
};

inline constexpr std::size_t kWarmupQueries = 3;

/// Accuracy is pooled over labelled nodes. Warmup queries are run before
/// timing starts and do not count.
EvalReport evaluate(const Solver& solver, std::span<const SyntheticTask> tasks,
                    std::size_t warmup = kWarmupQueries);

/// Median per-query wall time pooled over `reps` passes.
LatencyStats measure_latency(const Solver& solver, std::span<const SyntheticTask> tasks,
                             std::size_t reps, std::size_t warmup = kWarmupQueries);

/// {"accuracy", "correct", "total", "tasks", "consistency", "timing": {...}}.
/// Timing sits in its own block so reports can be compared without it.
std::string format_report_json(const EvalReport& r, bool include_timing = true);

enum class GraphModel { small_world, uniform };

std::string_view to_string(GraphModel m) noexcept;
GraphModel parse_graph_model(std::string_view text);

/// Random graph with exactly `edges` distinct unit-weight edges over
/// max(16, edges / 4) nodes (mean degree 8). small_world starts from a ring
/// lattice and rewires each edge with probability 0.1; uniform draws every
/// endpoint uniformly.
ReasoningGraph random_sparse_graph(std::size_t edges, std::uint64_t seed,
                                   GraphModel model = GraphModel::small_world);

struct ScalingRow {
  std::size_t edges = 0;
  std::size_t nodes = 0;
  double median_ms = 0.0;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  std::optional<double> slope;  // log-log fit of time against |E|
};

/// Least-squares slope of log y against log x; empty for fewer than two
/// points.
std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y);

/// Median chebyshev_filter time at each edge count.
ScalingResult scaling_benchmark(std::span<const std::size_t> sizes, std::size_t order,
                                std::uint64_t seed = 0,
                                GraphModel model = GraphModel::small_world);

}  // namespace snsr
