// spectral-nsr: command-line front end.
//
// Exit status: 0 on success, 1 for invalid input, 2 for numerical failure.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snsr/errors.hpp"
#include "snsr/graph.hpp"
#include "snsr/harness.hpp"
#include "snsr/io.hpp"
#include "snsr/pipeline.hpp"
#include "snsr/rules.hpp"
#include "snsr/spectral.hpp"
#include "snsr/symbolic.hpp"
#include "snsr/text.hpp"
#include "snsr/trainer.hpp"

namespace fs = std::filesystem;
using namespace snsr;

namespace {

void emit(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
  } else {
    text::write_file(path, body);
  }
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
  std::vector<std::size_t> out;
  for (auto cell : text::split(list, ',')) {
    const double v = text::parse_double(cell, "--sizes");
    if (!(v >= 1.0) || v != std::floor(v)) fail(ErrorCode::bad_params, "sizes must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

int cmd_gen(const std::string& family, std::size_t depth, std::size_t n, std::size_t width,
            std::uint64_t seed, const std::string& out) {
  DatasetSpec spec;
  spec.family = parse_task_family(family);
  spec.count = n;
  spec.max_depth = depth;
  spec.width = width;
  spec.seed = seed;
  save_dataset(out, gen_dataset(spec));
  std::cout << "wrote " << n << " " << family << " tasks to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& data, const std::string& out,
              const std::string& metrics, bool quiet) {
  PipelineConfig cfg;
  fs::path base;
  if (!config.empty()) {
    cfg = load_config(config);
    base = fs::path(config).parent_path();
  } else {
    apply_env_overrides(cfg);
  }
  const Dataset ds = load_dataset(data);
  const Model init = make_model(cfg, config_rules(cfg, base));
  TrainLog log;
  if (!quiet) log = [](const std::string& s) { std::cerr << s << "\n"; };
  const TrainResult res = train(init, ds, TrainRun::from_config(cfg), log);
  save_checkpoint(out, res.best);
  const std::string metrics_path = metrics.empty() ? fs::path(out).replace_extension(".metrics.csv").string() : metrics;
  text::write_file(metrics_path, format_metrics_csv(res.history));
  std::cout << "best epoch " << res.best.epoch << " val_acc " << text::format_double(res.best.val_acc)
            << "; checkpoint " << out << ", metrics " << metrics_path << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& split,
             const std::string& report) {
  const Checkpoint c = load_checkpoint(ckpt);
  const Dataset ds = load_dataset(data);
  const std::vector<SyntheticTask>* tasks = &ds.test;
  if (split == "train") tasks = &ds.train;
  else if (split == "val") tasks = &ds.val;
  else if (split != "test") fail(ErrorCode::bad_params, "split must be train, val or test");
  const EvalReport r = evaluate(pipeline_solver(c.model), *tasks);
  emit(report, format_report_json(r));
  return 0;
}

int cmd_filter(const std::string& graph_path, const std::string& signal_path, const std::string& filter_path,
               const std::string& tmpl, std::size_t order, const std::string& lap_kind,
               const std::string& path, const std::string& out, const std::string& gft_out) {
  const ReasoningGraph g = io::load_graph(graph_path);
  const LaplacianMatrix lap = laplacian(g, parse_laplacian_kind(lap_kind));
  const GraphSignal x = vertex_signal(io::load_signal(signal_path));
  if (x.size() != g.size()) fail(ErrorCode::dimension_mismatch, "signal length does not match the graph");

  ChebyshevFilter f;
  if (!filter_path.empty()) {
    f = io::load_filter(filter_path);
  } else {
    const double lmax = lambda_max_bound(lap);
    f = fit_chebyshev(builtin_template(parse_rule_kind(tmpl), {}, lmax), order, lmax);
  }
  GraphSignal y;
  if (path == "exact") {
    const SpectralBasis basis = eigendecompose(lap);
    if (!gft_out.empty()) text::write_file(gft_out, io::format_signal_csv(gft(basis, x).values));
    y = exact_filter(basis, as_response(f), x);
  } else if (path == "chebyshev") {
    if (!gft_out.empty()) fail(ErrorCode::bad_params, "--gft-out needs --path exact; the Chebyshev path never forms x_hat");
    y = chebyshev_filter(lap, f, x);
  } else {
    fail(ErrorCode::bad_params, "--path must be exact or chebyshev");
  }
  // an undersized lambda_max lets the recurrence blow up
  for (Eigen::Index i = 0; i < y.values.size(); ++i) {
    if (!std::isfinite(y.values[i])) {
      fail(ErrorCode::non_finite_response, "filtered signal is not finite; is lambda_max too small?",
           static_cast<std::size_t>(i));
    }
  }
  emit(out, io::format_signal_csv(y.values));
  return 0;
}

int cmd_response(const std::string& filter_path, std::size_t grid, const std::string& out) {
  const ChebyshevFilter f = io::load_filter(filter_path);
  const auto lambdas = uniform_grid(f.lambda_max, grid);
  const auto values = sample_response(f, lambdas);
  std::string csv = "lambda,response\n";
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    csv += text::format_double(lambdas[i]) + "," + text::format_double(values[i]) + "\n";
  }
  emit(out, csv);
  return 0;
}

int cmd_chain(const std::string& kb_path, bool trace, const std::string& out) {
  const KnowledgeBase kb = load_kb(kb_path);
  const ChainResult res = forward_chain(kb);
  std::string body;
  for (AtomId a : res.closure) body += kb.name(a) + "\n";
  for (const auto& [a, b] : detect_conflicts(kb, res)) body += "conflict " + kb.name(a) + " " + kb.name(b) + "\n";
  if (trace) body += "\n" + format_traces(kb, res);
  emit(out, body);
  return 0;
}

int cmd_bench(const std::string& sizes, std::size_t k, std::uint64_t seed, const std::string& model) {
  const auto list = parse_sizes(sizes);
  const ScalingResult r = scaling_benchmark(list, k, seed, parse_graph_model(model));
  std::cout << "edges,nodes,median_ms\n";
  for (const auto& row : r.rows) {
    std::cout << row.edges << "," << row.nodes << "," << text::format_double(row.median_ms) << "\n";
  }
  if (r.slope) {
    std::cout << "slope " << text::format_double(*r.slope) << "\n";
  } else {
    std::cout << "slope undefined (need at least two sizes)\n";
  }
  return 0;
}

int cmd_inspect(const std::string& ckpt) {
  const Checkpoint c = load_checkpoint(ckpt);
  const TrainableParams& p = c.model.params;
  std::cout << "epoch " << c.epoch << "\nval_acc " << text::format_double(c.val_acc) << "\nlatency_ms "
            << text::format_double(c.latency_ms) << "\noptimizer_step " << c.optimizer.step << "\n";
  std::cout << "bands " << p.gate.band_count() << "\n";
  const auto alpha = gate_weights(p.gate);
  for (std::size_t b = 0; b < p.gate.band_count(); ++b) {
    std::cout << "band " << b << " gate " << text::format_double(alpha[b]) << " theta";
    for (double c0 : p.gate.bands[b].coefficients) std::cout << " " << text::format_double(c0);
    std::cout << "\n";
  }
  for (std::size_t r = 0; r < c.model.rules.size(); ++r) {
    std::cout << "rule " << c.model.rules[r].id << " w " << text::format_double(p.rule_weights[r]) << "\n";
  }
  std::cout << "tau";
  for (double t : p.tau) std::cout << " " << text::format_double(t);
  std::cout << "\nalpha " << text::format_double(p.alpha) << "\n\n" << format_config(c.model.config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral neuro-symbolic reasoning toolkit"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Report failures as JSON on stderr");

  std::function<int()> action;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic task dataset");
  std::string family = "transitive", gen_out;
  std::size_t depth = 5, count = 1000, width = 2;
  std::uint64_t seed = 0;
  gen->add_option("--family", family, "transitive | kinship | conflict")->capture_default_str();
  gen->add_option("--depth", depth, "Maximum depth; each task draws 1..depth")->capture_default_str();
  gen->add_option("--n", count, "Number of tasks")->capture_default_str();
  gen->add_option("--width", width, "Chains per transitive task")->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", gen_out)->required();
  gen->callback([&] { action = [&] { return cmd_gen(family, depth, count, width, seed, gen_out); }; });

  auto* tr = app.add_subcommand("train", "Train filter, rule and threshold parameters");
  std::string config, data, ckpt_out, metrics;
  bool quiet = false;
  tr->add_option("--config", config, "key=value config file");
  tr->add_option("--data", data)->required();
  tr->add_option("--out", ckpt_out, "Checkpoint JSON")->required();
  tr->add_option("--metrics", metrics, "Metrics CSV (default: next to the checkpoint)");
  tr->add_flag("--quiet", quiet);
  tr->callback([&] { action = [&] { return cmd_train(config, data, ckpt_out, metrics, quiet); }; });

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  std::string ckpt, split = "test", report;
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--data", data)->required();
  ev->add_option("--split", split)->capture_default_str();
  ev->add_option("--report", report, "Report JSON (default: stdout)");
  ev->callback([&] { action = [&] { return cmd_eval(ckpt, data, split, report); }; });

  auto* fl = app.add_subcommand("filter", "Filter a graph signal");
  std::string graph_path, signal_path, filter_path, tmpl = "low-pass", lap_kind = "normalized", path = "chebyshev",
                                                    out, gft_out;
  std::size_t order = 20;
  fl->add_option("--graph", graph_path)->required();
  fl->add_option("--signal", signal_path)->required();
  fl->add_option("--filter", filter_path, "Filter JSON; otherwise a template is fitted");
  fl->add_option("--template", tmpl, "low-pass | high-pass | band-pass | heat")->capture_default_str();
  fl->add_option("--order", order, "Chebyshev order for --template")->capture_default_str();
  fl->add_option("--laplacian", lap_kind, "combinatorial | normalized")->capture_default_str();
  fl->add_option("--path", path, "exact | chebyshev")->capture_default_str();
  fl->add_option("--out", out, "Output CSV (default: stdout)");
  fl->add_option("--gft-out", gft_out, "Write x_hat (exact path only)");
  fl->callback([&] {
    action = [&] { return cmd_filter(graph_path, signal_path, filter_path, tmpl, order, lap_kind, path, out, gft_out); };
  });

  auto* rs = app.add_subcommand("response", "Sample a filter's frequency response");
  std::size_t grid = 64;
  rs->add_option("--filter", filter_path)->required();
  rs->add_option("--grid", grid)->capture_default_str();
  rs->add_option("--out", out, "Output CSV (default: stdout)");
  rs->callback([&] { action = [&] { return cmd_response(filter_path, grid, out); }; });

  auto* ch = app.add_subcommand("chain", "Forward-chain a knowledge base");
  std::string kb_path;
  bool trace = false;
  ch->add_option("--kb", kb_path)->required();
  ch->add_flag("--trace", trace, "Append proof traces");
  ch->add_option("--out", out);
  ch->callback([&] { action = [&] { return cmd_chain(kb_path, trace, out); }; });

  auto* bs = app.add_subcommand("bench-scaling", "Time Chebyshev filtering against edge count");
  std::string sizes = "1e3,1e4,1e5";
  std::size_t k = 5;
  bs->add_option("--sizes", sizes)->capture_default_str();
  bs->add_option("--k", k)->capture_default_str();
  std::string model = "small-world";
  bs->add_option("--seed", seed)->capture_default_str();
  bs->add_option("--graph-model", model, "small-world | uniform")->capture_default_str();
  bs->callback([&] { action = [&] { return cmd_bench(sizes, k, seed, model); }; });

  auto* ic = app.add_subcommand("inspect-ckpt", "Summarise a checkpoint");
  ic->add_option("--ckpt", ckpt)->required();
  ic->callback([&] { action = [&] { return cmd_inspect(ckpt); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (json_errors) {
      std::cerr << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    } else {
      app.exit(e);
    }
    return 1;
  }

  try {
    return action();
  } catch (const Error& e) {
    if (json_errors) {
      nlohmann::json j{{"error", std::string(to_string(e.code()))}, {"message", e.message()}};
      if (!e.stage().empty()) j["stage"] = e.stage();
      if (e.index()) j["index"] = *e.index();
      std::cerr << j.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return is_numerical(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    if (json_errors) {
      std::cerr << nlohmann::json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
}
