#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "snsr/errors.hpp"
#include "snsr/graph.hpp"
#include "snsr/harness.hpp"
#include "snsr/io.hpp"
#include "snsr/pipeline.hpp"
#include "snsr/rules.hpp"
#include "snsr/spectral.hpp"
#include "snsr/symbolic.hpp"
#include "snsr/trainer.hpp"

namespace py = pybind11;
using namespace snsr;

namespace {

py::object json_to_py(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

ReasoningGraph graph_from_edges(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges,
                                const std::optional<std::vector<std::string>>& labels) {
  auto nodes = default_nodes(n);
  if (labels) {
    if (labels->size() != n) fail(ErrorCode::dimension_mismatch, "one label per node expected");
    for (std::size_t i = 0; i < n; ++i) nodes[i].label = (*labels)[i];
  }
  std::vector<Edge> list;
  list.reserve(edges.size());
  for (const auto& [i, j, w] : edges) list.push_back({i, j, w});
  return build_graph(std::move(nodes), list);
}

FrequencyResponse to_response(const py::object& g, double lambda_max) {
  if (py::isinstance<py::str>(g)) return builtin_template(parse_rule_kind(g.cast<std::string>()), {}, lambda_max);
  if (py::isinstance<ChebyshevFilter>(g)) return as_response(g.cast<ChebyshevFilter>());
  auto fn = g.cast<std::function<double(double)>>();
  return custom_response(std::move(fn));
}

py::dict chain_dict(const KnowledgeBase& kb, const ChainResult& res) {
  py::list closure, conflicts;
  for (AtomId a : res.closure) closure.append(kb.name(a));
  for (const auto& [a, b] : detect_conflicts(kb, res)) conflicts.append(py::make_tuple(kb.name(a), kb.name(b)));
  py::dict d;
  d["closure"] = closure;
  d["conflicts"] = conflicts;
  d["traces"] = format_traces(kb, res);
  d["rounds"] = res.rounds;
  return d;
}

py::list history_list(const std::vector<EpochMetrics>& h) {
  py::list out;
  for (const auto& e : h) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["train_loss"] = e.train_loss;
    d["val_acc"] = e.val_acc;
    d["latency_ms"] = e.latency_ms;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral filtering, rule composition and forward chaining over reasoning graphs";

  // leaked on purpose: the type must outlive interpreter teardown
  static auto* error_type = new py::exception<Error>(m, "SnsrError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error_type->ptr())(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      inst.attr("stage") = e.stage();
      inst.attr("index") = e.index() ? py::cast(*e.index()) : py::none();
      inst.attr("numerical") = is_numerical(e.code());
      PyErr_SetObject(error_type->ptr(), inst.ptr());
    }
  });

  py::class_<ReasoningGraph>(m, "Graph")
      .def_static("from_edges", &graph_from_edges, py::arg("n"), py::arg("edges"), py::arg("labels") = py::none())
      .def_static("parse", &io::parse_graph_text)
      .def_static("load", [](const std::filesystem::path& p) { return io::load_graph(p); })
      .def("save", [](const ReasoningGraph& g, const std::filesystem::path& p) { io::save_graph(p, g); })
      .def("to_text", &io::format_graph_text)
      .def_property_readonly("size", &ReasoningGraph::size)
      .def_property_readonly("edge_count", &ReasoningGraph::edge_count)
      .def_property_readonly("labels",
                             [](const ReasoningGraph& g) {
                               std::vector<std::string> out;
                               for (const auto& n : g.nodes()) out.push_back(n.label);
                               return out;
                             })
      .def("degrees", &ReasoningGraph::degrees)
      .def("adjacency", [](const ReasoningGraph& g) { return Eigen::MatrixXd(g.adjacency()); })
      .def("__len__", &ReasoningGraph::size);

  m.def(
      "similarity_graph",
      [](const Eigen::MatrixXd& vectors, double threshold) {
        NodeEmbedding e{vectors};
        return similarity_adjacency(e, threshold);
      },
      py::arg("embeddings"), py::arg("threshold"));

  py::class_<LaplacianMatrix>(m, "Laplacian")
      .def_property_readonly("kind", [](const LaplacianMatrix& l) { return std::string(to_string(l.kind)); })
      .def_property_readonly("size", &LaplacianMatrix::size)
      .def("dense", &LaplacianMatrix::dense);

  m.def(
      "laplacian",
      [](const ReasoningGraph& g, const std::string& kind) { return laplacian(g, parse_laplacian_kind(kind)); },
      py::arg("graph"), py::arg("kind") = "combinatorial");
  m.def("estimate_lambda_max", [](const LaplacianMatrix& l) { return estimate_lambda_max(l); });
  m.def("lambda_max_bound", &lambda_max_bound);

  py::class_<SpectralBasis>(m, "SpectralBasis")
      .def_readonly("eigenvalues", &SpectralBasis::eigenvalues)
      .def_readonly("eigenvectors", &SpectralBasis::eigenvectors)
      .def_property_readonly("size", &SpectralBasis::size);

  m.def("eigendecompose", [](const LaplacianMatrix& l) { return eigendecompose(l); });
  m.def("gft", [](const SpectralBasis& b, const Eigen::VectorXd& x) { return gft(b, vertex_signal(x)).values; });
  m.def("igft", [](const SpectralBasis& b, const Eigen::VectorXd& xh) {
    return igft(b, GraphSignal{xh, SignalDomain::spectral}).values;
  });

  py::class_<ChebyshevFilter>(m, "ChebyshevFilter")
      .def(py::init([](std::vector<double> c, double lmax) {
             ChebyshevFilter f{std::move(c), lmax};
             f.validate();
             return f;
           }),
           py::arg("coefficients"), py::arg("lambda_max"))
      .def_readonly("coefficients", &ChebyshevFilter::coefficients)
      .def_readonly("lambda_max", &ChebyshevFilter::lambda_max)
      .def_property_readonly("order", &ChebyshevFilter::order)
      .def("response", [](const ChebyshevFilter& f, double l) { return evaluate_response(f, l); })
      .def("sample", [](const ChebyshevFilter& f, std::size_t n) {
        const auto grid = uniform_grid(f.lambda_max, n);
        return py::make_tuple(grid, sample_response(f, grid));
      })
      .def("to_json", &io::format_filter_json)
      .def_static("from_json", &io::parse_filter_json)
      .def("__repr__", [](const ChebyshevFilter& f) {
        return "ChebyshevFilter(order=" + std::to_string(f.order()) + ", lambda_max=" + std::to_string(f.lambda_max) + ")";
      });

  m.def(
      "fit_chebyshev",
      [](const py::object& g, std::size_t order, double lambda_max) {
        return fit_chebyshev(to_response(g, lambda_max), order, lambda_max);
      },
      py::arg("response"), py::arg("order"), py::arg("lambda_max"),
      "Least-squares Chebyshev fit of a template name or a callable.");
  m.def(
      "chebyshev_filter",
      [](const LaplacianMatrix& l, const ChebyshevFilter& f, const Eigen::VectorXd& x) {
        return chebyshev_filter(l, f, vertex_signal(x)).values;
      },
      py::arg("laplacian"), py::arg("filter"), py::arg("x"));
  m.def(
      "exact_filter",
      [](const SpectralBasis& b, const py::object& g, const Eigen::VectorXd& x) {
        const double lmax = b.size() ? std::max(b.eigenvalues.maxCoeff(), 1e-12) : 1.0;
        return exact_filter(b, to_response(g, lmax), vertex_signal(x)).values;
      },
      py::arg("basis"), py::arg("response"), py::arg("x"));

  m.def(
      "forward_chain",
      [](const std::string& kb_text) {
        const KnowledgeBase kb = parse_kb(kb_text);
        return chain_dict(kb, forward_chain(kb));
      },
      py::arg("kb_text"));

  py::class_<SyntheticTask>(m, "Task")
      .def_readonly("graph", &SyntheticTask::graph)
      .def_readonly("x0", &SyntheticTask::x0)
      .def_readonly("premises", &SyntheticTask::premises)
      .def_readonly("labels", &SyntheticTask::labels)
      .def_property_readonly("kb_text", [](const SyntheticTask& t) { return format_kb(t.kb); })
      .def_property_readonly("family", [](const SyntheticTask& t) { return std::string(to_string(t.meta.family)); })
      .def_property_readonly("depth", [](const SyntheticTask& t) { return t.meta.depth; });

  m.def("gen_transitive", &gen_transitive, py::arg("depth"), py::arg("width"), py::arg("seed"));
  m.def("gen_kinship", &gen_kinship, py::arg("chain_length"), py::arg("seed"));
  m.def("gen_conflict", &gen_conflict, py::arg("depth"), py::arg("seed"));

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("train", &Dataset::train)
      .def_readonly("val", &Dataset::val)
      .def_readonly("test", &Dataset::test)
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(p, d); })
      .def_static("load", [](const std::filesystem::path& p) { return load_dataset(p); });

  m.def(
      "generate_dataset",
      [](const std::string& family, std::size_t count, std::size_t max_depth, std::size_t width, std::uint64_t seed) {
        DatasetSpec s;
        s.family = parse_task_family(family);
        s.count = count;
        s.max_depth = max_depth;
        s.width = width;
        s.seed = seed;
        return gen_dataset(s);
      },
      py::arg("family") = "transitive", py::arg("count") = 1000, py::arg("max_depth") = 5, py::arg("width") = 2,
      py::arg("seed") = 0);

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_readonly("epoch", &Checkpoint::epoch)
      .def_readonly("val_acc", &Checkpoint::val_acc)
      .def_property_readonly("config", [](const Checkpoint& c) { return format_config(c.model.config); })
      .def_property_readonly("filter",
                             [](const Checkpoint& c) { return c.model.params.combined(2.0); })
      .def_property_readonly("rule_weights", [](const Checkpoint& c) { return c.model.params.rule_weights; })
      .def("to_json", &format_checkpoint)
      .def_static("from_json", &parse_checkpoint)
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(p, c); })
      .def_static("load", [](const std::filesystem::path& p) { return load_checkpoint(p); });

  m.def(
      "untrained",
      [](const std::string& config_text) {
        PipelineConfig cfg = parse_config(config_text);
        Checkpoint c;
        c.model = make_model(cfg, config_rules(cfg));
        return c;
      },
      py::arg("config_text") = "", "Checkpoint wrapping the initial model for a config.");

  m.def(
      "train",
      [](const Dataset& data, const std::string& config_text) {
        PipelineConfig cfg = parse_config(config_text);
        const Model init = make_model(cfg, config_rules(cfg));
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(init, data, TrainRun::from_config(cfg));
        }
        py::dict out;
        out["best"] = r.best;
        out["history"] = history_list(r.history);
        out["early_stopped"] = r.early_stopped;
        out["skipped_steps"] = r.skipped_steps;
        return out;
      },
      py::arg("data"), py::arg("config_text") = "", "config_text uses the key=value config format.");

  m.def(
      "evaluate",
      [](const Checkpoint& c, const std::vector<SyntheticTask>& tasks, bool timing) {
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = evaluate(pipeline_solver(c.model), tasks);
        }
        return json_to_py(format_report_json(r, timing));
      },
      py::arg("checkpoint"), py::arg("tasks"), py::arg("timing") = false);

  m.def(
      "run_pipeline",
      [](const Checkpoint& c, const SyntheticTask& t) {
        const PipelineOutput out = run_pipeline(c.model, t.graph, t.x0, t.kb, t.mapping());
        py::dict d = chain_dict(out.kb, out.chain);
        d["belief"] = out.belief.values;
        d["filtered"] = out.filtered.values;
        d["predicates"] = out.predicates.values;
        d["lambda_max"] = out.lambda_max;
        d["filter"] = out.filter;
        return d;
      },
      py::arg("checkpoint"), py::arg("task"));
}
