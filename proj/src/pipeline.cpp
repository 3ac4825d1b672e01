#include "snsr/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <set>

#include "snsr/errors.hpp"
#include "snsr/text.hpp"

namespace snsr {

namespace {

std::string_view to_string(PathChoice p) {
  switch (p) {
    case PathChoice::automatic: return "auto";
    case PathChoice::dense: return "dense";
    case PathChoice::chebyshev: return "chebyshev";
  }
  return "auto";
}

PathChoice parse_path_choice(std::string_view s) {
  if (s == "auto") return PathChoice::automatic;
  if (s == "dense" || s == "exact") return PathChoice::dense;
  if (s == "chebyshev") return PathChoice::chebyshev;
  fail(ErrorCode::parse_error, "unknown operator path '" + std::string(s) + "'");
}

struct Key {
  const char* name;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, std::string_view)> set;
};

template <class T>
Key size_key(const char* name, T PipelineConfig::*field) {
  return {name, [field](const PipelineConfig& c) { return std::to_string(c.*field); },
          [field, name](PipelineConfig& c, std::string_view v) {
            c.*field = static_cast<T>(text::parse_index(v, name));
          }};
}

Key real_key(const char* name, double PipelineConfig::*field) {
  return {name, [field](const PipelineConfig& c) { return text::format_double(c.*field); },
          [field, name](PipelineConfig& c, std::string_view v) { c.*field = text::parse_double(v, name); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"laplacian", [](const PipelineConfig& c) { return std::string(to_string(c.laplacian)); },
       [](PipelineConfig& c, std::string_view v) { c.laplacian = parse_laplacian_kind(v); }},
      size_key("order", &PipelineConfig::order),
      size_key("bands", &PipelineConfig::bands),
      size_key("gate_width", &PipelineConfig::gate_width),
      {"rules", [](const PipelineConfig& c) { return c.rules_file; },
       [](PipelineConfig& c, std::string_view v) { c.rules_file = std::string(v); }},
      size_key("rule_order", &PipelineConfig::rule_order),
      {"operator_path", [](const PipelineConfig& c) { return std::string(to_string(c.operator_path)); },
       [](PipelineConfig& c, std::string_view v) { c.operator_path = parse_path_choice(v); }},
      size_key("dense_limit", &PipelineConfig::dense_limit),
      {"threshold_mode", [](const PipelineConfig& c) { return std::string(to_string(c.threshold_mode)); },
       [](PipelineConfig& c, std::string_view v) { c.threshold_mode = parse_threshold_mode(v); }},
      real_key("tau", &PipelineConfig::tau),
      real_key("alpha", &PipelineConfig::alpha),
      real_key("init_beta", &PipelineConfig::init_beta),
      size_key("seed", &PipelineConfig::seed),
      size_key("epochs", &PipelineConfig::epochs),
      size_key("batch_size", &PipelineConfig::batch_size),
      size_key("patience", &PipelineConfig::patience),
      real_key("lr_spectral", &PipelineConfig::lr_spectral),
      real_key("lr_embedding", &PipelineConfig::lr_embedding),
      size_key("latency_reps", &PipelineConfig::latency_reps),
      real_key("latency_margin", &PipelineConfig::latency_margin),
  };
  return table;
}

template <class F>
auto in_stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(name);
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (bands < 1) fail(ErrorCode::bad_params, "bands must be >= 1");
  if (dense_limit < 1) fail(ErrorCode::bad_params, "dense_limit must be >= 1");
  if (gate_width < 1) fail(ErrorCode::bad_params, "gate_width must be >= 1");
  if (epochs < 1 || epochs > 50) fail(ErrorCode::bad_params, "epochs must lie in [1, 50]");
  if (patience < 1) fail(ErrorCode::bad_params, "patience must be >= 1");
  if (batch_size < 1) fail(ErrorCode::bad_params, "batch_size must be >= 1");
  if (latency_reps < 1) fail(ErrorCode::bad_params, "latency_reps must be >= 1");
  if (!std::isfinite(tau)) fail(ErrorCode::bad_params, "tau must be finite");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::bad_params, "alpha must be > 0");
  if (!(init_beta > 0.0)) fail(ErrorCode::bad_params, "init_beta must be > 0");
  if (!(lr_spectral >= 0.0) || !(lr_embedding >= 0.0)) fail(ErrorCode::bad_params, "learning rates must be >= 0");
  if (!(latency_margin >= 0.0)) fail(ErrorCode::bad_params, "latency_margin must be >= 0");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    const std::string_view line = text::strip_comment(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string ctx = "config line " + std::to_string(line_no);
    if (eq == std::string_view::npos) fail(ErrorCode::parse_error, ctx + ": expected key=value");
    const std::string_view key = text::trim(line.substr(0, eq));
    const std::string_view value = text::trim(line.substr(eq + 1));
    const Key* match = nullptr;
    for (const auto& k : keys()) {
      if (key == k.name) match = &k;
    }
    if (!match) fail(ErrorCode::parse_error, ctx + ": unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) fail(ErrorCode::parse_error, ctx + ": duplicate key '" + std::string(key) + "'");
    match->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

std::string format_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + "=" + k.get(cfg) + "\n";
  return out;
}

void apply_env_overrides(PipelineConfig& cfg) {
  if (const char* s = std::getenv("SPECTRAL_NSR_SEED"); s && *s) {
    cfg.seed = static_cast<std::uint64_t>(text::parse_index(s, "SPECTRAL_NSR_SEED"));
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig cfg = parse_config(text::read_file(path));
  apply_env_overrides(cfg);
  return cfg;
}

ChebyshevFilter TrainableParams::combined(double lambda_max) const {
  ChebyshevFilter f = gate.band_count() == 1 ? gate.bands[0] : band_gate_combine(gate);
  f.lambda_max = lambda_max;
  return f;
}

void TrainableParams::validate() const {
  gate.validate();
  if (rule_weights.empty()) fail(ErrorCode::empty_rule_set, "model has no rule weights");
  for (std::size_t r = 0; r < rule_weights.size(); ++r) {
    if (!(rule_weights[r] >= 0.0) || !std::isfinite(rule_weights[r])) {
      fail(ErrorCode::bad_params, "rule weight must be finite and >= 0", r);
    }
  }
  if (tau.empty()) fail(ErrorCode::shape_mismatch, "threshold vector is empty");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!std::isfinite(tau[i])) fail(ErrorCode::non_finite_value, "threshold is not finite", i);
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::bad_params, "alpha must be finite and > 0");
}

Model make_model(const PipelineConfig& cfg, std::vector<SpectralRule> rules) {
  cfg.validate();
  if (rules.empty()) fail(ErrorCode::empty_rule_set, "model needs at least one rule");
  Model m;
  m.config = cfg;
  m.rules = std::move(rules);
  // Coefficients are fitted on the nominal range [0, 2]; see TrainableParams.
  constexpr double kNominal = 2.0;
  m.params.gate = make_band_gate(cfg.bands, cfg.order, kNominal, cfg.gate_width, cfg.seed);
  if (cfg.bands == 1) {
    const double beta = cfg.init_beta;
    m.params.gate.bands[0] = fit_chebyshev(
        custom_response([beta](double l) { return 1.0 / (1.0 + beta * l); }), cfg.order, kNominal);
  }
  m.params.rule_weights.assign(m.rules.size(), 1.0 / static_cast<double>(m.rules.size()));
  m.params.tau = {cfg.tau};
  m.params.alpha = cfg.alpha;
  return m;
}

std::vector<SpectralRule> config_rules(const PipelineConfig& cfg, const std::filesystem::path& base_dir) {
  if (cfg.rules_file.empty()) return default_rules();
  std::filesystem::path p(cfg.rules_file);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return load_rules(p);
}

SpectralContext prepare_graph(const PipelineConfig& cfg, const ReasoningGraph& g) {
  return in_stage("laplacian", [&] {
    std::size_t limit = cfg.dense_limit;
    if (cfg.operator_path == PathChoice::chebyshev) limit = 0;
    return make_context(laplacian(g, cfg.laplacian), limit, cfg.rule_order);
  });
}

OperatorPath resolve_path(const PipelineConfig& cfg, const SpectralContext& ctx) {
  if (cfg.operator_path == PathChoice::chebyshev) return OperatorPath::chebyshev;
  if (cfg.operator_path == PathChoice::dense) {
    if (!ctx.basis) {
      fail(ErrorCode::no_basis_available, "dense path requested for N = " + std::to_string(ctx.size()) +
                                              " above the dense limit");
    }
    return OperatorPath::dense;
  }
  return ctx.basis ? OperatorPath::dense : OperatorPath::chebyshev;
}

PipelineOutput run_pipeline(const Model& model, const ReasoningGraph& g, const Eigen::VectorXd& x0,
                            const KnowledgeBase& kb, const NodeAtomMap& mapping) {
  return run_pipeline(model, prepare_graph(model.config, g), x0, kb, mapping);
}

PipelineOutput run_pipeline(const Model& model, const SpectralContext& ctx,
                            const Eigen::VectorXd& x0, const KnowledgeBase& kb,
                            const NodeAtomMap& mapping) {
  const PipelineConfig& cfg = model.config;
  PipelineOutput out;
  out.lambda_max = ctx.lambda_max;

  out.belief = in_stage("rules", [&] {
    if (static_cast<std::size_t>(x0.size()) != ctx.size()) {
      fail(ErrorCode::dimension_mismatch, "initial signal has " + std::to_string(x0.size()) +
                                              " entries for " + std::to_string(ctx.size()) + " nodes");
    }
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      if (!std::isfinite(x0[i])) fail(ErrorCode::non_finite_value, "initial signal is not finite", static_cast<std::size_t>(i));
    }
    if (model.params.rule_weights.size() != model.rules.size()) {
      fail(ErrorCode::shape_mismatch, "rule weight count does not match the rule set");
    }
    std::vector<SpectralRule> weighted = model.rules;
    for (std::size_t r = 0; r < weighted.size(); ++r) weighted[r].weight = model.params.rule_weights[r];
    const RuleOperator op = compose_rules(weighted, ctx, resolve_path(cfg, ctx));
    return apply_rule(op, vertex_signal(x0));
  });

  out.filter = in_stage("gate", [&] { return model.params.combined(ctx.lambda_max); });

  out.filtered = in_stage("filter", [&] {
    return chebyshev_filter(*ctx.laplacian, out.filter, out.belief);
  });

  out.predicates = in_stage("threshold", [&] {
    ThresholdConfig tc;
    tc.mode = cfg.threshold_mode;
    tc.tau = model.params.tau;
    tc.alpha = model.params.alpha;
    for (Eigen::Index i = 0; i < out.filtered.values.size(); ++i) {
      if (!std::isfinite(out.filtered.values[i])) {
        fail(ErrorCode::non_finite_response, "filtered signal is not finite", static_cast<std::size_t>(i));
      }
    }
    return tc.mode == ThresholdMode::hard ? hard_threshold(out.filtered, tc)
                                          : soft_threshold(out.filtered, tc);
  });

  out.kb = in_stage("bind", [&] { return bind_predicates(out.predicates, kb, mapping); });

  in_stage("chain", [&] {
    out.chain = forward_chain(out.kb);
    out.conflicts = detect_conflicts(out.kb, out.chain);
  });

  out.response_grid = uniform_grid(ctx.lambda_max, kResponseSamples);
  out.response_values = sample_response(out.filter, out.response_grid);
  return out;
}

}  // namespace snsr
