#include "snsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "snsr/errors.hpp"
#include "snsr/text.hpp"

namespace snsr {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double clip_prob(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

bool unclipped(double p) { return p > kProbClip && p < 1.0 - kProbClip; }

double bce_term(double p, bool t) {
  const double q = clip_prob(p);
  return t ? -std::log(q) : -std::log1p(-q);
}

void check_labels(const Labels& labels, std::size_t n) {
  if (labels.empty()) fail(ErrorCode::empty_labels, "loss needs at least one labelled node");
  for (const auto& [node, truth] : labels) {
    (void)truth;
    if (node >= n) fail(ErrorCode::index_out_of_range, "label for node " + std::to_string(node) + " outside the predicate set", node);
  }
}

}  // namespace

double bce_loss(const PredicateSet& p, const Labels& labels) {
  check_labels(labels, p.size());
  double acc = 0.0;
  for (const auto& [node, truth] : labels) acc += bce_term(p.values[node], truth);
  return acc / static_cast<double>(labels.size());
}

std::vector<double> grad_theta(std::span<const Eigen::VectorXd> terms, const Eigen::VectorXd& upstream) {
  std::vector<double> g(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k].size() != upstream.size()) {
      fail(ErrorCode::shape_mismatch, "upstream gradient length does not match the signal");
    }
    g[k] = terms[k].dot(upstream);
  }
  return g;
}

std::vector<double> grad_theta(const LaplacianMatrix& lap, double lambda_max, std::size_t order,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) {
  if (static_cast<std::size_t>(x.size()) != lap.size() || upstream.size() != x.size()) {
    fail(ErrorCode::shape_mismatch, "signal, upstream gradient and Laplacian sizes differ");
  }
  const auto terms = chebyshev_terms(lap, lambda_max, order, x);
  return grad_theta(terms, upstream);
}

std::vector<double> grad_rule_weights(std::span<const Eigen::VectorXd> responses,
                                      const Eigen::VectorXd& upstream_b) {
  std::vector<double> g(responses.size());
  for (std::size_t r = 0; r < responses.size(); ++r) {
    if (responses[r].size() != upstream_b.size()) {
      fail(ErrorCode::shape_mismatch, "rule response length does not match the upstream gradient", r);
    }
    g[r] = responses[r].dot(upstream_b);
  }
  return g;
}

GateGrad grad_gate(const BandGate& gate, std::span<const double> upstream_theta) {
  gate.validate();
  const std::size_t nb = gate.band_count();
  const std::size_t nk = gate.bands[0].coefficients.size();
  if (upstream_theta.size() != nk) fail(ErrorCode::shape_mismatch, "coefficient gradient has the wrong length");
  const std::vector<double> a = gate_weights(gate);

  std::vector<double> g_alpha(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t k = 0; k < nk; ++k) g_alpha[b] += gate.bands[b].coefficients[k] * upstream_theta[k];
  }
  double mean = 0.0;
  for (std::size_t b = 0; b < nb; ++b) mean += a[b] * g_alpha[b];

  GateGrad g;
  g.query = Eigen::VectorXd::Zero(gate.query.size());
  for (std::size_t b = 0; b < nb; ++b) {
    g.bands.emplace_back(nk);
    for (std::size_t k = 0; k < nk; ++k) g.bands[b][k] = a[b] * upstream_theta[k];
    const double g_logit = a[b] * (g_alpha[b] - mean);
    g.query += g_logit * gate.signatures[b];
    g.signatures.push_back(g_logit * gate.query);
  }
  return g;
}

ThresholdGrad grad_threshold(const Eigen::VectorXd& y, const ThresholdConfig& cfg,
                             const Eigen::VectorXd& upstream_p) {
  const auto n = static_cast<std::size_t>(y.size());
  cfg.validate(n);
  if (upstream_p.size() != y.size()) fail(ErrorCode::shape_mismatch, "upstream gradient length does not match y");
  ThresholdGrad g;
  g.y.resize(y.size());
  g.tau.assign(cfg.tau.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double d = y[ii] - cfg.tau_at(i);
    const double p = sigmoid(cfg.alpha * d);
    const double dz = upstream_p[ii] * p * (1.0 - p);
    g.y[ii] = cfg.alpha * dz;
    g.tau[cfg.tau.size() == 1 ? 0 : i] -= cfg.alpha * dz;
    g.alpha += dz * d;
  }
  return g;
}

std::vector<double> flatten(const TrainableParams& p) {
  std::vector<double> out;
  for (const auto& band : p.gate.bands) out.insert(out.end(), band.coefficients.begin(), band.coefficients.end());
  out.insert(out.end(), p.rule_weights.begin(), p.rule_weights.end());
  out.insert(out.end(), p.gate.query.data(), p.gate.query.data() + p.gate.query.size());
  for (const auto& s : p.gate.signatures) out.insert(out.end(), s.data(), s.data() + s.size());
  out.insert(out.end(), p.tau.begin(), p.tau.end());
  out.push_back(p.alpha);
  return out;
}

void unflatten(std::span<const double> flat, TrainableParams& p) {
  if (flat.size() != flatten(p).size()) fail(ErrorCode::shape_mismatch, "flat parameter vector has the wrong length");
  std::size_t i = 0;
  for (auto& band : p.gate.bands) {
    for (double& c : band.coefficients) c = flat[i++];
  }
  for (double& w : p.rule_weights) w = flat[i++];
  for (Eigen::Index j = 0; j < p.gate.query.size(); ++j) p.gate.query[j] = flat[i++];
  for (auto& s : p.gate.signatures) {
    for (Eigen::Index j = 0; j < s.size(); ++j) s[j] = flat[i++];
  }
  for (double& t : p.tau) t = flat[i++];
  p.alpha = flat[i++];
}

std::vector<ParamGroup> param_groups(const TrainableParams& p) {
  std::size_t spectral = p.rule_weights.size();
  for (const auto& band : p.gate.bands) spectral += band.coefficients.size();
  std::vector<ParamGroup> g(flatten(p).size(), ParamGroup::embedding);
  std::fill(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(spectral), ParamGroup::spectral);
  return g;
}

std::string param_name(const TrainableParams& p, std::size_t index) {
  std::size_t i = index;
  for (std::size_t b = 0; b < p.gate.bands.size(); ++b) {
    const std::size_t n = p.gate.bands[b].coefficients.size();
    if (i < n) return "theta[" + std::to_string(b) + "][" + std::to_string(i) + "]";
    i -= n;
  }
  if (i < p.rule_weights.size()) return "w[" + std::to_string(i) + "]";
  i -= p.rule_weights.size();
  if (i < static_cast<std::size_t>(p.gate.query.size())) return "q[" + std::to_string(i) + "]";
  i -= static_cast<std::size_t>(p.gate.query.size());
  for (std::size_t b = 0; b < p.gate.signatures.size(); ++b) {
    const auto n = static_cast<std::size_t>(p.gate.signatures[b].size());
    if (i < n) return "s[" + std::to_string(b) + "][" + std::to_string(i) + "]";
    i -= n;
  }
  if (i < p.tau.size()) return "tau[" + std::to_string(i) + "]";
  i -= p.tau.size();
  if (i == 0) return "alpha";
  return "param[" + std::to_string(index) + "]";
}

void adam_update(std::span<double> x, std::span<const double> grad, std::span<const double> lr,
                 AdamState& state) {
  if (grad.size() != x.size() || lr.size() != x.size()) {
    fail(ErrorCode::shape_mismatch, "parameter, gradient and learning-rate vectors differ in length");
  }
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(x.size(), 0.0);
    state.v.assign(x.size(), 0.0);
  }
  if (state.m.size() != x.size() || state.v.size() != x.size()) {
    fail(ErrorCode::shape_mismatch, "optimizer moments do not match the parameters");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) fail(ErrorCode::non_finite_gradient, "gradient is not finite", i);
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    x[i] -= lr[i] * mhat / (std::sqrt(vhat) + state.eps);
  }
}

void adam_step(TrainableParams& params, const TrainableParams& grad, AdamState& state,
               const LearningRates& lr) {
  std::vector<double> x = flatten(params);
  const std::vector<double> g = flatten(grad);
  if (g.size() != x.size()) fail(ErrorCode::shape_mismatch, "gradient shape does not match the parameters");
  const auto groups = param_groups(params);
  std::vector<double> rates(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    rates[i] = groups[i] == ParamGroup::spectral ? lr.spectral : lr.embedding;
  }
  try {
    adam_update(x, g, rates, state);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::non_finite_gradient && e.index()) {
      throw Error(e.code(), "gradient for " + param_name(params, *e.index()) + " is not finite", e.index());
    }
    throw;
  }
  unflatten(x, params);
  for (double& w : params.rule_weights) w = std::max(w, 0.0);
}

PreparedTask prepare_task(const Model& model, const SyntheticTask& task) {
  const SpectralContext ctx = prepare_graph(model.config, task.graph);
  PreparedTask p;
  p.laplacian = ctx.laplacian;
  p.lambda_max = ctx.lambda_max;
  p.size = task.graph.size();
  p.labels = task.labels;
  p.responses = rule_responses(model.rules, ctx, resolve_path(model.config, ctx), task.x0);
  for (const auto& resp : p.responses) {
    p.terms.push_back(chebyshev_terms(*ctx.laplacian, ctx.lambda_max, model.config.order, resp));
  }
  return p;
}

namespace {

struct Forward {
  std::vector<double> theta;  // theta*
  Eigen::VectorXd y;
  Eigen::VectorXd p;
};

Forward forward(const Model& model, const PreparedTask& task) {
  const TrainableParams& prm = model.params;
  if (prm.rule_weights.size() != task.terms.size()) {
    fail(ErrorCode::shape_mismatch, "rule weight count does not match the prepared task");
  }
  if (prm.tau.size() != 1 && prm.tau.size() != task.size) {
    fail(ErrorCode::shape_mismatch, "per-node thresholds do not match the task size");
  }
  Forward f;
  f.theta = prm.combined(task.lambda_max).coefficients;
  if (!task.terms.empty() && f.theta.size() != task.terms[0].size()) {
    fail(ErrorCode::shape_mismatch, "filter order does not match the prepared task");
  }
  f.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(task.size));
  for (std::size_t r = 0; r < task.terms.size(); ++r) {
    for (std::size_t k = 0; k < f.theta.size(); ++k) f.y += (prm.rule_weights[r] * f.theta[k]) * task.terms[r][k];
  }
  f.p.resize(f.y.size());
  for (Eigen::Index i = 0; i < f.y.size(); ++i) {
    const double tau = prm.tau.size() == 1 ? prm.tau[0] : prm.tau[static_cast<std::size_t>(i)];
    f.p[i] = sigmoid(prm.alpha * (f.y[i] - tau));
  }
  return f;
}

}  // namespace

double task_loss(const Model& model, const PreparedTask& task) {
  const Forward f = forward(model, task);
  check_labels(task.labels, task.size);
  double acc = 0.0;
  for (const auto& [node, truth] : task.labels) acc += bce_term(f.p[static_cast<Eigen::Index>(node)], truth);
  return acc / static_cast<double>(task.labels.size());
}

LossGrad task_loss_grad(const Model& model, const PreparedTask& task) {
  const TrainableParams& prm = model.params;
  const Forward f = forward(model, task);
  check_labels(task.labels, task.size);
  const double inv_n = 1.0 / static_cast<double>(task.labels.size());

  LossGrad out;
  // dloss/dz with z = alpha (y - tau); BCE and sigmoid combine to (p - t) / n.
  Eigen::VectorXd dz = Eigen::VectorXd::Zero(f.y.size());
  for (const auto& [node, truth] : task.labels) {
    const auto i = static_cast<Eigen::Index>(node);
    out.loss += bce_term(f.p[i], truth);
    if (unclipped(f.p[i])) dz[i] = (f.p[i] - (truth ? 1.0 : 0.0)) * inv_n;
  }
  out.loss *= inv_n;

  out.grad = prm;
  TrainableParams& g = out.grad;
  g.tau.assign(prm.tau.size(), 0.0);
  g.alpha = 0.0;
  for (Eigen::Index i = 0; i < dz.size(); ++i) {
    if (dz[i] == 0.0) continue;
    const std::size_t ti = prm.tau.size() == 1 ? 0 : static_cast<std::size_t>(i);
    g.tau[ti] -= prm.alpha * dz[i];
    g.alpha += dz[i] * (f.y[i] - prm.tau[ti]);
  }
  const Eigen::VectorXd gy = prm.alpha * dz;

  std::vector<double> g_theta(f.theta.size(), 0.0);
  for (std::size_t r = 0; r < task.terms.size(); ++r) {
    const std::vector<double> proj = grad_theta(task.terms[r], gy);
    double gw = 0.0;
    for (std::size_t k = 0; k < proj.size(); ++k) {
      g_theta[k] += prm.rule_weights[r] * proj[k];
      gw += f.theta[k] * proj[k];
    }
    g.rule_weights[r] = gw;
  }

  const GateGrad gg = grad_gate(prm.gate, g_theta);
  for (std::size_t b = 0; b < gg.bands.size(); ++b) g.gate.bands[b].coefficients = gg.bands[b];
  g.gate.query = gg.query;
  g.gate.signatures = gg.signatures;
  return out;
}

TrainRun TrainRun::from_config(const PipelineConfig& cfg) {
  TrainRun r;
  r.max_epochs = cfg.epochs;
  r.batch_size = cfg.batch_size;
  r.patience = cfg.patience;
  r.lr = {cfg.lr_spectral, cfg.lr_embedding};
  r.seed = cfg.seed;
  r.latency_reps = cfg.latency_reps;
  r.latency_margin = cfg.latency_margin;
  return r;
}

void TrainRun::validate() const {
  if (max_epochs < 1 || max_epochs > 50) fail(ErrorCode::bad_params, "max_epochs must lie in [1, 50]");
  if (patience < 1) fail(ErrorCode::bad_params, "patience must be >= 1");
  if (batch_size < 1) fail(ErrorCode::bad_params, "batch_size must be >= 1");
  if (!(lr.spectral >= 0.0) || !(lr.embedding >= 0.0)) fail(ErrorCode::bad_params, "learning rates must be >= 0");
}

double validation_accuracy(const Model& model, std::span<const SyntheticTask> tasks) {
  if (tasks.empty()) fail(ErrorCode::empty_dataset, "validation set is empty");
  const Solver solve = pipeline_solver(model);
  std::size_t correct = 0, total = 0;
  for (const auto& t : tasks) {
    correct += count_correct(t, solve(t));
    total += t.labels.size();
  }
  if (total == 0) fail(ErrorCode::empty_labels, "validation set has no labelled nodes");
  return static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult train(const Model& init, const Dataset& data, const TrainRun& run, const TrainLog& log) {
  run.validate();
  init.params.validate();
  if (data.train.empty()) fail(ErrorCode::empty_dataset, "training split is empty");
  if (data.val.empty()) fail(ErrorCode::empty_dataset, "validation split is empty");

  Model model = init;
  std::vector<PreparedTask> prepared;
  prepared.reserve(data.train.size());
  for (const auto& t : data.train) prepared.push_back(prepare_task(model, t));

  auto latency_of = [&](const Model& m) {
    if (run.latency_reps == 0) return 0.0;
    return measure_latency(pipeline_solver(m), data.val, run.latency_reps).median_ms;
  };
  auto say = [&](const EpochMetrics& e) {
    if (!log) return;
    log("epoch " + std::to_string(e.epoch) + " train_loss=" + text::format_double(e.train_loss) +
        " val_acc=" + text::format_double(e.val_acc) + " latency_ms=" + text::format_double(e.latency_ms));
  };

  TrainResult res;
  AdamState state;
  {
    double loss0 = 0.0;
    for (const auto& p : prepared) loss0 += task_loss(model, p);
    EpochMetrics e0{0, loss0 / static_cast<double>(prepared.size()), validation_accuracy(model, data.val), 0.0};
    res.history.push_back(e0);
    res.trajectory.push_back(flatten(model.params));
    say(e0);
  }

  std::mt19937_64 rng(run.seed);
  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  bool have_best = false;
  std::size_t since_improved = 0;
  for (std::size_t epoch = 1; epoch <= run.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw_index(rng, i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
      const std::size_t end = std::min(order.size(), start + run.batch_size);
      std::vector<double> acc;
      double batch_loss = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        LossGrad lg = task_loss_grad(model, prepared[order[j]]);
        batch_loss += lg.loss;
        std::vector<double> g = flatten(lg.grad);
        if (acc.empty()) {
          acc = std::move(g);
        } else {
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
        }
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorCode::diverged_loss, "training loss became non-finite in epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss;
      const double scale = 1.0 / static_cast<double>(end - start);
      for (double& v : acc) v *= scale;
      TrainableParams grad = model.params;
      unflatten(acc, grad);
      try {
        adam_step(model.params, grad, state, run.lr);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::non_finite_gradient) throw;
        ++res.skipped_steps;
        if (log) log("skipped step: " + e.message());
      }
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = epoch_loss / static_cast<double>(prepared.size());
    em.val_acc = validation_accuracy(model, data.val);
    em.latency_ms = latency_of(model);
    res.history.push_back(em);
    res.trajectory.push_back(flatten(model.params));
    say(em);

    const bool better = !have_best || em.val_acc > res.best.val_acc;
    const bool faster_tie = have_best && em.val_acc == res.best.val_acc && run.latency_reps > 0 &&
                            em.latency_ms < res.best.latency_ms * (1.0 - run.latency_margin);
    if (better || faster_tie) {
      res.best = {model, state, epoch, em.val_acc, em.latency_ms};
      have_best = true;
    }
    if (better) {
      since_improved = 0;
    } else if (++since_improved >= run.patience) {
      res.early_stopped = epoch < run.max_epochs;
      break;
    }
  }
  return res;
}

namespace {

ordered_json rule_to_json(const SpectralRule& r) {
  ordered_json j{{"id", r.id},
                 {"kind", std::string(rule_kind_name(r.kind))},
                 {"weight", r.weight},
                 {"beta", r.params.beta},
                 {"t", r.params.t},
                 {"center", r.params.center ? ordered_json(*r.params.center) : ordered_json()},
                 {"sigma", r.params.sigma ? ordered_json(*r.params.sigma) : ordered_json()},
                 {"gain", r.params.gain},
                 {"scope", r.scope ? ordered_json(*r.scope) : ordered_json()}};
  if (r.kind == ResponseKind::custom && r.samples) {
    j["samples_file"] = r.samples_file;
    j["samples"] = {{"lambdas", r.samples->lambdas}, {"values", r.samples->values}};
  }
  return j;
}

SpectralRule rule_from_json(const json& j) {
  SpectralRule r;
  r.id = j.at("id").get<std::string>();
  r.kind = parse_rule_kind(j.at("kind").get<std::string>());
  r.weight = j.at("weight").get<double>();
  r.params.beta = j.at("beta").get<double>();
  r.params.t = j.at("t").get<double>();
  if (!j.at("center").is_null()) r.params.center = j.at("center").get<double>();
  if (!j.at("sigma").is_null()) r.params.sigma = j.at("sigma").get<double>();
  r.params.gain = j.at("gain").get<double>();
  if (!j.at("scope").is_null()) r.scope = j.at("scope").get<std::vector<std::size_t>>();
  if (r.kind == ResponseKind::custom) {
    SampledResponse s;
    s.lambdas = j.at("samples").at("lambdas").get<std::vector<double>>();
    s.values = j.at("samples").at("values").get<std::vector<double>>();
    r.samples_file = j.value("samples_file", std::string());
    r.samples = std::make_shared<const SampledResponse>(std::move(s));
  }
  return r;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string format_checkpoint(const Checkpoint& ckpt) {
  const TrainableParams& p = ckpt.model.params;
  ordered_json bands = ordered_json::array();
  for (const auto& b : p.gate.bands) bands.push_back(b.coefficients);
  ordered_json sigs = ordered_json::array();
  for (const auto& s : p.gate.signatures) sigs.push_back(to_vec(s));
  ordered_json rules = ordered_json::array();
  for (const auto& r : ckpt.model.rules) rules.push_back(rule_to_json(r));

  ordered_json doc{
      {"format", "spectral-nsr-checkpoint"},
      {"version", 1},
      {"config", format_config(ckpt.model.config)},
      {"rules", rules},
      {"params",
       {{"band_lambda_max", p.gate.bands.empty() ? 2.0 : p.gate.bands[0].lambda_max},
        {"bands", bands},
        {"rule_weights", p.rule_weights},
        {"query", to_vec(p.gate.query)},
        {"signatures", sigs},
        {"tau", p.tau},
        {"alpha", p.alpha}}},
      {"optimizer",
       {{"step", ckpt.optimizer.step},
        {"beta1", ckpt.optimizer.beta1},
        {"beta2", ckpt.optimizer.beta2},
        {"eps", ckpt.optimizer.eps},
        {"m", ckpt.optimizer.m},
        {"v", ckpt.optimizer.v}}},
      {"metadata", {{"epoch", ckpt.epoch}, {"val_acc", ckpt.val_acc}, {"latency_ms", ckpt.latency_ms}}}};
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  Checkpoint c;
  try {
    const json doc = json::parse(text);
    if (doc.value("format", std::string()) != "spectral-nsr-checkpoint") {
      fail(ErrorCode::parse_error, "not a checkpoint file");
    }
    c.model.config = parse_config(doc.at("config").get<std::string>());
    for (const auto& r : doc.at("rules")) c.model.rules.push_back(rule_from_json(r));
    const auto& p = doc.at("params");
    const double lmax = p.at("band_lambda_max").get<double>();
    for (const auto& b : p.at("bands")) c.model.params.gate.bands.push_back({b.get<std::vector<double>>(), lmax});
    c.model.params.rule_weights = p.at("rule_weights").get<std::vector<double>>();
    c.model.params.gate.query = from_vec(p.at("query").get<std::vector<double>>());
    for (const auto& s : p.at("signatures")) c.model.params.gate.signatures.push_back(from_vec(s.get<std::vector<double>>()));
    c.model.params.tau = p.at("tau").get<std::vector<double>>();
    c.model.params.alpha = p.at("alpha").get<double>();
    const auto& o = doc.at("optimizer");
    c.optimizer.step = o.at("step").get<std::uint64_t>();
    c.optimizer.beta1 = o.at("beta1").get<double>();
    c.optimizer.beta2 = o.at("beta2").get<double>();
    c.optimizer.eps = o.at("eps").get<double>();
    c.optimizer.m = o.at("m").get<std::vector<double>>();
    c.optimizer.v = o.at("v").get<std::vector<double>>();
    const auto& m = doc.at("metadata");
    c.epoch = m.at("epoch").get<std::size_t>();
    c.val_acc = m.at("val_acc").get<double>();
    c.latency_ms = m.at("latency_ms").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("checkpoint: ") + e.what());
  }
  c.model.params.validate();
  if (c.model.params.rule_weights.size() != c.model.rules.size()) {
    fail(ErrorCode::shape_mismatch, "checkpoint rule weights do not match its rules");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  text::write_file(path, format_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(text::read_file(path));
}

std::string format_metrics_csv(const std::vector<EpochMetrics>& history) {
  std::string out = "epoch,train_loss,val_acc,latency_ms\n";
  for (const auto& e : history) {
    out += std::to_string(e.epoch) + "," + text::format_double(e.train_loss) + "," +
           text::format_double(e.val_acc) + "," + text::format_double(e.latency_ms) + "\n";
  }
  return out;
}

}  // namespace snsr
