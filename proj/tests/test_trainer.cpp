#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "snsr/errors.hpp"
#include "snsr/trainer.hpp"

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

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

/// Random multi-rule, multi-band model on a random transitive task.
struct Instance {
  Model model;
  PreparedTask task;
};

Instance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PipelineConfig cfg;
  cfg.order = 1 + oracle::pick(rng, 6);
  cfg.bands = 1 + oracle::pick(rng, 3);
  cfg.seed = seed;
  cfg.laplacian = oracle::pick(rng, 2) ? LaplacianKind::normalized : LaplacianKind::combinatorial;
  std::vector<SpectralRule> rules = default_rules();
  SpectralRule heat;
  heat.id = "heat";
  heat.kind = ResponseKind::heat_kernel;
  heat.params.t = 0.7;
  rules.push_back(heat);
  Model m = make_model(cfg, rules);
  for (auto& band : m.params.gate.bands)
    for (double& c : band.coefficients) c = oracle::uniform(rng, -0.5, 1.0);
  for (double& w : m.params.rule_weights) w = oracle::uniform(rng, 0.2, 1.0);
  const auto task = gen_transitive(1 + oracle::pick(rng, 5), 2, rng());
  if (oracle::pick(rng, 2)) {
    m.params.tau.clear();
    for (std::size_t i = 0; i < task.graph.size(); ++i) m.params.tau.push_back(oracle::uniform(rng, 0.0, 0.5));
  } else {
    m.params.tau = {oracle::uniform(rng, 0.0, 0.5)};
  }
  m.params.alpha = oracle::uniform(rng, 1.0, 4.0);
  return {m, prepare_task(m, task)};
}

Dataset reference_dataset() { return gen_dataset(DatasetSpec{}); }

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("bce loss") {
  PredicateSet half{std::vector<double>(6, 0.5), true};
  const Labels labels{{0, true}, {2, false}, {5, true}};
  CHECK(bce_loss(half, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  PredicateSet exact{{1.0, 0.0, 0.0, 0.0, 0.0, 1.0}, false};
  const double tiny = bce_loss(exact, labels);
  CHECK(tiny > 0.0);
  CHECK(tiny < 2e-7);
  CHECK(code_of([&] { bce_loss(half, {}); }) == ErrorCode::empty_labels);

  std::mt19937_64 rng(1);
  PredicateSet p;
  Labels l;
  for (std::size_t i = 0; i < 20; ++i) {
    p.values.push_back(oracle::uniform(rng, 0.0, 1.0));
    l.emplace_back(i, oracle::pick(rng, 2) == 1);
  }
  double want = 0.0;
  for (const auto& [i, t] : l) {
    const double q = std::min(std::max(p.values[i], 1e-7), 1.0 - 1e-7);
    want += t ? -std::log(q) : -std::log(1.0 - q);
  }
  CHECK(std::abs(bce_loss(p, l) - want / 20.0) <= 1e-12);
}

TEST_CASE("grad_theta base cases") {
  std::mt19937_64 rng(2);
  const auto g = oracle::random_graph(rng, 15, 0.3);
  const auto lap = combinatorial_laplacian(g);
  const double lmax = estimate_lambda_max(lap);
  const Eigen::VectorXd x = oracle::random_vector(rng, 15), u = oracle::random_vector(rng, 15);
  for (double v : grad_theta(lap, lmax, 4, x, Eigen::VectorXd::Zero(15))) CHECK(v == 0.0);
  const auto k0 = grad_theta(lap, lmax, 0, x, u);
  REQUIRE(k0.size() == 1);
  CHECK(k0[0] == doctest::Approx(u.dot(x)).epsilon(1e-15));
  CHECK(code_of([&] { grad_theta(lap, lmax, 2, x, Eigen::VectorXd::Zero(3)); }) == ErrorCode::shape_mismatch);
}

TEST_CASE("grad_theta matches central differences") {
  std::mt19937_64 rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    const auto lap = normalized_laplacian(oracle::random_graph(rng, 10 + oracle::pick(rng, 30), 0.2));
    const auto n = static_cast<Eigen::Index>(lap.size());
    const std::size_t k = oracle::pick(rng, 8);
    const Eigen::VectorXd x = oracle::random_vector(rng, n), target = oracle::random_vector(rng, n);
    std::vector<double> theta(k + 1);
    for (double& t : theta) t = oracle::uniform(rng, -1.0, 1.0);
    auto loss = [&](const std::vector<double>& th) {
      const Eigen::VectorXd y = chebyshev_filter(lap, {th, 2.0}, vertex_signal(x)).values;
      return 0.5 * (y - target).squaredNorm();
    };
    const Eigen::VectorXd y = chebyshev_filter(lap, {theta, 2.0}, vertex_signal(x)).values;
    const auto analytic = grad_theta(lap, 2.0, k, x, y - target);
    std::vector<double> fd(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) fd[i] = oracle::central_diff(loss, theta, i);
    CHECK(rel_err(analytic, fd) <= 1e-5);
  }
}

TEST_CASE("grad_rule_weights matches central differences") {
  std::mt19937_64 rng(4);
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index n = 12;
    std::vector<Eigen::VectorXd> resp;
    for (int r = 0; r < 3; ++r) resp.push_back(oracle::random_vector(rng, n));
    const Eigen::VectorXd target = oracle::random_vector(rng, n);
    std::vector<double> w{0.3, 0.8, 0.5};
    auto loss = [&](const std::vector<double>& ww) {
      Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
      for (int r = 0; r < 3; ++r) b += ww[static_cast<std::size_t>(r)] * resp[static_cast<std::size_t>(r)];
      return 0.5 * (b.array().tanh().matrix() - target).squaredNorm();
    };
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < 3; ++r) b += w[static_cast<std::size_t>(r)] * resp[static_cast<std::size_t>(r)];
    const Eigen::VectorXd th = b.array().tanh().matrix();
    const Eigen::VectorXd up = ((th - target).array() * (1.0 - th.array().square())).matrix();
    const auto analytic = grad_rule_weights(resp, up);
    std::vector<double> fd(3);
    for (std::size_t i = 0; i < 3; ++i) fd[i] = oracle::central_diff(loss, w, i);
    CHECK(rel_err(analytic, fd) <= 1e-5);
  }
}

TEST_CASE("gate gradient special cases") {
  auto gate = make_band_gate(1, 4, 2.0, 8, 3);
  const std::vector<double> up{0.1, -0.2, 0.3, 0.4, -0.5};
  const auto g1 = grad_gate(gate, up);
  CHECK(g1.query.isZero(0.0));
  CHECK(g1.signatures[0].isZero(0.0));
  CHECK(g1.bands[0] == up);

  auto sym = make_band_gate(2, 4, 2.0, 8, 5);
  sym.bands[1] = sym.bands[0];
  const auto g2 = grad_gate(sym, up);
  CHECK(g2.query.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("gate gradient matches central differences") {
  std::mt19937_64 rng(6);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t nb = 2 + oracle::pick(rng, 3);
    BandGate gate = make_band_gate(nb, 5, 2.0, 4, rng());
    for (auto& band : gate.bands)
      for (double& c : band.coefficients) c = oracle::uniform(rng, -1.0, 1.0);
    std::vector<double> target(6);
    for (double& t : target) t = oracle::uniform(rng, -1.0, 1.0);
    auto pack = [&](const BandGate& g) {
      std::vector<double> v(g.query.data(), g.query.data() + g.query.size());
      for (const auto& s : g.signatures) v.insert(v.end(), s.data(), s.data() + s.size());
      for (const auto& b : g.bands) v.insert(v.end(), b.coefficients.begin(), b.coefficients.end());
      return v;
    };
    auto unpack = [&](const std::vector<double>& v) {
      BandGate g = gate;
      std::size_t i = 0;
      for (Eigen::Index j = 0; j < g.query.size(); ++j) g.query[j] = v[i++];
      for (auto& s : g.signatures)
        for (Eigen::Index j = 0; j < s.size(); ++j) s[j] = v[i++];
      for (auto& b : g.bands)
        for (double& c : b.coefficients) c = v[i++];
      return g;
    };
    auto loss = [&](const std::vector<double>& v) {
      const auto c = band_gate_combine(unpack(v)).coefficients;
      double acc = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) acc += 0.5 * (c[k] - target[k]) * (c[k] - target[k]);
      return acc;
    };
    const auto c = band_gate_combine(gate).coefficients;
    std::vector<double> up(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) up[k] = c[k] - target[k];
    const auto g = grad_gate(gate, up);
    BandGate as_gate = gate;
    as_gate.query = g.query;
    as_gate.signatures = g.signatures;
    for (std::size_t b = 0; b < nb; ++b) as_gate.bands[b].coefficients = g.bands[b];
    const auto analytic = pack(as_gate);
    const auto x = pack(gate);
    std::vector<double> fd(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) fd[i] = oracle::central_diff(loss, x, i);
    CHECK(rel_err(analytic, fd) <= 1e-5);
  }
}

TEST_CASE("threshold gradient matches central differences") {
  std::mt19937_64 rng(7);
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index n = 9;
    const Eigen::VectorXd y = oracle::random_vector(rng, n), w = oracle::random_vector(rng, n);
    ThresholdConfig cfg;
    cfg.mode = ThresholdMode::logistic;
    cfg.alpha = oracle::uniform(rng, 0.5, 3.0);
    if (inst % 2) {
      cfg.tau = {oracle::uniform(rng, -0.3, 0.3)};
    } else {
      cfg.tau.clear();
      for (Eigen::Index i = 0; i < n; ++i) cfg.tau.push_back(oracle::uniform(rng, -0.3, 0.3));
    }
    auto loss_of = [&](const Eigen::VectorXd& yy, const ThresholdConfig& c) {
      const auto p = soft_threshold(vertex_signal(yy), c).values;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += w[i] * p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)];
      return acc;
    };
    const auto p = soft_threshold(vertex_signal(y), cfg).values;
    Eigen::VectorXd up(n);
    for (Eigen::Index i = 0; i < n; ++i) up[i] = 2.0 * w[i] * p[static_cast<std::size_t>(i)];
    const auto g = grad_threshold(y, cfg, up);

    std::vector<double> flat(y.data(), y.data() + n);
    flat.insert(flat.end(), cfg.tau.begin(), cfg.tau.end());
    flat.push_back(cfg.alpha);
    auto loss = [&](const std::vector<double>& v) {
      Eigen::VectorXd yy(n);
      for (Eigen::Index i = 0; i < n; ++i) yy[i] = v[static_cast<std::size_t>(i)];
      ThresholdConfig c = cfg;
      for (std::size_t i = 0; i < c.tau.size(); ++i) c.tau[i] = v[static_cast<std::size_t>(n) + i];
      c.alpha = v.back();
      return loss_of(yy, c);
    };
    std::vector<double> analytic(g.y.data(), g.y.data() + n);
    analytic.insert(analytic.end(), g.tau.begin(), g.tau.end());
    analytic.push_back(g.alpha);
    std::vector<double> fd(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) fd[i] = oracle::central_diff(loss, flat, i);
    CHECK(rel_err(analytic, fd) <= 1e-5);
  }
}

TEST_CASE("full task gradient matches central differences") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Instance inst = random_instance(100 + s);
    const auto lg = task_loss_grad(inst.model, inst.task);
    CHECK(lg.loss == doctest::Approx(task_loss(inst.model, inst.task)).epsilon(1e-14));
    const auto analytic = flatten(lg.grad);
    const auto x = flatten(inst.model.params);
    auto loss = [&](const std::vector<double>& v) {
      Model m = inst.model;
      unflatten(v, m.params);
      return task_loss(m, inst.task);
    };
    std::vector<double> fd(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) fd[i] = oracle::central_diff(loss, x, i);
    CHECK(rel_err(analytic, fd) <= 1e-5);
  }
}

TEST_CASE("flatten, groups and names") {
  const Instance inst = random_instance(7);
  const auto& p = inst.model.params;
  const auto flat = flatten(p);
  TrainableParams q = p;
  unflatten(flat, q);
  CHECK(flatten(q) == flat);
  const auto groups = param_groups(p);
  REQUIRE(groups.size() == flat.size());
  CHECK(groups.front() == ParamGroup::spectral);
  CHECK(groups.back() == ParamGroup::embedding);
  CHECK(param_name(p, 0) == "theta[0][0]");
  CHECK(param_name(p, flat.size() - 1) == "alpha");
  const std::size_t nb = p.gate.band_count() * p.gate.bands[0].coefficients.size();
  CHECK(param_name(p, nb) == "w[0]");
  CHECK(groups[nb + 1] == ParamGroup::spectral);
  CHECK(groups[nb + 2] == ParamGroup::embedding);
  CHECK(param_name(p, nb + 2) == "q[0]");
  const std::vector<double> short_vec(3, 0.0);
  CHECK(code_of([&] { unflatten(short_vec, q); }) == ErrorCode::shape_mismatch);
}

TEST_CASE("adam with zero gradient") {
  std::vector<double> x{1.0, -2.0};
  const std::vector<double> g{0.0, 0.0}, lr{0.1, 0.1};
  AdamState st;
  adam_update(x, g, lr, st);
  CHECK(x == std::vector<double>{1.0, -2.0});
  CHECK(st.step == 1);
}

TEST_CASE("adam with a constant gradient moves by the learning rate") {
  std::vector<double> x{0.0};
  const std::vector<double> g{0.37}, lr{1e-3};
  AdamState st;
  double last = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double before = x[0];
    adam_update(x, g, lr, st);
    last = before - x[0];
  }
  CHECK(last == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam three hand-computed steps") {
  std::vector<double> x{1.0};
  const double lr = 0.01;
  const double grads[] = {0.5, -0.25, 1.0};
  AdamState st;
  double m = 0.0, v = 0.0, want = 1.0;
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    want -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    const std::vector<double> gv{g}, lv{lr};
    adam_update(x, gv, lv, st);
    CHECK(std::abs(x[0] - want) <= 1e-12);
  }
  // step 1 by hand: m=0.05, v=0.00025, mhat=0.5, vhat=0.25 -> 1 - 0.01*0.5/(0.5+1e-8)
}

TEST_CASE("adam_step uses group rates and clamps rule weights") {
  Instance inst = random_instance(11);
  TrainableParams p = inst.model.params;
  TrainableParams g = p;
  std::vector<double> ones(flatten(p).size(), 1.0);
  unflatten(ones, g);
  p.rule_weights[0] = 1e-4;
  const auto before = flatten(p);
  AdamState st;
  adam_step(p, g, st, {0.1, 1e-5});
  const auto after = flatten(p);
  const auto groups = param_groups(p);
  CHECK(p.rule_weights[0] == 0.0);
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (param_name(p, i) == "w[0]") continue;
    const double want = groups[i] == ParamGroup::spectral ? 0.1 : 1e-5;
    CHECK(before[i] - after[i] == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("non-finite gradients abort the step untouched") {
  Instance inst = random_instance(12);
  TrainableParams p = inst.model.params;
  TrainableParams g = p;
  std::vector<double> grad(flatten(p).size(), 0.1);
  grad[1] = std::nan("");
  unflatten(grad, g);
  const auto before = flatten(p);
  AdamState st;
  try {
    adam_step(p, g, st, {});
    FAIL("expected NonFiniteGradient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_finite_gradient);
    CHECK(e.message().find("theta[0][1]") != std::string::npos);
  }
  CHECK(flatten(p) == before);
  CHECK(st.step == 0);
}

TEST_CASE("low-pass initial filter is non-increasing") {
  for (std::size_t k : {3u, 5u, 8u}) {
    PipelineConfig cfg;
    cfg.order = k;
    const Model m = make_model(cfg, default_rules());
    for (double lmax : {2.0, 5.0}) {
      const auto f = m.params.combined(lmax);
      const auto h = sample_response(f, uniform_grid(lmax, 64));
      for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
    }
  }
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  const Dataset d = gen_dataset({TaskFamily::transitive, 60, 4, 2, 1});
  const Model m = make_model(PipelineConfig{}, default_rules());
  TrainRun run;
  run.max_epochs = 4;
  run.patience = 10;
  run.lr = {0.0, 0.0};
  run.latency_reps = 0;
  const auto r = train(m, d, run);
  REQUIRE(r.trajectory.size() == 5);
  for (const auto& t : r.trajectory) CHECK(t == r.trajectory.front());
  CHECK(flatten(r.best.model.params) == flatten(m.params));
}

TEST_CASE("perfect initial model stops early at epoch one") {
  const Dataset d = gen_dataset({TaskFamily::transitive, 40, 1, 1, 9});
  PipelineConfig cfg;
  cfg.tau = 0.3;
  const Model m = make_model(cfg, default_rules());
  REQUIRE(validation_accuracy(m, d.val) == 1.0);
  TrainRun run = TrainRun::from_config(cfg);
  run.latency_reps = 0;
  const auto r = train(m, d, run);
  CHECK(r.early_stopped);
  CHECK(r.best.epoch == 1);
  CHECK(r.history.size() == 1 + 1 + run.patience);
}

TEST_CASE("reference run: validation accuracy rises over the first epochs") {
  const Dataset d = reference_dataset();
  PipelineConfig cfg;
  const Model m = make_model(cfg, default_rules());
  TrainRun run = TrainRun::from_config(cfg);
  run.latency_reps = 0;
  const auto r = train(m, d, run);
  REQUIRE(r.history.size() >= 6);
  for (std::size_t e = 1; e <= 5; ++e) {
    INFO("epoch " << e);
    CHECK(r.history[e].val_acc > r.history[e - 1].val_acc);
  }
  CHECK(r.skipped_steps == 0);

  // the selected checkpoint reproduces its recorded accuracy after a round trip
  const Checkpoint back = parse_checkpoint(format_checkpoint(r.best));
  CHECK(validation_accuracy(back.model, d.val) == r.best.val_acc);
  CHECK(format_checkpoint(back) == format_checkpoint(r.best));

  const auto again = train(m, d, run);
  CHECK(again.trajectory == r.trajectory);
}

TEST_CASE("metrics csv") {
  const std::vector<EpochMetrics> h{{0, 0.7, 0.5, 0.0}, {1, 0.6, 0.75, 0.125}};
  CHECK(format_metrics_csv(h) == "epoch,train_loss,val_acc,latency_ms\n0,0.7,0.5,0\n1,0.6,0.75,0.125\n");
}

TEST_CASE("train run validation") {
  TrainRun run;
  run.max_epochs = 51;
  CHECK(code_of([&] { run.validate(); }) == ErrorCode::bad_params);
  run.max_epochs = 5;
  run.patience = 0;
  CHECK(code_of([&] { run.validate(); }) == ErrorCode::bad_params);
}

}
