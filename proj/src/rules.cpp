#include "snsr/rules.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snsr/errors.hpp"
#include "snsr/text.hpp"

namespace snsr {

FrequencyResponse builtin_template(ResponseKind kind, const TemplateParams& params,
                                   double lambda_max) {
  if (!(lambda_max > 0.0)) fail(ErrorCode::bad_params, "template needs lambda_max > 0");
  switch (kind) {
    case ResponseKind::low_pass: {
      if (!(params.beta > 0.0)) fail(ErrorCode::bad_params, "low-pass beta must be > 0");
      const double beta = params.beta;
      return {kind, [beta](double l) { return 1.0 / (1.0 + beta * l); }};
    }
    case ResponseKind::high_pass: {
      if (!std::isfinite(params.gain)) fail(ErrorCode::bad_params, "high-pass gain must be finite");
      const double scale = params.gain / lambda_max;
      return {kind, [scale](double l) { return scale * l; }};
    }
    case ResponseKind::band_pass: {
      const double center = params.center.value_or(lambda_max / 2.0);
      const double sigma = params.sigma.value_or(lambda_max / 10.0);
      if (!(sigma > 0.0)) fail(ErrorCode::bad_params, "band-pass sigma must be > 0");
      return {kind, [center, sigma](double l) {
                const double d = l - center;
                return std::exp(-d * d / (2.0 * sigma * sigma));
              }};
    }
    case ResponseKind::heat_kernel: {
      if (!(params.t > 0.0)) fail(ErrorCode::bad_params, "heat-kernel t must be > 0");
      const double t = params.t;
      return {kind, [t](double l) { return std::exp(-t * l); }};
    }
    case ResponseKind::custom:
      break;
  }
  fail(ErrorCode::bad_params, "custom responses are not a built-in template");
}

double SampledResponse::operator()(double lambda) const {
  if (lambdas.empty()) return 0.0;
  if (lambda <= lambdas.front()) return values.front();
  if (lambda >= lambdas.back()) return values.back();
  const auto hi = std::upper_bound(lambdas.begin(), lambdas.end(), lambda);
  const auto i = static_cast<std::size_t>(hi - lambdas.begin());
  const double x0 = lambdas[i - 1];
  const double x1 = lambdas[i];
  const double f = (lambda - x0) / (x1 - x0);
  return values[i - 1] + f * (values[i] - values[i - 1]);
}

SampledResponse SampledResponse::parse_csv(std::string_view text) {
  SampledResponse out;
  std::size_t line_no = 0;
  for (std::string_view line : text::split(text, '\n')) {
    ++line_no;
    line = text::strip_comment(line);
    if (line.empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != 2) {
      fail(ErrorCode::parse_error, "response CSV line " + std::to_string(line_no) +
                                       ": expected 'lambda,value'");
    }
    if (out.lambdas.empty() && line_no == 1 && !text::trim(cells[0]).empty() &&
        std::isalpha(static_cast<unsigned char>(text::trim(cells[0]).front()))) {
      continue;  // header
    }
    out.lambdas.push_back(text::parse_double(cells[0], "response CSV"));
    out.values.push_back(text::parse_double(cells[1], "response CSV"));
  }
  if (out.lambdas.empty()) fail(ErrorCode::parse_error, "response CSV has no samples");
  for (std::size_t i = 1; i < out.lambdas.size(); ++i) {
    if (!(out.lambdas[i] > out.lambdas[i - 1])) {
      fail(ErrorCode::parse_error, "response CSV lambdas must be strictly increasing");
    }
  }
  return out;
}

FrequencyResponse SpectralRule::response(double lambda_max) const {
  if (kind == ResponseKind::custom) {
    if (!samples) fail(ErrorCode::bad_params, "custom rule '" + id + "' has no sampled response");
    auto s = samples;
    return {ResponseKind::custom, [s](double l) { return (*s)(l); }};
  }
  return builtin_template(kind, params, lambda_max);
}

void SpectralRule::validate(std::size_t node_count) const {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    fail(ErrorCode::bad_params, "rule '" + id + "' weight must be finite and >= 0");
  }
  if (scope) {
    for (std::size_t v : *scope) {
      if (v >= node_count) {
        fail(ErrorCode::index_out_of_range,
             "rule '" + id + "' scope references node " + std::to_string(v), v);
      }
    }
  }
}

SpectralContext make_context(LaplacianMatrix lap, std::size_t dense_limit,
                             std::size_t chebyshev_order) {
  SpectralContext ctx;
  ctx.lambda_max = lambda_max_bound(lap);
  ctx.chebyshev_order = chebyshev_order;
  auto shared = std::make_shared<const LaplacianMatrix>(std::move(lap));
  if (shared->size() <= dense_limit) {
    ctx.basis = std::make_shared<const SpectralBasis>(eigendecompose(*shared, dense_limit));
  }
  ctx.laplacian = std::move(shared);
  return ctx;
}

RuleOperator::RuleOperator(Eigen::MatrixXd dense,
                           std::vector<std::pair<std::string, double>> provenance)
    : rep_(std::move(dense)), provenance_(std::move(provenance)) {}

RuleOperator::RuleOperator(Chebyshev rep, std::vector<std::pair<std::string, double>> provenance)
    : rep_(std::move(rep)), provenance_(std::move(provenance)) {}

OperatorPath RuleOperator::path() const noexcept {
  return std::holds_alternative<Eigen::MatrixXd>(rep_) ? OperatorPath::dense
                                                       : OperatorPath::chebyshev;
}

std::size_t RuleOperator::size() const noexcept {
  if (const auto* m = std::get_if<Eigen::MatrixXd>(&rep_)) return static_cast<std::size_t>(m->rows());
  return std::get<Chebyshev>(rep_).laplacian->size();
}

const Eigen::MatrixXd& RuleOperator::dense() const {
  if (const auto* m = std::get_if<Eigen::MatrixXd>(&rep_)) return *m;
  fail(ErrorCode::no_basis_available, "operator is held in Chebyshev form");
}

const RuleOperator::Chebyshev& RuleOperator::chebyshev() const {
  if (const auto* c = std::get_if<Chebyshev>(&rep_)) return *c;
  fail(ErrorCode::bad_params, "operator is held in dense form");
}

namespace {

std::vector<bool> scope_mask(const std::optional<std::vector<std::size_t>>& scope, std::size_t n) {
  if (!scope) return {};
  std::vector<bool> mask(n, false);
  for (std::size_t v : *scope) mask[v] = true;
  return mask;
}

// M Phi M + passthrough (I - M)
void apply_scope(Eigen::MatrixXd& phi, const std::vector<bool>& mask, double passthrough) {
  if (mask.empty()) return;
  const auto n = phi.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[static_cast<std::size_t>(i)]) continue;
    phi.row(i).setZero();
    phi.col(i).setZero();
    phi(i, i) = passthrough;
  }
}

Eigen::MatrixXd dense_operator(const SpectralBasis& basis, const FrequencyResponse& g) {
  Eigen::VectorXd gains(basis.eigenvalues.size());
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    gains[i] = g(basis.eigenvalues[i]);
    if (!std::isfinite(gains[i])) {
      fail(ErrorCode::non_finite_response, "template is not finite at lambda = " +
                                               std::to_string(basis.eigenvalues[i]));
    }
  }
  const Eigen::MatrixXd& u = basis.eigenvectors;
  Eigen::MatrixXd phi = u * gains.asDiagonal() * u.transpose();
  // Symmetrise away round-off so the stored operator is exactly symmetric.
  return 0.5 * (phi + phi.transpose());
}

const SpectralBasis& require_basis(const SpectralContext& ctx) {
  if (!ctx.basis) {
    fail(ErrorCode::no_basis_available,
         "dense rule operator requested but no eigenbasis is available for N = " +
             std::to_string(ctx.size()));
  }
  return *ctx.basis;
}

RuleOperator build_operator(const SpectralContext& ctx, const FrequencyResponse& g,
                            const std::vector<bool>& mask, double passthrough, OperatorPath path,
                            std::vector<std::pair<std::string, double>> provenance) {
  if (path == OperatorPath::dense) {
    Eigen::MatrixXd phi = dense_operator(require_basis(ctx), g);
    apply_scope(phi, mask, passthrough);
    return RuleOperator(std::move(phi), std::move(provenance));
  }
  RuleOperator::Chebyshev rep;
  rep.filter = fit_chebyshev(g, ctx.chebyshev_order, ctx.lambda_max);
  rep.laplacian = ctx.laplacian;
  rep.in_scope = mask;
  rep.passthrough = passthrough;
  return RuleOperator(std::move(rep), std::move(provenance));
}

}  // namespace

RuleOperator rule_operator(const SpectralContext& ctx, const SpectralRule& rule,
                           OperatorPath path) {
  if (!ctx.laplacian) fail(ErrorCode::bad_params, "spectral context has no Laplacian");
  rule.validate(ctx.size());
  return build_operator(ctx, rule.response(ctx.lambda_max), scope_mask(rule.scope, ctx.size()),
                        1.0, path, {{rule.id, 1.0}});
}

GraphSignal apply_rule(const RuleOperator& op, const GraphSignal& b) {
  if (b.domain != SignalDomain::vertex) {
    fail(ErrorCode::domain_mismatch, "rules apply to vertex-domain belief vectors");
  }
  if (b.size() != op.size()) {
    fail(ErrorCode::dimension_mismatch, "belief vector length " + std::to_string(b.size()) +
                                            " does not match operator size " +
                                            std::to_string(op.size()));
  }
  if (op.path() == OperatorPath::dense) return vertex_signal(op.dense() * b.values);

  const auto& rep = op.chebyshev();
  if (rep.in_scope.empty()) return chebyshev_filter(*rep.laplacian, rep.filter, b);
  Eigen::VectorXd masked = b.values;
  for (Eigen::Index i = 0; i < masked.size(); ++i) {
    if (!rep.in_scope[static_cast<std::size_t>(i)]) masked[i] = 0.0;
  }
  Eigen::VectorXd y = chebyshev_filter(*rep.laplacian, rep.filter, vertex_signal(masked)).values;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!rep.in_scope[static_cast<std::size_t>(i)]) y[i] = rep.passthrough * b.values[i];
  }
  return vertex_signal(std::move(y));
}

RuleOperator compose_rules(std::span<const SpectralRule> rules, const SpectralContext& ctx,
                           OperatorPath path) {
  if (rules.empty()) fail(ErrorCode::empty_rule_set, "cannot compose an empty rule set");
  if (!ctx.laplacian) fail(ErrorCode::bad_params, "spectral context has no Laplacian");
  for (const auto& r : rules) {
    r.validate(ctx.size());
    if (r.scope != rules.front().scope) {
      fail(ErrorCode::mixed_scopes, "rules '" + rules.front().id + "' and '" + r.id +
                                        "' have different scopes");
    }
  }

  std::vector<std::pair<FrequencyResponse, double>> terms;
  std::vector<std::pair<std::string, double>> provenance;
  double total_weight = 0.0;
  for (const auto& r : rules) {
    terms.emplace_back(r.response(ctx.lambda_max), r.weight);
    provenance.emplace_back(r.id, r.weight);
    total_weight += r.weight;
  }
  const std::vector<bool> mask = scope_mask(rules.front().scope, ctx.size());

  if (path == OperatorPath::dense) {
    const SpectralBasis& basis = require_basis(ctx);
    const auto n = static_cast<Eigen::Index>(ctx.size());
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [g, w] : terms) total += w * dense_operator(basis, g);
    apply_scope(total, mask, total_weight);
    return RuleOperator(std::move(total), std::move(provenance));
  }
  FrequencyResponse combined = custom_response([terms](double l) {
    double acc = 0.0;
    for (const auto& [g, w] : terms) acc += w * g(l);
    return acc;
  });
  return build_operator(ctx, combined, mask, total_weight, path, std::move(provenance));
}

std::vector<Eigen::VectorXd> rule_responses(std::span<const SpectralRule> rules,
                                            const SpectralContext& ctx, OperatorPath path,
                                            const Eigen::VectorXd& x) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(rules.size());
  for (const auto& r : rules) {
    out.push_back(apply_rule(rule_operator(ctx, r, path), vertex_signal(x)).values);
  }
  return out;
}

ResponseKind parse_rule_kind(std::string_view s) {
  if (s == "low-pass" || s == "transitive") return ResponseKind::low_pass;
  if (s == "high-pass" || s == "conflict") return ResponseKind::high_pass;
  if (s == "band-pass" || s == "band") return ResponseKind::band_pass;
  if (s == "heat" || s == "heat-kernel") return ResponseKind::heat_kernel;
  if (s == "custom") return ResponseKind::custom;
  fail(ErrorCode::parse_error, "unknown rule kind '" + std::string(s) + "'");
}

std::string_view rule_kind_name(ResponseKind k) noexcept {
  return k == ResponseKind::heat_kernel ? "heat" : to_string(k);
}

std::vector<SpectralRule> parse_rules(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<SpectralRule> rules;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    const std::string_view line = text::strip_comment(raw);
    if (line.empty()) continue;
    const std::string ctx = "rule file line " + std::to_string(line_no);
    const auto tokens = text::split_ws(line);
    if (tokens.size() < 2 || tokens[0] != "rule") {
      fail(ErrorCode::parse_error, ctx + ": expected 'rule <id> key=value ...'");
    }
    SpectralRule rule;
    rule.id = std::string(tokens[1]);
    bool have_kind = false;
    for (std::size_t i = 2; i < tokens.size(); ++i) {
      const auto eq = tokens[i].find('=');
      if (eq == std::string_view::npos) fail(ErrorCode::parse_error, ctx + ": expected key=value");
      const std::string_view key = tokens[i].substr(0, eq);
      const std::string_view value = tokens[i].substr(eq + 1);
      if (key == "kind") {
        rule.kind = parse_rule_kind(value);
        have_kind = true;
      } else if (key == "w") {
        rule.weight = text::parse_double(value, ctx);
      } else if (key == "beta") {
        rule.params.beta = text::parse_double(value, ctx);
      } else if (key == "t") {
        rule.params.t = text::parse_double(value, ctx);
      } else if (key == "center") {
        rule.params.center = text::parse_double(value, ctx);
      } else if (key == "sigma") {
        rule.params.sigma = text::parse_double(value, ctx);
      } else if (key == "gain") {
        rule.params.gain = text::parse_double(value, ctx);
      } else if (key == "file") {
        rule.samples_file = std::string(value);
      } else if (key == "scope") {
        std::vector<std::size_t> scope;
        for (auto cell : text::split(value, ',')) scope.push_back(text::parse_index(cell, ctx));
        std::sort(scope.begin(), scope.end());
        scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
        rule.scope = std::move(scope);
      } else {
        fail(ErrorCode::parse_error, ctx + ": unknown key '" + std::string(key) + "'");
      }
    }
    if (!have_kind) fail(ErrorCode::parse_error, ctx + ": missing kind=");
    if (!(rule.weight >= 0.0)) fail(ErrorCode::bad_params, ctx + ": weight must be >= 0");
    if (rule.kind == ResponseKind::custom) {
      if (rule.samples_file.empty()) fail(ErrorCode::parse_error, ctx + ": custom rule needs file=");
      std::filesystem::path p(rule.samples_file);
      if (p.is_relative()) p = base_dir / p;
      rule.samples = std::make_shared<const SampledResponse>(
          SampledResponse::parse_csv(text::read_file(p)));
    } else {
      // Surface bad template parameters at load time.
      (void)builtin_template(rule.kind, rule.params, 1.0);
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<SpectralRule> load_rules(const std::filesystem::path& path) {
  return parse_rules(text::read_file(path), path.parent_path());
}

std::string format_rule(const SpectralRule& rule) {
  using text::format_double;
  std::string out = "rule " + rule.id + " kind=" + std::string(rule_kind_name(rule.kind)) +
                    " w=" + format_double(rule.weight);
  switch (rule.kind) {
    case ResponseKind::low_pass: out += " beta=" + format_double(rule.params.beta); break;
    case ResponseKind::heat_kernel: out += " t=" + format_double(rule.params.t); break;
    case ResponseKind::high_pass: out += " gain=" + format_double(rule.params.gain); break;
    case ResponseKind::band_pass:
      if (rule.params.center) out += " center=" + format_double(*rule.params.center);
      if (rule.params.sigma) out += " sigma=" + format_double(*rule.params.sigma);
      break;
    case ResponseKind::custom: out += " file=" + rule.samples_file; break;
  }
  if (rule.scope) {
    out += " scope=";
    for (std::size_t i = 0; i < rule.scope->size(); ++i) {
      if (i) out += ',';
      out += std::to_string((*rule.scope)[i]);
    }
  }
  return out;
}

std::string format_rules(std::span<const SpectralRule> rules) {
  std::string out;
  for (const auto& r : rules) out += format_rule(r) + "\n";
  return out;
}

std::vector<SpectralRule> default_rules() {
  SpectralRule r;
  r.id = "transitive";
  r.kind = ResponseKind::low_pass;
  r.weight = 1.0;
  r.params.beta = 1.0;
  return {r};
}

}  // namespace snsr
