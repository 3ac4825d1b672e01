#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "snsr/graph.hpp"
#include "snsr/spectral.hpp"

namespace snsr {

/// Parameters of the built-in template families. Unset band-pass fields
/// default to centre lambda_max/2 and width lambda_max/10.
struct TemplateParams {
  double beta = 1.0;  // low-pass: 1 / (1 + beta lambda)
  double t = 1.0;     // heat kernel: exp(-t lambda)
  std::optional<double> center;
  std::optional<double> sigma;
  double gain = 1.0;  // high-pass: gain * lambda / lambda_max
};

FrequencyResponse builtin_template(ResponseKind kind, const TemplateParams& params,
                                   double lambda_max);

/// Piecewise-linear response through (lambda, value) samples, held constant
/// beyond the first/last sample.
struct SampledResponse {
  std::vector<double> lambdas;
  std::vector<double> values;

  double operator()(double lambda) const;
  static SampledResponse parse_csv(std::string_view text);
};

struct SpectralRule {
  std::string id;
  ResponseKind kind = ResponseKind::low_pass;
  double weight = 1.0;
  TemplateParams params;
  std::shared_ptr<const SampledResponse> samples;  // custom rules only
  std::string samples_file;                        // as written in the rule file
  std::optional<std::vector<std::size_t>> scope;   // sorted, unique

  FrequencyResponse response(double lambda_max) const;
  void validate(std::size_t node_count) const;
};

/// Stage-1 artefacts shared by every rule applied to one graph.
struct SpectralContext {
  std::shared_ptr<const LaplacianMatrix> laplacian;
  std::shared_ptr<const SpectralBasis> basis;  // null above the dense limit
  double lambda_max = 2.0;
  std::size_t chebyshev_order = 20;

  std::size_t size() const noexcept { return laplacian ? laplacian->size() : 0; }
};

/// Computes lambda_max and, for N <= dense_limit, the eigenbasis.
SpectralContext make_context(LaplacianMatrix lap, std::size_t dense_limit = kDefaultDenseLimit,
                             std::size_t chebyshev_order = 20);

enum class OperatorPath { dense, chebyshev };

/// Either the dense matrix Phi = U phi(Lambda) U^T, or a Chebyshev fit of
/// phi applied through the recurrence. A scope restricts the filter to the
/// scoped nodes: the signal is zeroed outside the scope before filtering and
/// the unscoped entries pass through unchanged (scaled by `passthrough`).
class RuleOperator {
 public:
  struct Chebyshev {
    ChebyshevFilter filter;
    std::shared_ptr<const LaplacianMatrix> laplacian;
    std::vector<bool> in_scope;  // empty = whole graph
    double passthrough = 1.0;
  };

  RuleOperator(Eigen::MatrixXd dense, std::vector<std::pair<std::string, double>> provenance);
  RuleOperator(Chebyshev rep, std::vector<std::pair<std::string, double>> provenance);

  OperatorPath path() const noexcept;
  std::size_t size() const noexcept;
  const Eigen::MatrixXd& dense() const;
  const Chebyshev& chebyshev() const;
  const std::vector<std::pair<std::string, double>>& provenance() const noexcept {
    return provenance_;
  }

 private:
  std::variant<Eigen::MatrixXd, Chebyshev> rep_;
  std::vector<std::pair<std::string, double>> provenance_;
};

/// Unweighted Phi_r for one rule.
RuleOperator rule_operator(const SpectralContext& ctx, const SpectralRule& rule,
                           OperatorPath path);

/// b' = Phi b
GraphSignal apply_rule(const RuleOperator& op, const GraphSignal& b);

/// Phi_total = sum_r w_r Phi_r. All rules must share one scope.
RuleOperator compose_rules(std::span<const SpectralRule> rules, const SpectralContext& ctx,
                           OperatorPath path);

/// Phi_r x for each rule, unweighted. Used by the trainer, where b' is
/// linear in the rule weights.
std::vector<Eigen::VectorXd> rule_responses(std::span<const SpectralRule> rules,
                                            const SpectralContext& ctx, OperatorPath path,
                                            const Eigen::VectorXd& x);

/// Accepts the rule-file kind names and their aliases (transitive, conflict,
/// band, heat-kernel).
ResponseKind parse_rule_kind(std::string_view text);
std::string_view rule_kind_name(ResponseKind kind) noexcept;

/// Rule file: one `rule <id> kind=<k> w=<float> [key=value ...]` per line.
/// Relative `file=` paths resolve against `base_dir`.
std::vector<SpectralRule> parse_rules(std::string_view text,
                                      const std::filesystem::path& base_dir = {});
std::vector<SpectralRule> load_rules(const std::filesystem::path& path);
std::string format_rule(const SpectralRule& rule);
std::string format_rules(std::span<const SpectralRule> rules);

/// The stock rule set: one transitive low-pass rule, beta = 1, w = 1.
std::vector<SpectralRule> default_rules();

}  // namespace snsr
