#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "snsr/graph.hpp"
#include "snsr/rules.hpp"
#include "snsr/spectral.hpp"
#include "snsr/symbolic.hpp"

namespace snsr {

enum class PathChoice { automatic, dense, chebyshev };

/// Everything a run needs besides data. Serialised as `key=value` lines in
/// a fixed key order; see format_config().
struct PipelineConfig {
  LaplacianKind laplacian = LaplacianKind::normalized;
  std::size_t order = 5;            // learned filter K
  std::size_t bands = 1;            // 1 = gating off
  std::size_t gate_width = kDefaultGateWidth;
  std::string rules_file;           // empty = default_rules()
  std::size_t rule_order = 20;      // Chebyshev order for rule templates
  PathChoice operator_path = PathChoice::automatic;
  std::size_t dense_limit = kDefaultDenseLimit;
  ThresholdMode threshold_mode = ThresholdMode::hard;
  double tau = 0.5;
  double alpha = 3.0;
  double init_beta = 1.0;           // low-pass init 1 / (1 + beta lambda)
  std::uint64_t seed = 0;

  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t patience = 5;
  double lr_spectral = 5e-4;
  double lr_embedding = 1e-5;
  std::size_t latency_reps = 3;
  double latency_margin = 0.05;     // relative latency gap that breaks a val-acc tie

  void validate() const;
};

PipelineConfig parse_config(std::string_view text);
std::string format_config(const PipelineConfig& cfg);
/// Reads the file and applies SPECTRAL_NSR_SEED when set.
PipelineConfig load_config(const std::filesystem::path& path);
void apply_env_overrides(PipelineConfig& cfg);

/// Learned state. Filter coefficients live in the rescaled domain
/// lambda~ in [-1, 1], so one set of coefficients serves graphs with
/// different lambda_max.
struct TrainableParams {
  BandGate gate;                     // theta^(b), s_b, q; B = 1 is a plain filter
  std::vector<double> rule_weights;  // w_r >= 0
  std::vector<double> tau;           // global (size 1) or per node
  double alpha = 3.0;

  /// theta* for a graph whose spectrum is bounded by lambda_max.
  ChebyshevFilter combined(double lambda_max) const;
  void validate() const;
};

struct Model {
  PipelineConfig config;
  std::vector<SpectralRule> rules;
  TrainableParams params;
};

/// Low-pass initial filter (B = 1) or indicator-fitted bands (B > 1),
/// uniform rule weights 1/|R|, tau and alpha from the config.
Model make_model(const PipelineConfig& cfg, std::vector<SpectralRule> rules);

/// Rules named by cfg.rules_file, or default_rules().
std::vector<SpectralRule> config_rules(const PipelineConfig& cfg,
                                       const std::filesystem::path& base_dir = {});

/// Stage-1 spectral artefacts for one graph.
SpectralContext prepare_graph(const PipelineConfig& cfg, const ReasoningGraph& g);
OperatorPath resolve_path(const PipelineConfig& cfg, const SpectralContext& ctx);

inline constexpr std::size_t kResponseSamples = 64;

struct PipelineOutput {
  GraphSignal belief;       // b' = Phi_total x0
  GraphSignal filtered;     // y
  PredicateSet predicates;
  KnowledgeBase kb;         // input KB plus bound predicates
  ChainResult chain;
  std::vector<std::pair<AtomId, AtomId>> conflicts;
  double lambda_max = 0.0;
  ChebyshevFilter filter;   // theta* used for this graph
  std::vector<double> response_grid;
  std::vector<double> response_values;

  const std::vector<AtomId>& answers() const noexcept { return chain.closure; }
};

/// Rules -> gate -> learned filter -> threshold -> bind -> chain. Errors
/// escaping a stage carry its name.
PipelineOutput run_pipeline(const Model& model, const ReasoningGraph& g, const Eigen::VectorXd& x0,
                            const KnowledgeBase& kb, const NodeAtomMap& mapping);
PipelineOutput run_pipeline(const Model& model, const SpectralContext& ctx,
                            const Eigen::VectorXd& x0, const KnowledgeBase& kb,
                            const NodeAtomMap& mapping);

}  // namespace snsr
