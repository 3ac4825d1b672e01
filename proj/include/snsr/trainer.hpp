#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "snsr/harness.hpp"
#include "snsr/pipeline.hpp"

namespace snsr {

using Labels = std::vector<std::pair<std::size_t, bool>>;

/// Mean binary cross-entropy over labelled nodes, probabilities clipped to
/// [1e-7, 1 - 1e-7].
double bce_loss(const PredicateSet& p, const Labels& labels);

inline constexpr double kProbClip = 1e-7;

/// dloss/dtheta_k = <upstream, T_k(L~) x>.
std::vector<double> grad_theta(const LaplacianMatrix& lap, double lambda_max, std::size_t order,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& upstream);
/// Same, reusing T_k x from the forward pass.
std::vector<double> grad_theta(std::span<const Eigen::VectorXd> terms, const Eigen::VectorXd& upstream);

/// dloss/dw_r = <upstream_b, Phi_r x0> where b' = sum_r w_r Phi_r x0.
std::vector<double> grad_rule_weights(std::span<const Eigen::VectorXd> responses,
                                      const Eigen::VectorXd& upstream_b);

struct GateGrad {
  std::vector<std::vector<double>> bands;     // dloss/dtheta^(b)
  std::vector<Eigen::VectorXd> signatures;    // dloss/ds_b
  Eigen::VectorXd query;                      // dloss/dq
};

/// Back-propagates dloss/dtheta* through theta* = sum_b softmax(q.s)_b theta^(b).
GateGrad grad_gate(const BandGate& gate, std::span<const double> upstream_theta);

struct ThresholdGrad {
  Eigen::VectorXd y;         // dloss/dy
  std::vector<double> tau;   // same shape as cfg.tau
  double alpha = 0.0;
};

/// Chain rule through p = sigmoid(alpha (y - tau)) given dloss/dp.
ThresholdGrad grad_threshold(const Eigen::VectorXd& y, const ThresholdConfig& cfg,
                             const Eigen::VectorXd& upstream_p);

enum class ParamGroup { spectral, embedding };

/// Flat parameter order: band coefficients, rule weights, q, s_b, tau, alpha.
std::vector<double> flatten(const TrainableParams& p);
void unflatten(std::span<const double> flat, TrainableParams& p);
std::vector<ParamGroup> param_groups(const TrainableParams& p);
std::string param_name(const TrainableParams& p, std::size_t flat_index);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam on a flat vector with a learning rate per entry.
/// Throws NonFiniteGradient without touching x or state.
void adam_update(std::span<double> x, std::span<const double> grad, std::span<const double> lr,
                 AdamState& state);

struct LearningRates {
  double spectral = 5e-4;
  double embedding = 1e-5;
};

/// Adam with per-group learning rates, then w_r <- max(w_r, 0).
void adam_step(TrainableParams& params, const TrainableParams& grad, AdamState& state,
               const LearningRates& lr);

/// Per-task quantities that do not depend on the parameters:
/// terms[r][k] = T_k(L~) Phi_r x0.
struct PreparedTask {
  std::shared_ptr<const LaplacianMatrix> laplacian;
  double lambda_max = 2.0;
  std::vector<Eigen::VectorXd> responses;           // Phi_r x0
  std::vector<std::vector<Eigen::VectorXd>> terms;  // [rule][k]
  Labels labels;
  std::size_t size = 0;
};

PreparedTask prepare_task(const Model& model, const SyntheticTask& task);

struct LossGrad {
  double loss = 0.0;
  TrainableParams grad;  // same shape as the model's params
};

/// Soft forward pass (logistic threshold) and its loss.
double task_loss(const Model& model, const PreparedTask& task);
/// Loss plus the exact gradient with respect to every trainable parameter.
LossGrad task_loss_grad(const Model& model, const PreparedTask& task);

struct TrainRun {
  std::size_t max_epochs = 50;
  std::size_t batch_size = 32;
  std::size_t patience = 5;
  LearningRates lr;
  std::uint64_t seed = 0;
  std::size_t latency_reps = 3;  // 0 disables latency measurement
  double latency_margin = 0.05;

  static TrainRun from_config(const PipelineConfig& cfg);
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 0 = before training
  double train_loss = 0.0;
  double val_acc = 0.0;
  double latency_ms = 0.0;
};

struct Checkpoint {
  Model model;
  AdamState optimizer;
  std::size_t epoch = 0;
  double val_acc = 0.0;
  double latency_ms = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochMetrics> history;
  std::vector<std::vector<double>> trajectory;  // flat params at the end of each epoch, epoch 0 first
  std::size_t skipped_steps = 0;
  bool early_stopped = false;
};

using TrainLog = std::function<void(const std::string&)>;

/// Mini-batch Adam over dataset.train; validation accuracy after every
/// epoch. The best checkpoint has the highest validation accuracy; among
/// equal accuracies a later epoch wins only if its latency is lower by more
/// than latency_margin. Stops after `patience` epochs without improvement.
TrainResult train(const Model& init, const Dataset& data, const TrainRun& run,
                  const TrainLog& log = {});

/// Fraction of labelled validation nodes answered correctly.
double validation_accuracy(const Model& model, std::span<const SyntheticTask> tasks);

std::string format_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// epoch,train_loss,val_acc,latency_ms
std::string format_metrics_csv(const std::vector<EpochMetrics>& history);

}  // namespace snsr
