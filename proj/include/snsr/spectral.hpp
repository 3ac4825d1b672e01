#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "snsr/graph.hpp"

namespace snsr {

/// Largest N for which the dense eigendecomposition path is used.
inline constexpr std::size_t kDefaultDenseLimit = 512;

enum class SignalDomain { vertex, spectral };

struct GraphSignal {
  Eigen::VectorXd values;
  SignalDomain domain = SignalDomain::vertex;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

inline GraphSignal vertex_signal(Eigen::VectorXd values) {
  return {std::move(values), SignalDomain::vertex};
}

/// Eigenpairs of a Laplacian, eigenvalues ascending, column i of
/// `eigenvectors` paired with eigenvalue i. Each eigenvector's first
/// non-negligible entry is positive.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
};

SpectralBasis eigendecompose(const LaplacianMatrix& lap,
                             std::size_t dense_limit = kDefaultDenseLimit);

/// x_hat = U^T x
GraphSignal gft(const SpectralBasis& basis, const GraphSignal& x);
/// x = U x_hat
GraphSignal igft(const SpectralBasis& basis, const GraphSignal& x_hat);

enum class ResponseKind { low_pass, high_pass, band_pass, heat_kernel, custom };

std::string_view to_string(ResponseKind kind) noexcept;

/// A frequency response g(lambda).
struct FrequencyResponse {
  ResponseKind kind = ResponseKind::custom;
  std::function<double(double)> fn;

  double operator()(double lambda) const { return fn(lambda); }
};

inline FrequencyResponse custom_response(std::function<double(double)> fn) {
  return {ResponseKind::custom, std::move(fn)};
}

/// y = U diag(g(lambda_i)) U^T x
GraphSignal exact_filter(const SpectralBasis& basis, const FrequencyResponse& g,
                         const GraphSignal& x);

struct PowerIterationOptions {
  double tolerance = 1e-4;
  double safety_factor = 1.01;
  int max_iterations = 2000;
};

/// Upper estimate of the largest Laplacian eigenvalue by power iteration on
/// L, scaled by the safety factor. Returns 1.0 for the zero operator, whose
/// spectrum {0} lies under any positive bound.
double estimate_lambda_max(const LaplacianMatrix& lap, const PowerIterationOptions& opts = {});

/// 2.0 for normalized Laplacians, estimate_lambda_max() otherwise.
double lambda_max_bound(const LaplacianMatrix& lap);

/// h(lambda) = sum_k theta_k T_k(2 lambda / lambda_max - 1)
struct ChebyshevFilter {
  std::vector<double> coefficients;
  double lambda_max = 2.0;

  std::size_t order() const noexcept {
    return coefficients.empty() ? 0 : coefficients.size() - 1;
  }
  void validate() const;
};

/// Scalar Chebyshev recurrence; no range check.
double evaluate_response(const ChebyshevFilter& f, double lambda);

/// Wraps a Chebyshev filter as a FrequencyResponse (for exact filtering).
FrequencyResponse as_response(const ChebyshevFilter& f);

/// T_k(L~) x for k = 0..order with L~ = (2/lambda_max) L - I. Costs exactly
/// `order` sparse matrix-vector products.
std::vector<Eigen::VectorXd> chebyshev_terms(const LaplacianMatrix& lap, double lambda_max,
                                             std::size_t order, const Eigen::VectorXd& x);

/// y = sum_k theta_k T_k(L~) x via the three-term recurrence, keeping only
/// two previous terms alive.
GraphSignal chebyshev_filter(const LaplacianMatrix& lap, const ChebyshevFilter& f,
                             const GraphSignal& x);

inline constexpr std::size_t kChebyshevFitNodes = 256;

/// Discrete least-squares fit at Chebyshev nodes mapped to [0, lambda_max].
/// Because the T_k are orthogonal on those nodes this reduces to the
/// discrete Chebyshev transform, and polynomials of degree <= order are
/// recovered exactly.
ChebyshevFilter fit_chebyshev(const FrequencyResponse& g, std::size_t order, double lambda_max,
                              std::size_t sample_nodes = kChebyshevFitNodes);

/// h(lambda) on a grid inside [0, lambda_max]; throws OutOfRange otherwise.
std::vector<double> sample_response(const ChebyshevFilter& f, std::span<const double> grid);

/// n evenly spaced points covering [0, lambda_max], endpoints included.
std::vector<double> uniform_grid(double lambda_max, std::size_t n);

std::vector<double> softmax(std::span<const double> logits);

struct BandGate {
  std::vector<ChebyshevFilter> bands;
  std::vector<Eigen::VectorXd> signatures;  // s_b, one per band
  Eigen::VectorXd query;                    // q

  std::size_t band_count() const noexcept { return bands.size(); }
  void validate() const;
};

/// alpha_b = softmax(q^T s_b)
std::vector<double> gate_weights(const BandGate& gate);

/// theta*_k = sum_b alpha_b theta^(b)_k
ChebyshevFilter band_gate_combine(const BandGate& gate);

inline constexpr std::size_t kDefaultGateWidth = 8;

/// B bands splitting [0, lambda_max] uniformly, each initialised to a
/// degree-`order` fit of the band indicator; q and s_b drawn from a seeded
/// standard normal.
BandGate make_band_gate(std::size_t bands, std::size_t order, double lambda_max,
                        std::size_t gate_width, std::uint64_t seed);

}  // namespace snsr
