#include "snsr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "snsr/errors.hpp"

namespace snsr {

namespace {

void require_vertex(const GraphSignal& x, std::size_t n, const char* what) {
  if (x.domain != SignalDomain::vertex) {
    fail(ErrorCode::domain_mismatch, std::string(what) + " expects a vertex-domain signal");
  }
  if (x.size() != n) {
    fail(ErrorCode::dimension_mismatch, std::string(what) + ": signal has length " +
                                            std::to_string(x.size()) + ", graph has " +
                                            std::to_string(n) + " nodes");
  }
}

// Entries below this magnitude do not count as "first nonzero" when fixing
// eigenvector signs; anything smaller is solver noise.
constexpr double kSignTolerance = 1e-10;

}  // namespace

std::string_view to_string(ResponseKind kind) noexcept {
  switch (kind) {
    case ResponseKind::low_pass: return "low-pass";
    case ResponseKind::high_pass: return "high-pass";
    case ResponseKind::band_pass: return "band-pass";
    case ResponseKind::heat_kernel: return "heat-kernel";
    case ResponseKind::custom: return "custom";
  }
  return "custom";
}

SpectralBasis eigendecompose(const LaplacianMatrix& lap, std::size_t dense_limit) {
  const std::size_t n = lap.size();
  if (n > dense_limit) {
    fail(ErrorCode::too_large, "dense eigendecomposition limited to N <= " +
                                   std::to_string(dense_limit) + " (got " + std::to_string(n) +
                                   "); use the Chebyshev path");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.dense());
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::convergence_failure, "symmetric eigensolver did not converge");
  }
  SpectralBasis basis{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index c = 0; c < basis.eigenvectors.cols(); ++c) {
    auto col = basis.eigenvectors.col(c);
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col[r]) > kSignTolerance) {
        if (col[r] < 0.0) col = -col;
        break;
      }
    }
  }
  return basis;
}

GraphSignal gft(const SpectralBasis& basis, const GraphSignal& x) {
  require_vertex(x, basis.size(), "gft");
  return {basis.eigenvectors.transpose() * x.values, SignalDomain::spectral};
}

GraphSignal igft(const SpectralBasis& basis, const GraphSignal& x_hat) {
  if (x_hat.domain != SignalDomain::spectral) {
    fail(ErrorCode::domain_mismatch, "igft expects a spectral-domain signal");
  }
  if (x_hat.size() != basis.size()) {
    fail(ErrorCode::dimension_mismatch, "igft: coefficient count does not match basis");
  }
  return {basis.eigenvectors * x_hat.values, SignalDomain::vertex};
}

GraphSignal exact_filter(const SpectralBasis& basis, const FrequencyResponse& g,
                         const GraphSignal& x) {
  require_vertex(x, basis.size(), "exact_filter");
  Eigen::VectorXd gains(basis.eigenvalues.size());
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    gains[i] = g(basis.eigenvalues[i]);
    if (!std::isfinite(gains[i])) {
      fail(ErrorCode::non_finite_response,
           "response is not finite at lambda = " + std::to_string(basis.eigenvalues[i]),
           static_cast<std::size_t>(i));
    }
  }
  Eigen::VectorXd spectral = basis.eigenvectors.transpose() * x.values;
  spectral.array() *= gains.array();
  return vertex_signal(basis.eigenvectors * spectral);
}

double estimate_lambda_max(const LaplacianMatrix& lap, const PowerIterationOptions& opts) {
  const auto n = static_cast<Eigen::Index>(lap.size());
  if (n == 0) fail(ErrorCode::bad_params, "empty Laplacian");
  bool all_zero = true;
  for (Eigen::Index k = 0; k < lap.matrix.nonZeros() && all_zero; ++k) {
    all_zero = lap.matrix.valuePtr()[k] == 0.0;
  }
  if (all_zero) return 1.0;

  // Deterministic start with components along every eigenvector (almost
  // surely); the constant vector would sit in the null space of L.
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = (i % 2 == 0 ? 1.0 : -1.0) * unit(rng);
  v.normalize();

  // The Rayleigh quotient rises geometrically, so a small step alone can
  // hide a large remaining gap when convergence is slow. Stop only when the
  // Aitken estimate of what is left, d^2 / (d_prev - d), is small too.
  Eigen::VectorXd w(n);
  double previous = 0.0, step_prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    w.noalias() = lap.matrix * v;
    const double rayleigh = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 1.0;
    if (iter > 0) {
      const double step = std::abs(rayleigh - previous);
      const double tol = opts.tolerance * std::abs(rayleigh);
      const double left = step < step_prev ? step * step / (step_prev - step) : std::numeric_limits<double>::infinity();
      if (step <= tol && left <= tol) return rayleigh * opts.safety_factor;
      step_prev = step;
    }
    previous = rayleigh;
    v = w / norm;
  }
  fail(ErrorCode::convergence_failure,
       "power iteration did not reach tolerance in " + std::to_string(opts.max_iterations) +
           " iterations");
}

double lambda_max_bound(const LaplacianMatrix& lap) {
  return lap.kind == LaplacianKind::normalized ? 2.0 : estimate_lambda_max(lap);
}

void ChebyshevFilter::validate() const {
  if (coefficients.empty()) fail(ErrorCode::bad_params, "Chebyshev filter needs K+1 >= 1 coefficients");
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    fail(ErrorCode::bad_params, "lambda_max must be positive and finite");
  }
  for (double c : coefficients) {
    if (!std::isfinite(c)) fail(ErrorCode::non_finite_value, "non-finite Chebyshev coefficient");
  }
}

double evaluate_response(const ChebyshevFilter& f, double lambda) {
  const double t = 2.0 * lambda / f.lambda_max - 1.0;
  double prev = 1.0;
  double cur = t;
  double sum = f.coefficients.empty() ? 0.0 : f.coefficients[0];
  if (f.coefficients.size() > 1) sum += f.coefficients[1] * t;
  for (std::size_t k = 2; k < f.coefficients.size(); ++k) {
    const double next = 2.0 * t * cur - prev;
    sum += f.coefficients[k] * next;
    prev = cur;
    cur = next;
  }
  return sum;
}

FrequencyResponse as_response(const ChebyshevFilter& f) {
  return custom_response([f](double lambda) { return evaluate_response(f, lambda); });
}

std::vector<Eigen::VectorXd> chebyshev_terms(const LaplacianMatrix& lap, double lambda_max,
                                             std::size_t order, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != lap.size()) {
    fail(ErrorCode::dimension_mismatch, "chebyshev_terms: signal length does not match Laplacian");
  }
  if (!(lambda_max > 0.0)) fail(ErrorCode::bad_params, "lambda_max must be positive");
  const double scale = 2.0 / lambda_max;
  std::vector<Eigen::VectorXd> terms;
  terms.reserve(order + 1);
  terms.push_back(x);
  if (order == 0) return terms;
  Eigen::VectorXd lx = lap.matrix * x;
  terms.push_back(scale * lx - x);
  for (std::size_t k = 2; k <= order; ++k) {
    lx.noalias() = lap.matrix * terms[k - 1];
    terms.push_back(2.0 * (scale * lx - terms[k - 1]) - terms[k - 2]);
  }
  return terms;
}

GraphSignal chebyshev_filter(const LaplacianMatrix& lap, const ChebyshevFilter& f,
                             const GraphSignal& x) {
  f.validate();
  require_vertex(x, lap.size(), "chebyshev_filter");
  const std::vector<double>& theta = f.coefficients;
  const double scale = 2.0 / f.lambda_max;

  Eigen::VectorXd y = theta[0] * x.values;
  if (theta.size() == 1) return vertex_signal(std::move(y));

  Eigen::VectorXd prev = x.values;
  Eigen::VectorXd cur = scale * (lap.matrix * x.values) - x.values;
  y += theta[1] * cur;
  if (theta.size() == 2) return vertex_signal(std::move(y));

  SparseMatrix compressed;
  const SparseMatrix* m = &lap.matrix;
  if (!m->isCompressed()) {
    compressed = lap.matrix;
    compressed.makeCompressed();
    m = &compressed;
  }
  const auto* outer = m->outerIndexPtr();
  const auto* inner = m->innerIndexPtr();
  const double* val = m->valuePtr();
  const Eigen::Index n = x.values.size();
  // One sweep per order: row i of L T_{k-1} x, then T_k x overwrites
  // T_{k-2} x in place and is accumulated into y.
  for (std::size_t k = 2; k < theta.size(); ++k) {
    const double t = theta[k];
    const double* c = cur.data();
    double* p = prev.data();
    double* out = y.data();
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (auto q = outer[i]; q < outer[i + 1]; ++q) acc += val[q] * c[inner[q]];
      const double next = 2.0 * (scale * acc - c[i]) - p[i];
      p[i] = next;
      out[i] += t * next;
    }
    prev.swap(cur);
  }
  return vertex_signal(std::move(y));
}

ChebyshevFilter fit_chebyshev(const FrequencyResponse& g, std::size_t order, double lambda_max,
                              std::size_t sample_nodes) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    fail(ErrorCode::bad_params, "lambda_max must be positive and finite");
  }
  if (order >= sample_nodes) {
    fail(ErrorCode::bad_params, "fit order must be below the number of sample nodes");
  }
  const std::size_t m = sample_nodes;
  std::vector<double> values(m);
  std::vector<double> angles(m);
  for (std::size_t j = 0; j < m; ++j) {
    angles[j] = std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    const double lambda = (std::cos(angles[j]) + 1.0) * lambda_max / 2.0;
    values[j] = g(lambda);
    if (!std::isfinite(values[j])) {
      fail(ErrorCode::non_finite_response,
           "response is not finite at lambda = " + std::to_string(lambda));
    }
  }
  ChebyshevFilter f;
  f.lambda_max = lambda_max;
  f.coefficients.assign(order + 1, 0.0);
  for (std::size_t k = 0; k <= order; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      acc += values[j] * std::cos(static_cast<double>(k) * angles[j]);
    }
    f.coefficients[k] = (k == 0 ? 1.0 : 2.0) * acc / static_cast<double>(m);
  }
  return f;
}

std::vector<double> sample_response(const ChebyshevFilter& f, std::span<const double> grid) {
  f.validate();
  const double slack = 1e-12 * f.lambda_max;
  std::vector<double> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lambda = grid[i];
    if (!(lambda >= -slack && lambda <= f.lambda_max + slack)) {
      fail(ErrorCode::out_of_range,
           "lambda = " + std::to_string(lambda) + " outside [0, " +
               std::to_string(f.lambda_max) + "]",
           i);
    }
    out.push_back(evaluate_response(f, lambda));
  }
  return out;
}

std::vector<double> uniform_grid(double lambda_max, std::size_t n) {
  std::vector<double> grid(n);
  if (n == 1) {
    grid[0] = 0.0;
    return grid;
  }
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = lambda_max * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (n > 0) grid.back() = lambda_max;
  return grid;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

void BandGate::validate() const {
  if (bands.empty()) fail(ErrorCode::bad_params, "band gate needs at least one band");
  if (signatures.size() != bands.size()) {
    fail(ErrorCode::shape_mismatch, "one signature per band required");
  }
  for (const auto& s : signatures) {
    if (s.size() != query.size()) {
      fail(ErrorCode::shape_mismatch, "band signature width differs from query width");
    }
  }
  for (const auto& f : bands) {
    f.validate();
    if (f.order() != bands.front().order()) {
      fail(ErrorCode::mixed_orders, "band filters must share the polynomial order");
    }
    if (f.lambda_max != bands.front().lambda_max) {
      fail(ErrorCode::mixed_lambda_max, "band filters must share lambda_max");
    }
  }
}

std::vector<double> gate_weights(const BandGate& gate) {
  gate.validate();
  std::vector<double> logits(gate.band_count());
  for (std::size_t b = 0; b < logits.size(); ++b) logits[b] = gate.query.dot(gate.signatures[b]);
  return softmax(logits);
}

ChebyshevFilter band_gate_combine(const BandGate& gate) {
  const std::vector<double> alpha = gate_weights(gate);
  ChebyshevFilter combined;
  combined.lambda_max = gate.bands.front().lambda_max;
  combined.coefficients.assign(gate.bands.front().coefficients.size(), 0.0);
  for (std::size_t b = 0; b < alpha.size(); ++b) {
    for (std::size_t k = 0; k < combined.coefficients.size(); ++k) {
      combined.coefficients[k] += alpha[b] * gate.bands[b].coefficients[k];
    }
  }
  return combined;
}

BandGate make_band_gate(std::size_t bands, std::size_t order, double lambda_max,
                        std::size_t gate_width, std::uint64_t seed) {
  if (bands == 0) fail(ErrorCode::bad_params, "band count must be >= 1");
  if (gate_width == 0) fail(ErrorCode::bad_params, "gate width must be >= 1");
  BandGate gate;
  const double width = lambda_max / static_cast<double>(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    const double lo = width * static_cast<double>(b);
    const double hi = b + 1 == bands ? lambda_max : width * static_cast<double>(b + 1);
    const bool last = b + 1 == bands;
    auto indicator = [lo, hi, last](double lambda) {
      return (lambda >= lo && (lambda < hi || (last && lambda <= hi))) ? 1.0 : 0.0;
    };
    gate.bands.push_back(fit_chebyshev(custom_response(indicator), order, lambda_max));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto w = static_cast<Eigen::Index>(gate_width);
  gate.query.resize(w);
  for (Eigen::Index i = 0; i < w; ++i) gate.query[i] = normal(rng);
  for (std::size_t b = 0; b < bands; ++b) {
    Eigen::VectorXd s(w);
    for (Eigen::Index i = 0; i < w; ++i) s[i] = normal(rng);
    gate.signatures.push_back(std::move(s));
  }
  return gate;
}

}  // namespace snsr
