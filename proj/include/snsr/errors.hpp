#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace snsr {

enum class ErrorCode {
  index_out_of_range,
  negative_weight,
  self_loop,
  non_finite_value,
  zero_vector,
  convergence_failure,
  too_large,
  domain_mismatch,
  non_finite_response,
  dimension_mismatch,
  mixed_orders,
  mixed_lambda_max,
  out_of_range,
  no_basis_available,
  empty_rule_set,
  mixed_scopes,
  bad_params,
  unmapped_node,
  undeclared_atom,
  empty_labels,
  shape_mismatch,
  non_finite_gradient,
  diverged_loss,
  empty_dataset,
  parse_error,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Numerical failures (as opposed to invalid input). The CLI maps these to
/// exit status 2 and everything else to 1.
bool is_numerical(ErrorCode code) noexcept;

/// Single exception type used across the library. `stage` is filled in by the
/// pipeline when an error escapes one of its stages; `index` carries the
/// offending node/row when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& stage() const noexcept { return stage_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string message_;
  std::string stage_;
  std::optional<std::size_t> index_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message,
                       std::optional<std::size_t> index = std::nullopt);

}  // namespace snsr
