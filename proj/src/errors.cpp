#include "snsr/errors.hpp"

namespace snsr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::negative_weight: return "NegativeWeight";
    case ErrorCode::self_loop: return "SelfLoop";
    case ErrorCode::non_finite_value: return "NonFiniteValue";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::convergence_failure: return "ConvergenceFailure";
    case ErrorCode::too_large: return "TooLarge";
    case ErrorCode::domain_mismatch: return "DomainMismatch";
    case ErrorCode::non_finite_response: return "NonFiniteResponse";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::mixed_orders: return "MixedOrders";
    case ErrorCode::mixed_lambda_max: return "MixedLambdaMax";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::no_basis_available: return "NoBasisAvailable";
    case ErrorCode::empty_rule_set: return "EmptyRuleSet";
    case ErrorCode::mixed_scopes: return "MixedScopes";
    case ErrorCode::bad_params: return "BadParams";
    case ErrorCode::unmapped_node: return "UnmappedNode";
    case ErrorCode::undeclared_atom: return "UndeclaredAtom";
    case ErrorCode::empty_labels: return "EmptyLabels";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::non_finite_gradient: return "NonFiniteGradient";
    case ErrorCode::diverged_loss: return "DivergedLoss";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::convergence_failure:
    case ErrorCode::non_finite_response:
    case ErrorCode::non_finite_gradient:
    case ErrorCode::diverged_loss:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message),
      index_(index) {}

Error Error::with_stage(std::string stage) const {
  Error tagged(code_, "[" + stage + "] " + message_, index_);
  tagged.stage_ = std::move(stage);
  return tagged;
}

void fail(ErrorCode code, const std::string& message,
          std::optional<std::size_t> index) {
  throw Error(code, message, index);
}

}  // namespace snsr
