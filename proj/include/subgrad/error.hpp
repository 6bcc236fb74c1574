#pragma once

#include <stdexcept>
#include <string>

namespace subgrad {

enum class Errc {
  negative_entry,
  row_sum_violation,
  column_sum_violation,
  time_order,
  dimension_mismatch,
  empty_sequence,
  kind_mismatch,
  no_convergence,
  precondition_a1,
  nonpositive_mass,
  mass_mismatch,
  nonpositive_denominator,
  zero_diagonal_divisor,
  non_finite_state,
  oracle_unavailable,
  embedding_unavailable,
  config_invalid,
  horizon_exceeded,
};

inline const char* to_string(Errc c) {
  switch (c) {
    case Errc::negative_entry: return "negative_entry";
    case Errc::row_sum_violation: return "row_sum_violation";
    case Errc::column_sum_violation: return "column_sum_violation";
    case Errc::time_order: return "time_order";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::empty_sequence: return "empty_sequence";
    case Errc::kind_mismatch: return "kind_mismatch";
    case Errc::no_convergence: return "no_convergence";
    case Errc::precondition_a1: return "precondition_a1";
    case Errc::nonpositive_mass: return "nonpositive_mass";
    case Errc::mass_mismatch: return "mass_mismatch";
    case Errc::nonpositive_denominator: return "nonpositive_denominator";
    case Errc::zero_diagonal_divisor: return "zero_diagonal_divisor";
    case Errc::non_finite_state: return "non_finite_state";
    case Errc::oracle_unavailable: return "oracle_unavailable";
    case Errc::embedding_unavailable: return "embedding_unavailable";
    case Errc::config_invalid: return "config_invalid";
    case Errc::horizon_exceeded: return "horizon_exceeded";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace subgrad
