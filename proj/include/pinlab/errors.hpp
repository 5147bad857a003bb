#pragma once

#include <stdexcept>
#include <string>

namespace pinlab {

// Construction rejected: nonpositive parameters, bad shapes, wrong family.
struct invalid_spec : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Sum of excursion weights diverges; no normalizable law exists.
struct non_summable : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An integral or iteration failed to stabilize.
struct non_convergent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A DP horizon asked for excursion masses beyond the stored table.
struct horizon_exceeded : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Exhaustive enumeration requested past its size limit.
struct too_large : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Block scales whose K1 cannot be materialized as a machine integer.
struct infeasible_scales : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scale selection fixed point did not settle.
struct no_solution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A grid scan that was supposed to straddle a threshold did not.
struct inconclusive_bracket : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration file problems (missing file, unknown or malformed key).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pinlab
