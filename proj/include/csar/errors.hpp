#pragma once

#include <stdexcept>
#include <string>

namespace csar {

enum class Errc {
  invalid_arm,
  invalid_subset,
  invalid_params,
  invalid_grouping,
  not_constructible,
  no_order_found,
  padding_exhausted,
  all_accepted,
  phase_limit,
  singular,
  not_symmetric,
  not_positive_definite,
  degenerate_design,
  too_large,
  unbounded,
  no_data,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_arm: return "InvalidArm";
    case Errc::invalid_subset: return "InvalidSubset";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::invalid_grouping: return "InvalidGrouping";
    case Errc::not_constructible: return "NotConstructible";
    case Errc::no_order_found: return "NoOrderFound";
    case Errc::padding_exhausted: return "PaddingExhausted";
    case Errc::all_accepted: return "AllAccepted";
    case Errc::phase_limit: return "PhaseLimit";
    case Errc::singular: return "Singular";
    case Errc::not_symmetric: return "NotSymmetric";
    case Errc::not_positive_definite: return "NotPositiveDefinite";
    case Errc::degenerate_design: return "DegenerateDesign";
    case Errc::too_large: return "TooLarge";
    case Errc::unbounded: return "Unbounded";
    case Errc::no_data: return "NoData";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace csar
