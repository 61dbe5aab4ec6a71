#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace vae {

enum class Errc {
  NotSkewSymmetric,
  NotARotation,
  Degenerate,
  DegenerateDirections,
  RankDeficient,
  EigensNotDistinct,
  NewtonDivergence,
  TimestampMismatch,
  InvalidConfig,
  Io,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::NotSkewSymmetric: return "NotSkewSymmetric";
    case Errc::NotARotation: return "NotARotation";
    case Errc::Degenerate: return "Degenerate";
    case Errc::DegenerateDirections: return "DegenerateDirections";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::EigensNotDistinct: return "EigensNotDistinct";
    case Errc::NewtonDivergence: return "NewtonDivergence";
    case Errc::TimestampMismatch: return "TimestampMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Library-wide exception. Carries a machine-checkable code and, when raised
/// from inside a simulation loop, the step index at which it happened.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  Error(Errc code, const std::string& what, std::size_t step)
      : std::runtime_error(std::string(to_string(code)) + " at step " + std::to_string(step) + ": " +
                           what),
        code_(code),
        detail_(what),
        step_(step) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> step() const noexcept { return step_; }
  /// Message without the code/step prefix.
  const std::string& detail() const noexcept { return detail_; }

  Error at_step(std::size_t step) const { return Error(code_, detail_, step); }

 private:
  Errc code_;
  std::string detail_;
  std::optional<std::size_t> step_;
};

}  // namespace vae
