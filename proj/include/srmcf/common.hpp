#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace srmcf {

enum class ErrorCode {
  BadDimensions,
  NotSkewSymmetric,
  BracketGenerationFails,
  IndexOutOfRange,
  TooFewSamples,
  GridMismatch,
  NonFiniteField,
  CFLViolation,
  ScheduleTooShort,
  BadProblem,
  NegativeArgument,
  TimeOutOfRange,
  EmptySampleSet,
  DegenerateFit,
  BadParams,
  OutOfGrid,
  DegeneratePair,
  ConfigError,
  IoError,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadDimensions: return "BadDimensions";
    case ErrorCode::NotSkewSymmetric: return "NotSkewSymmetric";
    case ErrorCode::BracketGenerationFails: return "BracketGenerationFails";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NonFiniteField: return "NonFiniteField";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::ScheduleTooShort: return "ScheduleTooShort";
    case ErrorCode::BadProblem: return "BadProblem";
    case ErrorCode::NegativeArgument: return "NegativeArgument";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::EmptySampleSet: return "EmptySampleSet";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::OutOfGrid: return "OutOfGrid";
    case ErrorCode::DegeneratePair: return "DegeneratePair";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wrap an angle difference into (-pi, pi].
[[nodiscard]] inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

/// Reduce an angle into [0, 2pi).
[[nodiscard]] inline double reduce_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// Thread control for the node-parallel maps. 0 means the OpenMP default.
inline int& thread_setting() {
  static int n = 0;
  return n;
}
inline void set_threads(int n) { thread_setting() = n; }
[[nodiscard]] inline int threads() {
#ifdef _OPENMP
  return thread_setting() > 0 ? thread_setting() : omp_get_max_threads();
#else
  return 1;
#endif
}

/// Pure map over [0, n). No reductions, so the result never depends on the thread count.
template <class F>
void parallel_for(std::ptrdiff_t n, F&& f) {
#ifdef _OPENMP
  const int nt = threads();
  if (nt > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
    return;
  }
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
}

}  // namespace srmcf
