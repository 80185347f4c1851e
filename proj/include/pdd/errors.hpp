#pragma once

#include <stdexcept>
#include <string>

namespace pdd {

// Rational activations can develop near-real poles while training; any
// division whose denominator magnitude falls below this floor fails loudly
// instead of producing NaN.
inline constexpr double kDenominatorFloor = 1e-12;

struct PoleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A node handle was used with a tape it was not produced on.
struct DanglingNodeError : std::logic_error {
  using std::logic_error::logic_error;
};

// Dataset / checkpoint / report file problems (bad magic, truncation, ...).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A library column has (numerically) zero norm; discovery on a degenerate
// solution network is refused rather than silently dropping terms.
struct ZeroColumnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The rational-activation initialization fit did not converge.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pseudospectral solve blew up.
struct InstabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration or CLI usage; mapped to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted; carries epoch/point context around an inner error.
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pdd
