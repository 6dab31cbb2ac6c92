#pragma once

#include <stdexcept>
#include <string>

namespace ham {

// Error taxonomy maps one-to-one onto process exit codes (see tools/hamsim.cpp):
//   std::domain_error / ConfigError -> 2, MathInvariantError -> 3, IntegrityError -> 4.

// Bad user input: out-of-range parameters, malformed config, inconsistent grids.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A mathematical guarantee failed at runtime: bracket inversion, non-PSD covariance
// embedding, quadrature that cannot reach its tolerance, unusable fit windows.
struct MathInvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Persisted state does not match its recorded checksum or schema.
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested expansion order outside the implemented range.
struct UnsupportedOrderError : std::domain_error {
    using std::domain_error::domain_error;
};

} // namespace ham
