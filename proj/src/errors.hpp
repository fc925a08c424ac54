#pragma once
#include <stdexcept>
#include <string>

namespace rsgnn {

// Error taxonomy used across the library. The C API maps these onto status
// codes; everything else is allowed to escape as std::exception.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rsgnn
