#pragma once

#include <stdexcept>
#include <string>

namespace sarlc {

// All library failures derive from Error so callers can catch one type and
// the CLI can map each family onto its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SARLC_DEFINE_ERROR(Name)            \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

SARLC_DEFINE_ERROR(InputError)
SARLC_DEFINE_ERROR(EmptyBandError)
SARLC_DEFINE_ERROR(CapacityError)
SARLC_DEFINE_ERROR(SpecError)
SARLC_DEFINE_ERROR(WeightError)
SARLC_DEFINE_ERROR(ShapeError)
SARLC_DEFINE_ERROR(ConfigError)
SARLC_DEFINE_ERROR(DivergenceError)
SARLC_DEFINE_ERROR(UndefinedMetric)

#undef SARLC_DEFINE_ERROR

// A label mask whose geometry disagrees with the scene it is paired with.
class PairingError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace sarlc
