#pragma once

#include <stdexcept>
#include <string>

namespace footspot {

// Root of the library's exception hierarchy. Subclasses prefix their
// message with the error name so callers (and the CLI) can report it
// verbatim.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Anything wrong with input files, configs, or dataset contents. Exit code 2.
struct DataError : Error {
  using Error::Error;
};

// Anything wrong inside the numeric stack (shapes, gradients, NaNs). Exit code 3.
struct NumericError : Error {
  using Error::Error;
};

#define FOOTSPOT_DEFINE_ERROR(Name, Base)                            \
  struct Name : Base {                                               \
    explicit Name(const std::string& msg) : Base(#Name ": " + msg) {} \
  }

FOOTSPOT_DEFINE_ERROR(IoError, DataError);
FOOTSPOT_DEFINE_ERROR(MalformedRecord, DataError);
FOOTSPOT_DEFINE_ERROR(MissingHeader, DataError);
FOOTSPOT_DEFINE_ERROR(InvariantViolation, DataError);
FOOTSPOT_DEFINE_ERROR(BadRate, DataError);
FOOTSPOT_DEFINE_ERROR(EmptyMatch, DataError);
FOOTSPOT_DEFINE_ERROR(EmptyDataset, DataError);
FOOTSPOT_DEFINE_ERROR(ConfigError, DataError);
FOOTSPOT_DEFINE_ERROR(FormatError, DataError);
FOOTSPOT_DEFINE_ERROR(NoGroundTruth, DataError);
FOOTSPOT_DEFINE_ERROR(MissingDelta, DataError);
FOOTSPOT_DEFINE_ERROR(UsageError, DataError);

FOOTSPOT_DEFINE_ERROR(ShapeMismatch, NumericError);
FOOTSPOT_DEFINE_ERROR(NotScalar, NumericError);
FOOTSPOT_DEFINE_ERROR(MissingGrad, NumericError);
FOOTSPOT_DEFINE_ERROR(NonFinite, NumericError);
FOOTSPOT_DEFINE_ERROR(EmptyBatch, NumericError);
FOOTSPOT_DEFINE_ERROR(EmptyWindow, NumericError);

#undef FOOTSPOT_DEFINE_ERROR

}  // namespace footspot
