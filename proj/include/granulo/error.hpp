#pragma once

#include <stdexcept>
#include <string>

namespace granulo {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GRANULO_DEFINE_ERROR(Name)                \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

GRANULO_DEFINE_ERROR(InvalidArgument);
GRANULO_DEFINE_ERROR(DecodeError);
GRANULO_DEFINE_ERROR(DimensionError);
GRANULO_DEFINE_ERROR(NoMarkerFound);
GRANULO_DEFINE_ERROR(AmbiguousMarker);
GRANULO_DEFINE_ERROR(InvalidSide);
GRANULO_DEFINE_ERROR(CalibrationMismatch);
GRANULO_DEFINE_ERROR(EmptySample);
GRANULO_DEFINE_ERROR(NoSharedSieves);
GRANULO_DEFINE_ERROR(AllReferenceZero);
GRANULO_DEFINE_ERROR(OverlapError);
GRANULO_DEFINE_ERROR(OutOfBounds);
GRANULO_DEFINE_ERROR(ParseError);

#undef GRANULO_DEFINE_ERROR

}  // namespace granulo
