#pragma once

#include <stdexcept>
#include <string>

namespace carnot {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CARNOT_DECLARE_ERROR(Name)                    \
    class Name : public Error {                       \
    public:                                           \
        using Error::Error;                           \
    }

CARNOT_DECLARE_ERROR(StratificationError);
CARNOT_DECLARE_ERROR(JacobiError);
CARNOT_DECLARE_ERROR(UnsupportedStep);
CARNOT_DECLARE_ERROR(ShapeMismatch);
CARNOT_DECLARE_ERROR(NonpositiveScale);
CARNOT_DECLARE_ERROR(UnknownName);
CARNOT_DECLARE_ERROR(ParseError);
CARNOT_DECLARE_ERROR(TooManyPoints);
CARNOT_DECLARE_ERROR(EmptyCloud);
CARNOT_DECLARE_ERROR(ScaleOutOfRange);
CARNOT_DECLARE_ERROR(InvalidParams);
CARNOT_DECLARE_ERROR(InvalidAlpha);
CARNOT_DECLARE_ERROR(ZeroMassCube);
CARNOT_DECLARE_ERROR(InvalidExponents);
CARNOT_DECLARE_ERROR(ScaleMismatch);
CARNOT_DECLARE_ERROR(DegenerateParams);
CARNOT_DECLARE_ERROR(NoConvergence);
CARNOT_DECLARE_ERROR(ZeroMeasure);

#undef CARNOT_DECLARE_ERROR

} // namespace carnot
