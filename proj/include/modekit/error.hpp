#pragma once

#include <stdexcept>
#include <string>

namespace modekit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pixel or flat index outside the grid.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Mismatched grids, vector lengths or frame shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside its admissible range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Non-finite or otherwise unusable numeric data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Input that is valid in form but carries no usable signal
/// (zero-total frame, all-zero weights, identically zero covariance).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Too few frames for the requested statistic.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Structural precondition violated (asymmetric matrix, wrong processing order, bad parameters).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Root finder or iterative solver failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed file or parameter text.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Work refused because it would exceed the configured memory budget.
class ResourceError : public Error {
public:
    using Error::Error;
};

}  // namespace modekit
