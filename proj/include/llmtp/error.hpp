#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llmtp {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NonFiniteValue : public Error {
public:
    using Error::Error;
};

/// Inverse DFT produced a non-negligible imaginary part, i.e. the spectrum
/// handed to it was not conjugate-symmetric.
class ImaginaryResidueTooLarge : public Error {
public:
    ImaginaryResidueTooLarge(double residue)
        : Error("inverse DFT imaginary residue too large: " + std::to_string(residue)),
          residue(residue) {}
    double residue;
};

class SvdFailure : public Error {
public:
    using Error::Error;
};

class DegenerateData : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, std::size_t column,
               const std::string& what)
        : Error(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

} // namespace llmtp
