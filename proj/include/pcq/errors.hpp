#pragma once

#include <stdexcept>
#include <string>

namespace pcq {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg), line(0) {}
    ParseError(const std::string& msg, std::size_t line_number)
        : Error(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
    std::size_t line;
};

struct UnsupportedFormat : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct EmptyBlock : Error {
    using Error::Error;
};

struct ReprMismatch : Error {
    using Error::Error;
};

struct InvalidState : Error {
    using Error::Error;
};

struct TrainingDiverged : Error {
    TrainingDiverged(const std::string& msg, int at_step)
        : Error(msg + " (step " + std::to_string(at_step) + ")"), step(at_step) {}
    int step;
};

struct DegenerateInput : Error {
    using Error::Error;
};

struct MissingData : Error {
    using Error::Error;
};

struct NoUsableFeature : Error {
    using Error::Error;
};

}  // namespace pcq
