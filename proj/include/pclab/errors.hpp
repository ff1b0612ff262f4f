#pragma once

#include <stdexcept>
#include <string>

namespace pclab {

// Shape or argument violations (bad layer index, mismatched vector length, ...).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite value produced during a forward pass; names the offending layer.
class NumericOverflowError : public std::runtime_error {
public:
    NumericOverflowError(const std::string& what, int layer)
        : std::runtime_error(what), layer(layer) {}
    int layer;
};

// Inference trajectory left the trust region (|x| > threshold or non-finite).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int step, int layer)
        : std::runtime_error(what), step(step), layer(layer) {}
    int step;
    int layer;
};

// Bad run configuration (unknown key, missing field, invalid value).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file (IDX parsing and friends).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pclab
