#pragma once

#include <stdexcept>
#include <string>

namespace mirror3d {

// Base of every error raised by the library. Each subclass corresponds to one
// failure category that callers may want to distinguish.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Zero, negative or non-finite depth where a measurement was required.
class InvalidDepth : public Error {
public:
    using Error::Error;
};

// Projection of a point with z <= 0.
class BehindCamera : public Error {
public:
    using Error::Error;
};

// Too few points, or a point configuration that does not determine the model.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

// RANSAC found no hypothesis with enough inliers.
class NoConsensus : public Error {
public:
    using Error::Error;
};

class EmptyCloud : public Error {
public:
    using Error::Error;
};

// Invalid scene, pipeline configuration or file schema.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mirror3d
