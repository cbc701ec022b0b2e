#pragma once

#include <stdexcept>
#include <string>

namespace emgrip {

// Base for everything thrown by the library. The CLI maps these to exit
// code 1 and prints a single-line diagnostic.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad value passed to an operation (empty window, length mismatch, ...).
struct ArgumentError : Error {
    explicit ArgumentError(const std::string& msg) : Error("argument: " + msg) {}
};

// Inconsistent wiring: channel-count mismatch, filter/series rate mismatch.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

// Filter design cannot be realized (cutoff at/above Nyquist, odd order).
struct DesignError : Error {
    explicit DesignError(const std::string& msg) : Error("design: " + msg) {}
};

// MVC calibration produced unusable values (non-positive profile entries).
struct CalibrationError : Error {
    explicit CalibrationError(const std::string& msg) : Error("calibration: " + msg) {}
};

// Acquisition protocol violated (fewer MVC trials than the protocol needs).
struct ProtocolError : Error {
    explicit ProtocolError(const std::string& msg) : Error("protocol: " + msg) {}
};

// Malformed persisted file; message carries the line number where known.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error("parse: " + msg) {}
};

// Metric undefined on the given data (zero label variance for R^2).
struct MetricError : Error {
    explicit MetricError(const std::string& msg) : Error("metric: " + msg) {}
};

}  // namespace emgrip
