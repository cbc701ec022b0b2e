#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "emgrip/errors.hpp"

namespace emgrip {

// Uniformly sampled scalar series. Units depend on context: normalized EMG
// units for muscle channels, newtons for force.
struct SignalSeries {
    double sample_rate_hz = 0.0;
    std::vector<double> samples;

    SignalSeries() = default;
    SignalSeries(double rate_hz, std::vector<double> values)
        : sample_rate_hz(rate_hz), samples(std::move(values)) {
        if (sample_rate_hz <= 0.0) {
            throw ArgumentError("sample rate must be positive");
        }
    }

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_s() const {
        return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

// One multichannel sEMG sample (one value per electrode channel).
using EmgFrame = std::vector<double>;

// Per-channel RMS feature vector, one entry per channel.
using FeatureVector = std::vector<double>;

// Per-channel normalization denominators from the maximum-voluntary-
// contraction protocol. Every entry must be positive.
struct MvcProfile {
    std::vector<double> x_mvc;

    std::size_t channels() const { return x_mvc.size(); }

    void validate() const {
        if (x_mvc.empty()) throw CalibrationError("MVC profile has no channels");
        for (double v : x_mvc) {
            if (!(v > 0.0)) throw CalibrationError("MVC profile entry must be positive");
        }
    }
};

}  // namespace emgrip
