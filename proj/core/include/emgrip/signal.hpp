#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emgrip/series.hpp"

namespace emgrip {

enum class FilterKind { Highpass, Lowpass };

// One second-order section, direct form II transposed, normalized a0 = 1.
struct BiquadSection {
    double b0, b1, b2;
    double a1, a2;
};

// Digital Butterworth filter as a cascade of second-order sections.
// Cascading keeps the low relative cutoffs used here (5 Hz at 200 Hz
// sampling) numerically well conditioned.
struct FilterCoeffs {
    std::vector<BiquadSection> sections;
    FilterKind kind = FilterKind::Lowpass;
    int order = 0;
    double cutoff_hz = 0.0;
    double sample_rate_hz = 0.0;
};

// Per-section delay registers. Reset state is all zeros. A state belongs to
// exactly one stream; never share it across concurrent streams.
struct FilterState {
    std::vector<double> s1;
    std::vector<double> s2;

    static FilterState zeros(const FilterCoeffs& coeffs);
    void reset();
};

// One-sided power spectral density. power is in signal-units^2 per Hz;
// frequencies run from 0 to Nyquist inclusive.
struct Spectrum {
    double bin_width_hz = 0.0;
    std::vector<double> frequencies_hz;
    std::vector<double> power;

    double total_power() const;              // sum(power) * bin_width
    double power_below(double freq_hz) const;  // integral over bins < freq_hz
};

// Bilinear-transform Butterworth design with frequency pre-warping, so the
// magnitude at cutoff_hz is exactly -3.01 dB. order must be even (2..8) and
// cutoff strictly below Nyquist.
FilterCoeffs design_butterworth(int order, double cutoff_hz, double sample_rate_hz,
                                FilterKind kind);

// |H(e^{j*2*pi*f/fs})| of the designed cascade.
double filter_response(const FilterCoeffs& coeffs, double freq_hz);

// Causal filtering through the section cascade. State is updated in place so
// consecutive chunked calls produce exactly the same output as one call over
// the concatenated series.
SignalSeries filter_apply(const FilterCoeffs& coeffs, FilterState& state,
                          const SignalSeries& series);
double filter_step(const FilterCoeffs& coeffs, FilterState& state, double x);

// State that makes the filter behave as if input_level had been applied
// forever; used to start a window without a DC step transient.
FilterState settled_state(const FilterCoeffs& coeffs, double input_level);

SignalSeries rectify(const SignalSeries& series);

SignalSeries normalize_mvc(const SignalSeries& series, double x_mvc);

// sqrt of the mean of squares. Empty window is an error.
double rms(std::span<const double> window);

// Causal trailing mean over the last min(width, t+1) samples.
SignalSeries moving_average(const SignalSeries& series, std::size_t width);

// Per channel: highpass -> rectify -> normalize by MVC -> windowed RMS.
// window is [channel][sample]; every channel must match the MVC profile.
// The highpass starts from a state settled at the window's leading sample,
// so a constant offset on the raw samples does not reach the feature.
FeatureVector extract_features(const std::vector<std::vector<double>>& window,
                               const MvcProfile& mvc, const FilterCoeffs& highpass);

// Rectangular-window periodogram via a radix-2 FFT (input zero-padded to a
// power of two). Scaled so that sum(power) * bin_width equals the mean
// square of the input.
Spectrum psd(const SignalSeries& series);

}  // namespace emgrip
