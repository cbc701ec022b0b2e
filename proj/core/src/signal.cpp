#include "emgrip/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "emgrip/errors.hpp"

namespace emgrip {

namespace {

constexpr double kPi = std::numbers::pi;

bool section_is_stable(const BiquadSection& s) {
    // Jury criterion for z^2 + a1 z + a2.
    return std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2;
}

}  // namespace

FilterState FilterState::zeros(const FilterCoeffs& coeffs) {
    FilterState st;
    st.s1.assign(coeffs.sections.size(), 0.0);
    st.s2.assign(coeffs.sections.size(), 0.0);
    return st;
}

void FilterState::reset() {
    std::fill(s1.begin(), s1.end(), 0.0);
    std::fill(s2.begin(), s2.end(), 0.0);
}

FilterCoeffs design_butterworth(int order, double cutoff_hz, double sample_rate_hz,
                                FilterKind kind) {
    if (order <= 0 || order % 2 != 0 || order > 8) {
        throw DesignError("order must be even, in {2,4,6,8}; got " + std::to_string(order));
    }
    if (!(sample_rate_hz > 0.0)) throw DesignError("sample rate must be positive");
    if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0) {
        throw DesignError("cutoff must lie strictly between 0 and Nyquist");
    }

    // Pre-warped analog cutoff; the bilinear transform then lands the
    // -3.01 dB point exactly on cutoff_hz.
    const double w = std::tan(kPi * cutoff_hz / sample_rate_hz);
    const double w2 = w * w;

    FilterCoeffs coeffs;
    coeffs.kind = kind;
    coeffs.order = order;
    coeffs.cutoff_hz = cutoff_hz;
    coeffs.sample_rate_hz = sample_rate_hz;

    const int n_sections = order / 2;
    for (int k = 1; k <= n_sections; ++k) {
        // Conjugate analog pole pair at angle theta off the imaginary axis.
        const double theta = (2.0 * k - 1.0) * kPi / (2.0 * order);
        const double q = 2.0 * std::sin(theta);

        const double d = 1.0 + q * w + w2;
        BiquadSection s{};
        if (kind == FilterKind::Lowpass) {
            s.b0 = w2 / d;
            s.b1 = 2.0 * w2 / d;
            s.b2 = w2 / d;
        } else {
            s.b0 = 1.0 / d;
            s.b1 = -2.0 / d;
            s.b2 = 1.0 / d;
        }
        s.a1 = 2.0 * (w2 - 1.0) / d;
        s.a2 = (1.0 - q * w + w2) / d;

        if (!section_is_stable(s)) {
            throw DesignError("designed section is unstable (cutoff too close to Nyquist?)");
        }
        coeffs.sections.push_back(s);
    }
    return coeffs;
}

double filter_response(const FilterCoeffs& coeffs, double freq_hz) {
    const double omega = 2.0 * kPi * freq_hz / coeffs.sample_rate_hz;
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h{1.0, 0.0};
    for (const auto& s : coeffs.sections) {
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    }
    return std::abs(h);
}

double filter_step(const FilterCoeffs& coeffs, FilterState& state, double x) {
    double v = x;
    for (std::size_t i = 0; i < coeffs.sections.size(); ++i) {
        const auto& s = coeffs.sections[i];
        const double y = s.b0 * v + state.s1[i];
        state.s1[i] = s.b1 * v - s.a1 * y + state.s2[i];
        state.s2[i] = s.b2 * v - s.a2 * y;
        v = y;
    }
    return v;
}

SignalSeries filter_apply(const FilterCoeffs& coeffs, FilterState& state,
                          const SignalSeries& series) {
    if (state.s1.size() != coeffs.sections.size()) {
        throw ConfigError("filter state does not match the coefficient cascade");
    }
    if (coeffs.sample_rate_hz > 0.0 && series.sample_rate_hz != coeffs.sample_rate_hz) {
        throw ConfigError("series sample rate differs from the filter design rate");
    }
    SignalSeries out;
    out.sample_rate_hz = series.sample_rate_hz;
    out.samples.reserve(series.samples.size());
    for (double x : series.samples) {
        out.samples.push_back(filter_step(coeffs, state, x));
    }
    return out;
}

FilterState settled_state(const FilterCoeffs& coeffs, double input_level) {
    FilterState st = FilterState::zeros(coeffs);
    double level = input_level;  // steady input seen by each section
    for (std::size_t i = 0; i < coeffs.sections.size(); ++i) {
        const auto& s = coeffs.sections[i];
        const double dc_gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double y = dc_gain * level;
        st.s1[i] = (y - s.b0 * level);
        st.s2[i] = (s.b2 * level - s.a2 * y);
        level = y;
    }
    return st;
}

SignalSeries rectify(const SignalSeries& series) {
    SignalSeries out = series;
    for (double& v : out.samples) v = std::abs(v);
    return out;
}

SignalSeries normalize_mvc(const SignalSeries& series, double x_mvc) {
    if (!(x_mvc > 0.0)) throw CalibrationError("x_mvc must be positive");
    SignalSeries out = series;
    for (double& v : out.samples) v /= x_mvc;
    return out;
}

double rms(std::span<const double> window) {
    if (window.empty()) throw ArgumentError("rms of an empty window");
    double acc = 0.0;
    for (double v : window) acc += v * v;
    return std::sqrt(acc / static_cast<double>(window.size()));
}

SignalSeries moving_average(const SignalSeries& series, std::size_t width) {
    if (width == 0) throw ArgumentError("moving average width must be >= 1");
    SignalSeries out;
    out.sample_rate_hz = series.sample_rate_hz;
    out.samples.resize(series.samples.size());
    for (std::size_t i = 0; i < series.samples.size(); ++i) {
        const std::size_t n = std::min(width, i + 1);
        double acc = 0.0;
        for (std::size_t j = i + 1 - n; j <= i; ++j) acc += series.samples[j];
        out.samples[i] = acc / static_cast<double>(n);
    }
    return out;
}

FeatureVector extract_features(const std::vector<std::vector<double>>& window,
                               const MvcProfile& mvc, const FilterCoeffs& highpass) {
    if (window.size() != mvc.channels()) {
        throw ConfigError("window has " + std::to_string(window.size()) +
                          " channels, MVC profile has " + std::to_string(mvc.channels()));
    }
    mvc.validate();

    FeatureVector features;
    features.reserve(window.size());
    for (std::size_t c = 0; c < window.size(); ++c) {
        const auto& samples = window[c];
        if (samples.empty()) throw ArgumentError("empty feature window");
        FilterState st = settled_state(highpass, samples.front());
        double acc = 0.0;
        for (double x : samples) {
            const double filtered = filter_step(highpass, st, x);
            const double normalized = std::abs(filtered) / mvc.x_mvc[c];
            acc += normalized * normalized;
        }
        features.push_back(std::sqrt(acc / static_cast<double>(samples.size())));
    }
    return features;
}

namespace {

// In-place iterative radix-2 Cooley-Tukey; n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w{1.0, 0.0};
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

double Spectrum::total_power() const {
    double acc = 0.0;
    for (double p : power) acc += p;
    return acc * bin_width_hz;
}

double Spectrum::power_below(double freq_hz) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < power.size(); ++i) {
        if (frequencies_hz[i] < freq_hz) acc += power[i];
    }
    return acc * bin_width_hz;
}

Spectrum psd(const SignalSeries& series) {
    const std::size_t n = series.samples.size();
    if (n < 16) throw ArgumentError("psd needs at least 16 samples");

    const std::size_t n_pad = next_pow2(n);
    std::vector<std::complex<double>> buf(n_pad, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) buf[i] = {series.samples[i], 0.0};
    fft_radix2(buf);

    const double fs = series.sample_rate_hz;
    Spectrum spec;
    spec.bin_width_hz = fs / static_cast<double>(n_pad);
    const std::size_t n_bins = n_pad / 2 + 1;
    spec.frequencies_hz.resize(n_bins);
    spec.power.resize(n_bins);

    // One-sided density scaled so that sum(power) * bin_width equals the
    // mean square of the original (unpadded) input.
    const double scale = 1.0 / (fs * static_cast<double>(n));
    for (std::size_t k = 0; k < n_bins; ++k) {
        spec.frequencies_hz[k] = static_cast<double>(k) * spec.bin_width_hz;
        const double mag2 = std::norm(buf[k]);
        const bool edge = (k == 0) || (k == n_pad / 2);
        spec.power[k] = (edge ? 1.0 : 2.0) * mag2 * scale;
    }
    return spec;
}

}  // namespace emgrip
