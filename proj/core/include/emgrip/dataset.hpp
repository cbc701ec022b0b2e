#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "emgrip/series.hpp"
#include "emgrip/signal.hpp"

namespace emgrip {

enum class TrialKind { Ramp, Mvc, Hold };

// One recording session: C channels of raw sEMG plus 3-axis fingertip force
// from the thumb and index sensors. All series share one sample rate and
// length. Axis order is x, y, z; z is the contact normal.
struct TrialRecording {
    double sample_rate_hz = 0.0;
    TrialKind kind = TrialKind::Ramp;
    std::vector<std::vector<double>> emg;          // [channel][sample]
    std::array<std::vector<double>, 3> force_thumb;
    std::array<std::vector<double>, 3> force_index;

    std::size_t channels() const { return emg.size(); }
    std::size_t length() const { return emg.empty() ? 0 : emg.front().size(); }
    double duration_s() const { return static_cast<double>(length()) / sample_rate_hz; }
};

// Raw sEMG block plus the force label taken at the block's final sample.
struct LabeledWindow {
    std::vector<std::vector<double>> raw_window;  // [channel][sample]
    double label_force_n = 0.0;
};

// Whole-trial split. Windows from one trial never cross sets.
struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// Synthetic stand-in for the acquisition hardware: a smooth activation
// profile drives both band-limited EMG noise carriers and a delayed,
// curvilinear fingertip force.
struct SynthConfig {
    std::size_t n_channels = 8;
    double sample_rate_hz = 200.0;
    double f_max_n = 8.0;                    // peak fingertip force
    double emd_ms = 50.0;                    // activation-to-force delay
    std::vector<double> gain_vector;         // per-channel EMG gain; defaulted if empty
    double noise_band_low_hz = 20.0;
    double noise_band_high_hz = 90.0;
    double label_noise_n = 0.01;             // force sensor noise std
    double ramp_duration_s = 10.0;
    std::uint64_t seed = 42;

    std::vector<double> effective_gains() const;
    void validate() const;
};

// Output of the MVC protocol: the profile plus the repeat-trial signal.
struct MvcComputation {
    MvcProfile profile;
    std::vector<double> peak_forces_n;
    bool more_trials_required = false;  // some pair of peaks differs by > 5%
};

struct WindowConfig {
    double window_ms = 200.0;
    double stride_ms = 10.0;

    std::size_t window_samples(double sample_rate_hz) const;
    std::size_t stride_samples(double sample_rate_hz) const;
};

enum class LabelAnchor { WindowEnd, WindowStart };

// Deterministic given (config, seed): same seed, same bytes.
TrialRecording synth_trial(const SynthConfig& config, TrialKind profile, std::uint64_t seed);

// Per trial: locate the force peak, take the 400 ms EMG window centered
// there, per-channel RMS; profile is the per-channel maximum across trials.
// Flags more_trials_required when any two peak forces differ by more than
// 5% of the smaller. Needs at least 3 trials.
MvcComputation compute_mvc(const std::vector<TrialRecording>& mvc_trials);

// Mean of the two normal-axis (z) force magnitudes, unfiltered. This is the
// signal whose spectrum motivates the 15 Hz label filter.
SignalSeries raw_gripping_force(const std::array<std::vector<double>, 3>& force_thumb,
                                const std::array<std::vector<double>, 3>& force_index,
                                double sample_rate_hz);

// raw_gripping_force followed by the 2nd-order 15 Hz Butterworth lowpass.
SignalSeries gripping_force(const std::array<std::vector<double>, 3>& force_thumb,
                            const std::array<std::vector<double>, 3>& force_index,
                            double sample_rate_hz);
SignalSeries gripping_force(const TrialRecording& trial);

// Sliding windows at the configured stride; label is the filtered gripping
// force at the window's final sample (anchor WindowEnd). A trial shorter
// than one window yields an empty sequence.
std::vector<LabeledWindow> segment(const TrialRecording& trial, const SignalSeries& labels,
                                   const WindowConfig& config = {},
                                   LabelAnchor anchor = LabelAnchor::WindowEnd);

// Whole-trial 7/2/1 split (by trial order). Generalizes to other counts
// keeping the ratio; each set gets at least one trial, so needs >= 3.
DatasetSplit split(std::size_t n_trials);

// Plain-text CSV: header line with sample rate and kind, then one row per
// sample: time_s, emg_1..emg_C, thumb_x/y/z, index_x/y/z.
void save_trial(const std::string& path, const TrialRecording& trial);
TrialRecording load_trial(const std::string& path);

// One line of C comma-separated values.
void save_mvc(const std::string& path, const MvcProfile& profile);
MvcProfile load_mvc(const std::string& path);

}  // namespace emgrip
