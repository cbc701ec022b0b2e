#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "emgrip/dataset.hpp"
#include "emgrip/mlp.hpp"
#include "emgrip/signal.hpp"

namespace emgrip {

// Smoothed, clamped gripping-force setpoint for the controller.
struct ForceReference {
    double value_n = 0.0;   // clamped to [0, force_cap]
    double timestamp_s = 0.0;
};

struct OnlineConfig {
    std::size_t window_len = 40;       // feature window, samples
    std::size_t force_buffer_len = 10; // predictions averaged per emission
    std::size_t smooth_width = 5;      // trailing mean over emissions
    double force_cap_n = 20.0;         // gripper maximum force
    double sample_rate_hz = 200.0;

    // force_buffer_len = round(rate / output_rate), realizing the target
    // output rate for any input rate.
    static OnlineConfig for_rate(double sample_rate_hz, double output_rate_hz = 20.0,
                                 double window_ms = 200.0);
};

// Streaming predictor: sample-by-sample FIFO windowing, one prediction per
// push once the window fills, force-buffer averaging down to the outer
// control rate, then moving-average smoothing and a clamp.
//
// Single-stream: one producer pushes, emissions are consumed in order.
// Independent instances may run concurrently.
class OnlinePredictor {
public:
    struct Emission {
        double timestamp_s = 0.0;
        double raw_mean_n = 0.0;   // mean of the force buffer, pre-smoothing
        double value_n = 0.0;      // smoothed and clamped
    };

    OnlinePredictor(ForceModel model, FilterCoeffs highpass, OnlineConfig config);

    // Returns a reference exactly when the force buffer fills.
    std::optional<ForceReference> push(std::span<const double> sample);

    // Clears both buffers and the per-channel filter states.
    void reset();

    std::size_t channels() const { return model_.mvc.channels(); }
    const OnlineConfig& config() const { return config_; }
    const ForceModel& model() const { return model_; }

    // Feeds a whole trial through push; offline replay of the online path.
    std::vector<ForceReference> replay(const TrialRecording& trial);
    std::vector<Emission> replay_emissions(const TrialRecording& trial);

private:
    std::optional<Emission> push_emission(std::span<const double> sample);

    ForceModel model_;
    FilterCoeffs highpass_;
    OnlineConfig config_;

    std::vector<FilterState> hp_states_;       // one per channel
    std::vector<std::vector<double>> fifo_;    // [channel] ring of filtered samples
    std::size_t fifo_head_ = 0;
    std::size_t fifo_count_ = 0;
    std::vector<double> force_buffer_;
    std::deque<double> smooth_window_;
    std::size_t sample_index_ = 0;
};

}  // namespace emgrip
