#include "emgrip/online.hpp"

#include <algorithm>
#include <cmath>

#include "emgrip/errors.hpp"

namespace emgrip {

OnlineConfig OnlineConfig::for_rate(double sample_rate_hz, double output_rate_hz,
                                    double window_ms) {
    if (!(sample_rate_hz > 0.0) || !(output_rate_hz > 0.0)) {
        throw ConfigError("rates must be positive");
    }
    OnlineConfig cfg;
    cfg.sample_rate_hz = sample_rate_hz;
    cfg.window_len =
        static_cast<std::size_t>(std::llround(window_ms * sample_rate_hz / 1000.0));
    cfg.force_buffer_len =
        static_cast<std::size_t>(std::llround(sample_rate_hz / output_rate_hz));
    if (cfg.window_len == 0 || cfg.force_buffer_len == 0) {
        throw ConfigError("window and force buffer must hold at least one sample");
    }
    return cfg;
}

OnlinePredictor::OnlinePredictor(ForceModel model, FilterCoeffs highpass, OnlineConfig config)
    : model_(std::move(model)), highpass_(std::move(highpass)), config_(config) {
    model_.mvc.validate();
    if (config_.window_len == 0 || config_.force_buffer_len == 0) {
        throw ConfigError("window and force buffer must hold at least one sample");
    }
    if (config_.smooth_width == 0) throw ConfigError("smoothing width must be >= 1");
    hp_states_.assign(channels(), FilterState::zeros(highpass_));
    fifo_.assign(channels(), std::vector<double>(config_.window_len, 0.0));
    force_buffer_.reserve(config_.force_buffer_len);
}

void OnlinePredictor::reset() {
    for (auto& st : hp_states_) st.reset();
    for (auto& ring : fifo_) std::fill(ring.begin(), ring.end(), 0.0);
    fifo_head_ = 0;
    fifo_count_ = 0;
    force_buffer_.clear();
    smooth_window_.clear();
    sample_index_ = 0;
}

std::optional<OnlinePredictor::Emission> OnlinePredictor::push_emission(
    std::span<const double> sample) {
    if (sample.size() != channels()) {
        throw ConfigError("sample has " + std::to_string(sample.size()) +
                          " channels, predictor expects " + std::to_string(channels()));
    }

    // Filter each sample once on arrival; the FIFO holds filtered values.
    for (std::size_t c = 0; c < channels(); ++c) {
        fifo_[c][fifo_head_] = filter_step(highpass_, hp_states_[c], sample[c]);
    }
    fifo_head_ = (fifo_head_ + 1) % config_.window_len;
    if (fifo_count_ < config_.window_len) ++fifo_count_;

    const std::size_t current_index = sample_index_++;
    if (fifo_count_ < config_.window_len) return std::nullopt;

    // Window full: rectify/normalize/RMS in chronological order, predict,
    // and let the oldest sample fall out on the next push.
    FeatureVector features(channels());
    const std::size_t oldest = fifo_head_;  // head now points at the oldest slot
    for (std::size_t c = 0; c < channels(); ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < config_.window_len; ++k) {
            const double v =
                std::abs(fifo_[c][(oldest + k) % config_.window_len]) / model_.mvc.x_mvc[c];
            acc += v * v;
        }
        features[c] = std::sqrt(acc / static_cast<double>(config_.window_len));
    }
    force_buffer_.push_back(model_.predict(features));
    if (force_buffer_.size() < config_.force_buffer_len) return std::nullopt;

    double mean = 0.0;
    for (double f : force_buffer_) mean += f;
    mean /= static_cast<double>(force_buffer_.size());
    force_buffer_.clear();

    smooth_window_.push_back(mean);
    if (smooth_window_.size() > config_.smooth_width) smooth_window_.pop_front();
    double smoothed = 0.0;
    for (double f : smooth_window_) smoothed += f;
    smoothed /= static_cast<double>(smooth_window_.size());

    Emission e;
    e.timestamp_s = static_cast<double>(current_index) / config_.sample_rate_hz;
    e.raw_mean_n = mean;
    e.value_n = std::clamp(smoothed, 0.0, config_.force_cap_n);
    return e;
}

std::optional<ForceReference> OnlinePredictor::push(std::span<const double> sample) {
    const auto emission = push_emission(sample);
    if (!emission) return std::nullopt;
    return ForceReference{emission->value_n, emission->timestamp_s};
}

std::vector<OnlinePredictor::Emission> OnlinePredictor::replay_emissions(
    const TrialRecording& trial) {
    if (trial.channels() != channels()) {
        throw ConfigError("trial channel count does not match the predictor");
    }
    reset();
    std::vector<Emission> emissions;
    std::vector<double> frame(channels());
    const std::size_t n = trial.length();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels(); ++c) frame[c] = trial.emg[c][i];
        if (auto e = push_emission(frame)) emissions.push_back(*e);
    }
    return emissions;
}

std::vector<ForceReference> OnlinePredictor::replay(const TrialRecording& trial) {
    std::vector<ForceReference> refs;
    for (const auto& e : replay_emissions(trial)) {
        refs.push_back(ForceReference{e.value_n, e.timestamp_s});
    }
    return refs;
}

}  // namespace emgrip
