#include "emgrip/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "emgrip/csv.hpp"
#include "emgrip/errors.hpp"
#include "emgrip/rng.hpp"

namespace emgrip {

namespace {

double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

const char* kind_name(TrialKind kind) {
    switch (kind) {
        case TrialKind::Ramp: return "ramp";
        case TrialKind::Mvc: return "mvc";
        case TrialKind::Hold: return "hold";
    }
    return "ramp";
}

TrialKind kind_from_name(const std::string& name, std::size_t line_no) {
    if (name == "ramp") return TrialKind::Ramp;
    if (name == "mvc") return TrialKind::Mvc;
    if (name == "hold") return TrialKind::Hold;
    throw ParseError("line " + std::to_string(line_no) + ": unknown trial kind '" + name + "'");
}

// Unit-variance noise band-limited to [low, high] Hz.
std::vector<double> bandlimited_noise(std::size_t n, double fs, double low_hz, double high_hz,
                                      std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    SignalSeries white(fs, {});
    white.samples.resize(n);
    for (double& v : white.samples) v = gauss(rng);

    const FilterCoeffs hp = design_butterworth(4, low_hz, fs, FilterKind::Highpass);
    const FilterCoeffs lp = design_butterworth(4, high_hz, fs, FilterKind::Lowpass);
    FilterState hp_state = FilterState::zeros(hp);
    FilterState lp_state = FilterState::zeros(lp);
    SignalSeries shaped = filter_apply(lp, lp_state, filter_apply(hp, hp_state, white));

    double sumsq = 0.0;
    for (double v : shaped.samples) sumsq += v * v;
    const double std_dev = std::sqrt(sumsq / static_cast<double>(n));
    if (std_dev > 0.0) {
        for (double& v : shaped.samples) v /= std_dev;
    }
    return std::move(shaped.samples);
}

}  // namespace

std::vector<double> SynthConfig::effective_gains() const {
    if (!gain_vector.empty()) {
        if (gain_vector.size() != n_channels) {
            throw ConfigError("gain_vector length does not match n_channels");
        }
        return gain_vector;
    }
    // Spread so channels are not interchangeable.
    std::vector<double> gains(n_channels);
    for (std::size_t c = 0; c < n_channels; ++c) {
        const double frac = n_channels > 1
                                ? static_cast<double>(c) / static_cast<double>(n_channels - 1)
                                : 0.0;
        gains[c] = 0.6 + 1.2 * frac;
    }
    return gains;
}

void SynthConfig::validate() const {
    if (n_channels == 0) throw ConfigError("n_channels must be positive");
    if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
    if (!(noise_band_low_hz > 0.0) || !(noise_band_low_hz < noise_band_high_hz) ||
        !(noise_band_high_hz < sample_rate_hz / 2.0)) {
        throw ConfigError("noise band must satisfy 0 < low < high < Nyquist");
    }
    if (emd_ms < 0.0) throw ConfigError("emd_ms must be nonnegative");
    if (!(f_max_n > 0.0)) throw ConfigError("f_max_n must be positive");
    if (!(ramp_duration_s > 0.0)) throw ConfigError("ramp duration must be positive");
    for (double g : effective_gains()) {
        if (!(g > 0.0)) throw ConfigError("gains must be positive");
    }
}

TrialRecording synth_trial(const SynthConfig& config, TrialKind profile, std::uint64_t seed) {
    config.validate();
    const double fs = config.sample_rate_hz;
    auto trial_rng = make_rng(seed, 0xA11);

    // Activation a(t) in [0,1]. Evaluated as a function of time so the force
    // can sample it at t - emd.
    std::function<double(double)> activation;
    double duration_s = config.ramp_duration_s;
    switch (profile) {
        case TrialKind::Ramp: {
            // Mild per-trial shape variation, still smooth and monotone.
            std::uniform_real_distribution<double> shape(-0.2, 0.2);
            const double gamma = std::exp(shape(trial_rng));
            const double total = config.ramp_duration_s;
            activation = [total, gamma](double t) {
                return std::pow(smoothstep(t / total), gamma);
            };
            break;
        }
        case TrialKind::Mvc: {
            std::uniform_real_distribution<double> rise_dist(3.0, 4.0);
            const double rest = 0.5, rise = rise_dist(trial_rng), hold = 2.0, fall = 1.0;
            duration_s = rest + rise + hold + fall + 0.5;
            activation = [rest, rise, hold, fall](double t) {
                if (t < rest) return 0.0;
                if (t < rest + rise) return smoothstep((t - rest) / rise);
                if (t < rest + rise + hold) return 1.0;
                return 1.0 - smoothstep((t - rest - rise - hold) / fall);
            };
            break;
        }
        case TrialKind::Hold: {
            activation = [](double t) { return 0.5 * smoothstep(t / 1.0); };
            break;
        }
    }

    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
    const std::vector<double> gains = config.effective_gains();

    TrialRecording trial;
    trial.sample_rate_hz = fs;
    trial.kind = profile;
    trial.emg.resize(config.n_channels);

    for (std::size_t c = 0; c < config.n_channels; ++c) {
        auto chan_rng = make_rng(seed, 0xE36 + c);
        std::vector<double> carrier =
            bandlimited_noise(n, fs, config.noise_band_low_hz, config.noise_band_high_hz, chan_rng);
        auto& chan = trial.emg[c];
        chan.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / fs;
            chan[i] = gains[c] * activation(t) * carrier[i];
        }
    }

    const double emd_s = config.emd_ms / 1000.0;
    auto sensor_rng = make_rng(seed, 0xF04CE);
    std::normal_distribution<double> sensor_noise(0.0, config.label_noise_n);
    for (auto* sensor : {&trial.force_thumb, &trial.force_index}) {
        for (auto& axis : *sensor) axis.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double a = activation(t - emd_s);
        const double f = config.f_max_n * std::pow(a, 1.5);
        // Normal force on z; small crosstalk on x and y.
        trial.force_thumb[0][i] = 0.3 * sensor_noise(sensor_rng);
        trial.force_thumb[1][i] = 0.3 * sensor_noise(sensor_rng);
        trial.force_thumb[2][i] = f + sensor_noise(sensor_rng);
        trial.force_index[0][i] = 0.3 * sensor_noise(sensor_rng);
        trial.force_index[1][i] = 0.3 * sensor_noise(sensor_rng);
        trial.force_index[2][i] = f + sensor_noise(sensor_rng);
    }
    return trial;
}

MvcComputation compute_mvc(const std::vector<TrialRecording>& mvc_trials) {
    if (mvc_trials.size() < 3) {
        throw ProtocolError("MVC needs at least 3 trials, got " +
                            std::to_string(mvc_trials.size()));
    }
    const std::size_t channels = mvc_trials.front().channels();
    for (const auto& t : mvc_trials) {
        if (t.channels() != channels) throw ConfigError("MVC trials disagree on channel count");
    }

    MvcComputation result;
    result.profile.x_mvc.assign(channels, 0.0);

    for (const auto& trial : mvc_trials) {
        const SignalSeries scalar =
            raw_gripping_force(trial.force_thumb, trial.force_index, trial.sample_rate_hz);
        const auto peak_it = std::max_element(scalar.samples.begin(), scalar.samples.end());
        if (peak_it == scalar.samples.end() || !(*peak_it > 0.0)) {
            throw ProtocolError("MVC trial has no force peak");
        }
        const std::size_t peak = static_cast<std::size_t>(peak_it - scalar.samples.begin());
        result.peak_forces_n.push_back(*peak_it);

        // 400 ms window centered at the peak, clamped to the trial.
        const std::size_t half = static_cast<std::size_t>(std::llround(0.2 * trial.sample_rate_hz));
        const std::size_t begin = peak >= half ? peak - half : 0;
        const std::size_t end = std::min(trial.length(), peak + half);
        if (end <= begin) throw ProtocolError("MVC peak window is empty");

        for (std::size_t c = 0; c < channels; ++c) {
            const std::span<const double> window(trial.emg[c].data() + begin, end - begin);
            result.profile.x_mvc[c] = std::max(result.profile.x_mvc[c], rms(window));
        }
    }

    for (double v : result.profile.x_mvc) {
        if (!(v > 0.0)) throw CalibrationError("MVC RMS is zero on some channel");
    }

    // Repeat-trial rule: peaks differing by more than 5% of the smaller.
    for (std::size_t i = 0; i < result.peak_forces_n.size(); ++i) {
        for (std::size_t j = i + 1; j < result.peak_forces_n.size(); ++j) {
            const double lo = std::min(result.peak_forces_n[i], result.peak_forces_n[j]);
            const double hi = std::max(result.peak_forces_n[i], result.peak_forces_n[j]);
            if ((hi - lo) / lo > 0.05) result.more_trials_required = true;
        }
    }
    return result;
}

SignalSeries raw_gripping_force(const std::array<std::vector<double>, 3>& force_thumb,
                                const std::array<std::vector<double>, 3>& force_index,
                                double sample_rate_hz) {
    const std::size_t n = force_thumb[2].size();
    if (force_index[2].size() != n) {
        throw ArgumentError("thumb and index force series have different lengths");
    }
    SignalSeries out;
    out.sample_rate_hz = sample_rate_hz;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.samples[i] = 0.5 * (std::abs(force_thumb[2][i]) + std::abs(force_index[2][i]));
    }
    return out;
}

SignalSeries gripping_force(const std::array<std::vector<double>, 3>& force_thumb,
                            const std::array<std::vector<double>, 3>& force_index,
                            double sample_rate_hz) {
    SignalSeries raw = raw_gripping_force(force_thumb, force_index, sample_rate_hz);
    const FilterCoeffs lp = design_butterworth(2, 15.0, sample_rate_hz, FilterKind::Lowpass);
    FilterState state = FilterState::zeros(lp);
    return filter_apply(lp, state, raw);
}

SignalSeries gripping_force(const TrialRecording& trial) {
    return gripping_force(trial.force_thumb, trial.force_index, trial.sample_rate_hz);
}

std::size_t WindowConfig::window_samples(double sample_rate_hz) const {
    return static_cast<std::size_t>(std::llround(window_ms * sample_rate_hz / 1000.0));
}

std::size_t WindowConfig::stride_samples(double sample_rate_hz) const {
    return static_cast<std::size_t>(std::llround(stride_ms * sample_rate_hz / 1000.0));
}

std::vector<LabeledWindow> segment(const TrialRecording& trial, const SignalSeries& labels,
                                   const WindowConfig& config, LabelAnchor anchor) {
    const std::size_t n = trial.length();
    if (labels.samples.size() != n) {
        throw ArgumentError("label series length does not match the trial");
    }
    const std::size_t window = config.window_samples(trial.sample_rate_hz);
    const std::size_t stride = config.stride_samples(trial.sample_rate_hz);
    if (window == 0 || stride == 0) throw ArgumentError("window and stride must be positive");

    std::vector<LabeledWindow> out;
    if (n < window) return out;  // shorter than one window: empty, not an error
    for (std::size_t start = 0; start + window <= n; start += stride) {
        LabeledWindow lw;
        lw.raw_window.resize(trial.channels());
        for (std::size_t c = 0; c < trial.channels(); ++c) {
            lw.raw_window[c].assign(trial.emg[c].begin() + static_cast<std::ptrdiff_t>(start),
                                    trial.emg[c].begin() + static_cast<std::ptrdiff_t>(start + window));
        }
        const std::size_t label_idx = anchor == LabelAnchor::WindowEnd ? start + window - 1 : start;
        lw.label_force_n = std::max(0.0, labels.samples[label_idx]);
        out.push_back(std::move(lw));
    }
    return out;
}

DatasetSplit split(std::size_t n_trials) {
    if (n_trials < 3) throw ArgumentError("split needs at least 3 trials");
    const auto rounded = [](double v) {
        return static_cast<std::size_t>(std::llround(v));
    };
    std::size_t test = std::max<std::size_t>(1, rounded(n_trials / 10.0));
    std::size_t val = std::max<std::size_t>(1, rounded(2.0 * n_trials / 10.0));
    if (test + val >= n_trials) {  // keep at least one training trial
        test = 1;
        val = 1;
    }
    const std::size_t train = n_trials - val - test;

    DatasetSplit out;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < train; ++i) out.train.push_back(idx++);
    for (std::size_t i = 0; i < val; ++i) out.validation.push_back(idx++);
    for (std::size_t i = 0; i < test; ++i) out.test.push_back(idx++);
    return out;
}

void save_trial(const std::string& path, const TrialRecording& trial) {
    std::ostringstream out;
    out << "# emgrip-trial v1 sample_rate_hz=" << csv::format_double_compact(trial.sample_rate_hz)
        << " kind=" << kind_name(trial.kind) << " channels=" << trial.channels() << "\n";
    out << "time_s";
    for (std::size_t c = 0; c < trial.channels(); ++c) out << ",emg_" << (c + 1);
    out << ",thumb_x,thumb_y,thumb_z,index_x,index_y,index_z\n";

    const std::size_t n = trial.length();
    for (std::size_t i = 0; i < n; ++i) {
        out << csv::format_double_compact(static_cast<double>(i) / trial.sample_rate_hz);
        for (std::size_t c = 0; c < trial.channels(); ++c) {
            out << ',' << csv::format_double_compact(trial.emg[c][i]);
        }
        for (const auto& axis : trial.force_thumb) out << ',' << csv::format_double_compact(axis[i]);
        for (const auto& axis : trial.force_index) out << ',' << csv::format_double_compact(axis[i]);
        out << '\n';
    }
    csv::write_file(path, out.str());
}

TrialRecording load_trial(const std::string& path) {
    const std::string text = csv::read_file(path);
    const std::vector<std::string> lines = csv::split_lines(text);
    if (lines.empty()) throw ParseError("'" + path + "' is empty");

    // Header: "# emgrip-trial v1 sample_rate_hz=... kind=... channels=..."
    const std::string& header = lines[0];
    if (header.rfind("# emgrip-trial", 0) != 0) {
        throw ParseError("line 1: missing emgrip-trial header");
    }
    double rate = 0.0;
    std::string kind_str;
    long channels = -1;
    {
        std::istringstream hs(header);
        std::string token;
        while (hs >> token) {
            if (token.rfind("sample_rate_hz=", 0) == 0) {
                rate = csv::parse_double(token.substr(15), 1);
            } else if (token.rfind("kind=", 0) == 0) {
                kind_str = token.substr(5);
            } else if (token.rfind("channels=", 0) == 0) {
                channels = csv::parse_long(token.substr(9), 1);
            }
        }
    }
    if (!(rate > 0.0)) throw ParseError("line 1: missing or invalid sample_rate_hz");
    if (channels <= 0) throw ParseError("line 1: missing or invalid channels");
    if (kind_str.empty()) throw ParseError("line 1: missing kind");

    if (lines.size() < 2) throw ParseError("missing column header row");
    std::vector<std::string> expected{"time_s"};
    for (long c = 1; c <= channels; ++c) expected.push_back("emg_" + std::to_string(c));
    for (const char* name : {"thumb_x", "thumb_y", "thumb_z", "index_x", "index_y", "index_z"}) {
        expected.push_back(name);
    }
    const std::vector<std::string> actual = csv::split_fields(lines[1]);
    for (const auto& name : expected) {
        if (std::find(actual.begin(), actual.end(), name) == actual.end()) {
            throw ParseError("line 2: missing column '" + name + "'");
        }
    }
    if (actual.size() != expected.size() || actual != expected) {
        throw ParseError("line 2: unexpected column layout");
    }

    TrialRecording trial;
    trial.sample_rate_hz = rate;
    trial.kind = kind_from_name(kind_str, 1);
    trial.emg.resize(static_cast<std::size_t>(channels));

    const std::size_t n_cols = expected.size();
    for (std::size_t li = 2; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::vector<std::string> fields = csv::split_fields(lines[li]);
        if (fields.size() != n_cols) {
            throw ParseError("line " + std::to_string(li + 1) + ": expected " +
                             std::to_string(n_cols) + " fields, got " +
                             std::to_string(fields.size()));
        }
        std::size_t f = 1;  // skip time_s
        for (long c = 0; c < channels; ++c) {
            trial.emg[static_cast<std::size_t>(c)].push_back(
                csv::parse_double(fields[f++], li + 1));
        }
        for (auto& axis : trial.force_thumb) axis.push_back(csv::parse_double(fields[f++], li + 1));
        for (auto& axis : trial.force_index) axis.push_back(csv::parse_double(fields[f++], li + 1));
    }
    if (trial.length() == 0) throw ParseError("'" + path + "' has no data rows");
    return trial;
}

void save_mvc(const std::string& path, const MvcProfile& profile) {
    profile.validate();
    std::ostringstream out;
    for (std::size_t c = 0; c < profile.channels(); ++c) {
        if (c) out << ',';
        out << csv::format_double(profile.x_mvc[c]);
    }
    out << '\n';
    csv::write_file(path, out.str());
}

MvcProfile load_mvc(const std::string& path) {
    const std::string text = csv::read_file(path);
    const std::vector<std::string> lines = csv::split_lines(text);
    if (lines.empty()) throw ParseError("'" + path + "' is empty");
    MvcProfile profile;
    for (const std::string& field : csv::split_fields(lines[0])) {
        profile.x_mvc.push_back(csv::parse_double(field, 1));
    }
    profile.validate();
    return profile;
}

}  // namespace emgrip
