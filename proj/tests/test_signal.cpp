#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "emgrip/dataset.hpp"
#include "emgrip/errors.hpp"
#include "emgrip/rng.hpp"
#include "emgrip/signal.hpp"

using namespace emgrip;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed-form magnitude of a bilinear-transformed Butterworth filter. Kept
// independent of the coefficient-based implementation on purpose.
double butterworth_magnitude(int order, double cutoff_hz, double fs, FilterKind kind,
                             double freq_hz) {
    const double tc = std::tan(kPi * cutoff_hz / fs);
    if (freq_hz <= 0.0) return kind == FilterKind::Lowpass ? 1.0 : 0.0;
    const double tf = std::tan(kPi * freq_hz / fs);
    const double ratio = kind == FilterKind::Lowpass ? tf / tc : tc / tf;
    return 1.0 / std::sqrt(1.0 + std::pow(ratio, 2.0 * order));
}

SignalSeries random_series(std::size_t n, double fs, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SignalSeries s(fs, {});
    s.samples.resize(n);
    for (double& v : s.samples) v = gauss(rng);
    return s;
}

}  // namespace

TEST_CASE("butterworth highpass hits -3.01 dB at cutoff") {
    const auto hp = design_butterworth(4, 5.0, 200.0, FilterKind::Highpass);
    CHECK(filter_response(hp, 5.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.0015));
    CHECK(filter_response(hp, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("butterworth lowpass has unity DC gain") {
    const auto lp = design_butterworth(2, 15.0, 200.0, FilterKind::Lowpass);
    CHECK(filter_response(lp, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(filter_response(lp, 15.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.0015));
}

TEST_CASE("designed response matches the analytic magnitude everywhere") {
    for (int order : {2, 4, 6, 8}) {
        for (auto kind : {FilterKind::Highpass, FilterKind::Lowpass}) {
            const auto coeffs = design_butterworth(order, 12.0, 200.0, kind);
            for (double f = 0.5; f < 99.0; f += 4.93) {
                const double expected = butterworth_magnitude(order, 12.0, 200.0, kind, f);
                CHECK(filter_response(coeffs, f) == doctest::Approx(expected).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("design rejects invalid requests") {
    CHECK_THROWS_AS(design_butterworth(3, 5.0, 200.0, FilterKind::Highpass), DesignError);
    CHECK_THROWS_AS(design_butterworth(4, 100.0, 200.0, FilterKind::Lowpass), DesignError);
    CHECK_THROWS_AS(design_butterworth(4, 120.0, 200.0, FilterKind::Lowpass), DesignError);
    CHECK_THROWS_AS(design_butterworth(4, 0.0, 200.0, FilterKind::Highpass), DesignError);
    CHECK_THROWS_AS(design_butterworth(0, 5.0, 200.0, FilterKind::Highpass), DesignError);
}

TEST_CASE("all designed sections are stable") {
    for (int order : {2, 4, 6, 8}) {
        for (double cutoff : {0.5, 5.0, 30.0, 80.0, 95.0}) {
            for (auto kind : {FilterKind::Highpass, FilterKind::Lowpass}) {
                const auto coeffs = design_butterworth(order, cutoff, 200.0, kind);
                for (const auto& s : coeffs.sections) {
                    CHECK(std::abs(s.a2) < 1.0);
                    CHECK(std::abs(s.a1) < 1.0 + s.a2);
                }
            }
        }
    }
}

TEST_CASE("zero input stays zero") {
    const auto hp = design_butterworth(4, 5.0, 200.0, FilterKind::Highpass);
    FilterState st = FilterState::zeros(hp);
    SignalSeries zeros(200.0, std::vector<double>(400, 0.0));
    const auto out = filter_apply(hp, st, zeros);
    for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("highpass rejects a constant within one second") {
    const auto hp = design_butterworth(4, 5.0, 200.0, FilterKind::Highpass);
    FilterState st = FilterState::zeros(hp);
    SignalSeries ones(200.0, std::vector<double>(400, 1.0));
    const auto out = filter_apply(hp, st, ones);
    for (std::size_t i = 200; i < out.samples.size(); ++i) {
        CHECK(std::abs(out.samples[i]) < 1e-3);
    }
}

TEST_CASE("chunked filtering equals one-shot filtering bit for bit") {
    const auto hp = design_butterworth(4, 5.0, 200.0, FilterKind::Highpass);
    const SignalSeries input = random_series(333, 200.0, 7);

    FilterState whole = FilterState::zeros(hp);
    const auto expected = filter_apply(hp, whole, input);

    for (std::size_t cut : {1u, 57u, 166u, 332u}) {
        SignalSeries a(200.0, {input.samples.begin(), input.samples.begin() + cut});
        SignalSeries b(200.0, {input.samples.begin() + cut, input.samples.end()});
        FilterState st = FilterState::zeros(hp);
        const auto out_a = filter_apply(hp, st, a);
        const auto out_b = filter_apply(hp, st, b);
        for (std::size_t i = 0; i < cut; ++i) CHECK(out_a.samples[i] == expected.samples[i]);
        for (std::size_t i = cut; i < input.size(); ++i) {
            CHECK(out_b.samples[i - cut] == expected.samples[i]);
        }
    }
}

TEST_CASE("filtering is linear") {
    const auto lp = design_butterworth(2, 15.0, 200.0, FilterKind::Lowpass);
    const SignalSeries x = random_series(256, 200.0, 11);
    const SignalSeries y = random_series(256, 200.0, 12);
    const double a = 1.7, b = -0.4;

    SignalSeries combo(200.0, {});
    combo.samples.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        combo.samples[i] = a * x.samples[i] + b * y.samples[i];
    }
    FilterState s1 = FilterState::zeros(lp), s2 = FilterState::zeros(lp),
                s3 = FilterState::zeros(lp);
    const auto fx = filter_apply(lp, s1, x);
    const auto fy = filter_apply(lp, s2, y);
    const auto fc = filter_apply(lp, s3, combo);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double expected = a * fx.samples[i] + b * fy.samples[i];
        CHECK(fc.samples[i] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("filter rejects a series at the wrong rate") {
    const auto lp = design_butterworth(2, 15.0, 200.0, FilterKind::Lowpass);
    FilterState st = FilterState::zeros(lp);
    SignalSeries wrong(100.0, std::vector<double>(32, 0.0));
    CHECK_THROWS_AS(filter_apply(lp, st, wrong), ConfigError);
}

TEST_CASE("rectify") {
    SignalSeries s(200.0, {-1.0, 2.0, -3.0});
    const auto r = rectify(s);
    CHECK(r.samples == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(rectify(r).samples == r.samples);  // idempotent
}

TEST_CASE("normalize_mvc") {
    CHECK(normalize_mvc(SignalSeries(200.0, {0.5}), 0.5).samples == std::vector<double>{1.0});
    CHECK(normalize_mvc(SignalSeries(200.0, {0.0, 0.0}), 2.0).samples ==
          std::vector<double>{0.0, 0.0});
    const auto scaled = normalize_mvc(SignalSeries(200.0, {0.2, 0.4}), 0.1);
    CHECK(scaled.samples[0] == doctest::Approx(2.0));
    CHECK(scaled.samples[1] == doctest::Approx(4.0));
    CHECK_THROWS_AS(normalize_mvc(SignalSeries(200.0, {1.0}), 0.0), CalibrationError);
    CHECK_THROWS_AS(normalize_mvc(SignalSeries(200.0, {1.0}), -1.0), CalibrationError);
}

TEST_CASE("rms") {
    const std::vector<double> constant(17, -2.5);
    CHECK(rms(constant) == doctest::Approx(2.5).epsilon(1e-12));
    const std::vector<double> pair{3.0, 4.0};
    CHECK(rms(pair) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
    const std::vector<double> zeros(5, 0.0);
    CHECK(rms(zeros) == 0.0);
    CHECK_THROWS_AS(rms(std::vector<double>{}), ArgumentError);
}

TEST_CASE("rms scales with |c|") {
    auto rng = make_rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(64), cx(64);
    for (double c : {-3.0, 0.5, 2.0}) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = gauss(rng);
            cx[i] = c * x[i];
        }
        CHECK(rms(cx) == doctest::Approx(std::abs(c) * rms(x)).epsilon(1e-12));
    }
}

TEST_CASE("moving average") {
    SignalSeries id(200.0, {4.0, -1.0, 2.0});
    CHECK(moving_average(id, 1).samples == id.samples);

    SignalSeries constant(200.0, std::vector<double>(10, 3.0));
    for (double v : moving_average(constant, 4).samples) CHECK(v == doctest::Approx(3.0));

    SignalSeries step(200.0, {0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0});
    const auto ramp = moving_average(step, 4);
    CHECK(ramp.samples[4] == doctest::Approx(0.25));
    CHECK(ramp.samples[5] == doctest::Approx(0.5));
    CHECK(ramp.samples[6] == doctest::Approx(0.75));
    CHECK(ramp.samples[7] == doctest::Approx(1.0));

    CHECK_THROWS_AS(moving_average(step, 0), ArgumentError);
}

TEST_CASE("extract_features basics") {
    const auto hp = design_butterworth(4, 5.0, 200.0, FilterKind::Highpass);
    MvcProfile mvc;
    mvc.x_mvc = {1.0, 2.0};

    std::vector<std::vector<double>> zeros(2, std::vector<double>(40, 0.0));
    for (double f : extract_features(zeros, mvc, hp)) CHECK(f == 0.0);

    auto rng = make_rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> window(2, std::vector<double>(40));
    for (auto& chan : window) {
        for (double& v : chan) v = gauss(rng);
    }
    for (double f : extract_features(window, mvc, hp)) CHECK(f >= 0.0);

    std::vector<std::vector<double>> three(3, std::vector<double>(40, 0.0));
    CHECK_THROWS_AS(extract_features(three, mvc, hp), ConfigError);
}

TEST_CASE("features ignore a constant offset on the raw samples") {
    const auto hp = design_butterworth(4, 5.0, 200.0, FilterKind::Highpass);
    MvcProfile mvc;
    mvc.x_mvc = {0.7};

    auto rng = make_rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> window(1, std::vector<double>(40));
    for (double& v : window[0]) v = gauss(rng);

    const auto base = extract_features(window, mvc, hp);
    for (double offset : {0.5, -2.0, 10.0}) {
        auto shifted = window;
        for (double& v : shifted[0]) v += offset;
        const auto f = extract_features(shifted, mvc, hp);
        CHECK(std::abs(f[0] - base[0]) < 1e-3);
    }
}

TEST_CASE("MVC-peak window yields features near one") {
    SynthConfig cfg;
    cfg.seed = 77;
    const TrialRecording mvc_trial = synth_trial(cfg, TrialKind::Mvc, 77);
    // Identical repeats: the profile equals the single-trial window RMS.
    const MvcComputation mvc = compute_mvc({mvc_trial, mvc_trial, mvc_trial});
    CHECK_FALSE(mvc.more_trials_required);

    const SignalSeries scalar =
        raw_gripping_force(mvc_trial.force_thumb, mvc_trial.force_index, cfg.sample_rate_hz);
    const std::size_t peak = static_cast<std::size_t>(
        std::max_element(scalar.samples.begin(), scalar.samples.end()) - scalar.samples.begin());

    // Feed the 400 ms peak-centered window back through the feature path.
    const std::size_t half = 40;
    std::vector<std::vector<double>> window(mvc_trial.channels());
    for (std::size_t c = 0; c < mvc_trial.channels(); ++c) {
        window[c].assign(mvc_trial.emg[c].begin() + static_cast<std::ptrdiff_t>(peak - half),
                         mvc_trial.emg[c].begin() + static_cast<std::ptrdiff_t>(peak + half));
    }
    const auto hp = design_butterworth(4, 5.0, cfg.sample_rate_hz, FilterKind::Highpass);
    for (double f : extract_features(window, mvc.profile, hp)) {
        CHECK(f == doctest::Approx(1.0).epsilon(0.15));
    }
}

TEST_CASE("psd finds a pure tone and satisfies Parseval") {
    const double fs = 200.0;
    SignalSeries tone(fs, {});
    tone.samples.resize(500);
    for (std::size_t i = 0; i < tone.samples.size(); ++i) {
        tone.samples[i] = std::sin(2.0 * kPi * 10.0 * static_cast<double>(i) / fs);
    }
    const Spectrum spec = psd(tone);

    CHECK(spec.frequencies_hz.back() == doctest::Approx(fs / 2.0));
    for (double p : spec.power) CHECK(p >= 0.0);

    const std::size_t peak = static_cast<std::size_t>(
        std::max_element(spec.power.begin(), spec.power.end()) - spec.power.begin());
    CHECK(std::abs(spec.frequencies_hz[peak] - 10.0) <= spec.bin_width_hz);

    double mean_square = 0.0;
    for (double v : tone.samples) mean_square += v * v;
    mean_square /= static_cast<double>(tone.samples.size());
    CHECK(spec.total_power() == doctest::Approx(mean_square).epsilon(1e-6));

    SignalSeries tiny(fs, std::vector<double>(8, 1.0));
    CHECK_THROWS_AS(psd(tiny), ArgumentError);
}

TEST_CASE("parseval holds on random signals") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const SignalSeries x = random_series(300, 200.0, seed);
        double mean_square = 0.0;
        for (double v : x.samples) mean_square += v * v;
        mean_square /= static_cast<double>(x.samples.size());
        CHECK(psd(x).total_power() == doctest::Approx(mean_square).epsilon(1e-6));
    }
}

TEST_CASE("synthetic grasp force is low frequency") {
    SynthConfig cfg;
    cfg.seed = 31;
    const TrialRecording trial = synth_trial(cfg, TrialKind::Ramp, 31);
    const SignalSeries force =
        raw_gripping_force(trial.force_thumb, trial.force_index, cfg.sample_rate_hz);
    const Spectrum spec = psd(force);
    CHECK(spec.power_below(15.0) >= 0.95 * spec.total_power());
}
