// emgrip command-line tool: synthetic data generation, MVC calibration,
// model training, evaluation, streaming replay, grasp simulation, and the
// benchmark grasp report. All outputs are plain CSV.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emgrip/control.hpp"
#include "emgrip/csv.hpp"
#include "emgrip/dataset.hpp"
#include "emgrip/errors.hpp"
#include "emgrip/mlp.hpp"
#include "emgrip/online.hpp"
#include "emgrip/rng.hpp"
#include "emgrip/signal.hpp"

namespace fs = std::filesystem;
using namespace emgrip;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomainError = 1;
constexpr int kExitUsageError = 2;

struct SynthOptions {
    std::string out_dir = "data";
    std::size_t ramp_trials = 10;
    std::size_t mvc_trials = 3;
    SynthConfig config;
};

struct TrainOptions {
    std::string data_dir = "data";
    std::string model_path = "model.txt";
    std::string curves_path;
    std::string mvc_path;
    bool grid = false;
    std::size_t grid_epochs = 10;
    std::size_t grid_folds = 10;
    std::size_t jobs = 1;
    TrainConfig config;
};

struct EvalOptions {
    std::string model_path = "model.txt";
    std::string trial_path;
    std::string out_path;
    std::size_t smooth_width = 5;
};

struct StreamOptions {
    std::string model_path = "model.txt";
    std::string trial_path;
    std::string out_path;
    double output_rate_hz = 20.0;
};

struct GraspOptions {
    std::string object_name;
    std::string objects_path;
    std::string trace_path;
    std::string refs_path;
    std::string trial_path;
    std::string model_path;
    double plateau_n = -1.0;
    AdmittanceGains gains;
};

struct PsdOptions {
    std::string trial_path;
    std::string out_path;
};

struct ReportOptions {
    std::string objects_path;
    std::string out_path;
    std::string trace_dir;
    AdmittanceGains gains;
};

std::vector<fs::path> sorted_matching(const fs::path& dir, const std::string& prefix) {
    std::vector<fs::path> matches;
    if (!fs::exists(dir)) throw ArgumentError("data directory '" + dir.string() + "' not found");
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind(prefix, 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv") {
            matches.push_back(entry.path());
        }
    }
    std::sort(matches.begin(), matches.end());
    return matches;
}

std::string two_digits(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02zu", i);
    return buf;
}

int cmd_synth(const SynthOptions& opt) {
    opt.config.validate();
    fs::create_directories(opt.out_dir);
    for (std::size_t i = 0; i < opt.ramp_trials; ++i) {
        const TrialRecording trial =
            synth_trial(opt.config, TrialKind::Ramp, mix_seed(opt.config.seed, 100 + i));
        save_trial((fs::path(opt.out_dir) / ("trial_" + two_digits(i + 1) + ".csv")).string(),
                   trial);
    }
    for (std::size_t i = 0; i < opt.mvc_trials; ++i) {
        const TrialRecording trial =
            synth_trial(opt.config, TrialKind::Mvc, mix_seed(opt.config.seed, 200 + i));
        save_trial((fs::path(opt.out_dir) / ("mvc_" + two_digits(i + 1) + ".csv")).string(),
                   trial);
    }
    std::cout << "wrote " << opt.ramp_trials << " ramp trials and " << opt.mvc_trials
              << " MVC trials to " << opt.out_dir << "\n";
    return kExitOk;
}

struct PreparedData {
    MvcProfile mvc;
    bool mvc_needs_more_trials = false;
    std::vector<TrialRecording> trials;
    DatasetSplit splits;
    // Unscaled features per trial, in trial order.
    std::vector<std::vector<FeatureVector>> features;
    std::vector<std::vector<double>> labels;
};

PreparedData prepare_data(const std::string& data_dir) {
    PreparedData data;

    const auto mvc_paths = sorted_matching(data_dir, "mvc_");
    if (mvc_paths.size() < 3) {
        throw ProtocolError("need at least 3 MVC trials in '" + data_dir + "', found " +
                            std::to_string(mvc_paths.size()));
    }
    std::vector<TrialRecording> mvc_trials;
    for (const auto& p : mvc_paths) mvc_trials.push_back(load_trial(p.string()));
    const MvcComputation mvc = compute_mvc(mvc_trials);
    data.mvc = mvc.profile;
    data.mvc_needs_more_trials = mvc.more_trials_required;

    const auto trial_paths = sorted_matching(data_dir, "trial_");
    if (trial_paths.size() < 3) {
        throw ArgumentError("need at least 3 ramp trials in '" + data_dir + "', found " +
                            std::to_string(trial_paths.size()));
    }
    for (const auto& p : trial_paths) data.trials.push_back(load_trial(p.string()));
    data.splits = split(data.trials.size());

    const double fs = data.trials.front().sample_rate_hz;
    const FilterCoeffs hp = design_butterworth(4, 5.0, fs, FilterKind::Highpass);
    for (const auto& trial : data.trials) {
        const SignalSeries label_series = gripping_force(trial);
        const std::vector<LabeledWindow> windows = segment(trial, label_series);
        std::vector<FeatureVector> feats;
        std::vector<double> labels;
        for (const auto& w : windows) {
            feats.push_back(extract_features(w.raw_window, data.mvc, hp));
            labels.push_back(w.label_force_n);
        }
        data.features.push_back(std::move(feats));
        data.labels.push_back(std::move(labels));
    }
    return data;
}

RegressionSet collect_set(const PreparedData& data, const std::vector<std::size_t>& trial_ids,
                          const FeatureScaler* scaler) {
    RegressionSet set;
    for (std::size_t id : trial_ids) {
        for (std::size_t i = 0; i < data.features[id].size(); ++i) {
            set.x.push_back(scaler ? scaler->apply(data.features[id][i]) : data.features[id][i]);
            set.y.push_back(data.labels[id][i]);
        }
    }
    return set;
}

void print_metrics(const char* name, const MlpModel& net, const RegressionSet& set) {
    std::vector<double> preds(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) preds[i] = net.forward(set.x[i]);
    std::printf("%-12s rmse=%.4f N  r2=%.4f  (%zu windows)\n", name, rmse(preds, set.y),
                r2(preds, set.y), set.size());
}

int cmd_train(const TrainOptions& opt) {
    PreparedData data = prepare_data(opt.data_dir);
    if (data.mvc_needs_more_trials) {
        std::cout << "note: MVC peak forces differ by more than 5%; the protocol asks for more "
                     "trials\n";
    }

    RegressionSet train_raw = collect_set(data, data.splits.train, nullptr);
    const FeatureScaler scaler = FeatureScaler::fit(train_raw.x);
    const RegressionSet train_set = collect_set(data, data.splits.train, &scaler);
    const RegressionSet val_set = collect_set(data, data.splits.validation, &scaler);
    const RegressionSet test_set = collect_set(data, data.splits.test, &scaler);

    TrainConfig config = opt.config;
    if (opt.grid) {
        GridSpec grid;
        TrainConfig cv_base = config;
        cv_base.max_epochs = opt.grid_epochs;
        std::cout << "grid search over " << grid.point_count() << " configurations, "
                  << opt.grid_folds << " folds\n";
        const GridSearchResult result =
            grid_search_cv(train_set, grid, opt.grid_folds, cv_base, opt.jobs);
        config.batch_size = result.best.batch_size;
        config.learning_rate = result.best.learning_rate;
        config.weight_decay = result.best.weight_decay;
        config.hidden_nodes = result.best.hidden_nodes;
        std::printf("selected: batch=%zu lr=%g decay=%g hidden=%zu\n", config.batch_size,
                    config.learning_rate, config.weight_decay, config.hidden_nodes);
    }

    MlpModel net = init_mlp(train_set.x.front().size(), config.hidden_nodes, config.seed);
    TrainResult result = train(std::move(net), train_set, val_set, config);
    std::printf("best validation rmse %.4f N at epoch %zu\n", result.best_val_rmse,
                result.best_epoch);

    ForceModel model{std::move(result.model), scaler, data.mvc};
    save_model(opt.model_path, model);
    if (!opt.curves_path.empty()) save_curves(opt.curves_path, result.curves);
    if (!opt.mvc_path.empty()) save_mvc(opt.mvc_path, data.mvc);

    print_metrics("train", model.net, train_set);
    print_metrics("validation", model.net, val_set);
    print_metrics("test", model.net, test_set);
    std::cout << "model written to " << opt.model_path << "\n";
    return kExitOk;
}

int cmd_eval(const EvalOptions& opt) {
    const ForceModel model = load_model(opt.model_path);
    const TrialRecording trial = load_trial(opt.trial_path);
    if (trial.channels() != model.mvc.channels()) {
        throw ConfigError("trial has " + std::to_string(trial.channels()) +
                          " channels, model expects " + std::to_string(model.mvc.channels()));
    }
    const double fs = trial.sample_rate_hz;
    const FilterCoeffs hp = design_butterworth(4, 5.0, fs, FilterKind::Highpass);
    const SignalSeries label_series = gripping_force(trial);
    const std::vector<LabeledWindow> windows = segment(trial, label_series);
    if (windows.empty()) throw ArgumentError("trial is shorter than one feature window");

    const WindowConfig wc;
    const std::size_t window = wc.window_samples(fs);
    const std::size_t stride = wc.stride_samples(fs);

    std::vector<double> labels, raw;
    SignalSeries raw_series(fs, {});
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const FeatureVector f = extract_features(windows[i].raw_window, model.mvc, hp);
        raw.push_back(model.predict(f));
        labels.push_back(windows[i].label_force_n);
    }
    raw_series.samples = raw;
    const SignalSeries smooth_series = moving_average(raw_series, opt.smooth_width);

    const double raw_r2 = r2(raw, labels);
    const double smooth_r2 = r2(smooth_series.samples, labels);
    std::printf("raw      r2=%.4f rmse=%.4f N\n", raw_r2, rmse(raw, labels));
    std::printf("smoothed r2=%.4f rmse=%.4f N (width %zu)\n", smooth_r2,
                rmse(smooth_series.samples, labels), opt.smooth_width);

    if (!opt.out_path.empty()) {
        std::ostringstream out;
        out << "t_s,label_n,raw_pred_n,smooth_pred_n\n";
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const double t = static_cast<double>(i * stride + window - 1) / fs;
            out << csv::format_double_compact(t) << ',' << csv::format_double_compact(labels[i])
                << ',' << csv::format_double_compact(raw[i]) << ','
                << csv::format_double_compact(smooth_series.samples[i]) << '\n';
        }
        csv::write_file(opt.out_path, out.str());
        std::cout << windows.size() << " prediction rows written to " << opt.out_path << "\n";
    }
    return kExitOk;
}

int cmd_stream(const StreamOptions& opt) {
    ForceModel model = load_model(opt.model_path);
    const TrialRecording trial = load_trial(opt.trial_path);
    const double fs = trial.sample_rate_hz;
    const FilterCoeffs hp = design_butterworth(4, 5.0, fs, FilterKind::Highpass);
    OnlinePredictor predictor(std::move(model), hp, OnlineConfig::for_rate(fs, opt.output_rate_hz));

    const std::vector<ForceReference> refs = predictor.replay(trial);
    std::ostringstream out;
    out << "timestamp_s,force_n\n";
    for (const auto& r : refs) {
        out << csv::format_double_compact(r.timestamp_s) << ','
            << csv::format_double_compact(r.value_n) << '\n';
    }
    csv::write_file(opt.out_path, out.str());
    std::cout << refs.size() << " references written to " << opt.out_path << " ("
              << opt.output_rate_hz << " Hz)\n";
    return kExitOk;
}

ReferenceSource zoh_from_emissions(std::vector<ForceReference> refs) {
    return [refs = std::move(refs)](double t) {
        double value = 0.0;
        for (const auto& r : refs) {
            if (r.timestamp_s <= t) value = r.value_n;
            else break;
        }
        return value;
    };
}

ReferenceSource load_reference_file(const std::string& path) {
    const std::vector<std::string> lines = csv::split_lines(csv::read_file(path));
    if (lines.size() < 2) throw ParseError("'" + path + "' has no reference rows");
    std::vector<ForceReference> refs;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto fields = csv::split_fields(lines[li]);
        if (fields.size() != 2) {
            throw ParseError("line " + std::to_string(li + 1) + ": expected timestamp_s,force_n");
        }
        refs.push_back({csv::parse_double(fields[1], li + 1), csv::parse_double(fields[0], li + 1)});
    }
    return zoh_from_emissions(std::move(refs));
}

void print_grasp_row(const std::string& name, const GraspOutcome& outcome) {
    std::printf("%-14s predicted %7.3f N  real %7.3f N  max %6.2f%%  %s\n", name.c_str(),
                outcome.final_ref_n, outcome.final_real_n, outcome.percent_of_max,
                to_string(outcome.result));
}

int cmd_grasp(const GraspOptions& opt) {
    const std::vector<ObjectSpec> objects =
        opt.objects_path.empty() ? builtin_objects() : load_objects(opt.objects_path);
    const ObjectSpec& object = find_object(objects, opt.object_name);

    ReferenceSource refs;
    if (opt.plateau_n >= 0.0) {
        refs = plateau_reference(opt.plateau_n);
    } else if (!opt.refs_path.empty()) {
        refs = load_reference_file(opt.refs_path);
    } else if (!opt.trial_path.empty() && !opt.model_path.empty()) {
        ForceModel model = load_model(opt.model_path);
        const TrialRecording trial = load_trial(opt.trial_path);
        const FilterCoeffs hp =
            design_butterworth(4, 5.0, trial.sample_rate_hz, FilterKind::Highpass);
        OnlinePredictor predictor(std::move(model), hp,
                                  OnlineConfig::for_rate(trial.sample_rate_hz));
        refs = zoh_from_emissions(predictor.replay(trial));
    } else {
        throw ArgumentError("grasp needs --plateau, --refs, or --trial with --model");
    }

    const auto [trace, outcome] = run_grasp(object, refs, opt.gains);
    print_grasp_row(object.name, outcome);
    if (!opt.trace_path.empty()) {
        save_trace(opt.trace_path, trace);
        std::cout << "trace written to " << opt.trace_path << "\n";
    }
    return kExitOk;  // failed grasps are outcomes, not errors
}

int cmd_psd(const PsdOptions& opt) {
    const TrialRecording trial = load_trial(opt.trial_path);
    const SignalSeries force =
        raw_gripping_force(trial.force_thumb, trial.force_index, trial.sample_rate_hz);
    const Spectrum spec = psd(force);

    std::ostringstream out;
    out << "frequency_hz,power\n";
    for (std::size_t i = 0; i < spec.frequencies_hz.size(); ++i) {
        out << csv::format_double_compact(spec.frequencies_hz[i]) << ','
            << csv::format_double_compact(spec.power[i]) << '\n';
    }
    csv::write_file(opt.out_path, out.str());

    const double below = spec.power_below(15.0);
    const double total = spec.total_power();
    std::printf("power below 15 Hz: %.2f%% of total\n", total > 0.0 ? 100.0 * below / total : 0.0);
    std::cout << "spectrum written to " << opt.out_path << "\n";
    return kExitOk;
}

int cmd_report(const ReportOptions& opt) {
    const std::vector<ObjectSpec> objects =
        opt.objects_path.empty() ? builtin_objects() : load_objects(opt.objects_path);

    std::ostringstream out;
    out << "object,predicted_n,real_n,percent_of_max,outcome\n";
    std::size_t successes = 0;
    const auto cases = benchmark_cases();
    for (const auto& c : cases) {
        const ObjectSpec& object = find_object(objects, c.object);
        const auto [trace, outcome] =
            run_grasp(object, plateau_reference(c.reference_n), opt.gains);
        print_grasp_row(object.name, outcome);
        out << object.name << ',' << csv::format_double_compact(outcome.final_ref_n) << ','
            << csv::format_double_compact(outcome.final_real_n) << ','
            << csv::format_double_compact(outcome.percent_of_max) << ','
            << to_string(outcome.result) << '\n';
        if (outcome.result == GraspResult::Success) ++successes;
        if (!opt.trace_dir.empty()) {
            fs::create_directories(opt.trace_dir);
            save_trace((fs::path(opt.trace_dir) / (object.name + "_trace.csv")).string(), trace);
        }
    }
    std::printf("%zu/%zu grasps succeeded\n", successes, cases.size());
    if (!opt.out_path.empty()) {
        csv::write_file(opt.out_path, out.str());
        std::cout << "report written to " << opt.out_path << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sEMG-driven gripping-force prediction and force-guided grasp simulation"};
    app.require_subcommand(1);
    app.set_config("--config")->envname("EMGRIP_CONFIG");

    SynthOptions synth_opt;
    auto* synth = app.add_subcommand("synth", "Generate synthetic ramp and MVC trials");
    synth->add_option("--out-dir", synth_opt.out_dir, "Output directory");
    synth->add_option("--trials", synth_opt.ramp_trials, "Number of ramp trials");
    synth->add_option("--mvc-trials", synth_opt.mvc_trials, "Number of MVC trials");
    synth->add_option("--seed", synth_opt.config.seed, "Master seed");
    synth->add_option("--channels", synth_opt.config.n_channels, "EMG channels");
    synth->add_option("--rate", synth_opt.config.sample_rate_hz, "Sample rate (Hz)");
    synth->add_option("--fmax", synth_opt.config.f_max_n, "Peak fingertip force (N)");
    synth->add_option("--emd", synth_opt.config.emd_ms, "Electromechanical delay (ms)");
    synth->add_option("--duration", synth_opt.config.ramp_duration_s, "Ramp duration (s)");
    synth->add_option("--label-noise", synth_opt.config.label_noise_n, "Force sensor noise (N)");

    TrainOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "Calibrate MVC, segment, and train the model");
    train_cmd->add_option("--data-dir", train_opt.data_dir, "Directory with trial/MVC CSVs");
    train_cmd->add_option("--model", train_opt.model_path, "Output model file");
    train_cmd->add_option("--curves", train_opt.curves_path, "Training curves CSV");
    train_cmd->add_option("--mvc-out", train_opt.mvc_path, "MVC profile CSV");
    train_cmd->add_flag("--grid", train_opt.grid, "Run 10-fold grid-search cross-validation");
    train_cmd->add_option("--grid-epochs", train_opt.grid_epochs, "Epoch cap per CV fit");
    train_cmd->add_option("--grid-folds", train_opt.grid_folds, "CV folds");
    train_cmd->add_option("--jobs", train_opt.jobs, "Parallel CV workers");
    train_cmd->add_option("--batch", train_opt.config.batch_size, "Mini-batch size");
    train_cmd->add_option("--lr", train_opt.config.learning_rate, "Learning rate");
    train_cmd->add_option("--decay", train_opt.config.weight_decay, "L2 weight decay");
    train_cmd->add_option("--hidden", train_opt.config.hidden_nodes, "Hidden nodes per layer");
    train_cmd->add_option("--epochs", train_opt.config.max_epochs, "Epoch cap");
    train_cmd->add_option("--patience", train_opt.config.patience, "Early-stopping patience");
    train_cmd->add_option("--seed", train_opt.config.seed, "Training seed");

    EvalOptions eval_opt;
    auto* eval_cmd = app.add_subcommand("eval", "Batch-mode evaluation against trial labels");
    eval_cmd->add_option("--model", eval_opt.model_path, "Model file");
    eval_cmd->add_option("--trial", eval_opt.trial_path, "Trial CSV")->required();
    eval_cmd->add_option("--out", eval_opt.out_path, "Prediction CSV");
    eval_cmd->add_option("--smooth", eval_opt.smooth_width, "Moving-average width");

    StreamOptions stream_opt;
    auto* stream_cmd = app.add_subcommand("stream", "Replay a trial through the online predictor");
    stream_cmd->add_option("--model", stream_opt.model_path, "Model file");
    stream_cmd->add_option("--trial", stream_opt.trial_path, "Trial CSV")->required();
    stream_cmd->add_option("--out", stream_opt.out_path, "Emission CSV")->required();
    stream_cmd->add_option("--output-rate", stream_opt.output_rate_hz, "Reference rate (Hz)");

    GraspOptions grasp_opt;
    auto* grasp_cmd = app.add_subcommand("grasp", "Run one force-guided grasp simulation");
    grasp_cmd->add_option("--object", grasp_opt.object_name, "Object name")->required();
    grasp_cmd->add_option("--objects", grasp_opt.objects_path, "Object spec file");
    grasp_cmd->add_option("--plateau", grasp_opt.plateau_n, "Constant reference force (N)");
    grasp_cmd->add_option("--refs", grasp_opt.refs_path, "Reference CSV (timestamp_s,force_n)");
    grasp_cmd->add_option("--trial", grasp_opt.trial_path, "Trial CSV for live replay");
    grasp_cmd->add_option("--model", grasp_opt.model_path, "Model file for live replay");
    grasp_cmd->add_option("--trace", grasp_opt.trace_path, "Trace CSV");
    grasp_cmd->add_option("--kp", grasp_opt.gains.kp, "Admittance Kp (mm/N)");
    grasp_cmd->add_option("--kd", grasp_opt.gains.kd, "Admittance Kd (mm/N)");

    PsdOptions psd_opt;
    auto* psd_cmd = app.add_subcommand("psd", "Power spectral density of the gripping force");
    psd_cmd->add_option("--trial", psd_opt.trial_path, "Trial CSV")->required();
    psd_cmd->add_option("--out", psd_opt.out_path, "Spectrum CSV")->required();

    ReportOptions report_opt;
    auto* report_cmd = app.add_subcommand("report", "Benchmark grasp suite over all objects");
    report_cmd->add_option("--objects", report_opt.objects_path, "Object spec file");
    report_cmd->add_option("--out", report_opt.out_path, "Report CSV");
    report_cmd->add_option("--trace-dir", report_opt.trace_dir, "Directory for per-object traces");
    report_cmd->add_option("--kp", report_opt.gains.kp, "Admittance Kp (mm/N)");
    report_cmd->add_option("--kd", report_opt.gains.kd, "Admittance Kd (mm/N)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return kExitUsageError;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_opt);
        if (train_cmd->parsed()) return cmd_train(train_opt);
        if (eval_cmd->parsed()) return cmd_eval(eval_opt);
        if (stream_cmd->parsed()) return cmd_stream(stream_opt);
        if (grasp_cmd->parsed()) return cmd_grasp(grasp_opt);
        if (psd_cmd->parsed()) return cmd_psd(psd_opt);
        if (report_cmd->parsed()) return cmd_report(report_opt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomainError;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return kExitDomainError;
    }
    return kExitUsageError;
}
