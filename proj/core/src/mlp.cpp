#include "emgrip/mlp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "emgrip/csv.hpp"
#include "emgrip/errors.hpp"
#include "emgrip/rng.hpp"

namespace emgrip {

namespace {

struct ForwardCache {
    std::vector<double> z1, h1, z2, h2;
    double f = 0.0;
};

void forward_cached(const MlpModel& model, std::span<const double> x, ForwardCache& cache) {
    const MlpLayer& l1 = model.layers[0];
    const MlpLayer& l2 = model.layers[1];
    const MlpLayer& l3 = model.layers[2];

    cache.z1.resize(l1.out);
    cache.h1.resize(l1.out);
    for (std::size_t r = 0; r < l1.out; ++r) {
        double acc = l1.bias[r];
        for (std::size_t c = 0; c < l1.in; ++c) acc += l1.w(r, c) * x[c];
        cache.z1[r] = acc;
        cache.h1[r] = acc > 0.0 ? acc : 0.0;
    }
    cache.z2.resize(l2.out);
    cache.h2.resize(l2.out);
    for (std::size_t r = 0; r < l2.out; ++r) {
        double acc = l2.bias[r];
        for (std::size_t c = 0; c < l2.in; ++c) acc += l2.w(r, c) * cache.h1[c];
        cache.z2[r] = acc;
        cache.h2[r] = acc > 0.0 ? acc : 0.0;
    }
    double acc = l3.bias[0];
    for (std::size_t c = 0; c < l3.in; ++c) acc += l3.w(0, c) * cache.h2[c];
    cache.f = acc;
}

std::vector<double> predict_all(const MlpModel& model, const RegressionSet& set) {
    std::vector<double> out(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) out[i] = model.forward(set.x[i]);
    return out;
}

double squared_weight_norm(const MlpModel& model) {
    double acc = 0.0;
    for (const auto& layer : model.layers) {
        for (double w : layer.weights) acc += w * w;
    }
    return acc;
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
    return n;
}

double MlpModel::forward(std::span<const double> x) const {
    if (layers.size() != 3) throw ConfigError("model must have exactly three layers");
    if (x.size() != layers.front().in) {
        throw ArgumentError("input has " + std::to_string(x.size()) + " features, model expects " +
                            std::to_string(layers.front().in));
    }
    ForwardCache cache;
    forward_cached(*this, x, cache);
    return cache.f;
}

ParamBlock ParamBlock::zeros_like(const MlpModel& model) {
    ParamBlock block;
    for (const auto& layer : model.layers) {
        block.weights.emplace_back(layer.weights.size(), 0.0);
        block.bias.emplace_back(layer.bias.size(), 0.0);
    }
    return block;
}

AdamState AdamState::init(const MlpModel& model) {
    AdamState state;
    state.m = ParamBlock::zeros_like(model);
    state.v = ParamBlock::zeros_like(model);
    return state;
}

MlpModel init_mlp(std::size_t input_size, std::size_t hidden_nodes, std::uint64_t seed) {
    if (input_size == 0 || hidden_nodes == 0) throw ArgumentError("layer sizes must be positive");
    MlpModel model;
    const std::size_t sizes[4] = {input_size, hidden_nodes, hidden_nodes, 1};
    auto rng = make_rng(seed, 0x3117);
    for (int l = 0; l < 3; ++l) {
        MlpLayer layer;
        layer.in = sizes[l];
        layer.out = sizes[l + 1];
        layer.weights.resize(layer.in * layer.out);
        layer.bias.assign(layer.out, 0.0);
        std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(layer.in)));
        for (double& w : layer.weights) w = he(rng);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

double loss(const MlpModel& model, const RegressionSet& batch, double weight_decay) {
    if (batch.empty()) throw ArgumentError("loss over an empty batch");
    double mse = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double err = model.forward(batch.x[i]) - batch.y[i];
        mse += err * err;
    }
    mse /= static_cast<double>(batch.size());
    return mse + weight_decay * squared_weight_norm(model);
}

ParamBlock backward(const MlpModel& model, const RegressionSet& batch, double weight_decay) {
    if (batch.empty()) throw ArgumentError("backward over an empty batch");
    const MlpLayer& l1 = model.layers[0];
    const MlpLayer& l2 = model.layers[1];
    const MlpLayer& l3 = model.layers[2];

    ParamBlock grad = ParamBlock::zeros_like(model);
    ForwardCache cache;
    std::vector<double> dz2(l2.out), dz1(l1.out);

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::span<const double> x(batch.x[i]);
        forward_cached(model, x, cache);
        const double df = 2.0 * (cache.f - batch.y[i]) * inv_n;

        for (std::size_t c = 0; c < l3.in; ++c) grad.weights[2][c] += df * cache.h2[c];
        grad.bias[2][0] += df;

        for (std::size_t r = 0; r < l2.out; ++r) {
            dz2[r] = cache.z2[r] > 0.0 ? df * l3.w(0, r) : 0.0;
        }
        for (std::size_t r = 0; r < l2.out; ++r) {
            if (dz2[r] == 0.0) continue;
            for (std::size_t c = 0; c < l2.in; ++c) {
                grad.weights[1][r * l2.in + c] += dz2[r] * cache.h1[c];
            }
            grad.bias[1][r] += dz2[r];
        }

        for (std::size_t r = 0; r < l1.out; ++r) {
            if (cache.z1[r] <= 0.0) {
                dz1[r] = 0.0;
                continue;
            }
            double acc = 0.0;
            for (std::size_t k = 0; k < l2.out; ++k) acc += dz2[k] * l2.w(k, r);
            dz1[r] = acc;
        }
        for (std::size_t r = 0; r < l1.out; ++r) {
            if (dz1[r] == 0.0) continue;
            for (std::size_t c = 0; c < l1.in; ++c) {
                grad.weights[0][r * l1.in + c] += dz1[r] * x[c];
            }
            grad.bias[0][r] += dz1[r];
        }
    }

    if (weight_decay != 0.0) {
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            const auto& w = model.layers[l].weights;
            for (std::size_t i = 0; i < w.size(); ++i) {
                grad.weights[l][i] += 2.0 * weight_decay * w[i];
            }
        }
    }
    return grad;
}

void adam_step(AdamState& state, MlpModel& model, const ParamBlock& grad, double learning_rate) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    auto update = [&](std::vector<double>& params, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        update(model.layers[l].weights, state.m.weights[l], state.v.weights[l], grad.weights[l]);
        update(model.layers[l].bias, state.m.bias[l], state.v.bias[l], grad.bias[l]);
    }
}

double r2(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) throw ArgumentError("r2: length mismatch");
    if (labels.empty()) throw ArgumentError("r2 of empty data");
    const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) /
                        static_cast<double>(labels.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ss_res += (labels[i] - predictions[i]) * (labels[i] - predictions[i]);
        ss_tot += (labels[i] - mean) * (labels[i] - mean);
    }
    if (ss_tot == 0.0) throw MetricError("R^2 undefined: labels have zero variance");
    return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) throw ArgumentError("rmse: length mismatch");
    if (labels.empty()) throw ArgumentError("rmse of empty data");
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        acc += (predictions[i] - labels[i]) * (predictions[i] - labels[i]);
    }
    return std::sqrt(acc / static_cast<double>(labels.size()));
}

TrainResult train(MlpModel model, const RegressionSet& train_set, const RegressionSet& val_set,
                  const TrainConfig& config) {
    if (train_set.empty() || val_set.empty()) {
        throw ArgumentError("train and validation sets must be nonempty");
    }
    const std::size_t n = train_set.size();
    const std::size_t batch_size = std::min(config.batch_size, n);
    if (batch_size == 0) throw ArgumentError("batch size must be positive");

    AdamState adam = AdamState::init(model);
    auto shuffle_rng = make_rng(config.seed, 0x5487);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.best_val_rmse = std::numeric_limits<double>::infinity();
    MlpModel best_model = model;

    RegressionSet batch;
    std::size_t iterations = 0;
    std::size_t stale_epochs = 0;

    auto record_point = [&](std::size_t epoch) {
        const std::vector<double> tp = predict_all(model, train_set);
        const std::vector<double> vp = predict_all(model, val_set);
        result.curves.iteration.push_back(iterations);
        result.curves.epoch.push_back(epoch);
        result.curves.train_rmse.push_back(rmse(tp, train_set.y));
        result.curves.train_r2.push_back(r2(tp, train_set.y));
        result.curves.val_rmse.push_back(rmse(vp, val_set.y));
        result.curves.val_r2.push_back(r2(vp, val_set.y));
    };

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t stop = std::min(n, start + batch_size);
            batch.x.assign(stop - start, {});
            batch.y.assign(stop - start, 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                batch.x[i - start] = train_set.x[order[i]];
                batch.y[i - start] = train_set.y[order[i]];
            }
            const ParamBlock grad = backward(model, batch, config.weight_decay);
            adam_step(adam, model, grad, config.learning_rate);
            ++iterations;
            if (config.eval_every_iters > 0 && iterations % config.eval_every_iters == 0) {
                record_point(epoch);
            }
        }
        if (config.eval_every_iters == 0) record_point(epoch);

        const double val = result.curves.val_rmse.back();
        if (val < result.best_val_rmse) {
            result.best_val_rmse = val;
            result.best_epoch = epoch;
            best_model = model;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            if (stale_epochs > config.patience) break;
        }
    }

    result.model = std::move(best_model);
    return result;
}

std::size_t GridSpec::point_count() const {
    return batch_sizes.size() * learning_rates.size() * weight_decays.size() * hidden_nodes.size();
}

std::vector<TrainConfig> GridSpec::enumerate(const TrainConfig& base) const {
    std::vector<TrainConfig> points;
    for (std::size_t b : batch_sizes) {
        for (double lr : learning_rates) {
            for (double wd : weight_decays) {
                for (std::size_t h : hidden_nodes) {
                    TrainConfig c = base;
                    c.batch_size = b;
                    c.learning_rate = lr;
                    c.weight_decay = wd;
                    c.hidden_nodes = h;
                    points.push_back(c);
                }
            }
        }
    }
    return points;
}

GridSearchResult grid_search_cv(const RegressionSet& windows, const GridSpec& grid,
                                std::size_t k, const TrainConfig& base, std::size_t jobs) {
    const std::size_t n = windows.size();
    if (k < 2) throw ArgumentError("cross-validation needs k >= 2");
    if (k > n) throw ArgumentError("k exceeds the sample count");

    const std::vector<TrainConfig> points = grid.enumerate(base);
    if (points.empty()) throw ArgumentError("empty hyperparameter grid");

    // Contiguous fold blocks; neighbouring windows overlap in time, so
    // random fold assignment would leak labels across folds.
    auto fold_bounds = [&](std::size_t fold) {
        const std::size_t begin = fold * n / k;
        const std::size_t end = (fold + 1) * n / k;
        return std::pair{begin, end};
    };

    auto score_point = [&](std::size_t point_idx) {
        const TrainConfig& cfg = points[point_idx];
        double total = 0.0;
        for (std::size_t fold = 0; fold < k; ++fold) {
            const auto [begin, end] = fold_bounds(fold);
            RegressionSet fold_train, fold_val;
            for (std::size_t i = 0; i < n; ++i) {
                RegressionSet& dst = (i >= begin && i < end) ? fold_val : fold_train;
                dst.x.push_back(windows.x[i]);
                dst.y.push_back(windows.y[i]);
            }
            TrainConfig fold_cfg = cfg;
            fold_cfg.seed = mix_seed(base.seed, point_idx * 1000 + fold);
            MlpModel model =
                init_mlp(windows.x.front().size(), fold_cfg.hidden_nodes, fold_cfg.seed);
            const TrainResult r = train(std::move(model), fold_train, fold_val, fold_cfg);
            total += r.best_val_rmse;
        }
        return total / static_cast<double>(k);
    };

    std::vector<double> scores(points.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i) scores[i] = score_point(i);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<std::size_t> next{0};
        for (std::size_t j = 0; j < std::min(jobs, points.size()); ++j) {
            futures.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1)) {
                    scores[i] = score_point(i);
                }
            }));
        }
        for (auto& f : futures) f.get();
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const bool better =
            scores[i] < scores[best] ||
            (scores[i] == scores[best] &&
             (points[i].hidden_nodes < points[best].hidden_nodes ||
              (points[i].hidden_nodes == points[best].hidden_nodes &&
               points[i].learning_rate < points[best].learning_rate)));
        if (better) best = i;
    }

    GridSearchResult result;
    result.best = points[best];
    for (std::size_t i = 0; i < points.size(); ++i) result.scores.emplace_back(points[i], scores[i]);
    return result;
}

FeatureScaler FeatureScaler::fit(const std::vector<FeatureVector>& x) {
    if (x.empty()) throw ArgumentError("cannot fit a scaler on no data");
    const std::size_t dim = x.front().size();
    FeatureScaler scaler;
    scaler.mean.assign(dim, 0.0);
    scaler.std_dev.assign(dim, 0.0);
    for (const auto& row : x) {
        for (std::size_t d = 0; d < dim; ++d) scaler.mean[d] += row[d];
    }
    for (double& m : scaler.mean) m /= static_cast<double>(x.size());
    for (const auto& row : x) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = row[d] - scaler.mean[d];
            scaler.std_dev[d] += diff * diff;
        }
    }
    for (double& s : scaler.std_dev) {
        s = std::sqrt(s / static_cast<double>(x.size()));
        if (s < 1e-12) s = 1.0;  // constant feature, leave it centered
    }
    return scaler;
}

FeatureVector FeatureScaler::apply(std::span<const double> x) const {
    if (x.size() != mean.size()) throw ArgumentError("scaler dimension mismatch");
    FeatureVector out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) out[d] = (x[d] - mean[d]) / std_dev[d];
    return out;
}

double ForceModel::predict(std::span<const double> features) const {
    return net.forward(scaler.apply(features));
}

void save_model(const std::string& path, const ForceModel& model) {
    std::ostringstream out;
    out << "emgrip-model v1\n";
    out << "layers";
    out << ' ' << model.net.layers.front().in;
    for (const auto& layer : model.net.layers) out << ' ' << layer.out;
    out << '\n';

    auto write_vec = [&](const char* tag, const std::vector<double>& v) {
        out << tag;
        for (double x : v) out << ' ' << csv::format_double(x);
        out << '\n';
    };
    write_vec("scaler_mean", model.scaler.mean);
    write_vec("scaler_std", model.scaler.std_dev);
    write_vec("mvc", model.mvc.x_mvc);
    for (std::size_t l = 0; l < model.net.layers.size(); ++l) {
        out << "layer " << l << ' ' << model.net.layers[l].out << ' ' << model.net.layers[l].in
            << '\n';
        write_vec("w", model.net.layers[l].weights);
        write_vec("b", model.net.layers[l].bias);
    }
    csv::write_file(path, out.str());
}

namespace {

std::vector<double> parse_tagged_vector(const std::string& line, const std::string& tag,
                                        std::size_t line_no) {
    std::istringstream ss(line);
    std::string got;
    ss >> got;
    if (got != tag) {
        throw ParseError("line " + std::to_string(line_no) + ": expected '" + tag + "', got '" +
                         got + "'");
    }
    std::vector<double> values;
    std::string field;
    while (ss >> field) values.push_back(csv::parse_double(field, line_no));
    return values;
}

}  // namespace

ForceModel load_model(const std::string& path) {
    const std::vector<std::string> lines = csv::split_lines(csv::read_file(path));
    if (lines.empty() || lines[0] != "emgrip-model v1") {
        throw ParseError("'" + path + "' is not an emgrip model file");
    }
    std::size_t li = 1;
    auto need_line = [&]() -> const std::string& {
        if (li >= lines.size()) throw ParseError("unexpected end of model file");
        return lines[li++];
    };

    const std::vector<double> sizes_raw = parse_tagged_vector(need_line(), "layers", li);
    if (sizes_raw.size() != 4) throw ParseError("model must list four layer sizes");

    ForceModel model;
    model.scaler.mean = parse_tagged_vector(need_line(), "scaler_mean", li);
    model.scaler.std_dev = parse_tagged_vector(need_line(), "scaler_std", li);
    model.mvc.x_mvc = parse_tagged_vector(need_line(), "mvc", li);

    for (int l = 0; l < 3; ++l) {
        std::istringstream hs(need_line());
        std::string tag;
        std::size_t idx = 0, out_size = 0, in_size = 0;
        hs >> tag >> idx >> out_size >> in_size;
        if (tag != "layer" || idx != static_cast<std::size_t>(l)) {
            throw ParseError("line " + std::to_string(li) + ": malformed layer header");
        }
        MlpLayer layer;
        layer.out = out_size;
        layer.in = in_size;
        layer.weights = parse_tagged_vector(need_line(), "w", li);
        layer.bias = parse_tagged_vector(need_line(), "b", li);
        if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
            throw ParseError("line " + std::to_string(li) + ": layer size mismatch");
        }
        model.net.layers.push_back(std::move(layer));
    }
    return model;
}

void save_curves(const std::string& path, const TrainingCurves& curves) {
    std::ostringstream out;
    out << "iteration,epoch,train_rmse,train_r2,val_rmse,val_r2\n";
    for (std::size_t i = 0; i < curves.iteration.size(); ++i) {
        out << curves.iteration[i] << ',' << curves.epoch[i] << ','
            << csv::format_double_compact(curves.train_rmse[i]) << ','
            << csv::format_double_compact(curves.train_r2[i]) << ','
            << csv::format_double_compact(curves.val_rmse[i]) << ','
            << csv::format_double_compact(curves.val_r2[i]) << '\n';
    }
    csv::write_file(path, out.str());
}

}  // namespace emgrip
