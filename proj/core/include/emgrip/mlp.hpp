#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emgrip/series.hpp"

namespace emgrip {

// Fully connected layer; weights row-major [out][in], separate bias.
struct MlpLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out * in
    std::vector<double> bias;     // out

    double& w(std::size_t r, std::size_t c) { return weights[r * in + c]; }
    double w(std::size_t r, std::size_t c) const { return weights[r * in + c]; }
};

// Two ReLU hidden layers and a linear scalar output.
struct MlpModel {
    std::vector<MlpLayer> layers;  // sizes [in, H, H, 1]

    std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t parameter_count() const;

    double forward(std::span<const double> x) const;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    double learning_rate = 0.001;
    double weight_decay = 0.01;  // lambda on the squared L2 norm of weights
    std::size_t hidden_nodes = 15;
    std::size_t max_epochs = 50;
    std::size_t patience = 10;   // epochs without validation improvement
    std::uint64_t seed = 0;
    // Metrics cadence in optimizer iterations; 0 = once per epoch.
    std::size_t eval_every_iters = 0;
};

// Same shapes as the model parameters; also used to hold gradients.
struct ParamBlock {
    std::vector<std::vector<double>> weights;  // per layer
    std::vector<std::vector<double>> bias;

    static ParamBlock zeros_like(const MlpModel& model);
};

struct AdamState {
    ParamBlock m;
    ParamBlock v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(const MlpModel& model);
};

// RMSE and R^2 on train and validation sets at each evaluation point.
struct TrainingCurves {
    std::vector<std::size_t> iteration;
    std::vector<std::size_t> epoch;
    std::vector<double> train_rmse;
    std::vector<double> train_r2;
    std::vector<double> val_rmse;
    std::vector<double> val_r2;
};

// Feature matrix plus labels; rows are windows.
struct RegressionSet {
    std::vector<FeatureVector> x;
    std::vector<double> y;

    std::size_t size() const { return y.size(); }
    bool empty() const { return y.empty(); }
};

struct TrainResult {
    MlpModel model;
    TrainingCurves curves;
    double best_val_rmse = 0.0;
    std::size_t best_epoch = 0;
};

// He-scaled weights (variance 2 / fan_in), zero biases; deterministic per seed.
MlpModel init_mlp(std::size_t input_size, std::size_t hidden_nodes, std::uint64_t seed);

// Mean squared error over the batch plus weight_decay * ||W||^2 (biases
// excluded from the penalty).
double loss(const MlpModel& model, const RegressionSet& batch, double weight_decay);

// Exact gradients of the loss; ReLU subgradient at 0 taken as 0.
ParamBlock backward(const MlpModel& model, const RegressionSet& batch, double weight_decay);

// Standard bias-corrected update; increments state.t.
void adam_step(AdamState& state, MlpModel& model, const ParamBlock& grad, double learning_rate);

// Shuffled mini-batches per epoch, per-epoch metrics, early stopping that
// restores the best-validation-RMSE parameters.
TrainResult train(MlpModel model, const RegressionSet& train_set, const RegressionSet& val_set,
                  const TrainConfig& config);

struct GridSpec {
    std::vector<std::size_t> batch_sizes{32, 64, 128};
    std::vector<double> learning_rates{0.01, 0.005, 0.001, 0.0001};
    std::vector<double> weight_decays{0.05, 0.01, 0.005};
    std::vector<std::size_t> hidden_nodes{10, 15, 20};

    std::size_t point_count() const;
    std::vector<TrainConfig> enumerate(const TrainConfig& base) const;
};

struct GridSearchResult {
    TrainConfig best;
    std::vector<std::pair<TrainConfig, double>> scores;  // mean CV RMSE per point
};

// k-fold cross-validation with contiguous fold blocks (windows overlap
// heavily, so random assignment would leak). Ties break toward smaller
// hidden size, then smaller learning rate.
GridSearchResult grid_search_cv(const RegressionSet& windows, const GridSpec& grid,
                                std::size_t k, const TrainConfig& base,
                                std::size_t jobs = 1);

double r2(std::span<const double> predictions, std::span<const double> labels);
double rmse(std::span<const double> predictions, std::span<const double> labels);

// Per-feature affine map fitted on the training set and stored with the
// model so the online path applies the identical transform.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> std_dev;

    static FeatureScaler fit(const std::vector<FeatureVector>& x);
    FeatureVector apply(std::span<const double> x) const;
};

// The persisted artifact: network, feature scaling, and the MVC profile the
// features were normalized with.
struct ForceModel {
    MlpModel net;
    FeatureScaler scaler;
    MvcProfile mvc;

    double predict(std::span<const double> features) const;
};

void save_model(const std::string& path, const ForceModel& model);
ForceModel load_model(const std::string& path);

void save_curves(const std::string& path, const TrainingCurves& curves);

}  // namespace emgrip
