#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptcflow/dataset.hpp"
#include "ptcflow/features.hpp"

namespace ptcflow {

// Multilayer perceptron with ReLU hidden layers and an affine output, plus
// the input normalizer fitted on its training split.
struct MlpModel {
    std::vector<int> dims;  // e.g. {124, 16, 16, 1}
    std::vector<std::vector<double>> weights;  // per layer, row-major dims[l+1] x dims[l]
    std::vector<std::vector<double>> biases;
    Normalizer normalizer;
    bool log_targets = true;  // trained on log(dt); predictions are exponentiated

    std::uint64_t seed = 0;
    int epochs_run = 0;
    double final_train_rmse = 0.0;
    double final_val_rmse = 0.0;

    // z-scores the input and evaluates the network; the raw scalar output
    double forward(const FeatureVector& raw) const;
    // forward plus the target transform; clipping is the caller's business
    double predict_dt(const FeatureVector& raw) const;

    std::size_t parameter_count() const;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 256;
    int max_epochs = 5000;
    int patience = 150;
    std::uint64_t seed = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    bool log_targets = true;
};

MlpModel init_model(const std::vector<int>& dims, std::uint64_t seed,
                    const Normalizer& normalizer);

struct TrainResult {
    MlpModel model;
    std::vector<double> train_rmse;  // per epoch
    std::vector<double> val_rmse;
    int best_epoch = 0;
};

// Adam on the batch RMSE of the train split; early stopping restores the
// best-validation parameters.
TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  const std::vector<int>& dims = {124, 16, 16, 1});

// RMSE of the model over raw features/targets (targets transformed per model)
double evaluate_rmse(const MlpModel& m, const std::vector<FeatureVector>& xs,
                     const std::vector<double>& ys_dt);

// Backprop versus central finite differences over up to `n_params` randomly
// chosen parameters; returns the max relative error.
double gradient_check(const MlpModel& m, const std::vector<FeatureVector>& xs,
                      const std::vector<double>& ys, int n_params = 100,
                      std::uint64_t seed = 12345);

struct GridSearchRow {
    int hidden_layers = 0;
    int width = 0;
    double mean_val_rmse = 0.0;
};

// K-fold cross validation over the train split; rows sorted best first.
std::vector<GridSearchRow> grid_search(const Dataset& ds, const TrainConfig& cfg,
                                       const std::vector<int>& hidden_layers = {2, 3, 4, 5},
                                       const std::vector<int>& widths = {16, 32, 64, 128, 256},
                                       int folds = 6);

void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);

void save_training_log(const TrainResult& r, const std::string& path);

}  // namespace ptcflow
