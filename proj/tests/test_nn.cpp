#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "ptcflow/nn.hpp"
#include "ptcflow/rng.hpp"

using namespace ptcflow;

namespace {

Normalizer identity_normalizer() {
    Normalizer nm;
    nm.mean.fill(0.0);
    nm.stddev.fill(1.0);
    return nm;
}

// independently coded straight-line evaluation used as the forward oracle
double forward_reference(const MlpModel& m, const FeatureVector& raw) {
    std::vector<double> x(kFeatureCount);
    for (int i = 0; i < kFeatureCount; ++i)
        x[i] = (raw[i] - m.normalizer.mean[i]) / m.normalizer.stddev[i];
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        std::vector<double> y(m.dims[l + 1], 0.0);
        for (int r = 0; r < m.dims[l + 1]; ++r) {
            y[r] = m.biases[l][r];
            for (int c = 0; c < m.dims[l]; ++c) y[r] += m.weights[l][r * m.dims[l] + c] * x[c];
        }
        if (l + 1 < m.weights.size())
            for (auto& v : y) v = v > 0.0 ? v : 0.0;
        x = y;
    }
    return x[0];
}

Dataset synthetic_dataset(int n, std::uint64_t seed, bool mean_target) {
    Rng rng(seed);
    Dataset ds;
    for (int i = 0; i < n; ++i) {
        FeatureVector f;
        double mean = 0.0;
        for (auto& x : f) {
            x = rng.normal();
            mean += x;
        }
        mean /= kFeatureCount;
        ds.features.push_back(f);
        ds.targets.push_back(mean_target ? mean : 0.25);
        ds.provenance.push_back({"synthetic", 0, i});
    }
    assign_splits(ds, seed ^ 1234);
    return ds;
}

}  // namespace

TEST_CASE("all-zero parameters map everything to zero") {
    MlpModel m = init_model({124, 16, 16, 1}, 3, identity_normalizer());
    for (auto& w : m.weights)
        for (auto& x : w) x = 0.0;
    FeatureVector f;
    Rng rng(4);
    for (auto& x : f) x = rng.normal();
    CHECK(m.forward(f) == 0.0);
}

TEST_CASE("hand-built single-unit network computes relu of x0") {
    MlpModel m = init_model({124, 1, 1}, 0, identity_normalizer());
    for (auto& w : m.weights)
        for (auto& x : w) x = 0.0;
    m.weights[0][0] = 1.0;  // first hidden unit reads x0
    m.weights[1][0] = 1.0;  // output passes it through
    FeatureVector f{};
    f[0] = 2.5;
    CHECK(m.forward(f) == 2.5);
    f[0] = -2.5;
    CHECK(m.forward(f) == 0.0);
}

TEST_CASE("forward matches an independent evaluator on random networks") {
    Rng rng(11);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        MlpModel m = init_model({124, 16, 16, 1}, seed, identity_normalizer());
        for (int t = 0; t < 5; ++t) {
            FeatureVector f;
            for (auto& x : f) x = rng.normal();
            const double a = m.forward(f);
            const double b = forward_reference(m, f);
            CHECK(a == doctest::Approx(b).epsilon(1e-12));
        }
    }
}

TEST_CASE("output scales with the final layer only") {
    MlpModel m = init_model({124, 16, 16, 1}, 9, identity_normalizer());
    FeatureVector f;
    Rng rng(12);
    for (auto& x : f) x = rng.normal();
    const double y = m.forward(f);
    MlpModel scaled = m;
    for (auto& w : scaled.weights.back()) w *= 3.0;
    for (auto& b : scaled.biases.back()) b *= 3.0;
    CHECK(scaled.forward(f) == doctest::Approx(3.0 * y).epsilon(1e-13));
}

TEST_CASE("training fits a linear target") {
    Dataset ds = synthetic_dataset(1024, 21, true);
    TrainConfig cfg;
    cfg.seed = 5;
    cfg.max_epochs = 500;
    cfg.batch_size = 32;
    cfg.log_targets = false;
    const TrainResult r = train(ds, cfg);
    // training RMSE at the restored best epoch
    CHECK(r.train_rmse[r.best_epoch] < 1e-2);
    // a constant predictor would sit at the target deviation (~0.09)
}

TEST_CASE("training a constant target converges to the constant predictor") {
    Dataset ds = synthetic_dataset(256, 22, false);
    TrainConfig cfg;
    cfg.seed = 6;
    cfg.max_epochs = 800;
    cfg.batch_size = 32;
    cfg.log_targets = false;
    const TrainResult r = train(ds, cfg);
    // the loss falls to (near) the zero deviation floor of constant targets
    double best_train = 1e300;
    for (double v : r.train_rmse) best_train = std::min(best_train, v);
    CHECK(best_train < 2.5e-2);
    CHECK(best_train < 0.02 * r.train_rmse.front());
    // and the fitted function returns the constant on the data it saw
    double mean_pred = 0.0;
    const auto idx = ds.indices_of(Split::Train);
    for (std::size_t i : idx) mean_pred += r.model.forward(ds.features[i]);
    mean_pred /= double(idx.size());
    CHECK(mean_pred == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("best-so-far validation loss is nonincreasing") {
    Dataset ds = synthetic_dataset(256, 23, true);
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.max_epochs = 120;
    cfg.batch_size = 64;
    cfg.log_targets = false;
    const TrainResult r = train(ds, cfg);
    double best = 1e300;
    for (double v : r.val_rmse) {
        const double prev = best;
        best = std::min(best, v);
        CHECK(best <= prev);
    }
    CHECK(r.model.final_val_rmse == doctest::Approx(best));
}

TEST_CASE("gradient check passes for the architecture shortlist") {
    Rng rng(31);
    std::vector<FeatureVector> xs(16);
    std::vector<double> ys(16);
    for (int i = 0; i < 16; ++i) {
        for (auto& x : xs[i]) x = rng.normal();
        ys[i] = rng.normal();
    }
    for (const auto& dims : {std::vector<int>{124, 16, 16, 1},
                             std::vector<int>{124, 64, 64, 64, 1},
                             std::vector<int>{124, 256, 256, 256, 256, 1}}) {
        MlpModel m = init_model(dims, 77, identity_normalizer());
        CHECK(gradient_check(m, xs, ys, 100, 5) < 1e-5);
    }
}

TEST_CASE("gradient check is zero for a zero model with zero targets") {
    MlpModel m = init_model({124, 16, 16, 1}, 1, identity_normalizer());
    for (auto& w : m.weights)
        for (auto& x : w) x = 0.0;
    std::vector<FeatureVector> xs(4);
    Rng rng(2);
    for (auto& f : xs)
        for (auto& x : f) x = rng.normal();
    const std::vector<double> ys(4, 0.0);
    CHECK(gradient_check(m, xs, ys) == 0.0);
}

TEST_CASE("gradient check still passes after a few training steps") {
    Dataset ds = synthetic_dataset(128, 24, true);
    TrainConfig cfg;
    cfg.seed = 8;
    cfg.max_epochs = 10;
    cfg.batch_size = 32;
    cfg.log_targets = false;
    const TrainResult r = train(ds, cfg);
    Rng rng(3);
    std::vector<FeatureVector> xs(8);
    std::vector<double> ys(8);
    for (int i = 0; i < 8; ++i) {
        for (auto& x : xs[i]) x = rng.normal();
        ys[i] = rng.normal();
    }
    MlpModel probe = r.model;
    probe.normalizer = identity_normalizer();
    CHECK(gradient_check(probe, xs, ys, 100, 6) < 1e-5);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
    Dataset ds = synthetic_dataset(200, 25, true);
    TrainConfig cfg;
    cfg.seed = 99;
    cfg.max_epochs = 40;
    cfg.batch_size = 64;
    cfg.log_targets = false;
    const TrainResult a = train(ds, cfg);
    const TrainResult b = train(ds, cfg);
    REQUIRE(a.model.weights.size() == b.model.weights.size());
    for (std::size_t l = 0; l < a.model.weights.size(); ++l) {
        CHECK(a.model.weights[l] == b.model.weights[l]);
        CHECK(a.model.biases[l] == b.model.biases[l]);
    }
    CHECK(a.train_rmse == b.train_rmse);
}

TEST_CASE("model files round-trip bit-exactly") {
    Dataset ds = synthetic_dataset(128, 26, true);
    TrainConfig cfg;
    cfg.seed = 17;
    cfg.max_epochs = 20;
    cfg.batch_size = 64;
    const TrainResult r = train(ds, cfg);

    const std::string path = "model_roundtrip_test.txt";
    save_model(r.model, path);
    const MlpModel loaded = load_model(path);
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
        FeatureVector f;
        for (auto& x : f) x = rng.normal();
        CHECK(loaded.forward(f) == r.model.forward(f));
    }
    CHECK(loaded.log_targets == r.model.log_targets);
    std::remove(path.c_str());
}

TEST_CASE("corrupted model headers are rejected") {
    const std::string path = "model_corrupt_test.txt";
    {
        std::ofstream f(path);
        f << "not-a-model 7\n";
    }
    CHECK_THROWS_AS(load_model(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("degenerate grid search returns its only architecture") {
    Dataset ds = synthetic_dataset(120, 27, true);
    TrainConfig cfg;
    cfg.seed = 4;
    cfg.max_epochs = 5;
    cfg.batch_size = 32;
    cfg.log_targets = false;
    const auto rows = grid_search(ds, cfg, {2}, {16}, 3);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].hidden_layers == 2);
    CHECK(rows[0].width == 16);

    const auto rerun = grid_search(ds, cfg, {2}, {16}, 3);
    CHECK(rows[0].mean_val_rmse == rerun[0].mean_val_rmse);
}

TEST_CASE("splits are sized 70/15/15") {
    Dataset ds;
    ds.features.resize(48000);
    ds.targets.assign(48000, 1.0);
    ds.provenance.resize(48000);
    assign_splits(ds, 123);
    std::size_t ntr = 0, nte = 0, nva = 0;
    for (Split s : ds.split) {
        if (s == Split::Train) ++ntr;
        else if (s == Split::Test) ++nte;
        else ++nva;
    }
    CHECK(ntr == 33600);
    CHECK(nte == 7200);
    CHECK(nva == 7200);
}

TEST_CASE("grid-search folds partition the train split") {
    Dataset ds = synthetic_dataset(90, 28, true);
    const auto train_idx = ds.indices_of(Split::Train);
    const int folds = 6;
    // replicate the fold rule: position k in the shuffled order joins fold k % folds
    std::vector<std::size_t> counts(folds, 0);
    for (std::size_t k = 0; k < train_idx.size(); ++k) ++counts[k % folds];
    std::size_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == train_idx.size());
}

TEST_CASE("dataset csv round-trips") {
    Dataset ds = synthetic_dataset(32, 29, true);
    const std::string path = "dataset_roundtrip_test.csv";
    const std::string spath = "splits_roundtrip_test.csv";
    save_dataset_csv(ds, path);
    save_splits_csv(ds, spath);
    Dataset loaded = load_dataset_csv(path);
    load_splits_csv(loaded, spath);
    REQUIRE(loaded.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(loaded.features[i] == ds.features[i]);
        CHECK(loaded.targets[i] == ds.targets[i]);
        CHECK(loaded.provenance[i].config_id == ds.provenance[i].config_id);
        CHECK(loaded.split[i] == ds.split[i]);
    }
    std::remove(path.c_str());
    std::remove(spath.c_str());
}
