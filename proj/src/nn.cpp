#include "ptcflow/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ptcflow/rng.hpp"

namespace ptcflow {

namespace {

void check_dims(const MlpModel& m) {
    if (m.dims.size() < 2) throw std::invalid_argument("mlp: need at least two layer dims");
    if (m.weights.size() != m.dims.size() - 1 || m.biases.size() != m.dims.size() - 1)
        throw std::invalid_argument("mlp: layer count mismatch");
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        if (m.weights[l].size() != std::size_t(m.dims[l + 1]) * m.dims[l] ||
            m.biases[l].size() != std::size_t(m.dims[l + 1]))
            throw std::invalid_argument("mlp: weight shape mismatch");
    }
}

// forward pass storing pre-activations per layer; returns the scalar output
double forward_store(const MlpModel& m, const FeatureVector& raw,
                     std::vector<std::vector<double>>* acts) {
    std::vector<double> x(kFeatureCount);
    for (int i = 0; i < kFeatureCount; ++i)
        x[i] = (raw[i] - m.normalizer.mean[i]) / m.normalizer.stddev[i];
    if (acts) {
        acts->clear();
        acts->push_back(x);
    }
    const std::size_t nl = m.weights.size();
    for (std::size_t l = 0; l < nl; ++l) {
        const int rows = m.dims[l + 1], cols = m.dims[l];
        std::vector<double> y(rows);
        for (int r = 0; r < rows; ++r) {
            double s = m.biases[l][r];
            const double* wrow = m.weights[l].data() + std::size_t(r) * cols;
            for (int c = 0; c < cols; ++c) s += wrow[c] * x[c];
            y[r] = s;
        }
        if (l + 1 < nl)
            for (double& v : y) v = std::max(0.0, v);  // ReLU on hidden layers
        if (acts) acts->push_back(y);
        x = std::move(y);
    }
    return x[0];
}

struct ParamGrads {
    std::vector<std::vector<double>> w, b;

    static ParamGrads zeros_like(const MlpModel& m) {
        ParamGrads g;
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            g.w.emplace_back(m.weights[l].size(), 0.0);
            g.b.emplace_back(m.biases[l].size(), 0.0);
        }
        return g;
    }
};

double target_of(const TrainConfig& cfg, double dt) { return cfg.log_targets ? std::log(dt) : dt; }

// batch RMSE and its gradient; ys are already in target space
double batch_loss_and_grad(const MlpModel& m, const std::vector<const FeatureVector*>& xs,
                           const std::vector<double>& ys, ParamGrads* grads) {
    const std::size_t nb = xs.size();
    std::vector<double> preds(nb), residual(nb);
    std::vector<std::vector<std::vector<double>>> all_acts;
    if (grads) all_acts.resize(nb);
    double mse = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
        preds[i] = forward_store(m, *xs[i], grads ? &all_acts[i] : nullptr);
        residual[i] = preds[i] - ys[i];
        mse += residual[i] * residual[i];
    }
    mse /= double(nb);
    const double rmse = std::sqrt(mse);
    if (!grads) return rmse;

    // d rmse / d pred_i = residual_i / (nb * rmse)
    const double denom = std::max(rmse, 1e-300) * double(nb);
    const std::size_t nl = m.weights.size();
    for (std::size_t i = 0; i < nb; ++i) {
        const auto& acts = all_acts[i];
        std::vector<double> delta(1, residual[i] / denom);
        for (std::size_t l = nl; l-- > 0;) {
            const int rows = m.dims[l + 1], cols = m.dims[l];
            // activation of layer l input (post-ReLU for hidden layers)
            std::vector<double> input(cols);
            for (int c = 0; c < cols; ++c)
                input[c] = l == 0 ? acts[0][c] : std::max(0.0, acts[l][c]);
            for (int r = 0; r < rows; ++r) {
                grads->b[l][r] += delta[r];
                double* gw = grads->w[l].data() + std::size_t(r) * cols;
                for (int c = 0; c < cols; ++c) gw[c] += delta[r] * input[c];
            }
            if (l == 0) break;
            std::vector<double> prev(cols, 0.0);
            for (int r = 0; r < rows; ++r) {
                const double* wrow = m.weights[l].data() + std::size_t(r) * cols;
                for (int c = 0; c < cols; ++c) prev[c] += wrow[c] * delta[r];
            }
            for (int c = 0; c < cols; ++c)
                if (acts[l][c] <= 0.0) prev[c] = 0.0;  // ReLU mask
            delta = std::move(prev);
        }
    }
    return rmse;
}

}  // namespace

double MlpModel::forward(const FeatureVector& raw) const { return forward_store(*this, raw, nullptr); }

double MlpModel::predict_dt(const FeatureVector& raw) const {
    const double y = forward(raw);
    return log_targets ? std::exp(y) : y;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

MlpModel init_model(const std::vector<int>& dims, std::uint64_t seed, const Normalizer& normalizer) {
    MlpModel m;
    m.dims = dims;
    m.normalizer = normalizer;
    m.seed = seed;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double scale = std::sqrt(2.0 / dims[l]);  // He initialization
        m.weights.emplace_back(std::size_t(dims[l + 1]) * dims[l]);
        for (double& w : m.weights.back()) w = scale * rng.normal();
        m.biases.emplace_back(dims[l + 1], 0.0);
    }
    check_dims(m);
    return m;
}

double evaluate_rmse(const MlpModel& m, const std::vector<FeatureVector>& xs,
                     const std::vector<double>& ys_dt) {
    if (xs.empty()) return 0.0;
    double mse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double y = m.log_targets ? std::log(ys_dt[i]) : ys_dt[i];
        const double d = m.forward(xs[i]) - y;
        mse += d * d;
    }
    return std::sqrt(mse / double(xs.size()));
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const std::vector<int>& dims) {
    if (ds.split.size() != ds.size())
        throw std::invalid_argument("train: dataset has no split assignment");
    const auto train_idx = ds.indices_of(Split::Train);
    const auto val_idx = ds.indices_of(Split::Validation);
    if (train_idx.empty() || val_idx.empty()) throw std::invalid_argument("train: empty split");

    std::vector<FeatureVector> train_features(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) train_features[i] = ds.features[train_idx[i]];
    const Normalizer nm = fit_normalizer(train_features);

    MlpModel model = init_model(dims, cfg.seed, nm);
    model.log_targets = cfg.log_targets;

    std::vector<double> train_targets(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i)
        train_targets[i] = target_of(cfg, ds.targets[train_idx[i]]);

    ParamGrads mom = ParamGrads::zeros_like(model);
    ParamGrads vel = ParamGrads::zeros_like(model);
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    TrainResult result;
    MlpModel best_model = model;
    double best_val = std::numeric_limits<double>::max();
    int best_epoch = -1;
    long adam_step = 0;

    std::vector<std::size_t> order(train_idx.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto full_eval = [&](const std::vector<std::size_t>& idx) {
        double mse = 0.0;
        for (std::size_t i : idx) {
            const double d = model.forward(ds.features[i]) - target_of(cfg, ds.targets[i]);
            mse += d * d;
        }
        return std::sqrt(mse / double(idx.size()));
    };

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<const FeatureVector*> xs;
            std::vector<double> ys;
            xs.reserve(stop - start);
            ys.reserve(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                xs.push_back(&ds.features[train_idx[order[k]]]);
                ys.push_back(train_targets[order[k]]);
            }
            ParamGrads g = ParamGrads::zeros_like(model);
            batch_loss_and_grad(model, xs, ys, &g);
            ++adam_step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, double(adam_step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, double(adam_step));
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                auto update = [&](std::vector<double>& theta, std::vector<double>& mm,
                                  std::vector<double>& vv, const std::vector<double>& gg) {
                    for (std::size_t k = 0; k < theta.size(); ++k) {
                        mm[k] = cfg.beta1 * mm[k] + (1.0 - cfg.beta1) * gg[k];
                        vv[k] = cfg.beta2 * vv[k] + (1.0 - cfg.beta2) * gg[k] * gg[k];
                        theta[k] -= cfg.learning_rate * (mm[k] / bc1) /
                                    (std::sqrt(vv[k] / bc2) + cfg.eps);
                    }
                };
                update(model.weights[l], mom.w[l], vel.w[l], g.w[l]);
                update(model.biases[l], mom.b[l], vel.b[l], g.b[l]);
            }
        }
        const double tr = full_eval(train_idx);
        const double va = full_eval(val_idx);
        result.train_rmse.push_back(tr);
        result.val_rmse.push_back(va);
        if (va < best_val) {
            best_val = va;
            best_epoch = epoch;
            best_model = model;
        }
        if (epoch - best_epoch >= cfg.patience) break;
    }

    best_model.epochs_run = static_cast<int>(result.train_rmse.size());
    best_model.final_train_rmse = best_epoch >= 0 ? result.train_rmse[best_epoch] : 0.0;
    best_model.final_val_rmse = best_val;
    result.best_epoch = best_epoch;
    result.model = std::move(best_model);
    return result;
}

double gradient_check(const MlpModel& m, const std::vector<FeatureVector>& xs,
                      const std::vector<double>& ys, int n_params, std::uint64_t seed) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("gradient_check: bad batch");
    std::vector<const FeatureVector*> xp(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xp[i] = &xs[i];

    ParamGrads g = ParamGrads::zeros_like(m);
    batch_loss_and_grad(m, xp, ys, &g);

    // flatten addressing: (layer, is_bias, offset)
    struct Slot {
        std::size_t l;
        bool bias;
        std::size_t k;
    };
    std::vector<Slot> slots;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        for (std::size_t k = 0; k < m.weights[l].size(); ++k) slots.push_back({l, false, k});
        for (std::size_t k = 0; k < m.biases[l].size(); ++k) slots.push_back({l, true, k});
    }
    Rng rng(seed);
    rng.shuffle(slots);
    const std::size_t n_check = std::min<std::size_t>(slots.size(), std::size_t(n_params));

    // error scale: the RMS gradient; per-entry denominators would amplify
    // finite-difference cancellation noise on near-zero components
    double g_rms = 0.0;
    std::size_t g_n = 0;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        for (double v : g.w[l]) {
            g_rms += v * v;
            ++g_n;
        }
        for (double v : g.b[l]) {
            g_rms += v * v;
            ++g_n;
        }
    }
    g_rms = std::sqrt(g_rms / std::max<std::size_t>(g_n, 1));

    MlpModel probe = m;
    double max_rel = 0.0;
    for (std::size_t s = 0; s < n_check; ++s) {
        const Slot& slot = slots[s];
        double& theta = slot.bias ? probe.biases[slot.l][slot.k] : probe.weights[slot.l][slot.k];
        const double saved = theta;
        const double step = 1e-6 * std::max(1.0, std::abs(saved));
        theta = saved + step;
        const double lp = batch_loss_and_grad(probe, xp, ys, nullptr);
        theta = saved - step;
        const double lm = batch_loss_and_grad(probe, xp, ys, nullptr);
        theta = saved;
        const double fd = (lp - lm) / (2.0 * step);
        const double bp = slot.bias ? g.b[slot.l][slot.k] : g.w[slot.l][slot.k];
        const double denom = std::max({std::abs(fd), std::abs(bp), g_rms});
        if (denom < 1e-12) continue;  // everything effectively zero
        max_rel = std::max(max_rel, std::abs(fd - bp) / denom);
    }
    return max_rel;
}

std::vector<GridSearchRow> grid_search(const Dataset& ds, const TrainConfig& cfg,
                                       const std::vector<int>& hidden_layers,
                                       const std::vector<int>& widths, int folds) {
    const auto train_idx = ds.indices_of(Split::Train);
    if (train_idx.size() < std::size_t(folds))
        throw std::invalid_argument("grid_search: train split smaller than fold count");

    std::vector<std::size_t> order = train_idx;
    Rng rng(cfg.seed ^ 0xfeedULL);
    rng.shuffle(order);

    std::vector<GridSearchRow> rows;
    for (int nl : hidden_layers)
        for (int w : widths) {
            std::vector<int> dims;
            dims.push_back(kFeatureCount);
            for (int l = 0; l < nl; ++l) dims.push_back(w);
            dims.push_back(1);

            double sum = 0.0;
            for (int fold = 0; fold < folds; ++fold) {
                Dataset sub;
                for (std::size_t k = 0; k < order.size(); ++k) {
                    const std::size_t i = order[k];
                    sub.features.push_back(ds.features[i]);
                    sub.targets.push_back(ds.targets[i]);
                    sub.provenance.push_back(ds.provenance[i]);
                    const bool in_fold = k % std::size_t(folds) == std::size_t(fold);
                    sub.split.push_back(in_fold ? Split::Validation : Split::Train);
                }
                TrainResult r = train(sub, cfg, dims);
                sum += r.model.final_val_rmse;
            }
            rows.push_back({nl, w, sum / folds});
        }
    std::stable_sort(rows.begin(), rows.end(), [](const GridSearchRow& a, const GridSearchRow& b) {
        return a.mean_val_rmse < b.mean_val_rmse;
    });
    return rows;
}

void save_model(const MlpModel& m, const std::string& path) {
    check_dims(m);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_model: cannot open " + path);
    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        f << buf;
    };
    f << "ptcflow-mlp 1\n";
    f << "log_targets " << (m.log_targets ? 1 : 0) << "\n";
    f << "seed " << m.seed << " epochs " << m.epochs_run << "\n";
    f << "train_rmse ";
    put(m.final_train_rmse);
    f << " val_rmse ";
    put(m.final_val_rmse);
    f << "\n";
    f << "dims " << m.dims.size();
    for (int d : m.dims) f << " " << d;
    f << "\nnormalizer_mean";
    for (double x : m.normalizer.mean) {
        f << " ";
        put(x);
    }
    f << "\nnormalizer_std";
    for (double x : m.normalizer.stddev) {
        f << " ";
        put(x);
    }
    f << "\n";
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        f << "W" << l << " " << m.dims[l + 1] << " " << m.dims[l] << "\n";
        for (std::size_t k = 0; k < m.weights[l].size(); ++k) {
            put(m.weights[l][k]);
            f << ((k + 1) % std::size_t(m.dims[l]) == 0 ? "\n" : " ");
        }
        f << "b" << l;
        for (double x : m.biases[l]) {
            f << " ";
            put(x);
        }
        f << "\n";
    }
    // cross-check vector generated from the model seed
    Rng rng(m.seed ^ 0xc0ffee);
    FeatureVector probe;
    for (int i = 0; i < kFeatureCount; ++i)
        probe[i] = m.normalizer.mean[i] + m.normalizer.stddev[i] * rng.normal();
    f << "check_in";
    for (double x : probe) {
        f << " ";
        put(x);
    }
    f << "\ncheck_out ";
    put(m.forward(probe));
    f << "\n";
    if (!f) throw std::runtime_error("save_model: write failed for " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_model: cannot open " + path);
    std::string kw;
    int version = 0;
    f >> kw >> version;
    if (!f || kw != "ptcflow-mlp" || version != 1)
        throw std::runtime_error("load_model: bad header in " + path);
    MlpModel m;
    int flag = 0, ndims = 0;
    f >> kw >> flag;
    if (kw != "log_targets") throw std::runtime_error("load_model: expected log_targets");
    m.log_targets = flag != 0;
    f >> kw >> m.seed >> kw >> m.epochs_run;
    f >> kw >> m.final_train_rmse >> kw >> m.final_val_rmse;
    f >> kw >> ndims;
    if (kw != "dims" || ndims < 2) throw std::runtime_error("load_model: bad dims");
    m.dims.resize(ndims);
    for (int& d : m.dims) f >> d;
    f >> kw;
    if (kw != "normalizer_mean") throw std::runtime_error("load_model: expected normalizer_mean");
    for (double& x : m.normalizer.mean) f >> x;
    f >> kw;
    if (kw != "normalizer_std") throw std::runtime_error("load_model: expected normalizer_std");
    for (double& x : m.normalizer.stddev) f >> x;
    for (int l = 0; l + 1 < ndims; ++l) {
        int rows = 0, cols = 0;
        f >> kw >> rows >> cols;
        if (kw != "W" + std::to_string(l) || rows != m.dims[l + 1] || cols != m.dims[l])
            throw std::runtime_error("load_model: bad layer header");
        m.weights.emplace_back(std::size_t(rows) * cols);
        for (double& x : m.weights.back()) f >> x;
        f >> kw;
        if (kw != "b" + std::to_string(l)) throw std::runtime_error("load_model: bad bias header");
        m.biases.emplace_back(rows);
        for (double& x : m.biases.back()) f >> x;
    }
    f >> kw;
    if (kw != "check_in") throw std::runtime_error("load_model: missing check vector");
    FeatureVector probe;
    for (double& x : probe) f >> x;
    f >> kw;
    double expected = 0.0;
    f >> expected;
    if (!f || kw != "check_out") throw std::runtime_error("load_model: missing check output");
    check_dims(m);
    for (const auto& w : m.weights)
        for (double x : w)
            if (!std::isfinite(x)) throw std::runtime_error("load_model: non-finite parameter");
    if (m.forward(probe) != expected)
        throw std::runtime_error("load_model: cross-check vector mismatch in " + path);
    return m;
}

void save_training_log(const TrainResult& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_training_log: cannot open " + path);
    f << "epoch,train_rmse,val_rmse\n";
    char buf[32];
    for (std::size_t e = 0; e < r.train_rmse.size(); ++e) {
        f << e << ",";
        std::snprintf(buf, sizeof buf, "%.17g", r.train_rmse[e]);
        f << buf << ",";
        std::snprintf(buf, sizeof buf, "%.17g", r.val_rmse[e]);
        f << buf << "\n";
    }
}

}  // namespace ptcflow
