// Copyright 2026 The beamsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamsim/common.hpp"
#include "beamsim/dataset.hpp"

namespace beamsim {

enum class LossKind { Mse, CrossEntropy };

inline std::string to_string(LossKind k) { return k == LossKind::Mse ? "mse" : "cross_entropy"; }

inline LossKind parse_loss(const std::string& s) {
    if (s == "mse") return LossKind::Mse;
    if (s == "cross_entropy" || s == "ce") return LossKind::CrossEntropy;
    throw Error("unknown loss '" + s + "'");
}

struct TrainConfig {
    int epochs = 100;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
    LossKind loss = LossKind::Mse;
    bool keep_best_val = false;

    void validate() const {
        check(epochs >= 1, "TrainConfig: epochs must be >= 1");
        check(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
        check(learning_rate >= 0.0, "TrainConfig: learning_rate must be >= 0");
        check(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
              "TrainConfig: Adam betas must lie in (0, 1)");
        check(epsilon > 0.0, "TrainConfig: epsilon must be positive");
    }
};

/// Single affine layer followed by softmax: p = softmax(A^T x + b), with x
/// the z-scored parent RSRPs. A is F_p x F.
struct LinearSoftmaxModel {
    RMat weights;
    RVec bias;
    FeatureStats feature_stats;
    std::string codebook_fingerprint;
    TrainConfig train_config;

    int num_inputs() const { return static_cast<int>(weights.rows()); }
    int num_outputs() const { return static_cast<int>(weights.cols()); }

    static LinearSoftmaxModel zeros(int inputs, int outputs) {
        LinearSoftmaxModel m;
        m.weights = RMat::Zero(inputs, outputs);
        m.bias = RVec::Zero(outputs);
        return m;
    }
};

/// Max-subtracted softmax.
inline RVec softmax(const RVec& logits) {
    const double mx = logits.maxCoeff();
    RVec e = (logits.array() - mx).exp().matrix();
    return e / e.sum();
}

inline void check_finite(const RVec& x, const char* what) {
    check(x.allFinite(), std::string(what) + ": non-finite input");
}

/// Probabilities for one already-normalized feature vector.
inline RVec forward(const LinearSoftmaxModel& model, const RVec& features) {
    check(features.size() == model.weights.rows(), "forward: feature dimension mismatch");
    check_finite(features, "forward");
    return softmax(model.weights.transpose() * features + model.bias);
}

/// Indices of the k largest probabilities, descending, ties to the lower index.
inline std::vector<int> predict_top_k(const RVec& probs, int k) {
    check(k >= 1 && k <= probs.size(), "predict_top_k: k out of range");
    std::vector<int> idx(static_cast<std::size_t>(probs.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
        return probs(a) > probs(b) || (probs(a) == probs(b) && a < b);
    });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

inline double mse_loss(const RVec& probs, const RVec& one_hot) {
    check(probs.size() == one_hot.size(), "mse_loss: length mismatch");
    return (probs - one_hot).squaredNorm() / static_cast<double>(probs.size());
}

inline double cross_entropy_loss(const RVec& probs, int label) {
    return -std::log(std::max(probs(label), 1e-300));
}

inline RVec one_hot(int label, int n) {
    RVec y = RVec::Zero(n);
    y(label) = 1.0;
    return y;
}

/// Gradient of the loss with respect to the logits for one sample.
inline RVec logit_gradient(const RVec& probs, int label, LossKind loss) {
    const Eigen::Index n = probs.size();
    if (loss == LossKind::CrossEntropy) {
        RVec g = probs;
        g(label) -= 1.0;
        return g;
    }
    // dL/dp = 2 (p - y) / F, pushed through the softmax Jacobian
    // diag(p) - p p^T.
    RVec dp = (2.0 / static_cast<double>(n)) * (probs - one_hot(label, static_cast<int>(n)));
    const double s = probs.dot(dp);
    return (probs.array() * (dp.array() - s)).matrix();
}

struct LinearGradients {
    RMat d_weights;
    RVec d_bias;
    double loss = 0.0;  // mean over the batch
};

/// Mean-batch analytic gradient. `features` holds one normalized sample per
/// row, `labels` the matching class indices.
inline LinearGradients backward(const LinearSoftmaxModel& model, const RMat& features,
                                std::span<const int> labels, LossKind loss = LossKind::Mse) {
    check(features.rows() > 0, "backward: empty batch");
    check(static_cast<std::size_t>(features.rows()) == labels.size(), "backward: label count mismatch");
    check(features.cols() == model.weights.rows(), "backward: feature dimension mismatch");
    const int f = model.num_outputs();
    LinearGradients g;
    g.d_weights = RMat::Zero(model.weights.rows(), f);
    g.d_bias = RVec::Zero(f);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const RVec x = features.row(i).transpose();
        const RVec p = forward(model, x);
        check(p.allFinite(), "backward: non-finite activations");
        const int y = labels[static_cast<std::size_t>(i)];
        g.loss += loss == LossKind::Mse ? mse_loss(p, one_hot(y, f)) : cross_entropy_loss(p, y);
        const RVec dz = logit_gradient(p, y, loss);
        g.d_weights.noalias() += x * dz.transpose();
        g.d_bias += dz;
    }
    const double inv = 1.0 / static_cast<double>(features.rows());
    g.d_weights *= inv;
    g.d_bias *= inv;
    g.loss *= inv;
    return g;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamHyper from(const TrainConfig& c) { return {c.learning_rate, c.beta1, c.beta2, c.epsilon}; }
};

/// First and second moment buffers for one parameter tensor.
struct AdamMoments {
    RMat m;
    RMat v;
};

/// Bias-corrected Adam update of one tensor at step t (t counts from 1).
inline void adam_update(RMat& param, const RMat& grad, AdamMoments& mom, long t, const AdamHyper& h) {
    check(param.rows() == grad.rows() && param.cols() == grad.cols(), "adam_update: shape mismatch");
    if (mom.m.size() == 0) {
        mom.m = RMat::Zero(param.rows(), param.cols());
        mom.v = RMat::Zero(param.rows(), param.cols());
    }
    check(mom.m.rows() == param.rows() && mom.m.cols() == param.cols(), "adam_update: state shape mismatch");
    mom.m = h.beta1 * mom.m + (1.0 - h.beta1) * grad;
    mom.v = h.beta2 * mom.v + (1.0 - h.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    param.array() -= h.learning_rate * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + h.epsilon);
}

struct AdamState {
    long t = 0;
    AdamMoments weights;
    AdamMoments bias;
};

inline void adam_step(AdamState& state, LinearSoftmaxModel& model, const LinearGradients& grads,
                      const AdamHyper& h) {
    check(grads.d_weights.rows() == model.weights.rows() && grads.d_weights.cols() == model.weights.cols() &&
              grads.d_bias.size() == model.bias.size(),
          "adam_step: gradient shape mismatch");
    ++state.t;
    adam_update(model.weights, grads.d_weights, state.weights, state.t, h);
    RMat b = model.bias;
    adam_update(b, grads.d_bias, state.bias, state.t, h);
    model.bias = b.col(0);
}

// ---------------------------------------------------------------------------
// Generic fully-connected baseline: ReLU hidden layers, softmax output.
// ---------------------------------------------------------------------------

struct FcNetwork {
    std::vector<int> widths;  // input, hidden..., output
    std::vector<RMat> weights;  // layer l: widths[l] x widths[l+1]
    std::vector<RVec> biases;
    FeatureStats feature_stats;
    std::string codebook_fingerprint;

    int num_layers() const { return static_cast<int>(weights.size()); }

    void validate() const {
        check(widths.size() >= 2, "FcNetwork: need at least input and output widths");
        check(weights.size() + 1 == widths.size() && biases.size() == weights.size(),
              "FcNetwork: tensor count does not match widths");
        for (std::size_t l = 0; l < weights.size(); ++l)
            check(weights[l].rows() == widths[l] && weights[l].cols() == widths[l + 1] &&
                      biases[l].size() == widths[l + 1],
                  "FcNetwork: layer " + std::to_string(l) + " shapes do not chain");
    }
};

/// Fan-based uniform init in +-sqrt(6 / (n_i + n_o)), zero biases.
inline RMat glorot_uniform(int n_in, int n_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    RMat w(n_in, n_out);
    for (int i = 0; i < n_in; ++i)
        for (int j = 0; j < n_out; ++j) w(i, j) = u(rng);
    return w;
}

inline FcNetwork make_fc_network(const std::vector<int>& widths, std::uint64_t seed) {
    FcNetwork net;
    net.widths = widths;
    check(widths.size() >= 2, "make_fc_network: need at least two widths");
    for (int w : widths) check(w > 0, "make_fc_network: widths must be positive");
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        net.weights.push_back(glorot_uniform(widths[l], widths[l + 1], rng));
        net.biases.push_back(RVec::Zero(widths[l + 1]));
    }
    return net;
}

inline RVec forward(const FcNetwork& net, const RVec& features) {
    check(features.size() == net.widths.front(), "forward: feature dimension mismatch");
    check_finite(features, "forward");
    RVec h = features;
    for (int l = 0; l < net.num_layers(); ++l) {
        RVec z = net.weights[l].transpose() * h + net.biases[l];
        h = (l + 1 < net.num_layers()) ? RVec(z.cwiseMax(0.0)) : softmax(z);
    }
    return h;
}

struct FcGradients {
    std::vector<RMat> d_weights;
    std::vector<RVec> d_biases;
    double loss = 0.0;
};

inline FcGradients backward(const FcNetwork& net, const RMat& features, std::span<const int> labels,
                            LossKind loss = LossKind::Mse) {
    check(features.rows() > 0, "backward: empty batch");
    check(static_cast<std::size_t>(features.rows()) == labels.size(), "backward: label count mismatch");
    const int layers = net.num_layers();
    FcGradients g;
    for (int l = 0; l < layers; ++l) {
        g.d_weights.push_back(RMat::Zero(net.weights[l].rows(), net.weights[l].cols()));
        g.d_biases.push_back(RVec::Zero(net.biases[l].size()));
    }
    std::vector<RVec> acts(static_cast<std::size_t>(layers) + 1);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        acts[0] = features.row(i).transpose();
        for (int l = 0; l < layers; ++l) {
            RVec z = net.weights[l].transpose() * acts[l] + net.biases[l];
            acts[l + 1] = (l + 1 < layers) ? RVec(z.cwiseMax(0.0)) : softmax(z);
        }
        const RVec& p = acts[layers];
        check(p.allFinite(), "backward: non-finite activations");
        const int y = labels[static_cast<std::size_t>(i)];
        g.loss += loss == LossKind::Mse ? mse_loss(p, one_hot(y, static_cast<int>(p.size())))
                                        : cross_entropy_loss(p, y);
        RVec delta = logit_gradient(p, y, loss);
        for (int l = layers - 1; l >= 0; --l) {
            g.d_weights[l].noalias() += acts[l] * delta.transpose();
            g.d_biases[l] += delta;
            if (l > 0) {
                RVec back = net.weights[l] * delta;
                delta = (acts[l].array() > 0.0).select(back, 0.0);
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(features.rows());
    for (int l = 0; l < layers; ++l) {
        g.d_weights[l] *= inv;
        g.d_biases[l] *= inv;
    }
    g.loss *= inv;
    return g;
}

struct FcAdamState {
    long t = 0;
    std::vector<AdamMoments> weights;
    std::vector<AdamMoments> biases;
};

inline void adam_step(FcAdamState& state, FcNetwork& net, const FcGradients& grads, const AdamHyper& h) {
    const auto layers = static_cast<std::size_t>(net.num_layers());
    check(grads.d_weights.size() == layers && grads.d_biases.size() == layers, "adam_step: gradient shape mismatch");
    state.weights.resize(layers);
    state.biases.resize(layers);
    ++state.t;
    for (std::size_t l = 0; l < layers; ++l) {
        adam_update(net.weights[l], grads.d_weights[l], state.weights[l], state.t, h);
        RMat b = net.biases[l];
        adam_update(b, grads.d_biases[l], state.biases[l], state.t, h);
        net.biases[l] = b.col(0);
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_top1 = 0.0;
};

template <class Model>
struct TrainResult {
    Model model;
    std::vector<EpochStats> history;
};

namespace detail {

struct SplitData {
    RMat features;
    std::vector<int> labels;
};

inline SplitData gather(const Dataset& ds, const RMat& normalized, Split split) {
    const auto idx = ds.indices(split);
    SplitData out;
    out.features.resize(static_cast<Eigen::Index>(idx.size()), normalized.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out.features.row(static_cast<Eigen::Index>(k)) = normalized.row(static_cast<Eigen::Index>(idx[k]));
        out.labels.push_back(ds.samples[idx[k]].label);
    }
    return out;
}

template <class Model>
std::pair<double, double> loss_and_top1(const Model& model, const SplitData& data, LossKind loss) {
    double total = 0.0;
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
        const RVec p = forward(model, RVec(data.features.row(i).transpose()));
        const int y = data.labels[static_cast<std::size_t>(i)];
        total += loss == LossKind::Mse ? mse_loss(p, one_hot(y, static_cast<int>(p.size())))
                                       : cross_entropy_loss(p, y);
        if (predict_top_k(p, 1)[0] == y) ++hits;
    }
    const double n = static_cast<double>(data.features.rows());
    return {total / n, static_cast<double>(hits) / n};
}

inline AdamState make_adam_state(const LinearSoftmaxModel&) { return {}; }
inline FcAdamState make_adam_state(const FcNetwork&) { return {}; }

/// Mini-batch Adam loop shared by both model types. Epoch e shuffles the
/// train indices with derive_seed(seed, {e}).
template <class Model>
TrainResult<Model> run_training(Model model, const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    check(ds.count(Split::Train) > 0, "train: empty train split");
    check(ds.count(Split::Val) > 0, "train: empty validation split");
    const NormalizedFeatures nf = normalize_features(ds);
    model.feature_stats = nf.stats;
    model.codebook_fingerprint = ds.codebook_fingerprint;
    const SplitData train = gather(ds, nf.features, Split::Train);
    const SplitData val = gather(ds, nf.features, Split::Val);
    const AdamHyper hyper = AdamHyper::from(cfg);
    auto state = make_adam_state(model);

    TrainResult<Model> result;
    Model best = model;
    double best_val = -1.0;
    const auto n_train = static_cast<std::size_t>(train.features.rows());
    std::vector<std::size_t> order(n_train);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < n_train; b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t e = std::min(n_train, b + static_cast<std::size_t>(cfg.batch_size));
            RMat xb(static_cast<Eigen::Index>(e - b), train.features.cols());
            std::vector<int> yb;
            for (std::size_t k = b; k < e; ++k) {
                xb.row(static_cast<Eigen::Index>(k - b)) = train.features.row(static_cast<Eigen::Index>(order[k]));
                yb.push_back(train.labels[order[k]]);
            }
            const auto grads = backward(model, xb, std::span<const int>(yb), cfg.loss);
            loss_sum += grads.loss * static_cast<double>(e - b);
            adam_step(state, model, grads, hyper);
        }
        const auto [val_loss, val_top1] = loss_and_top1(model, val, cfg.loss);
        result.history.push_back({epoch, loss_sum / static_cast<double>(n_train), val_loss, val_top1});
        if (cfg.keep_best_val && val_top1 > best_val) {
            best_val = val_top1;
            best = model;
        }
    }
    result.model = cfg.keep_best_val ? best : model;
    return result;
}

}  // namespace detail

/// Fan-initialized linear-softmax model sized to the dataset.
inline LinearSoftmaxModel init_linear_model(int inputs, int outputs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    LinearSoftmaxModel m;
    m.weights = glorot_uniform(inputs, outputs, rng);
    m.bias = RVec::Zero(outputs);
    return m;
}

/// Trains the linear-softmax predictor. The initial weights are seeded
/// with derive_seed(cfg.seed, {0}); the final-epoch model is returned
/// unless cfg.keep_best_val is set.
inline TrainResult<LinearSoftmaxModel> train(const Dataset& ds, const TrainConfig& cfg) {
    auto model = init_linear_model(ds.num_parents, ds.num_children, derive_seed(cfg.seed, {0}));
    auto result = detail::run_training(std::move(model), ds, cfg);
    result.model.train_config = cfg;
    return result;
}

inline TrainResult<FcNetwork> train_fc(const Dataset& ds, const std::vector<int>& hidden,
                                       const TrainConfig& cfg) {
    std::vector<int> widths{ds.num_parents};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(ds.num_children);
    return detail::run_training(make_fc_network(widths, derive_seed(cfg.seed, {0})), ds, cfg);
}

/// Probabilities for a raw (dBm) parent-RSRP vector.
template <class Model>
RVec predict_proba(const Model& model, const std::vector<double>& parent_rsrp_dbm) {
    return forward(model, normalize(parent_rsrp_dbm, model.feature_stats));
}

// ---------------------------------------------------------------------------
// Model and history files
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},       {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},         {"beta2", c.beta2},           {"epsilon", c.epsilon},
            {"seed", c.seed},           {"loss", to_string(c.loss)},  {"keep_best_val", c.keep_best_val}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.loss = parse_loss(j.at("loss").get<std::string>());
    c.keep_best_val = j.at("keep_best_val").get<bool>();
    return c;
}

/// Model file: dims, row-major weights, bias, feature stats, codebook
/// fingerprint and the training config.
inline nlohmann::json model_to_json(const LinearSoftmaxModel& m) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(m.weights.size()));
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < m.weights.cols(); ++c) w.push_back(m.weights(r, c));
    return {{"format", "beamsim-linear-softmax"},
            {"version", 1},
            {"num_inputs", m.num_inputs()},
            {"num_outputs", m.num_outputs()},
            {"weights", w},
            {"bias", std::vector<double>(m.bias.data(), m.bias.data() + m.bias.size())},
            {"feature_stats", {{"mean", m.feature_stats.mean}, {"std", m.feature_stats.std}}},
            {"codebook_fingerprint", m.codebook_fingerprint},
            {"train_config", to_json(m.train_config)}};
}

inline LinearSoftmaxModel model_from_json(const nlohmann::json& j) {
    try {
        check(j.at("format").get<std::string>() == "beamsim-linear-softmax", "model file: unknown format");
        const int ni = j.at("num_inputs").get<int>();
        const int no = j.at("num_outputs").get<int>();
        const auto w = j.at("weights").get<std::vector<double>>();
        const auto b = j.at("bias").get<std::vector<double>>();
        check(ni > 0 && no > 0 && w.size() == static_cast<std::size_t>(ni) * no && b.size() == static_cast<std::size_t>(no),
              "model file: dimensions do not match stored tensors");
        LinearSoftmaxModel m = LinearSoftmaxModel::zeros(ni, no);
        for (int r = 0; r < ni; ++r)
            for (int c = 0; c < no; ++c) m.weights(r, c) = w[static_cast<std::size_t>(r) * no + c];
        for (int c = 0; c < no; ++c) m.bias(c) = b[static_cast<std::size_t>(c)];
        m.feature_stats.mean = j.at("feature_stats").at("mean").get<std::vector<double>>();
        m.feature_stats.std = j.at("feature_stats").at("std").get<std::vector<double>>();
        check(m.feature_stats.mean.size() == static_cast<std::size_t>(ni) &&
                  m.feature_stats.std.size() == static_cast<std::size_t>(ni),
              "model file: feature stats have the wrong length");
        m.codebook_fingerprint = j.at("codebook_fingerprint").get<std::string>();
        m.train_config = train_config_from_json(j.at("train_config"));
        check(m.weights.allFinite() && m.bias.allFinite(), "model file: non-finite parameters");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("model file: ") + e.what());
    }
}

inline void write_history_csv(const std::vector<EpochStats>& history, std::ostream& os) {
    os << "epoch,train_loss,val_loss,val_top1\n";
    for (const auto& h : history)
        os << h.epoch << ',' << format_g(h.train_loss) << ',' << format_g(h.val_loss) << ','
           << format_g(h.val_top1) << '\n';
}

}  // namespace beamsim
