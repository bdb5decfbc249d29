// Copyright 2026 The cvqw Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cvqw/learn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cvqw/util.hpp"

namespace cvqw {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads assume a little-endian host");

constexpr double kLayerNormEpsilon = 1e-5;
constexpr double kPi = 3.14159265358979323846;

void check_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 2) {
        throw UsageError("MLP needs at least an input and an output layer");
    }
    for (int s : sizes) {
        if (s <= 0) throw UsageError("MLP layer sizes must be positive");
    }
    if (sizes.back() != 1) {
        throw UsageError("MLP output layer must have exactly one unit");
    }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const char* kind_name(ParamKind kind) {
    switch (kind) {
        case ParamKind::kRotation: return "rotation";
        case ParamKind::kBsTheta: return "bs_theta";
        case ParamKind::kBsPhi: return "bs_phi";
        case ParamKind::kSqueeze: return "squeeze";
        case ParamKind::kDispRe: return "disp_re";
        case ParamKind::kDispIm: return "disp_im";
        case ParamKind::kKerr: return "kerr";
    }
    return "unknown";
}

/// Adds delta to one scalar of a layer, addressed in flatten() order.
void bump_layer_slot(LayerParams& layer, const ModeShape& shape, int slot,
                     double delta) {
    int m = shape.modes;
    int pairs = m * (m - 1) / 2;
    if (slot < m) {
        layer.rotations[std::size_t(slot)] += delta;
        return;
    }
    slot -= m;
    if (slot < 2 * pairs) {
        auto& [theta, phi] = layer.bs_params[std::size_t(slot / 2)];
        (slot % 2 == 0 ? theta : phi) += delta;
        return;
    }
    slot -= 2 * pairs;
    if (slot < m) {
        layer.squeezes[std::size_t(slot)] += delta;
        return;
    }
    slot -= m;
    if (slot < 2 * m) {
        Complex& alpha = layer.displacements[std::size_t(slot / 2)];
        alpha += slot % 2 == 0 ? Complex(delta, 0.0) : Complex(0.0, delta);
        return;
    }
    slot -= 2 * m;
    layer.kerrs[std::size_t(slot)] += delta;
}

std::vector<double> concat(const std::vector<double>& a,
                           const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

void write_f64(std::ostream& os, const std::vector<double>& values) {
    os.write(reinterpret_cast<const char*>(values.data()),
             std::streamsize(values.size() * sizeof(double)));
}

std::vector<double> read_f64(std::istream& is, std::size_t count) {
    std::vector<double> values(count);
    is.read(reinterpret_cast<char*>(values.data()),
            std::streamsize(count * sizeof(double)));
    if (!is) throw ConfigError("checkpoint payload truncated");
    return values;
}

} // namespace

MLPParams MLPParams::init(const std::vector<int>& sizes, std::uint64_t seed,
                          double dropout_rate) {
    check_sizes(sizes);
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw UsageError("dropout rate must lie in [0, 1)");
    }
    MLPParams phi;
    phi.sizes = sizes;
    phi.dropout_rate = dropout_rate;
    std::mt19937_64 rng = make_rng(seed, stream_tag("mlp-init"));
    int layers = int(sizes.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        double bound = 1.0 / std::sqrt(double(sizes[std::size_t(l)]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        RMatrix w(sizes[std::size_t(l) + 1], sizes[std::size_t(l)]);
        for (int i = 0; i < w.rows(); ++i) {
            for (int j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
        }
        phi.weights.push_back(std::move(w));
        phi.biases.push_back(RVector::Zero(sizes[std::size_t(l) + 1]));
        if (l < layers - 1) {
            phi.gains.push_back(RVector::Ones(sizes[std::size_t(l) + 1]));
            phi.offsets.push_back(RVector::Zero(sizes[std::size_t(l) + 1]));
        }
    }
    return phi;
}

int MLPParams::parameter_count() const {
    int count = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        count += int(weights[l].size()) + int(biases[l].size());
    }
    for (std::size_t l = 0; l < gains.size(); ++l) {
        count += int(gains[l].size()) + int(offsets[l].size());
    }
    return count;
}

std::vector<double> MLPParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(std::size_t(parameter_count()));
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (int i = 0; i < weights[l].rows(); ++i) {
            for (int j = 0; j < weights[l].cols(); ++j) {
                flat.push_back(weights[l](i, j));
            }
        }
        for (int i = 0; i < biases[l].size(); ++i) flat.push_back(biases[l](i));
        if (l < gains.size()) {
            for (int i = 0; i < gains[l].size(); ++i) {
                flat.push_back(gains[l](i));
            }
            for (int i = 0; i < offsets[l].size(); ++i) {
                flat.push_back(offsets[l](i));
            }
        }
    }
    return flat;
}

MLPParams MLPParams::unflatten(const std::vector<int>& sizes,
                               const std::vector<double>& flat,
                               double dropout_rate) {
    check_sizes(sizes);
    MLPParams phi;
    phi.sizes = sizes;
    phi.dropout_rate = dropout_rate;
    std::size_t pos = 0;
    auto take = [&flat, &pos](std::size_t n) {
        if (pos + n > flat.size()) {
            throw UsageError("flat MLP parameter vector is too short");
        }
        const double* begin = flat.data() + pos;
        pos += n;
        return begin;
    };
    int layers = int(sizes.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        int rows = sizes[std::size_t(l) + 1];
        int cols = sizes[std::size_t(l)];
        RMatrix w(rows, cols);
        const double* wp = take(std::size_t(rows) * std::size_t(cols));
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) w(i, j) = wp[i * cols + j];
        }
        phi.weights.push_back(std::move(w));
        const double* bp = take(std::size_t(rows));
        phi.biases.push_back(Eigen::Map<const RVector>(bp, rows));
        if (l < layers - 1) {
            const double* gp = take(std::size_t(rows));
            phi.gains.push_back(Eigen::Map<const RVector>(gp, rows));
            const double* op = take(std::size_t(rows));
            phi.offsets.push_back(Eigen::Map<const RVector>(op, rows));
        }
    }
    if (pos != flat.size()) {
        throw UsageError("flat MLP parameter vector has trailing values");
    }
    return phi;
}

DropoutMasks draw_dropout_masks(const MLPParams& phi, std::mt19937_64& rng) {
    DropoutMasks masks;
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double keep_scale = 1.0 / (1.0 - phi.dropout_rate);
    for (int l = 0; l < phi.hidden_layers(); ++l) {
        RVector mask(phi.sizes[std::size_t(l) + 1]);
        for (int i = 0; i < mask.size(); ++i) {
            mask(i) = dist(rng) < phi.dropout_rate ? 0.0 : keep_scale;
        }
        masks.masks.push_back(std::move(mask));
    }
    return masks;
}

double head_forward(const RVector& features, const MLPParams& phi,
                    const DropoutMasks* masks, ForwardCache* cache) {
    check_sizes(phi.sizes);
    if (features.size() != phi.sizes.front()) {
        throw UsageError("feature vector does not match the MLP input size");
    }
    bool training = masks != nullptr && masks->active();
    if (training &&
        int(masks->masks.size()) != phi.hidden_layers()) {
        throw UsageError("dropout masks do not match the MLP depth");
    }
    if (cache) {
        *cache = ForwardCache{};
        cache->input = features;
    }
    RVector cur = features;
    for (int l = 0; l < phi.hidden_layers(); ++l) {
        std::size_t li = std::size_t(l);
        RVector z = phi.weights[li] * cur + phi.biases[li];
        double n = double(z.size());
        double mu = z.mean();
        RVector centered = z.array() - mu;
        double var = centered.squaredNorm() / n;
        double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        RVector normalized = centered * inv_sigma;
        RVector pre_relu =
            (phi.gains[li].array() * normalized.array() +
             phi.offsets[li].array())
                .matrix();
        RVector activation = pre_relu.cwiseMax(0.0);
        if (training) {
            activation = activation.cwiseProduct(masks->masks[li]);
        }
        if (cache) {
            cache->pre_norm.push_back(std::move(z));
            cache->normalized.push_back(std::move(normalized));
            cache->inv_sigma.push_back(inv_sigma);
            cache->pre_relu.push_back(std::move(pre_relu));
            cache->activations.push_back(activation);
        }
        cur = std::move(activation);
    }
    double witness = (phi.weights.back() * cur)(0) + phi.biases.back()(0);
    if (cache) cache->witness = witness;
    return witness;
}

double bce_with_logits(double witness, int label) {
    if (label != 0 && label != 1) throw UsageError("label must be 0 or 1");
    return std::max(witness, 0.0) - witness * double(label) +
           std::log1p(std::exp(-std::abs(witness)));
}

double total_loss(double witness, int label, double trace, double gamma) {
    if (gamma < 0.0) throw UsageError("trace penalty weight must be >= 0");
    double deficit = 1.0 - trace;
    return bce_with_logits(witness, label) + gamma * deficit * deficit;
}

double total_loss(double witness, int label, const FeatureVector& features,
                  double gamma) {
    return total_loss(witness, label, features.trace, gamma);
}

MLPParams zeros_like(const MLPParams& phi) {
    MLPParams zero;
    zero.sizes = phi.sizes;
    zero.dropout_rate = phi.dropout_rate;
    for (std::size_t l = 0; l < phi.weights.size(); ++l) {
        zero.weights.push_back(
            RMatrix::Zero(phi.weights[l].rows(), phi.weights[l].cols()));
        zero.biases.push_back(RVector::Zero(phi.biases[l].size()));
    }
    for (std::size_t l = 0; l < phi.gains.size(); ++l) {
        zero.gains.push_back(RVector::Zero(phi.gains[l].size()));
        zero.offsets.push_back(RVector::Zero(phi.offsets[l].size()));
    }
    return zero;
}

MLPParams head_backward(const MLPParams& phi, const ForwardCache& cache,
                        const DropoutMasks* masks, double grad_witness,
                        RVector* input_grad) {
    MLPParams grads = zeros_like(phi);
    int hidden = phi.hidden_layers();
    bool training = masks != nullptr && masks->active();
    const RVector& last_input =
        hidden > 0 ? cache.activations[std::size_t(hidden) - 1] : cache.input;
    grads.weights.back() = grad_witness * last_input.transpose();
    grads.biases.back()(0) = grad_witness;
    RVector d = grad_witness * phi.weights.back().row(0).transpose();
    for (int l = hidden - 1; l >= 0; --l) {
        std::size_t li = std::size_t(l);
        if (training) d = d.cwiseProduct(masks->masks[li]);
        RVector relu_gate =
            (cache.pre_relu[li].array() > 0.0).cast<double>().matrix();
        RVector dy = d.cwiseProduct(relu_gate);
        grads.gains[li] = dy.cwiseProduct(cache.normalized[li]);
        grads.offsets[li] = dy;
        RVector dxhat = dy.cwiseProduct(phi.gains[li]);
        double mean_dxhat = dxhat.mean();
        double mean_dxhat_xhat =
            dxhat.cwiseProduct(cache.normalized[li]).mean();
        RVector dz = (cache.inv_sigma[li] *
                      (dxhat.array() - mean_dxhat -
                       cache.normalized[li].array() * mean_dxhat_xhat))
                         .matrix();
        const RVector& layer_input =
            l > 0 ? cache.activations[li - 1] : cache.input;
        grads.weights[li] = dz * layer_input.transpose();
        grads.biases[li] = dz;
        d = phi.weights[li].transpose() * dz;
    }
    if (input_grad) *input_grad = d;
    return grads;
}

std::vector<ParamKind> parameter_kinds(const ModeShape& shape,
                                       int num_layers) {
    int m = shape.modes;
    int pairs = m * (m - 1) / 2;
    std::vector<ParamKind> kinds;
    kinds.reserve(std::size_t(LayerParams::count(shape)) *
                  std::size_t(num_layers));
    for (int l = 0; l < num_layers; ++l) {
        for (int i = 0; i < m; ++i) kinds.push_back(ParamKind::kRotation);
        for (int p = 0; p < pairs; ++p) {
            kinds.push_back(ParamKind::kBsTheta);
            kinds.push_back(ParamKind::kBsPhi);
        }
        for (int i = 0; i < m; ++i) kinds.push_back(ParamKind::kSqueeze);
        for (int i = 0; i < m; ++i) {
            kinds.push_back(ParamKind::kDispRe);
            kinds.push_back(ParamKind::kDispIm);
        }
        for (int i = 0; i < m; ++i) kinds.push_back(ParamKind::kKerr);
    }
    return kinds;
}

std::vector<int> parameter_layers(const ModeShape& shape, int num_layers) {
    int per_layer = LayerParams::count(shape);
    std::vector<int> layers;
    layers.reserve(std::size_t(per_layer) * std::size_t(num_layers));
    for (int l = 0; l < num_layers; ++l) {
        for (int i = 0; i < per_layer; ++i) layers.push_back(l);
    }
    return layers;
}

AdamState AdamState::init(int n, double lr_) {
    AdamState state;
    state.m.assign(std::size_t(n), 0.0);
    state.v.assign(std::size_t(n), 0.0);
    state.lr = lr_;
    return state;
}

void AdamState::update(std::vector<double>& params,
                       const std::vector<double>& grads) {
    if (params.size() != m.size() || grads.size() != m.size()) {
        throw UsageError("Adam state does not match the parameter vector");
    }
    ++step;
    double correction1 = 1.0 - std::pow(beta1, step);
    double correction2 = 1.0 - std::pow(beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        double m_hat = m[i] / correction1;
        double v_hat = v[i] / correction2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

std::vector<double> quantum_gradients(std::vector<BatchSample>& batch,
                                      CircuitEvaluator& evaluator,
                                      const MLPParams& phi,
                                      const TrainConfig& config) {
    if (batch.empty()) throw UsageError("gradient batch must be non-empty");
    if (config.fd_epsilon <= 0.0) {
        throw UsageError("finite-difference step must be positive");
    }
    const CircuitParams base = evaluator.params();
    const ModeShape& shape = evaluator.circuit_shape();
    int num_layers = evaluator.num_layers();
    if (int(base.layers.size()) != num_layers) {
        throw UsageError("evaluator parameters not set");
    }
    int per_layer = LayerParams::count(shape);
    int n_params = evaluator.parameter_count();
    std::vector<ParamKind> kinds = parameter_kinds(shape, num_layers);
    bool fast = evaluator.loss_p() == 0.0 && evaluator.num_ancillas() == 0;
    double nb = double(batch.size());

    auto mode_for = [&config](const BatchSample& sample) {
        if (!config.stochastic_gradients) return ShotMode::analytic();
        return ShotMode::sampled(config.gradient_shots, config.seed,
                                 sample.readout_index);
    };

    // States pushed through the layers preceding each boundary; a shift in
    // layer l resumes from prefixes[i][l] instead of replaying the whole
    // circuit. Only needed on the dense (lossy/ancilla) path.
    std::vector<std::vector<DensityMatrix>> prefixes;
    if (!fast) {
        prefixes.resize(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            for (int l = 0; l < num_layers; ++l) {
                prefixes[i].push_back(
                    evaluator.prefix_state(batch[i].state->rho, l));
            }
        }
    }

    auto sample_features = [&](const BatchSample& sample, std::size_t i,
                               int layer) {
        if (fast) {
            return evaluator.features(sample.state->ensemble,
                                      mode_for(sample));
        }
        return evaluator.features_from_prefix(prefixes[i][std::size_t(layer)],
                                              layer, mode_for(sample));
    };

    auto batch_loss = [&](int layer) {
        double total = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const BatchSample& sample = batch[i];
            FeatureVector f = sample_features(sample, i, layer);
            double witness =
                head_forward(f.values, phi, &sample.masks, nullptr);
            total += total_loss(witness, sample.state->label, f.trace,
                                config.gamma);
        }
        return total / nb;
    };

    // Base-point head sensitivities, only needed by the shift-rule path.
    std::vector<RVector> input_grads;
    std::vector<double> trace_grads;
    auto ensure_base_sensitivities = [&]() {
        if (!input_grads.empty()) return;
        for (const BatchSample& sample : batch) {
            ForwardCache cache;
            double witness =
                head_forward(sample.features.values, phi, &sample.masks,
                             &cache);
            double grad_witness =
                logistic(witness) - double(sample.state->label);
            RVector input_grad;
            head_backward(phi, cache, &sample.masks, grad_witness,
                          &input_grad);
            input_grads.push_back(std::move(input_grad));
            trace_grads.push_back(-2.0 * config.gamma *
                                  (1.0 - sample.features.trace));
        }
    };

    std::vector<double> grad(std::size_t(n_params), 0.0);
    for (int j = 0; j < n_params; ++j) {
        int layer = j / per_layer;
        int slot = j % per_layer;
        // The pi/2 two-point rule is exact only when the rotation generator
        // n has spectrum {0, 1}; everything else takes central differences.
        bool shiftable = config.use_shift_rule &&
                         kinds[std::size_t(j)] == ParamKind::kRotation &&
                         shape.cutoff == 2;
        double delta = shiftable ? kPi / 2.0 : config.fd_epsilon;

        LayerParams plus = base.layers[std::size_t(layer)];
        bump_layer_slot(plus, shape, slot, delta);
        LayerParams minus = base.layers[std::size_t(layer)];
        bump_layer_slot(minus, shape, slot, -delta);

        if (shiftable) {
            ensure_base_sensitivities();
            double g = 0.0;
            evaluator.update_layer(layer, plus);
            std::vector<FeatureVector> f_plus;
            f_plus.reserve(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                f_plus.push_back(sample_features(batch[i], i, layer));
            }
            evaluator.update_layer(layer, minus);
            for (std::size_t i = 0; i < batch.size(); ++i) {
                FeatureVector f_minus = sample_features(batch[i], i, layer);
                RVector df = (f_plus[i].values - f_minus.values) / 2.0;
                double dtrace = (f_plus[i].trace - f_minus.trace) / 2.0;
                g += input_grads[i].dot(df) + trace_grads[i] * dtrace;
            }
            evaluator.update_layer(layer, base.layers[std::size_t(layer)]);
            grad[std::size_t(j)] = g / nb;
        } else {
            evaluator.update_layer(layer, plus);
            double loss_plus = batch_loss(layer);
            evaluator.update_layer(layer, minus);
            double loss_minus = batch_loss(layer);
            evaluator.update_layer(layer, base.layers[std::size_t(layer)]);
            if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus)) {
                throw TrainingFailureError(
                    std::string("non-finite loss while differentiating "
                                "circuit parameter ") +
                    std::to_string(j) + " (layer " + std::to_string(layer) +
                    ", " + kind_name(kinds[std::size_t(j)]) + ")");
            }
            grad[std::size_t(j)] =
                (loss_plus - loss_minus) / (2.0 * config.fd_epsilon);
        }
    }
    return grad;
}

namespace {

void check_train_config(const TrainConfig& config) {
    if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (config.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (config.patience < 1) throw ConfigError("patience must be >= 1");
    if (config.gamma < 0.0) throw ConfigError("gamma must be >= 0");
    if (config.learning_rate <= 0.0) {
        throw ConfigError("learning_rate must be positive");
    }
    if (config.fd_epsilon <= 0.0) {
        throw ConfigError("fd_epsilon must be positive");
    }
    if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) {
        throw ConfigError("dropout_rate must lie in [0, 1)");
    }
    if (config.hidden_sizes.empty()) {
        throw ConfigError("the head needs at least one hidden layer");
    }
    for (int h : config.hidden_sizes) {
        if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
    }
    if (config.stochastic_gradients && config.gradient_shots < 1) {
        throw ConfigError("stochastic gradients need gradient_shots >= 1");
    }
}

FeatureVector analytic_features(const LabeledState& state,
                                const CircuitEvaluator& evaluator,
                                bool fast) {
    if (fast) return evaluator.features(state.ensemble, ShotMode::analytic());
    return evaluator.features(state.rho, ShotMode::analytic());
}

} // namespace

EvalMetrics evaluate_split(const std::vector<LabeledState>& samples,
                           const CircuitEvaluator& evaluator,
                           const MLPParams& phi, double gamma) {
    if (samples.empty()) throw UsageError("cannot evaluate an empty split");
    bool fast = evaluator.loss_p() == 0.0 && evaluator.num_ancillas() == 0;
    double loss = 0.0;
    int correct = 0;
    for (const LabeledState& state : samples) {
        FeatureVector f = analytic_features(state, evaluator, fast);
        double witness = head_forward(f.values, phi, nullptr, nullptr);
        loss += total_loss(witness, state.label, f.trace, gamma);
        int predicted = witness > 0.0 ? 1 : 0;
        if (predicted == state.label) ++correct;
    }
    return EvalMetrics{loss / double(samples.size()),
                       double(correct) / double(samples.size())};
}

ScoredPredictions score_split(const std::vector<LabeledState>& samples,
                              const CircuitEvaluator& evaluator,
                              const MLPParams& phi, int shots,
                              std::uint64_t seed) {
    if (samples.empty()) throw UsageError("cannot score an empty split");
    bool fast = evaluator.loss_p() == 0.0 && evaluator.num_ancillas() == 0;
    ScoredPredictions preds;
    preds.threshold = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const LabeledState& state = samples[i];
        FeatureVector f;
        if (shots > 0) {
            ShotMode mode = ShotMode::sampled(shots, seed, i);
            f = fast ? evaluator.features(state.ensemble, mode)
                     : evaluator.features(state.rho, mode);
        } else {
            f = analytic_features(state, evaluator, fast);
        }
        preds.scores.push_back(head_forward(f.values, phi, nullptr, nullptr));
        preds.labels.push_back(state.label);
    }
    return preds;
}

TrainResult train(const DatasetSplit& dataset, const TrainConfig& config,
                  CircuitEvaluator& evaluator,
                  const std::function<void(const EpochStats&)>& on_epoch) {
    check_train_config(config);
    if (dataset.train.empty() || dataset.validation.empty()) {
        throw UsageError("training needs non-empty train and validation "
                         "splits");
    }
    if (dataset.shape != evaluator.data_shape()) {
        throw UsageError("dataset shape does not match the evaluator");
    }

    CircuitParams theta = CircuitParams::random_init(
        evaluator.circuit_shape(), evaluator.num_layers(), config.seed);
    std::vector<int> sizes;
    sizes.push_back(evaluator.feature_dim());
    sizes.insert(sizes.end(), config.hidden_sizes.begin(),
                 config.hidden_sizes.end());
    sizes.push_back(1);
    MLPParams phi = MLPParams::init(sizes, config.seed, config.dropout_rate);
    evaluator.set_params(theta);

    int n_theta = evaluator.parameter_count();
    std::vector<double> joint = concat(theta.flatten(), phi.flatten());
    AdamState adam = AdamState::init(int(joint.size()), config.learning_rate);

    bool fast = evaluator.loss_p() == 0.0 && evaluator.num_ancillas() == 0;
    std::size_t n_train = dataset.train.size();

    std::vector<EpochStats> history;
    double best_val_loss = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    std::vector<double> best_joint = joint;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::vector<std::size_t> order(n_train);
        std::iota(order.begin(), order.end(), std::size_t(0));
        std::mt19937_64 shuffle_rng =
            make_rng(config.seed, stream_tag("shuffle"), std::uint64_t(epoch));
        seeded_shuffle(order, shuffle_rng);

        double grad_norm_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < n_train;
             start += std::size_t(config.batch_size)) {
            std::size_t stop =
                std::min(n_train, start + std::size_t(config.batch_size));
            std::uint64_t batch_index =
                std::uint64_t(start) / std::uint64_t(config.batch_size);

            std::vector<BatchSample> batch;
            batch.reserve(stop - start);
            double batch_loss = 0.0;
            std::vector<double> phi_grad(joint.size() - std::size_t(n_theta),
                                         0.0);
            for (std::size_t k = start; k < stop; ++k) {
                BatchSample sample;
                sample.state = &dataset.train[order[k]];
                sample.readout_index =
                    std::uint64_t(epoch) * n_train + order[k];
                if (config.dropout_rate > 0.0) {
                    std::mt19937_64 dropout_rng =
                        make_rng(config.seed, std::uint64_t(epoch),
                                 batch_index, std::uint64_t(k - start));
                    sample.masks = draw_dropout_masks(phi, dropout_rng);
                }
                ShotMode mode = ShotMode::analytic();
                if (config.stochastic_gradients) {
                    mode = ShotMode::sampled(config.gradient_shots,
                                             config.seed,
                                             sample.readout_index);
                }
                sample.features =
                    fast ? evaluator.features(sample.state->ensemble, mode)
                         : evaluator.features(sample.state->rho, mode);

                ForwardCache cache;
                double witness = head_forward(sample.features.values, phi,
                                              &sample.masks, &cache);
                batch_loss += total_loss(witness, sample.state->label,
                                         sample.features.trace, config.gamma);
                double grad_witness =
                    logistic(witness) - double(sample.state->label);
                MLPParams sample_grads = head_backward(
                    phi, cache, &sample.masks, grad_witness, nullptr);
                std::vector<double> flat_grads = sample_grads.flatten();
                for (std::size_t i = 0; i < flat_grads.size(); ++i) {
                    phi_grad[i] += flat_grads[i];
                }
                batch.push_back(std::move(sample));
            }
            double nb = double(batch.size());
            batch_loss /= nb;
            for (double& g : phi_grad) g /= nb;
            if (!std::isfinite(batch_loss)) {
                throw TrainingFailureError(
                    "non-finite training loss at epoch " +
                    std::to_string(epoch));
            }

            std::vector<double> theta_grad =
                quantum_gradients(batch, evaluator, phi, config);
            std::vector<double> grad = concat(theta_grad, phi_grad);
            double norm_sq = 0.0;
            for (double g : grad) norm_sq += g * g;
            double grad_norm = std::sqrt(norm_sq);
            if (!std::isfinite(grad_norm)) {
                throw TrainingFailureError("non-finite gradient at epoch " +
                                           std::to_string(epoch));
            }
            grad_norm_sum += grad_norm;
            ++batches;

            adam.update(joint, grad);
            std::vector<double> theta_flat(joint.begin(),
                                           joint.begin() + n_theta);
            evaluator.set_flat_params(theta_flat);
            phi = MLPParams::unflatten(
                sizes,
                std::vector<double>(joint.begin() + n_theta, joint.end()),
                config.dropout_rate);
        }

        EvalMetrics train_metrics =
            evaluate_split(dataset.train, evaluator, phi, config.gamma);
        EvalMetrics val_metrics =
            evaluate_split(dataset.validation, evaluator, phi, config.gamma);
        if (!std::isfinite(train_metrics.loss) ||
            !std::isfinite(val_metrics.loss)) {
            throw TrainingFailureError("non-finite evaluation loss at epoch " +
                                       std::to_string(epoch));
        }
        history.push_back(EpochStats{epoch, train_metrics.loss,
                                     val_metrics.loss, train_metrics.accuracy,
                                     val_metrics.accuracy,
                                     grad_norm_sum / double(batches)});
        if (on_epoch) on_epoch(history.back());
        if (val_metrics.loss < best_val_loss) {
            best_val_loss = val_metrics.loss;
            best_epoch = epoch;
            best_joint = joint;
        } else if (epoch - best_epoch >= config.patience) {
            break;
        }
    }

    TrainResult result;
    std::vector<double> best_theta(best_joint.begin(),
                                   best_joint.begin() + n_theta);
    result.theta = CircuitParams::unflatten(evaluator.circuit_shape(),
                                            evaluator.num_layers(),
                                            best_theta);
    result.phi = MLPParams::unflatten(
        sizes, std::vector<double>(best_joint.begin() + n_theta,
                                   best_joint.end()),
        config.dropout_rate);
    result.adam = adam;
    result.history = std::move(history);
    result.best_epoch = best_epoch;
    result.best_val_loss = best_val_loss;
    evaluator.set_params(result.theta);
    return result;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    namespace fs = std::filesystem;
    fs::path manifest_path = path + ".json";
    fs::path payload_path = path + ".bin";

    std::vector<double> theta_flat = checkpoint.theta.flatten();
    std::vector<double> phi_flat = checkpoint.phi.flatten();

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["modes"] = checkpoint.shape.modes;
    manifest["cutoff"] = checkpoint.shape.cutoff;
    manifest["num_layers"] = checkpoint.num_layers;
    manifest["loss_p"] = checkpoint.loss_p;
    manifest["num_ancillas"] = checkpoint.num_ancillas;
    manifest["mlp_sizes"] = checkpoint.phi.sizes;
    manifest["dropout_rate"] = checkpoint.phi.dropout_rate;
    manifest["adam"] = {{"step", checkpoint.adam.step},
                        {"lr", checkpoint.adam.lr},
                        {"beta1", checkpoint.adam.beta1},
                        {"beta2", checkpoint.adam.beta2},
                        {"epsilon", checkpoint.adam.epsilon}};
    manifest["best_epoch"] = checkpoint.best_epoch;
    nlohmann::json history = nlohmann::json::array();
    for (const EpochStats& stats : checkpoint.history) {
        history.push_back({{"epoch", stats.epoch},
                           {"train_loss", stats.train_loss},
                           {"val_loss", stats.val_loss},
                           {"train_acc", stats.train_acc},
                           {"val_acc", stats.val_acc},
                           {"grad_norm", stats.grad_norm}});
    }
    manifest["history"] = history;
    manifest["payload"] = payload_path.filename().string();
    manifest["payload_counts"] = {{"theta", theta_flat.size()},
                                  {"phi", phi_flat.size()},
                                  {"adam_m", checkpoint.adam.m.size()},
                                  {"adam_v", checkpoint.adam.v.size()}};

    std::ofstream manifest_out(manifest_path);
    if (!manifest_out) {
        throw ConfigError("cannot write checkpoint manifest " +
                          manifest_path.string());
    }
    manifest_out << manifest.dump(2) << "\n";

    std::ofstream payload_out(payload_path, std::ios::binary);
    if (!payload_out) {
        throw ConfigError("cannot write checkpoint payload " +
                          payload_path.string());
    }
    write_f64(payload_out, theta_flat);
    write_f64(payload_out, phi_flat);
    write_f64(payload_out, checkpoint.adam.m);
    write_f64(payload_out, checkpoint.adam.v);
}

Checkpoint load_checkpoint(const std::string& path) {
    namespace fs = std::filesystem;
    fs::path manifest_path = path + ".json";
    std::ifstream manifest_in(manifest_path);
    if (!manifest_in) {
        throw ConfigError("cannot read checkpoint manifest " +
                          manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        manifest_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint manifest: ") +
                          e.what());
    }
    if (manifest.value("format_version", 0) != 1) {
        throw ConfigError("unsupported checkpoint format version");
    }

    Checkpoint checkpoint;
    checkpoint.shape = ModeShape{manifest.at("modes").get<int>(),
                                 manifest.at("cutoff").get<int>()};
    checkpoint.num_layers = manifest.at("num_layers").get<int>();
    checkpoint.loss_p = manifest.at("loss_p").get<double>();
    checkpoint.num_ancillas = manifest.at("num_ancillas").get<int>();
    std::vector<int> sizes =
        manifest.at("mlp_sizes").get<std::vector<int>>();
    double dropout_rate = manifest.at("dropout_rate").get<double>();
    checkpoint.adam.step = manifest.at("adam").at("step").get<int>();
    checkpoint.adam.lr = manifest.at("adam").at("lr").get<double>();
    checkpoint.adam.beta1 = manifest.at("adam").at("beta1").get<double>();
    checkpoint.adam.beta2 = manifest.at("adam").at("beta2").get<double>();
    checkpoint.adam.epsilon = manifest.at("adam").at("epsilon").get<double>();
    checkpoint.best_epoch = manifest.at("best_epoch").get<int>();
    for (const nlohmann::json& row : manifest.at("history")) {
        checkpoint.history.push_back(
            EpochStats{row.at("epoch").get<int>(),
                       row.at("train_loss").get<double>(),
                       row.at("val_loss").get<double>(),
                       row.at("train_acc").get<double>(),
                       row.at("val_acc").get<double>(),
                       row.at("grad_norm").get<double>()});
    }

    auto counts = manifest.at("payload_counts");
    std::size_t n_theta = counts.at("theta").get<std::size_t>();
    std::size_t n_phi = counts.at("phi").get<std::size_t>();
    std::size_t n_m = counts.at("adam_m").get<std::size_t>();
    std::size_t n_v = counts.at("adam_v").get<std::size_t>();

    fs::path payload_path =
        manifest_path.parent_path() /
        manifest.at("payload").get<std::string>();
    std::ifstream payload_in(payload_path, std::ios::binary);
    if (!payload_in) {
        throw ConfigError("cannot read checkpoint payload " +
                          payload_path.string());
    }
    std::vector<double> theta_flat = read_f64(payload_in, n_theta);
    std::vector<double> phi_flat = read_f64(payload_in, n_phi);
    checkpoint.adam.m = read_f64(payload_in, n_m);
    checkpoint.adam.v = read_f64(payload_in, n_v);

    ModeShape circuit_shape{checkpoint.shape.modes + checkpoint.num_ancillas,
                            checkpoint.shape.cutoff};
    checkpoint.theta = CircuitParams::unflatten(
        circuit_shape, checkpoint.num_layers, theta_flat);
    checkpoint.phi = MLPParams::unflatten(sizes, phi_flat, dropout_rate);
    return checkpoint;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write history CSV " + path);
    out << "epoch,train_loss,val_loss,train_acc,val_acc,grad_norm\n";
    char line[192];
    for (const EpochStats& stats : history) {
        std::snprintf(line, sizeof(line),
                      "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", stats.epoch,
                      stats.train_loss, stats.val_loss, stats.train_acc,
                      stats.val_acc, stats.grad_norm);
        out << line;
    }
}

} // namespace cvqw
