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

#include "cvqw/circuit.hpp"

#include <algorithm>
#include <cmath>

namespace cvqw {

namespace {

std::vector<std::pair<int, int>> mode_pairs(const ModeShape& shape) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < shape.modes; ++i)
        for (int j = i + 1; j < shape.modes; ++j) pairs.emplace_back(i, j);
    return pairs;
}

/// theta = pi/4, phi = 0 mesh over all pairs, used by two readout settings
/// and the ancilla pre-unitary.
CMatrix quarter_mesh(const ModeShape& shape) {
    int dim = shape.total_dim();
    CMatrix mesh = CMatrix::Identity(dim, dim);
    if (shape.modes < 2) return mesh;
    CMatrix bs = beamsplitter_gate(shape.cutoff, M_PI / 4.0, 0.0);
    for (const auto& [i, j] : mode_pairs(shape)) {
        mesh = (embed_two_mode(shape, bs, i, j) * mesh).eval();
    }
    return mesh;
}

void check_layer(const ModeShape& shape, const LayerParams& layer) {
    std::size_t m = static_cast<std::size_t>(shape.modes);
    std::size_t p = m * (m - 1) / 2;
    if (layer.rotations.size() != m || layer.squeezes.size() != m ||
        layer.displacements.size() != m || layer.kerrs.size() != m ||
        layer.bs_params.size() != p) {
        throw UsageError("layer parameter lists do not match the mode count");
    }
}

} // namespace

LayerParams LayerParams::zeros(const ModeShape& shape) {
    LayerParams layer;
    std::size_t m = static_cast<std::size_t>(shape.modes);
    layer.rotations.assign(m, 0.0);
    layer.bs_params.assign(m * (m - 1) / 2, {0.0, 0.0});
    layer.squeezes.assign(m, 0.0);
    layer.displacements.assign(m, Complex(0.0, 0.0));
    layer.kerrs.assign(m, 0.0);
    return layer;
}

int LayerParams::count(const ModeShape& shape) {
    int m = shape.modes;
    return 5 * m + m * (m - 1);
}

CircuitParams::CircuitParams(const ModeShape& shape_, int num_layers)
    : shape(shape_) {
    if (num_layers < 1) throw UsageError("circuit needs at least one layer");
    layers.assign(num_layers, LayerParams::zeros(shape));
}

CircuitParams CircuitParams::random_init(const ModeShape& shape,
                                         int num_layers, std::uint64_t seed,
                                         double sigma) {
    CircuitParams params(shape, num_layers);
    std::mt19937_64 rng = make_rng(seed, stream_tag("circuit-init"));
    std::normal_distribution<double> dist(0.0, sigma);
    std::vector<double> flat(params.parameter_count());
    for (double& v : flat) v = dist(rng);
    return unflatten(shape, num_layers, flat);
}

int CircuitParams::parameter_count() const {
    return LayerParams::count(shape) * static_cast<int>(layers.size());
}

std::vector<double> CircuitParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const LayerParams& layer : layers) {
        flat.insert(flat.end(), layer.rotations.begin(),
                    layer.rotations.end());
        for (const auto& [theta, phi] : layer.bs_params) {
            flat.push_back(theta);
            flat.push_back(phi);
        }
        flat.insert(flat.end(), layer.squeezes.begin(), layer.squeezes.end());
        for (Complex alpha : layer.displacements) {
            flat.push_back(alpha.real());
            flat.push_back(alpha.imag());
        }
        flat.insert(flat.end(), layer.kerrs.begin(), layer.kerrs.end());
    }
    return flat;
}

CircuitParams CircuitParams::unflatten(const ModeShape& shape, int num_layers,
                                       const std::vector<double>& flat) {
    CircuitParams params(shape, num_layers);
    if (static_cast<int>(flat.size()) != params.parameter_count()) {
        throw UsageError("flat parameter vector has the wrong length");
    }
    std::size_t m = static_cast<std::size_t>(shape.modes);
    std::size_t pos = 0;
    for (LayerParams& layer : params.layers) {
        for (std::size_t i = 0; i < m; ++i) layer.rotations[i] = flat[pos++];
        for (auto& [theta, phi] : layer.bs_params) {
            theta = flat[pos++];
            phi = flat[pos++];
        }
        for (std::size_t i = 0; i < m; ++i) layer.squeezes[i] = flat[pos++];
        for (Complex& alpha : layer.displacements) {
            double re = flat[pos++];
            double im = flat[pos++];
            alpha = Complex(re, im);
        }
        for (std::size_t i = 0; i < m; ++i) layer.kerrs[i] = flat[pos++];
    }
    return params;
}

CMatrix interferometer_unitary(const ModeShape& shape,
                               const LayerParams& layer) {
    check_layer(shape, layer);
    int dim = shape.total_dim();
    CMatrix u = CMatrix::Identity(dim, dim);
    for (int m = 0; m < shape.modes; ++m) {
        u = (embed_one_mode(shape, rotation_gate(shape.cutoff,
                                                 layer.rotations[m]),
                            m) *
             u)
                .eval();
    }
    const auto pairs = mode_pairs(shape);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& [theta, phi] = layer.bs_params[p];
        CMatrix bs = beamsplitter_gate(shape.cutoff, theta, phi);
        u = (embed_two_mode(shape, bs, pairs[p].first, pairs[p].second) * u)
                .eval();
    }
    return u;
}

CMatrix layer_unitary(const ModeShape& shape, const LayerParams& layer) {
    check_layer(shape, layer);
    CMatrix u = interferometer_unitary(shape, layer);
    for (int m = 0; m < shape.modes; ++m) {
        CMatrix s =
            squeeze_gate(shape.cutoff, Complex(layer.squeezes[m], 0.0));
        u = (embed_one_mode(shape, s, m) * u).eval();
    }
    for (int m = 0; m < shape.modes; ++m) {
        CMatrix d = displace_gate(shape.cutoff, layer.displacements[m]);
        u = (embed_one_mode(shape, d, m) * u).eval();
    }
    for (int m = 0; m < shape.modes; ++m) {
        CMatrix k = kerr_gate(shape.cutoff, layer.kerrs[m]);
        u = (embed_one_mode(shape, k, m) * u).eval();
    }
    return u;
}

CMatrix circuit_unitary(const CircuitParams& params) {
    int dim = params.shape.total_dim();
    CMatrix u = CMatrix::Identity(dim, dim);
    for (const LayerParams& layer : params.layers) {
        u = (layer_unitary(params.shape, layer) * u).eval();
    }
    return u;
}

DensityMatrix apply_layer(const DensityMatrix& rho, const LayerParams& layer,
                          double loss_p) {
    if (loss_p < 0.0 || loss_p >= 1.0) {
        throw UsageError("loss probability must lie in [0, 1)");
    }
    DensityMatrix out = rho;
    apply_unitary(out, layer_unitary(rho.shape, layer));
    if (loss_p > 0.0) {
        std::vector<CMatrix> kraus =
            loss_kraus_operators(rho.shape.cutoff, 1.0 - loss_p);
        for (int m = 0; m < rho.shape.modes; ++m) {
            apply_kraus_channel(out, kraus, m);
        }
    }
    out.hermitize();
    return out;
}

DensityMatrix apply_circuit(const DensityMatrix& rho,
                            const CircuitParams& params, double loss_p) {
    if (rho.shape != params.shape) {
        throw UsageError("state shape does not match circuit shape");
    }
    DensityMatrix out = rho;
    for (const LayerParams& layer : params.layers) {
        out = apply_layer(out, layer, loss_p);
    }
    return out;
}

double trace_penalty(const DensityMatrix& rho_out) {
    double t = rho_out.trace_real();
    return (1.0 - t) * (1.0 - t);
}

std::vector<MeasurementSetting> default_settings(const ModeShape& shape) {
    int dim = shape.total_dim();
    std::vector<MeasurementSetting> settings;
    settings.push_back({0, "identity", CMatrix::Identity(dim, dim)});

    CMatrix mesh = quarter_mesh(shape);
    settings.push_back({1, "mesh", mesh});

    CMatrix rot = CMatrix::Identity(dim, dim);
    for (int m = 0; m < shape.modes; ++m) {
        rot = (embed_one_mode(shape, rotation_gate(shape.cutoff, M_PI / 4.0),
                              m) *
               rot)
                  .eval();
    }
    CMatrix disp = CMatrix::Identity(dim, dim);
    for (int m = 0; m < shape.modes; ++m) {
        disp = (embed_one_mode(shape,
                               displace_gate(shape.cutoff, Complex(0.3, 0.0)),
                               m) *
                disp)
                   .eval();
    }
    settings.push_back({2, "rot-mesh-disp", disp * mesh * rot});
    return settings;
}

std::vector<SparseKrausOp> sparse_loss_ops(const ModeShape& shape, double eta,
                                           int mode) {
    if (mode < 0 || mode >= shape.modes) {
        throw UsageError("loss mode index out of range");
    }
    std::vector<CMatrix> kraus = loss_kraus_operators(shape.cutoff, eta);
    int dim = shape.total_dim();
    int stride = 1;
    for (int m = mode + 1; m < shape.modes; ++m) stride *= shape.cutoff;

    std::vector<SparseKrausOp> ops(kraus.size());
    for (std::size_t k = 0; k < kraus.size(); ++k) {
        ops[k].src.assign(dim, -1);
        ops[k].val.assign(dim, 0.0);
        for (int a = 0; a < dim; ++a) {
            int n = (a / stride) % shape.cutoff;
            if (n < static_cast<int>(k)) continue;
            int row = a - static_cast<int>(k) * stride;
            ops[k].src[row] = a;
            ops[k].val[row] = kraus[k](n - static_cast<int>(k), n).real();
        }
    }
    return ops;
}

void apply_sparse_loss(CMatrix& rho, const std::vector<SparseKrausOp>& ops) {
    int dim = static_cast<int>(rho.rows());
    CMatrix out = CMatrix::Zero(dim, dim);
    for (const SparseKrausOp& op : ops) {
        for (int j = 0; j < dim; ++j) {
            if (op.src[j] < 0) continue;
            double vj = op.val[j];
            int sj = op.src[j];
            for (int i = 0; i < dim; ++i) {
                if (op.src[i] < 0) continue;
                out(i, j) += op.val[i] * vj * rho(op.src[i], sj);
            }
        }
    }
    rho.swap(out);
}

RVector multinomial_frequencies(const RVector& weights, int shots,
                                std::mt19937_64& rng) {
    if (shots < 1) throw UsageError("sampling requires at least one shot");
    double total = weights.sum();
    if (!(total > 0.0)) {
        throw DegenerateStateError(
            "cannot sample from an all-zero distribution");
    }
    RVector cdf(weights.size());
    double acc = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
        acc += std::max(weights(i), 0.0);
        cdf(i) = acc;
    }
    RVector freq = RVector::Zero(weights.size());
    std::uniform_real_distribution<double> unif(0.0, acc);
    for (int s = 0; s < shots; ++s) {
        double u = unif(rng);
        int lo = 0, hi = static_cast<int>(cdf.size()) - 1;
        while (lo < hi) {
            int mid = (lo + hi) / 2;
            if (cdf(mid) < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        freq(lo) += 1.0;
    }
    return freq / double(shots);
}

namespace {

/// diag(W rho W^dagger) without forming the full product.
RVector transformed_diagonal(const CMatrix& w, const CMatrix& rho) {
    CMatrix t = w * rho;
    return t.cwiseProduct(w.conjugate()).rowwise().sum().real();
}

FeatureVector readout_blocks(const DensityMatrix& rho_out,
                             const std::vector<MeasurementSetting>& settings,
                             const ShotMode& mode) {
    if (settings.empty()) {
        throw UsageError("readout requires at least one setting");
    }
    int dim = rho_out.rho.rows();
    FeatureVector out;
    out.trace = rho_out.trace_real();
    out.values.resize(static_cast<int>(settings.size()) * dim);
    for (std::size_t k = 0; k < settings.size(); ++k) {
        RVector p = transformed_diagonal(settings[k].unitary, rho_out.rho);
        p = p.cwiseMax(0.0);
        if (mode.shots > 0) {
            std::mt19937_64 rng =
                make_rng(mode.seed, stream_tag("readout"), mode.sample_index,
                         static_cast<std::uint64_t>(settings[k].id));
            p = multinomial_frequencies(p, mode.shots, rng);
        }
        out.values.segment(static_cast<int>(k) * dim, dim) = p;
    }
    return out;
}

} // namespace

FeatureVector ic_features(const DensityMatrix& rho,
                          const CircuitParams& params,
                          const std::vector<MeasurementSetting>& settings,
                          double loss_p, const ShotMode& mode) {
    DensityMatrix rho_out = apply_circuit(rho, params, loss_p);
    return readout_blocks(rho_out, settings, mode);
}

CircuitEvaluator::CircuitEvaluator(const ModeShape& data_shape, int num_layers,
                                   double loss_p, int num_ancillas)
    : data_shape_(data_shape),
      circuit_shape_(data_shape.modes + num_ancillas, data_shape.cutoff),
      num_layers_(num_layers),
      loss_p_(loss_p),
      num_ancillas_(num_ancillas) {
    if (num_layers < 1) throw UsageError("circuit needs at least one layer");
    if (num_ancillas < 0) throw UsageError("ancilla count must be >= 0");
    if (loss_p < 0.0 || loss_p >= 1.0) {
        throw UsageError("loss probability must lie in [0, 1)");
    }
    settings_ = default_settings(circuit_shape_);
    if (num_ancillas_ > 0) {
        pre_unitary_ = quarter_mesh(circuit_shape_);
    }
    if (loss_p_ > 0.0) {
        for (int m = 0; m < circuit_shape_.modes; ++m) {
            sparse_loss_.push_back(
                sparse_loss_ops(circuit_shape_, 1.0 - loss_p_, m));
        }
    }
}

int CircuitEvaluator::parameter_count() const {
    return LayerParams::count(circuit_shape_) * num_layers_;
}

int CircuitEvaluator::feature_dim() const {
    return static_cast<int>(settings_.size()) * circuit_shape_.total_dim();
}

void CircuitEvaluator::set_params(const CircuitParams& params) {
    if (params.shape != circuit_shape_ ||
        static_cast<int>(params.layers.size()) != num_layers_) {
        throw UsageError("parameters do not match the evaluator's circuit");
    }
    params_ = params;
    params_set_ = true;
    layer_unitaries_.clear();
    for (const LayerParams& layer : params_.layers) {
        layer_unitaries_.push_back(layer_unitary(circuit_shape_, layer));
    }
    rebuild_lossless_cache();
}

void CircuitEvaluator::rebuild_lossless_cache() {
    if (loss_p_ != 0.0) {
        return;
    }
    int dim = circuit_shape_.total_dim();
    full_unitary_ = CMatrix::Identity(dim, dim);
    for (const CMatrix& u : layer_unitaries_) {
        full_unitary_ = (u * full_unitary_).eval();
    }
    if (num_ancillas_ > 0) {
        full_unitary_ = (full_unitary_ * pre_unitary_).eval();
    }
    setting_products_.clear();
    setting_rowsq_.clear();
    for (const MeasurementSetting& s : settings_) {
        setting_products_.push_back(s.unitary * full_unitary_);
        setting_rowsq_.push_back(
            setting_products_.back().cwiseAbs2().rowwise().sum());
    }
}

void CircuitEvaluator::set_flat_params(const std::vector<double>& flat) {
    set_params(CircuitParams::unflatten(circuit_shape_, num_layers_, flat));
}

void CircuitEvaluator::update_layer(int layer_index, const LayerParams& layer) {
    if (!params_set_) throw UsageError("evaluator parameters not set");
    if (layer_index < 0 || layer_index >= num_layers_) {
        throw UsageError("layer index out of range");
    }
    params_.layers[layer_index] = layer;
    layer_unitaries_[layer_index] = layer_unitary(circuit_shape_, layer);
    rebuild_lossless_cache();
}

DensityMatrix CircuitEvaluator::prepare_extended(
    const DensityMatrix& input) const {
    if (input.shape != data_shape_) {
        throw UsageError("input state shape does not match the evaluator");
    }
    if (num_ancillas_ == 0) return input;
    DensityMatrix anc = DensityMatrix::from_pure(
        PureState::vacuum(ModeShape(num_ancillas_, data_shape_.cutoff)));
    return tensor_product(input, anc);
}

void CircuitEvaluator::advance(DensityMatrix& state, int first_layer) const {
    for (int l = first_layer; l < num_layers_; ++l) {
        apply_unitary(state, layer_unitaries_[l]);
        if (loss_p_ > 0.0) {
            for (int m = 0; m < circuit_shape_.modes; ++m) {
                apply_sparse_loss(state.rho, sparse_loss_[m]);
            }
        }
    }
}

DensityMatrix CircuitEvaluator::propagate(const DensityMatrix& input) const {
    if (!params_set_) throw UsageError("evaluator parameters not set");
    DensityMatrix state = prepare_extended(input);
    if (loss_p_ == 0.0) {
        // The pre-unitary is folded into the cached full product.
        apply_unitary(state, full_unitary_);
        return state;
    }
    if (num_ancillas_ > 0) apply_unitary(state, pre_unitary_);
    advance(state, 0);
    return state;
}

DensityMatrix CircuitEvaluator::prefix_state(const DensityMatrix& input,
                                             int layers_applied) const {
    if (!params_set_) throw UsageError("evaluator parameters not set");
    if (layers_applied < 0 || layers_applied > num_layers_) {
        throw UsageError("prefix layer count out of range");
    }
    DensityMatrix state = prepare_extended(input);
    if (num_ancillas_ > 0) apply_unitary(state, pre_unitary_);
    for (int l = 0; l < layers_applied; ++l) {
        apply_unitary(state, layer_unitaries_[l]);
        if (loss_p_ > 0.0) {
            for (int m = 0; m < circuit_shape_.modes; ++m) {
                apply_sparse_loss(state.rho, sparse_loss_[m]);
            }
        }
    }
    return state;
}

FeatureVector CircuitEvaluator::features_from_prefix(
    const DensityMatrix& prefix, int first_layer, const ShotMode& mode) const {
    if (!params_set_) throw UsageError("evaluator parameters not set");
    if (first_layer < 0 || first_layer > num_layers_) {
        throw UsageError("prefix layer count out of range");
    }
    if (prefix.shape != circuit_shape_) {
        throw UsageError("prefix state shape does not match the circuit");
    }
    DensityMatrix state = prefix;
    advance(state, first_layer);
    return readout_blocks(state, settings_, mode);
}

FeatureVector CircuitEvaluator::features(const DensityMatrix& input,
                                         const ShotMode& mode) const {
    if (!params_set_) throw UsageError("evaluator parameters not set");
    if (loss_p_ == 0.0) {
        DensityMatrix state = prepare_extended(input);
        FeatureVector out;
        out.trace = state.trace_real();
        int dim = circuit_shape_.total_dim();
        out.values.resize(feature_dim());
        for (std::size_t k = 0; k < setting_products_.size(); ++k) {
            RVector p = transformed_diagonal(setting_products_[k], state.rho);
            p = p.cwiseMax(0.0);
            if (mode.shots > 0) {
                std::mt19937_64 rng = make_rng(
                    mode.seed, stream_tag("readout"), mode.sample_index,
                    static_cast<std::uint64_t>(settings_[k].id));
                p = multinomial_frequencies(p, mode.shots, rng);
            }
            out.values.segment(static_cast<int>(k) * dim, dim) = p;
        }
        return out;
    }
    DensityMatrix rho_out = propagate(input);
    return readout_blocks(rho_out, settings_, mode);
}

FeatureVector CircuitEvaluator::features(const MixedStateEnsemble& input,
                                         const ShotMode& mode) const {
    if (!params_set_) throw UsageError("evaluator parameters not set");
    if (!(input.shape == data_shape_)) {
        throw UsageError("input ensemble shape does not match the evaluator");
    }
    if (loss_p_ > 0.0 || num_ancillas_ > 0) {
        return features(input.to_density(), mode);
    }
    if (input.weights.size() != input.vectors.size()) {
        throw UsageError("ensemble weights and vectors differ in length");
    }
    int dim = circuit_shape_.total_dim();
    FeatureVector out;
    out.trace = input.white_weight;
    for (std::size_t r = 0; r < input.weights.size(); ++r) {
        out.trace += input.weights[r] * input.vectors[r].squaredNorm();
    }
    out.values.resize(feature_dim());
    for (std::size_t k = 0; k < setting_products_.size(); ++k) {
        RVector p = (input.white_weight / double(dim)) * setting_rowsq_[k];
        for (std::size_t r = 0; r < input.vectors.size(); ++r) {
            p += input.weights[r] *
                 (setting_products_[k] * input.vectors[r]).cwiseAbs2();
        }
        p = p.cwiseMax(0.0);
        if (mode.shots > 0) {
            std::mt19937_64 rng = make_rng(
                mode.seed, stream_tag("readout"), mode.sample_index,
                static_cast<std::uint64_t>(settings_[k].id));
            p = multinomial_frequencies(p, mode.shots, rng);
        }
        out.values.segment(static_cast<int>(k) * dim, dim) = p;
    }
    return out;
}

} // namespace cvqw
