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

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cvqw/fock.hpp"
#include "cvqw/gates.hpp"

namespace cvqw {

/// Parameters of one ansatz layer: per-mode phase rotations, one (theta,
/// phi) pair per beamsplitter, per-mode squeeze amplitudes (real),
/// per-mode displacements (complex) and per-mode Kerr strengths. Counting
/// a complex as two reals the layer carries 5M + M(M-1) parameters: 12 for
/// two modes, 21 for three.
struct LayerParams {
    std::vector<double> rotations;
    std::vector<std::pair<double, double>> bs_params;
    std::vector<double> squeezes;
    std::vector<Complex> displacements;
    std::vector<double> kerrs;

    static LayerParams zeros(const ModeShape& shape);
    /// Number of real parameters for one layer on this shape.
    static int count(const ModeShape& shape);
};

/// Full ansatz: L layers on a fixed shape.
struct CircuitParams {
    ModeShape shape;
    std::vector<LayerParams> layers;

    CircuitParams() = default;
    CircuitParams(const ModeShape& shape_, int num_layers);

    /// All-layer random initialization, every real parameter drawn from
    /// N(0, sigma).
    static CircuitParams random_init(const ModeShape& shape, int num_layers,
                                     std::uint64_t seed, double sigma = 0.1);

    int parameter_count() const;
    /// Packs all parameters into a flat vector, layer by layer, each layer
    /// ordered [rotations, (theta, phi) per pair, squeezes, (re, im) per
    /// displacement, kerrs].
    std::vector<double> flatten() const;
    static CircuitParams unflatten(const ModeShape& shape, int num_layers,
                                   const std::vector<double>& flat);
};

/// Fixed pre-measurement unitary for one readout setting.
struct MeasurementSetting {
    int id = 0;
    std::string name;
    CMatrix unitary;
};

/// Readout mode: shots == 0 means analytic probabilities; otherwise
/// multinomial frequencies with `shots` draws, seeded per
/// (seed, sample_index, setting id).
struct ShotMode {
    int shots = 0;
    std::uint64_t seed = 0;
    std::uint64_t sample_index = 0;

    static ShotMode analytic() { return ShotMode{}; }
    static ShotMode sampled(int shots, std::uint64_t seed,
                            std::uint64_t sample_index = 0) {
        return ShotMode{shots, seed, sample_index};
    }
};

/// Concatenated per-setting Fock probability blocks plus the output trace.
struct FeatureVector {
    RVector values;
    double trace = 1.0;
};

/// Interferometer of Eq.-style layer assembly: per-mode phase shifters
/// first, then the beamsplitter mesh over all pairs i<j in lexicographic
/// order (pair (0,1) acts first).
CMatrix interferometer_unitary(const ModeShape& shape,
                               const LayerParams& layer);

/// One layer's unitary K(kappa) D(alpha) S(z) U_I.
CMatrix layer_unitary(const ModeShape& shape, const LayerParams& layer);

/// Product of all layer unitaries, layer 0 acting first.
CMatrix circuit_unitary(const CircuitParams& params);

/// Applies one layer; when loss_p > 0 the photon loss channel with
/// eta = 1 - loss_p hits every mode after the unitary.
DensityMatrix apply_layer(const DensityMatrix& rho, const LayerParams& layer,
                          double loss_p);

/// Applies every layer in sequence.
DensityMatrix apply_circuit(const DensityMatrix& rho,
                            const CircuitParams& params, double loss_p);

/// (1 - Re tr rho)^2.
double trace_penalty(const DensityMatrix& rho_out);

/// The K = 3 deterministic readout settings: identity; a theta = pi/4 mesh;
/// per-mode rotation pi/4 followed by the same mesh and per-mode
/// displacement 0.3.
std::vector<MeasurementSetting> default_settings(const ModeShape& shape);

/// Diagonal Fock probabilities of sigma_k = V_k rho_out V_k^dagger for every
/// setting, clamped at 0 and concatenated in setting order; sampled mode
/// renormalizes each block and returns multinomial frequencies.
FeatureVector ic_features(const DensityMatrix& rho,
                          const CircuitParams& params,
                          const std::vector<MeasurementSetting>& settings,
                          double loss_p, const ShotMode& mode);

/// Samples `shots` outcomes from an unnormalized nonnegative weight vector
/// and returns empirical frequencies. Throws DegenerateStateError when the
/// weights sum to zero.
RVector multinomial_frequencies(const RVector& weights, int shots,
                                std::mt19937_64& rng);

/// Row-sparse embedded photon-loss Kraus operator: row i draws from column
/// src[i] with real coefficient val[i]; src[i] == -1 marks a zero row. Loss
/// operators move a fixed photon count off one mode, so every row and column
/// holds at most one entry and E rho E^dagger costs O(dim^2).
struct SparseKrausOp {
    std::vector<int> src;
    std::vector<double> val;
};

/// The loss channel of transmissivity eta on `mode`, embedded in the full
/// space in row-sparse form.
std::vector<SparseKrausOp> sparse_loss_ops(const ModeShape& shape, double eta,
                                           int mode);

/// rho <- sum_k E_k rho E_k^dagger for a row-sparse Kraus set.
void apply_sparse_loss(CMatrix& rho, const std::vector<SparseKrausOp>& ops);

/// Batched circuit evaluation with cached unitaries. The evaluator owns the
/// readout settings and the noise level; parameters are swapped in and out
/// cheaply, which is what the finite-difference training loop needs. An
/// optional ancilla register extends the data modes with |0> modes passed
/// through a fixed mesh before the trainable layers.
class CircuitEvaluator {
  public:
    CircuitEvaluator(const ModeShape& data_shape, int num_layers,
                     double loss_p, int num_ancillas = 0);

    const ModeShape& data_shape() const { return data_shape_; }
    /// Shape the circuit actually runs on (data modes + ancillas).
    const ModeShape& circuit_shape() const { return circuit_shape_; }
    const std::vector<MeasurementSetting>& settings() const {
        return settings_;
    }
    int num_layers() const { return num_layers_; }
    double loss_p() const { return loss_p_; }
    int num_ancillas() const { return num_ancillas_; }
    int parameter_count() const;
    /// K * total_dim of the circuit shape.
    int feature_dim() const;

    void set_params(const CircuitParams& params);
    void set_flat_params(const std::vector<double>& flat);
    /// Replaces one layer's parameters and refreshes only that layer's
    /// unitary plus the cached products; the finite-difference loop shifts
    /// a single layer at a time and this keeps the other layers' gate
    /// exponentials untouched.
    void update_layer(int layer_index, const LayerParams& layer);
    const CircuitParams& params() const { return params_; }

    /// Extends with ancillas if configured, applies the fixed pre-unitary
    /// and all layers (with loss), and returns the output state.
    DensityMatrix propagate(const DensityMatrix& input) const;

    FeatureVector features(const DensityMatrix& input,
                           const ShotMode& mode) const;

    /// Lossless, ancilla-free circuits evaluate a pure-component mixture
    /// without ever forming the dense input matrix: each component costs one
    /// matrix-vector product per setting and the white-noise part reuses the
    /// cached row norms of W_k. Other configurations densify and fall back.
    FeatureVector features(const MixedStateEnsemble& input,
                           const ShotMode& mode) const;

    /// Input pushed through ancilla preparation, the fixed pre-unitary, and
    /// the first `layers_applied` layers (loss included). Finite-difference
    /// training caches these so a shift in layer l only recomputes layers
    /// l..L-1 via features_from_prefix.
    DensityMatrix prefix_state(const DensityMatrix& input,
                               int layers_applied) const;

    /// Completes the circuit from a cached prefix: applies layers
    /// [first_layer, L) and reads out. Bit-identical to the layered full
    /// path split at the same boundary.
    FeatureVector features_from_prefix(const DensityMatrix& prefix,
                                       int first_layer,
                                       const ShotMode& mode) const;

  private:
    DensityMatrix prepare_extended(const DensityMatrix& input) const;
    /// Applies layers [first_layer, L) in place, with per-mode loss after
    /// each layer when configured.
    void advance(DensityMatrix& state, int first_layer) const;
    void rebuild_lossless_cache();

    ModeShape data_shape_;
    ModeShape circuit_shape_;
    int num_layers_;
    double loss_p_;
    int num_ancillas_;
    CMatrix pre_unitary_;
    std::vector<MeasurementSetting> settings_;
    CircuitParams params_;
    bool params_set_ = false;
    std::vector<CMatrix> layer_unitaries_;
    std::vector<std::vector<SparseKrausOp>> sparse_loss_;
    // Lossless fast path: full unitary, per-setting W_k = V_k U, and the
    // row norms of each W_k for the white-noise feature shortcut.
    CMatrix full_unitary_;
    std::vector<CMatrix> setting_products_;
    std::vector<RVector> setting_rowsq_;
};

} // namespace cvqw
