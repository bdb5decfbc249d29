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

#ifndef CVQW_LEARN_HPP_
#define CVQW_LEARN_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cvqw/circuit.hpp"
#include "cvqw/datagen.hpp"
#include "cvqw/eval.hpp"

namespace cvqw {

/// Classical head: affine layers with layer normalization, learned gain and
/// offset, ReLU, and dropout on every hidden layer; the output layer is a
/// bare affine map to one logit.
struct MLPParams {
    std::vector<int> sizes;
    std::vector<RMatrix> weights;
    std::vector<RVector> biases;
    std::vector<RVector> gains;
    std::vector<RVector> offsets;
    double dropout_rate = 0.1;

    /// Fan-in-scaled uniform weights, zero biases, unit gains, zero offsets.
    static MLPParams init(const std::vector<int>& sizes, std::uint64_t seed,
                          double dropout_rate = 0.1);

    int hidden_layers() const { return int(sizes.size()) - 2; }
    int parameter_count() const;
    /// Per layer: weight matrix row-major, bias, then (hidden layers only)
    /// gain and offset.
    std::vector<double> flatten() const;
    static MLPParams unflatten(const std::vector<int>& sizes,
                               const std::vector<double>& flat,
                               double dropout_rate = 0.1);
};

/// Inverted-scaling dropout masks, one vector per hidden layer with entries
/// in {0, 1/(1-rate)}. An empty `masks` means inference (no dropout).
struct DropoutMasks {
    std::vector<RVector> masks;

    bool active() const { return !masks.empty(); }
};

DropoutMasks draw_dropout_masks(const MLPParams& phi, std::mt19937_64& rng);

/// Intermediates of one forward pass, retained for backprop.
struct ForwardCache {
    RVector input;
    std::vector<RVector> pre_norm;
    std::vector<RVector> normalized;
    std::vector<double> inv_sigma;
    std::vector<RVector> pre_relu;
    std::vector<RVector> activations;
    double witness = 0.0;
};

/// Witness logit for one feature vector. Pass masks for training-mode
/// dropout; pass nullptr cache when intermediates are not needed.
double head_forward(const RVector& features, const MLPParams& phi,
                    const DropoutMasks* masks, ForwardCache* cache);

/// Numerically stable binary cross entropy on the logit.
double bce_with_logits(double witness, int label);

/// BCE plus the trace penalty gamma (1 - trace)^2.
double total_loss(double witness, int label, double trace, double gamma);
double total_loss(double witness, int label, const FeatureVector& features,
                  double gamma);

/// Reverse-mode gradients of one sample's loss through the head. The
/// returned structure reuses MLPParams as a gradient container.
/// grad_witness is dL/d(witness), i.e. logistic(witness) - label for BCE.
/// When input_grad is non-null it receives dL/d(features).
MLPParams head_backward(const MLPParams& phi, const ForwardCache& cache,
                        const DropoutMasks* masks, double grad_witness,
                        RVector* input_grad = nullptr);

MLPParams zeros_like(const MLPParams& phi);

/// Classification of every flat circuit parameter, in flatten() order.
enum class ParamKind {
    kRotation,
    kBsTheta,
    kBsPhi,
    kSqueeze,
    kDispRe,
    kDispIm,
    kKerr,
};

std::vector<ParamKind> parameter_kinds(const ModeShape& shape,
                                       int num_layers);

/// Layer index owning each flat circuit parameter.
std::vector<int> parameter_layers(const ModeShape& shape, int num_layers);

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20;
    double gamma = 1.0;
    double learning_rate = 1e-3;
    double fd_epsilon = 1e-4;
    /// Two-point pi/2 shift rule for phase rotations. Only exact when the
    /// number operator has spectrum {0, 1}, i.e. cutoff 2; other parameters
    /// and cutoffs always fall back to central differences.
    bool use_shift_rule = false;
    /// Gradients normally use analytic features even when evaluation is
    /// finite-shot; this switches gradient estimation to sampled features.
    bool stochastic_gradients = false;
    int gradient_shots = 0;
    std::vector<int> hidden_sizes = {64, 64};
    double dropout_rate = 0.1;
    std::uint64_t seed = 0;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    int step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(int n, double lr);
    /// Standard bias-corrected update, applied in place.
    void update(std::vector<double>& params, const std::vector<double>& grads);
};

/// One minibatch sample as the head sees it. readout_index keys the
/// per-sample shot stream when gradients are stochastic.
struct BatchSample {
    const LabeledState* state = nullptr;
    FeatureVector features;
    DropoutMasks masks;
    std::uint64_t readout_index = 0;
};

/// Mean gradient of the total loss with respect to the flat quantum
/// parameters. The evaluator holds the base parameters and is restored
/// before returning. Dropout masks and features in `batch` are the ones
/// from the base forward pass; every shifted evaluation reuses the same
/// masks. Layer-prefix states are cached per sample so a shift in layer l
/// recomputes only layers l..L-1 when the channel is lossy.
std::vector<double> quantum_gradients(std::vector<BatchSample>& batch,
                                      CircuitEvaluator& evaluator,
                                      const MLPParams& phi,
                                      const TrainConfig& config);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double grad_norm = 0.0;
};

struct EvalMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Inference-mode (analytic features, no dropout) loss and accuracy.
EvalMetrics evaluate_split(const std::vector<LabeledState>& samples,
                           const CircuitEvaluator& evaluator,
                           const MLPParams& phi, double gamma);

/// Witness scores for downstream metrics; shots = 0 reads out analytically,
/// otherwise sample i uses the stream (seed, "readout", i, setting).
ScoredPredictions score_split(const std::vector<LabeledState>& samples,
                              const CircuitEvaluator& evaluator,
                              const MLPParams& phi, int shots,
                              std::uint64_t seed);

struct TrainResult {
    CircuitParams theta;
    MLPParams phi;
    AdamState adam;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

/// Joint Adam training of (Theta, Phi) with seeded shuffling, minibatches,
/// per-epoch history, early stopping on validation loss, and best-epoch
/// parameter restoration. The evaluator is left holding the returned Theta.
/// Non-finite losses or gradients raise TrainingFailureError naming the
/// epoch. `on_epoch`, when set, sees each epoch's stats as they complete.
TrainResult train(const DatasetSplit& dataset, const TrainConfig& config,
                  CircuitEvaluator& evaluator,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Checkpoint persistence: `<path>.json` carries the manifest (shapes,
/// sizes, optimizer scalars, history, best epoch) and `<path>.bin` the
/// flat parameter and moment payloads.
struct Checkpoint {
    ModeShape shape;
    int num_layers = 0;
    double loss_p = 0.0;
    int num_ancillas = 0;
    CircuitParams theta;
    MLPParams phi;
    AdamState adam;
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// CSV with header epoch,train_loss,val_loss,train_acc,val_acc,grad_norm.
void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path);

} // namespace cvqw

#endif // CVQW_LEARN_HPP_
