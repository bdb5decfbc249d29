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

#ifndef CVQW_BASELINES_HPP_
#define CVQW_BASELINES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cvqw/circuit.hpp"
#include "cvqw/datagen.hpp"
#include "cvqw/learn.hpp"

namespace cvqw {

/// Per-feature standardization fit on the training split only; zero-variance
/// features keep scale 1 so they map to zero instead of NaN.
struct StandardScaler {
    RVector mean;
    RVector scale;

    static StandardScaler fit(const RMatrix& x);
    RMatrix transform(const RMatrix& x) const;
};

double rbf_kernel(const RVector& x, const RVector& y, double gamma_k);

/// Soft-margin RBF SVM in dual form. dual_coefs stores alpha_i * y_i with
/// y in {-1, +1}, so every entry lies in [-C, C].
struct SvmModel {
    RMatrix support_vectors;
    RVector dual_coefs;
    double bias = 0.0;
    double gamma_k = 0.0;
    double c = 0.0;
    bool converged = true;
};

struct SvmConfig {
    double c = 1.0;
    double gamma_k = 1.0;
    double tolerance = 1e-3;
    int max_passes = 1000;
    std::uint64_t seed = 0;
};

/// Simplified sequential minimal optimization: seeded pairwise coordinate
/// ascent until a full sweep leaves every KKT condition satisfied within
/// tolerance, or max_passes sweeps elapse (model flagged non-converged).
SvmModel svm_train(const RMatrix& x, const std::vector<int>& y,
                   const SvmConfig& config);

RVector svm_decision(const SvmModel& model, const RMatrix& x);
std::vector<int> svm_predict(const SvmModel& model, const RMatrix& x);

/// Grid entries for the kernel width: a literal value or one of the
/// data-dependent rules 'scale' = 1/(n_features * var(X)) and
/// 'auto' = 1/n_features.
enum class GammaRule { kValue, kScale, kAuto };

struct GammaChoice {
    GammaRule rule = GammaRule::kValue;
    double value = 0.0;

    static GammaChoice literal(double v) {
        return GammaChoice{GammaRule::kValue, v};
    }
    static GammaChoice scale() { return GammaChoice{GammaRule::kScale, 0.0}; }
    static GammaChoice automatic() {
        return GammaChoice{GammaRule::kAuto, 0.0};
    }
    std::string name() const;
};

double resolve_gamma(const GammaChoice& choice, const RMatrix& x);

/// The Appendix-B search space: C in {1, 10, 100} and
/// gamma in {1e-3, 1e-2, 1e-1, 'scale', 'auto'}.
std::vector<double> default_c_grid();
std::vector<GammaChoice> default_gamma_grid();

struct CvRow {
    double c = 0.0;
    std::string gamma_name;
    double gamma_value = 0.0;
    int fold = 0;
    double accuracy = 0.0;
};

struct GridSearchResult {
    double best_c = 0.0;
    GammaChoice best_gamma;
    double best_gamma_value = 0.0;
    double best_cv_accuracy = 0.0;
    std::vector<CvRow> table;
};

/// Seeded stratified k-fold CV over the grid; the winner maximizes mean
/// fold accuracy with ties broken by smaller C, then smaller resolved
/// gamma. Data-dependent gammas resolve against the full x once.
GridSearchResult grid_search_cv(const RMatrix& x, const std::vector<int>& y,
                                const std::vector<double>& c_grid,
                                const std::vector<GammaChoice>& gamma_grid,
                                int folds, std::uint64_t seed);

/// CSV with header C,gamma,fold,accuracy.
void write_cv_table_csv(const GridSearchResult& result,
                        const std::string& path);

/// Seeded stratified fold ids in [0, folds); per class, fold sizes differ
/// by at most one.
std::vector<int> stratified_fold_ids(const std::vector<int>& y, int folds,
                                     std::uint64_t seed);

/// Feature matrices for the two baseline scenarios.
RMatrix engineered_matrix(const std::vector<LabeledState>& samples);
/// Analytic readout features from a frozen, untrained circuit: the exact
/// vectors the hybrid head would see at initialization.
RMatrix matched_matrix(const std::vector<LabeledState>& samples,
                       const CircuitEvaluator& frozen);
CircuitEvaluator frozen_evaluator(const ModeShape& shape, int num_layers,
                                  std::uint64_t seed);

std::vector<int> labels_of(const std::vector<LabeledState>& samples);

struct MlpBaselineConfig {
    std::vector<int> hidden_sizes = {64, 32};
    double dropout_rate = 0.1;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20;
    std::uint64_t seed = 0;
};

struct MlpBaselineModel {
    MLPParams phi;
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

/// Classical-only training on fixed feature matrices, reusing the hybrid
/// head's substrate (LayerNorm + ReLU + dropout, Adam, early stopping).
MlpBaselineModel baseline_mlp_train(const RMatrix& x_train,
                                    const std::vector<int>& y_train,
                                    const RMatrix& x_val,
                                    const std::vector<int>& y_val,
                                    const MlpBaselineConfig& config);

RVector mlp_scores(const MLPParams& phi, const RMatrix& x);

} // namespace cvqw

#endif // CVQW_BASELINES_HPP_
