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
#include <functional>
#include <vector>

#include "cvqw/util.hpp"

namespace cvqw {

/// Per-sample binary labels with real-valued scores. `threshold` is the
/// decision cut: score > threshold predicts class 1. Witness logits use 0,
/// probabilities would use 0.5.
struct ScoredPredictions {
    std::vector<int> labels;
    std::vector<double> scores;
    double threshold = 0.0;
};

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

struct PrPoint {
    double threshold;
    double precision;
    double recall;
};

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
};

double accuracy(const ScoredPredictions& preds);

/// ROC by sweeping unique scores descending, grouping ties into a single
/// threshold step. Starts at (0, 0) and ends at (1, 1).
std::vector<RocPoint> roc_curve(const ScoredPredictions& preds);

/// Trapezoid-rule area under the ROC staircase, accumulated in integer
/// counts so it agrees exactly with the rank (Mann-Whitney) formulation.
/// Throws UndefinedMetricError if only one class is present.
double roc_auc(const ScoredPredictions& preds);

std::vector<PrPoint> pr_curve(const ScoredPredictions& preds);

using MetricFn = std::function<double(const ScoredPredictions&)>;

struct BootstrapResult {
    ConfidenceInterval ci;
    std::vector<double> distribution;
};

/// Percentile bootstrap CI where every replicate resamples with replacement
/// within each class, preserving the class counts. Percentiles use linear
/// interpolation on the sorted replicate metrics. Replicate b draws from an
/// independent stream derived from (seed, b).
BootstrapResult stratified_bootstrap_ci(const ScoredPredictions& preds,
                                        const MetricFn& metric, int B = 1000,
                                        double level = 0.95,
                                        std::uint64_t seed = 0);

/// Closed-interval overlap convention: touching endpoints are not disjoint.
bool ci_disjoint(const ConfidenceInterval& a, const ConfidenceInterval& b);

/// Linear-interpolation quantile of a sorted sample, h = (n-1) q.
double sorted_quantile(const std::vector<double>& sorted_values, double q);

} // namespace cvqw
