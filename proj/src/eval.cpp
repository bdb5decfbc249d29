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

#include "cvqw/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace cvqw {

namespace {

void check_predictions(const ScoredPredictions& preds) {
    if (preds.labels.size() != preds.scores.size()) {
        throw UsageError("labels and scores must have equal length");
    }
    if (preds.labels.empty()) {
        throw UsageError("predictions are empty");
    }
    for (std::size_t i = 0; i < preds.labels.size(); ++i) {
        if (preds.labels[i] != 0 && preds.labels[i] != 1) {
            throw UsageError("labels must be 0 or 1");
        }
        if (!std::isfinite(preds.scores[i])) {
            throw UsageError("scores must be finite");
        }
    }
}

/// Indices sorted by score descending; stable so equal scores keep input
/// order (they are grouped anyway).
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return scores[a] > scores[b];
                     });
    return order;
}

struct ClassCounts {
    long long positives = 0;
    long long negatives = 0;
};

ClassCounts count_classes(const ScoredPredictions& preds) {
    ClassCounts counts;
    for (int label : preds.labels) {
        if (label == 1)
            ++counts.positives;
        else
            ++counts.negatives;
    }
    return counts;
}

} // namespace

double accuracy(const ScoredPredictions& preds) {
    check_predictions(preds);
    long long correct = 0;
    for (std::size_t i = 0; i < preds.labels.size(); ++i) {
        int predicted = preds.scores[i] > preds.threshold ? 1 : 0;
        if (predicted == preds.labels[i]) ++correct;
    }
    return double(correct) / double(preds.labels.size());
}

std::vector<RocPoint> roc_curve(const ScoredPredictions& preds) {
    check_predictions(preds);
    ClassCounts counts = count_classes(preds);
    if (counts.positives == 0 || counts.negatives == 0) {
        throw UndefinedMetricError("ROC requires both classes present");
    }
    std::vector<std::size_t> order = descending_order(preds.scores);

    std::vector<RocPoint> curve;
    curve.push_back(
        {std::numeric_limits<double>::infinity(), 0.0, 0.0});
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double score = preds.scores[order[i]];
        while (i < order.size() && preds.scores[order[i]] == score) {
            if (preds.labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        curve.push_back({score, double(fp) / double(counts.negatives),
                         double(tp) / double(counts.positives)});
    }
    return curve;
}

double roc_auc(const ScoredPredictions& preds) {
    check_predictions(preds);
    ClassCounts counts = count_classes(preds);
    if (counts.positives == 0 || counts.negatives == 0) {
        throw UndefinedMetricError("AUC requires both classes present");
    }
    std::vector<std::size_t> order = descending_order(preds.scores);

    // Trapezoid rule over grouped-tie threshold steps. The counts are kept
    // in integers so tied positive/negative pairs contribute exactly 1/2.
    long long tp = 0, fp = 0;
    long long twice_area = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double score = preds.scores[order[i]];
        long long tp_prev = tp, fp_prev = fp;
        while (i < order.size() && preds.scores[order[i]] == score) {
            if (preds.labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        twice_area += (fp - fp_prev) * (tp + tp_prev);
    }
    return double(twice_area) /
           (2.0 * double(counts.positives) * double(counts.negatives));
}

std::vector<PrPoint> pr_curve(const ScoredPredictions& preds) {
    check_predictions(preds);
    ClassCounts counts = count_classes(preds);
    if (counts.positives == 0) {
        throw UndefinedMetricError("PR curve requires positive samples");
    }
    std::vector<std::size_t> order = descending_order(preds.scores);

    std::vector<PrPoint> curve;
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double score = preds.scores[order[i]];
        while (i < order.size() && preds.scores[order[i]] == score) {
            if (preds.labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        curve.push_back({score, double(tp) / double(tp + fp),
                         double(tp) / double(counts.positives)});
    }
    return curve;
}

double sorted_quantile(const std::vector<double>& sorted_values, double q) {
    if (sorted_values.empty()) throw UsageError("quantile of empty sample");
    if (q <= 0.0) return sorted_values.front();
    if (q >= 1.0) return sorted_values.back();
    double h = double(sorted_values.size() - 1) * q;
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    double frac = h - double(lo);
    if (lo + 1 >= sorted_values.size()) return sorted_values.back();
    return sorted_values[lo] * (1.0 - frac) + sorted_values[lo + 1] * frac;
}

BootstrapResult stratified_bootstrap_ci(const ScoredPredictions& preds,
                                        const MetricFn& metric, int B,
                                        double level, std::uint64_t seed) {
    check_predictions(preds);
    if (B < 1) throw UsageError("bootstrap needs at least one replicate");
    if (!(level > 0.0 && level < 1.0)) {
        throw UsageError("confidence level must lie in (0, 1)");
    }
    std::vector<std::size_t> pos_idx, neg_idx;
    for (std::size_t i = 0; i < preds.labels.size(); ++i) {
        (preds.labels[i] == 1 ? pos_idx : neg_idx).push_back(i);
    }
    if (pos_idx.empty() || neg_idx.empty()) {
        throw UsageError("stratified bootstrap requires both classes");
    }

    BootstrapResult out;
    out.distribution.resize(B);
    for (int b = 0; b < B; ++b) {
        std::mt19937_64 rng = make_rng(seed, stream_tag("bootstrap"),
                                       static_cast<std::uint64_t>(b));
        ScoredPredictions resampled;
        resampled.threshold = preds.threshold;
        resampled.labels.reserve(preds.labels.size());
        resampled.scores.reserve(preds.labels.size());
        std::uniform_int_distribution<std::size_t> pick_pos(
            0, pos_idx.size() - 1);
        for (std::size_t k = 0; k < pos_idx.size(); ++k) {
            std::size_t i = pos_idx[pick_pos(rng)];
            resampled.labels.push_back(preds.labels[i]);
            resampled.scores.push_back(preds.scores[i]);
        }
        std::uniform_int_distribution<std::size_t> pick_neg(
            0, neg_idx.size() - 1);
        for (std::size_t k = 0; k < neg_idx.size(); ++k) {
            std::size_t i = neg_idx[pick_neg(rng)];
            resampled.labels.push_back(preds.labels[i]);
            resampled.scores.push_back(preds.scores[i]);
        }
        out.distribution[b] = metric(resampled);
    }

    std::vector<double> sorted = out.distribution;
    std::sort(sorted.begin(), sorted.end());
    double alpha = 1.0 - level;
    out.ci.low = sorted_quantile(sorted, alpha / 2.0);
    out.ci.high = sorted_quantile(sorted, 1.0 - alpha / 2.0);
    return out;
}

bool ci_disjoint(const ConfidenceInterval& a, const ConfidenceInterval& b) {
    return a.high < b.low || b.high < a.low;
}

} // namespace cvqw
