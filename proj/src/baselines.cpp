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

#include "cvqw/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "cvqw/util.hpp"

namespace cvqw {

namespace {

constexpr double kZeroVariance = 1e-12;
constexpr double kSvThreshold = 1e-10;
constexpr double kAlphaStep = 1e-5;

void check_xy(const RMatrix& x, const std::vector<int>& y) {
    if (x.rows() != Eigen::Index(y.size())) {
        throw UsageError("feature matrix and labels disagree in length");
    }
    if (x.rows() == 0) throw UsageError("empty training set");
}

std::vector<double> signed_labels(const std::vector<int>& y) {
    std::vector<double> s(y.size());
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1) {
            s[i] = 1.0;
            pos = true;
        } else if (y[i] == 0) {
            s[i] = -1.0;
            neg = true;
        } else {
            throw UsageError("labels must be 0 or 1");
        }
    }
    if (!pos || !neg) {
        throw UsageError("SVM training needs both classes present");
    }
    return s;
}

/// Pairwise squared Euclidean distances between the rows of a and b.
RMatrix squared_distances(const RMatrix& a, const RMatrix& b) {
    RVector a_sq = a.rowwise().squaredNorm();
    RVector b_sq = b.rowwise().squaredNorm();
    RMatrix d = -2.0 * (a * b.transpose());
    d.colwise() += a_sq;
    d.rowwise() += b_sq.transpose();
    return d.cwiseMax(0.0);
}

struct SmoResult {
    std::vector<double> alpha;
    double bias = 0.0;
    bool converged = false;
};

/// Simplified SMO on a precomputed Gram matrix. One sweep visits every
/// index; convergence is a sweep with no alpha update, meaning all KKT
/// conditions hold within tolerance.
SmoResult smo_solve(const RMatrix& gram, const std::vector<double>& y,
                    double c, double tolerance, int max_passes,
                    std::mt19937_64& rng) {
    int n = int(y.size());
    SmoResult result;
    result.alpha.assign(std::size_t(n), 0.0);
    std::vector<double>& alpha = result.alpha;
    double& b = result.bias;
    // errors[i] = f(x_i) - y_i, maintained incrementally.
    std::vector<double> errors(y.size());
    for (int i = 0; i < n; ++i) errors[std::size_t(i)] = -y[std::size_t(i)];

    std::uniform_int_distribution<int> pick(0, n - 2);
    for (int sweep = 0; sweep < max_passes; ++sweep) {
        int changed = 0;
        for (int i = 0; i < n; ++i) {
            std::size_t si = std::size_t(i);
            double ei = errors[si];
            bool violates = (y[si] * ei < -tolerance && alpha[si] < c) ||
                            (y[si] * ei > tolerance && alpha[si] > 0.0);
            if (!violates) continue;

            int j = pick(rng);
            if (j >= i) ++j;
            std::size_t sj = std::size_t(j);
            double ej = errors[sj];
            double ai_old = alpha[si], aj_old = alpha[sj];

            double low, high;
            if (y[si] != y[sj]) {
                low = std::max(0.0, aj_old - ai_old);
                high = std::min(c, c + aj_old - ai_old);
            } else {
                low = std::max(0.0, ai_old + aj_old - c);
                high = std::min(c, ai_old + aj_old);
            }
            if (low == high) continue;

            double eta = 2.0 * gram(i, j) - gram(i, i) - gram(j, j);
            if (eta >= 0.0) continue;

            double aj = aj_old - y[sj] * (ei - ej) / eta;
            aj = std::min(high, std::max(low, aj));
            if (std::abs(aj - aj_old) < kAlphaStep) continue;
            double ai = ai_old + y[si] * y[sj] * (aj_old - aj);

            double di = y[si] * (ai - ai_old);
            double dj = y[sj] * (aj - aj_old);
            double b1 = b - ei - di * gram(i, i) - dj * gram(i, j);
            double b2 = b - ej - di * gram(i, j) - dj * gram(j, j);
            double b_new;
            if (ai > 0.0 && ai < c) {
                b_new = b1;
            } else if (aj > 0.0 && aj < c) {
                b_new = b2;
            } else {
                b_new = (b1 + b2) / 2.0;
            }
            double db = b_new - b;
            alpha[si] = ai;
            alpha[sj] = aj;
            b = b_new;
            for (int k = 0; k < n; ++k) {
                errors[std::size_t(k)] +=
                    di * gram(i, k) + dj * gram(j, k) + db;
            }
            ++changed;
        }
        if (changed == 0) {
            result.converged = true;
            break;
        }
    }
    return result;
}

SvmModel model_from_solution(const RMatrix& x,
                             const std::vector<double>& y_signed,
                             const SmoResult& solution, double c,
                             double gamma_k) {
    SvmModel model;
    model.bias = solution.bias;
    model.gamma_k = gamma_k;
    model.c = c;
    model.converged = solution.converged;
    std::vector<int> sv_rows;
    for (std::size_t i = 0; i < solution.alpha.size(); ++i) {
        if (solution.alpha[i] > kSvThreshold) sv_rows.push_back(int(i));
    }
    model.support_vectors.resize(Eigen::Index(sv_rows.size()), x.cols());
    model.dual_coefs.resize(Eigen::Index(sv_rows.size()));
    for (std::size_t k = 0; k < sv_rows.size(); ++k) {
        std::size_t row = std::size_t(sv_rows[k]);
        model.support_vectors.row(Eigen::Index(k)) = x.row(sv_rows[k]);
        model.dual_coefs(Eigen::Index(k)) =
            solution.alpha[row] * y_signed[row];
    }
    return model;
}

} // namespace

StandardScaler StandardScaler::fit(const RMatrix& x) {
    if (x.rows() == 0) throw UsageError("cannot fit a scaler on no rows");
    StandardScaler scaler;
    scaler.mean = x.colwise().mean();
    RMatrix centered = x.rowwise() - scaler.mean.transpose();
    RVector var =
        centered.cwiseProduct(centered).colwise().mean();
    scaler.scale = var.cwiseSqrt();
    for (int j = 0; j < scaler.scale.size(); ++j) {
        if (scaler.scale(j) < kZeroVariance) scaler.scale(j) = 1.0;
    }
    return scaler;
}

RMatrix StandardScaler::transform(const RMatrix& x) const {
    if (x.cols() != mean.size()) {
        throw UsageError("scaler was fit on a different feature width");
    }
    RMatrix out = x.rowwise() - mean.transpose();
    out.array().rowwise() /= scale.transpose().array();
    return out;
}

double rbf_kernel(const RVector& x, const RVector& y, double gamma_k) {
    if (x.size() != y.size()) {
        throw UsageError("kernel arguments differ in length");
    }
    if (gamma_k <= 0.0) throw UsageError("kernel width must be positive");
    return std::exp(-gamma_k * (x - y).squaredNorm());
}

SvmModel svm_train(const RMatrix& x, const std::vector<int>& y,
                   const SvmConfig& config) {
    check_xy(x, y);
    if (config.c <= 0.0) throw UsageError("C must be positive");
    if (config.gamma_k <= 0.0) throw UsageError("gamma must be positive");
    std::vector<double> ys = signed_labels(y);

    RMatrix gram =
        (-config.gamma_k * squared_distances(x, x).array()).exp();
    std::mt19937_64 rng = make_rng(config.seed, stream_tag("smo"));
    SmoResult solution = smo_solve(gram, ys, config.c, config.tolerance,
                                   config.max_passes, rng);
    if (!solution.converged) {
        std::fprintf(stderr,
                     "warning: SMO did not converge within %d sweeps "
                     "(C=%g, gamma=%g); returning best-effort model\n",
                     config.max_passes, config.c, config.gamma_k);
    }
    return model_from_solution(x, ys, solution, config.c, config.gamma_k);
}

RVector svm_decision(const SvmModel& model, const RMatrix& x) {
    if (x.cols() != model.support_vectors.cols() &&
        model.support_vectors.rows() > 0) {
        throw UsageError("feature width does not match the trained model");
    }
    if (model.support_vectors.rows() == 0) {
        return RVector::Constant(x.rows(), model.bias);
    }
    RMatrix k =
        (-model.gamma_k *
         squared_distances(x, model.support_vectors).array())
            .exp();
    return (k * model.dual_coefs).array() + model.bias;
}

std::vector<int> svm_predict(const SvmModel& model, const RMatrix& x) {
    RVector scores = svm_decision(model, x);
    std::vector<int> labels(std::size_t(scores.size()));
    for (int i = 0; i < scores.size(); ++i) {
        labels[std::size_t(i)] = scores(i) > 0.0 ? 1 : 0;
    }
    return labels;
}

std::string GammaChoice::name() const {
    switch (rule) {
        case GammaRule::kScale: return "scale";
        case GammaRule::kAuto: return "auto";
        case GammaRule::kValue: break;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

double resolve_gamma(const GammaChoice& choice, const RMatrix& x) {
    switch (choice.rule) {
        case GammaRule::kValue:
            if (choice.value <= 0.0) {
                throw UsageError("gamma grid values must be positive");
            }
            return choice.value;
        case GammaRule::kAuto:
            return 1.0 / double(x.cols());
        case GammaRule::kScale: {
            double mean = x.mean();
            double var = (x.array() - mean).square().mean();
            if (var < kZeroVariance) {
                throw UsageError(
                    "'scale' gamma is undefined for constant features");
            }
            return 1.0 / (double(x.cols()) * var);
        }
    }
    throw UsageError("unknown gamma rule");
}

std::vector<double> default_c_grid() { return {1.0, 10.0, 100.0}; }

std::vector<GammaChoice> default_gamma_grid() {
    return {GammaChoice::literal(1e-3), GammaChoice::literal(1e-2),
            GammaChoice::literal(1e-1), GammaChoice::scale(),
            GammaChoice::automatic()};
}

std::vector<int> stratified_fold_ids(const std::vector<int>& y, int folds,
                                     std::uint64_t seed) {
    if (folds < 2) throw UsageError("cross-validation needs >= 2 folds");
    std::vector<int> ids(y.size(), -1);
    std::mt19937_64 rng = make_rng(seed, stream_tag("cv-folds"));
    for (int label : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == label) members.push_back(i);
        }
        seeded_shuffle(members, rng);
        for (std::size_t pos = 0; pos < members.size(); ++pos) {
            ids[members[pos]] = int(pos % std::size_t(folds));
        }
    }
    return ids;
}

GridSearchResult grid_search_cv(const RMatrix& x, const std::vector<int>& y,
                                const std::vector<double>& c_grid,
                                const std::vector<GammaChoice>& gamma_grid,
                                int folds, std::uint64_t seed) {
    check_xy(x, y);
    if (c_grid.empty() || gamma_grid.empty()) {
        throw UsageError("hyperparameter grid must be non-empty");
    }
    std::vector<double> ys = signed_labels(y);
    std::vector<int> fold_ids = stratified_fold_ids(y, folds, seed);

    struct Cell {
        double c;
        GammaChoice gamma;
        double gamma_value;
    };
    std::vector<Cell> cells;
    for (double c : c_grid) {
        for (const GammaChoice& g : gamma_grid) {
            cells.push_back(Cell{c, g, resolve_gamma(g, x)});
        }
    }
    std::stable_sort(cells.begin(), cells.end(),
                     [](const Cell& a, const Cell& b) {
                         if (a.c != b.c) return a.c < b.c;
                         return a.gamma_value < b.gamma_value;
                     });

    std::vector<std::vector<double>> accuracy(
        cells.size(), std::vector<double>(std::size_t(folds), 0.0));
    for (int fold = 0; fold < folds; ++fold) {
        std::vector<int> train_rows, val_rows;
        for (std::size_t i = 0; i < y.size(); ++i) {
            (fold_ids[i] == fold ? val_rows : train_rows).push_back(int(i));
        }
        if (train_rows.empty() || val_rows.empty()) {
            throw UsageError("a fold is empty; reduce the fold count");
        }
        RMatrix x_tr(Eigen::Index(train_rows.size()), x.cols());
        RMatrix x_val(Eigen::Index(val_rows.size()), x.cols());
        std::vector<double> y_tr(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            x_tr.row(Eigen::Index(i)) = x.row(train_rows[i]);
            y_tr[i] = ys[std::size_t(train_rows[i])];
        }
        for (std::size_t i = 0; i < val_rows.size(); ++i) {
            x_val.row(Eigen::Index(i)) = x.row(val_rows[i]);
        }
        // The gamma-independent distance matrices are the expensive part;
        // each grid cell only re-exponentiates them.
        RMatrix d_tr = squared_distances(x_tr, x_tr);
        RMatrix d_val = squared_distances(x_val, x_tr);

        for (std::size_t cell = 0; cell < cells.size(); ++cell) {
            double gamma_value = cells[cell].gamma_value;
            RMatrix gram = (-gamma_value * d_tr.array()).exp();
            std::mt19937_64 rng = make_rng(seed, stream_tag("smo"),
                                           std::uint64_t(cell),
                                           std::uint64_t(fold));
            SmoResult solution =
                smo_solve(gram, y_tr, cells[cell].c, 1e-3, 1000, rng);
            RVector alpha_y(Eigen::Index(y_tr.size()));
            for (std::size_t i = 0; i < y_tr.size(); ++i) {
                alpha_y(Eigen::Index(i)) = solution.alpha[i] * y_tr[i];
            }
            RMatrix k_val = (-gamma_value * d_val.array()).exp();
            RVector scores = (k_val * alpha_y).array() + solution.bias;
            int correct = 0;
            for (std::size_t i = 0; i < val_rows.size(); ++i) {
                int predicted = scores(Eigen::Index(i)) > 0.0 ? 1 : 0;
                if (predicted == y[std::size_t(val_rows[i])]) ++correct;
            }
            accuracy[cell][std::size_t(fold)] =
                double(correct) / double(val_rows.size());
        }
    }

    GridSearchResult result;
    double best_mean = -1.0;
    for (std::size_t cell = 0; cell < cells.size(); ++cell) {
        double mean = 0.0;
        for (int fold = 0; fold < folds; ++fold) {
            mean += accuracy[cell][std::size_t(fold)];
            result.table.push_back(CvRow{cells[cell].c,
                                         cells[cell].gamma.name(),
                                         cells[cell].gamma_value, fold,
                                         accuracy[cell][std::size_t(fold)]});
        }
        mean /= double(folds);
        // Cells are sorted by (C, gamma) ascending, so the first winner
        // realizes the smaller-C-then-smaller-gamma tie break.
        if (mean > best_mean) {
            best_mean = mean;
            result.best_c = cells[cell].c;
            result.best_gamma = cells[cell].gamma;
            result.best_gamma_value = cells[cell].gamma_value;
        }
    }
    result.best_cv_accuracy = best_mean;
    return result;
}

void write_cv_table_csv(const GridSearchResult& result,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write CV table " + path);
    out << "C,gamma,fold,accuracy\n";
    char line[128];
    for (const CvRow& row : result.table) {
        std::snprintf(line, sizeof(line), "%g,%s,%d,%.17g\n", row.c,
                      row.gamma_name.c_str(), row.fold, row.accuracy);
        out << line;
    }
}

RMatrix engineered_matrix(const std::vector<LabeledState>& samples) {
    if (samples.empty()) throw UsageError("empty sample list");
    RVector first = engineered_features(samples.front());
    RMatrix x(Eigen::Index(samples.size()), first.size());
    x.row(0) = first;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        x.row(Eigen::Index(i)) = engineered_features(samples[i]);
    }
    return x;
}

RMatrix matched_matrix(const std::vector<LabeledState>& samples,
                       const CircuitEvaluator& frozen) {
    if (samples.empty()) throw UsageError("empty sample list");
    RMatrix x(Eigen::Index(samples.size()), frozen.feature_dim());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        x.row(Eigen::Index(i)) =
            frozen.features(samples[i].ensemble, ShotMode::analytic())
                .values;
    }
    return x;
}

CircuitEvaluator frozen_evaluator(const ModeShape& shape, int num_layers,
                                  std::uint64_t seed) {
    CircuitEvaluator evaluator(shape, num_layers, 0.0);
    evaluator.set_params(CircuitParams::random_init(
        evaluator.circuit_shape(), num_layers, seed));
    return evaluator;
}

std::vector<int> labels_of(const std::vector<LabeledState>& samples) {
    std::vector<int> y;
    y.reserve(samples.size());
    for (const LabeledState& s : samples) y.push_back(s.label);
    return y;
}

MlpBaselineModel baseline_mlp_train(const RMatrix& x_train,
                                    const std::vector<int>& y_train,
                                    const RMatrix& x_val,
                                    const std::vector<int>& y_val,
                                    const MlpBaselineConfig& config) {
    check_xy(x_train, y_train);
    check_xy(x_val, y_val);
    if (x_val.cols() != x_train.cols()) {
        throw UsageError("train and validation feature widths differ");
    }
    if (config.batch_size < 1 || config.max_epochs < 1 ||
        config.patience < 1 || config.learning_rate <= 0.0) {
        throw ConfigError("invalid baseline MLP configuration");
    }

    std::vector<int> sizes;
    sizes.push_back(int(x_train.cols()));
    sizes.insert(sizes.end(), config.hidden_sizes.begin(),
                 config.hidden_sizes.end());
    sizes.push_back(1);
    MLPParams phi = MLPParams::init(sizes, config.seed, config.dropout_rate);
    std::vector<double> flat = phi.flatten();
    AdamState adam = AdamState::init(int(flat.size()), config.learning_rate);

    auto split_metrics = [&](const RMatrix& x, const std::vector<int>& y) {
        double loss = 0.0;
        int correct = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double witness =
                head_forward(x.row(i).transpose(), phi, nullptr, nullptr);
            loss += bce_with_logits(witness, y[std::size_t(i)]);
            int predicted = witness > 0.0 ? 1 : 0;
            if (predicted == y[std::size_t(i)]) ++correct;
        }
        return EvalMetrics{loss / double(x.rows()),
                           double(correct) / double(x.rows())};
    };

    MlpBaselineModel result;
    double best_val_loss = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    std::vector<double> best_flat = flat;
    std::size_t n = std::size_t(x_train.rows());

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t(0));
        std::mt19937_64 shuffle_rng =
            make_rng(config.seed, stream_tag("shuffle"), std::uint64_t(epoch));
        seeded_shuffle(order, shuffle_rng);

        for (std::size_t start = 0; start < n;
             start += std::size_t(config.batch_size)) {
            std::size_t stop =
                std::min(n, start + std::size_t(config.batch_size));
            std::uint64_t batch_index =
                std::uint64_t(start) / std::uint64_t(config.batch_size);
            double batch_loss = 0.0;
            std::vector<double> grad(flat.size(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                Eigen::Index row = Eigen::Index(order[k]);
                int label = y_train[order[k]];
                DropoutMasks masks;
                if (config.dropout_rate > 0.0) {
                    std::mt19937_64 dropout_rng =
                        make_rng(config.seed, std::uint64_t(epoch),
                                 batch_index, std::uint64_t(k - start));
                    masks = draw_dropout_masks(phi, dropout_rng);
                }
                ForwardCache cache;
                double witness = head_forward(x_train.row(row).transpose(),
                                              phi, &masks, &cache);
                batch_loss += bce_with_logits(witness, label);
                double grad_witness =
                    1.0 / (1.0 + std::exp(-witness)) - double(label);
                std::vector<double> g =
                    head_backward(phi, cache, &masks, grad_witness, nullptr)
                        .flatten();
                for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
            }
            double nb = double(stop - start);
            batch_loss /= nb;
            for (double& g : grad) g /= nb;
            if (!std::isfinite(batch_loss)) {
                throw TrainingFailureError(
                    "non-finite baseline loss at epoch " +
                    std::to_string(epoch));
            }
            adam.update(flat, grad);
            phi = MLPParams::unflatten(sizes, flat, config.dropout_rate);
        }

        EvalMetrics train_metrics = split_metrics(x_train, y_train);
        EvalMetrics val_metrics = split_metrics(x_val, y_val);
        if (!std::isfinite(val_metrics.loss)) {
            throw TrainingFailureError(
                "non-finite baseline validation loss at epoch " +
                std::to_string(epoch));
        }
        result.history.push_back(EpochStats{epoch, train_metrics.loss,
                                            val_metrics.loss,
                                            train_metrics.accuracy,
                                            val_metrics.accuracy, 0.0});
        if (val_metrics.loss < best_val_loss) {
            best_val_loss = val_metrics.loss;
            best_epoch = epoch;
            best_flat = flat;
        } else if (epoch - best_epoch >= config.patience) {
            break;
        }
    }

    result.phi = MLPParams::unflatten(sizes, best_flat, config.dropout_rate);
    result.best_epoch = best_epoch;
    return result;
}

RVector mlp_scores(const MLPParams& phi, const RMatrix& x) {
    RVector scores(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        scores(i) = head_forward(x.row(i).transpose(), phi, nullptr, nullptr);
    }
    return scores;
}

} // namespace cvqw
