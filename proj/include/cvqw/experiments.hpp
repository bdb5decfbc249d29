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

#ifndef CVQW_EXPERIMENTS_HPP_
#define CVQW_EXPERIMENTS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "cvqw/config.hpp"
#include "cvqw/datagen.hpp"
#include "cvqw/eval.hpp"
#include "cvqw/learn.hpp"

namespace cvqw {

/// One line of a metrics CSV. `notes` uses ';' separators so the file stays
/// a plain comma-split format.
struct MetricRow {
    std::string model;
    std::string scenario;
    double accuracy = 0.0;
    ConfidenceInterval accuracy_ci;
    double auc = 0.0;
    ConfidenceInterval auc_ci;
    std::string notes;
};

void write_metrics_csv(const std::vector<MetricRow>& rows,
                       const std::string& path);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

void write_roc_csv(const std::vector<RocPoint>& points,
                   const std::string& path);
void write_pr_csv(const std::vector<PrPoint>& points,
                  const std::string& path);

/// Point metrics plus stratified-bootstrap CIs for one scored test split.
struct EvaluatedPredictions {
    ScoredPredictions preds;
    double accuracy = 0.0;
    ConfidenceInterval accuracy_ci;
    double auc = 0.0;
    ConfidenceInterval auc_ci;
};

EvaluatedPredictions evaluate_predictions(const ScoredPredictions& preds,
                                          int bootstrap_samples,
                                          double confidence,
                                          std::uint64_t seed);

/// Deterministic in-memory dataset for a config; every command regenerates
/// it from (size, shape, seed) so runs never depend on earlier artifacts.
DatasetSplit materialize_dataset(const ExperimentConfig& config);

struct HybridRun {
    TrainResult result;
    EvaluatedPredictions test;
};

/// Trains the hybrid model at the given per-layer loss and scores the test
/// split with the config's shot budget (analytic when requested).
HybridRun train_hybrid(const ExperimentConfig& config,
                       const DatasetSplit& dataset, double loss_p,
                       std::ostream& log);

/// SVM + MLP under one feature scenario: grid-searched SVM refit on
/// train+validation, MLP with validation early stopping. Returns the two
/// metric rows and writes the SVM CV table next to the other artifacts.
std::vector<MetricRow> run_baselines_scenario(
    const ExperimentConfig& config, const DatasetSplit& dataset,
    const std::string& scenario, const std::string& cv_table_path,
    std::ostream& log);

void cmd_dataset(const ExperimentConfig& config, std::ostream& log);
void cmd_train(const ExperimentConfig& config, std::ostream& log);
void cmd_baselines(const ExperimentConfig& config, std::ostream& log);
void cmd_loss_sweep(const ExperimentConfig& config, std::ostream& log);
void cmd_report(const ExperimentConfig& config, std::ostream& log);

} // namespace cvqw

#endif // CVQW_EXPERIMENTS_HPP_
