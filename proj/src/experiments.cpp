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

#include "cvqw/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cvqw/baselines.hpp"
#include "cvqw/circuit.hpp"
#include "cvqw/util.hpp"

namespace cvqw {

namespace fs = std::filesystem;

namespace {

std::string fmt(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string fmt4(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::string artifact_prefix(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    return (fs::path(config.out_dir) / kind_name(config.kind)).string();
}

MlpBaselineConfig baseline_config(const ExperimentConfig& config) {
    MlpBaselineConfig mlp;
    mlp.hidden_sizes = config.baseline_hidden_sizes;
    mlp.dropout_rate = config.training.dropout_rate;
    mlp.learning_rate = config.training.learning_rate;
    mlp.batch_size = config.training.batch_size;
    mlp.max_epochs = config.training.max_epochs;
    mlp.patience = config.training.patience;
    mlp.seed = config.seed;
    return mlp;
}

std::string hidden_sizes_tag(const std::vector<int>& sizes) {
    std::string tag;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i > 0) tag += "-";
        tag += std::to_string(sizes[i]);
    }
    return tag;
}

} // namespace

void write_metrics_csv(const std::vector<MetricRow>& rows,
                       const std::string& path) {
    std::ofstream out = open_out(path);
    out << "model,scenario,accuracy,accuracy_ci_low,accuracy_ci_high,"
           "auc,auc_ci_low,auc_ci_high,notes\n";
    for (const MetricRow& row : rows) {
        out << row.model << ',' << row.scenario << ',' << fmt(row.accuracy)
            << ',' << fmt(row.accuracy_ci.low) << ','
            << fmt(row.accuracy_ci.high) << ',' << fmt(row.auc) << ','
            << fmt(row.auc_ci.low) << ',' << fmt(row.auc_ci.high) << ','
            << row.notes << '\n';
    }
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read metrics file " + path);
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("metrics file " + path + " is empty");
    }
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields = split_line(line);
        if (fields.size() != 9) {
            throw ConfigError("malformed metrics row in " + path + ": " +
                              line);
        }
        MetricRow row;
        row.model = fields[0];
        row.scenario = fields[1];
        row.accuracy = std::stod(fields[2]);
        row.accuracy_ci = {std::stod(fields[3]), std::stod(fields[4])};
        row.auc = std::stod(fields[5]);
        row.auc_ci = {std::stod(fields[6]), std::stod(fields[7])};
        row.notes = fields[8];
        rows.push_back(row);
    }
    return rows;
}

void write_roc_csv(const std::vector<RocPoint>& points,
                   const std::string& path) {
    std::ofstream out = open_out(path);
    out << "threshold,fpr,tpr\n";
    for (const RocPoint& p : points) {
        out << fmt(p.threshold) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr)
            << '\n';
    }
}

void write_pr_csv(const std::vector<PrPoint>& points,
                  const std::string& path) {
    std::ofstream out = open_out(path);
    out << "threshold,precision,recall\n";
    for (const PrPoint& p : points) {
        out << fmt(p.threshold) << ',' << fmt(p.precision) << ','
            << fmt(p.recall) << '\n';
    }
}

EvaluatedPredictions evaluate_predictions(const ScoredPredictions& preds,
                                          int bootstrap_samples,
                                          double confidence,
                                          std::uint64_t seed) {
    EvaluatedPredictions out;
    out.preds = preds;
    out.accuracy = accuracy(preds);
    out.auc = roc_auc(preds);
    out.accuracy_ci = stratified_bootstrap_ci(
                          preds,
                          [](const ScoredPredictions& p) {
                              return accuracy(p);
                          },
                          bootstrap_samples, confidence, seed)
                          .ci;
    out.auc_ci = stratified_bootstrap_ci(
                     preds,
                     [](const ScoredPredictions& p) { return roc_auc(p); },
                     bootstrap_samples, confidence, seed)
                     .ci;
    return out;
}

DatasetSplit materialize_dataset(const ExperimentConfig& config) {
    return build_dataset(config.dataset_size, config.shape, config.seed);
}

HybridRun train_hybrid(const ExperimentConfig& config,
                       const DatasetSplit& dataset, double loss_p,
                       std::ostream& log) {
    TrainConfig tc = config.training;
    tc.seed = config.seed;
    CircuitEvaluator evaluator(config.shape, config.num_layers, loss_p);

    log << "[hybrid] training at per-layer loss " << fmt4(loss_p) << ", "
        << dataset.train.size() << " train / " << dataset.validation.size()
        << " validation samples\n";
    HybridRun run;
    run.result = train(dataset, tc, evaluator, [&](const EpochStats& e) {
        log << "[hybrid p=" << fmt4(loss_p) << "] epoch " << e.epoch
            << " train_loss=" << fmt4(e.train_loss)
            << " val_loss=" << fmt4(e.val_loss)
            << " train_acc=" << fmt4(e.train_acc)
            << " val_acc=" << fmt4(e.val_acc)
            << " grad_norm=" << fmt4(e.grad_norm) << "\n";
        log.flush();
    });

    int shots = config.analytic ? 0 : config.shots;
    ScoredPredictions preds = score_split(dataset.test, evaluator,
                                          run.result.phi, shots, config.seed);
    run.test = evaluate_predictions(preds, config.bootstrap_samples,
                                    config.confidence, config.seed);
    log << "[hybrid p=" << fmt4(loss_p) << "] best epoch "
        << run.result.best_epoch << ", test accuracy "
        << fmt4(run.test.accuracy) << " [" << fmt4(run.test.accuracy_ci.low)
        << ", " << fmt4(run.test.accuracy_ci.high) << "], AUC "
        << fmt4(run.test.auc) << (shots > 0 ? " (sampled readout)"
                                            : " (analytic readout)")
        << "\n";
    return run;
}

std::vector<MetricRow> run_baselines_scenario(
    const ExperimentConfig& config, const DatasetSplit& dataset,
    const std::string& scenario, const std::string& cv_table_path,
    std::ostream& log) {
    RMatrix x_train, x_val, x_test;
    if (scenario == "engineered") {
        x_train = engineered_matrix(dataset.train);
        x_val = engineered_matrix(dataset.validation);
        x_test = engineered_matrix(dataset.test);
    } else if (scenario == "matched") {
        CircuitEvaluator frozen = frozen_evaluator(
            config.shape, config.num_layers, config.seed);
        x_train = matched_matrix(dataset.train, frozen);
        x_val = matched_matrix(dataset.validation, frozen);
        x_test = matched_matrix(dataset.test, frozen);
    } else {
        throw UsageError("unknown baseline scenario " + scenario);
    }
    std::vector<int> y_train = labels_of(dataset.train);
    std::vector<int> y_val = labels_of(dataset.validation);
    std::vector<int> y_test = labels_of(dataset.test);

    StandardScaler scaler = StandardScaler::fit(x_train);
    RMatrix z_train = scaler.transform(x_train);
    RMatrix z_val = scaler.transform(x_val);
    RMatrix z_test = scaler.transform(x_test);

    // The SVM has no early-stopping use for the validation split, so it
    // gets train+validation for both the grid search and the final fit.
    RMatrix z_fit(z_train.rows() + z_val.rows(), z_train.cols());
    z_fit << z_train, z_val;
    std::vector<int> y_fit = y_train;
    y_fit.insert(y_fit.end(), y_val.begin(), y_val.end());

    log << "[baselines/" << scenario << "] SVM grid search over "
        << config.svm_c_grid.size() * config.svm_gamma_grid.size()
        << " cells, " << config.cv_folds << " folds\n";
    GridSearchResult grid =
        grid_search_cv(z_fit, y_fit, config.svm_c_grid,
                       config.svm_gamma_grid, config.cv_folds, config.seed);
    write_cv_table_csv(grid, cv_table_path);
    log << "[baselines/" << scenario << "] winner C=" << grid.best_c
        << " gamma=" << grid.best_gamma.name() << " ("
        << fmt4(grid.best_gamma_value)
        << "), CV accuracy=" << fmt4(grid.best_cv_accuracy) << "\n";

    SvmConfig svm_config;
    svm_config.c = grid.best_c;
    svm_config.gamma_k = grid.best_gamma_value;
    svm_config.seed = config.seed;
    SvmModel svm = svm_train(z_fit, y_fit, svm_config);
    RVector svm_scores = svm_decision(svm, z_test);
    ScoredPredictions svm_preds;
    svm_preds.labels = y_test;
    svm_preds.scores.assign(svm_scores.data(),
                            svm_scores.data() + svm_scores.size());
    EvaluatedPredictions svm_eval =
        evaluate_predictions(svm_preds, config.bootstrap_samples,
                             config.confidence, config.seed);

    MetricRow svm_row;
    svm_row.model = "svm";
    svm_row.scenario = scenario;
    svm_row.accuracy = svm_eval.accuracy;
    svm_row.accuracy_ci = svm_eval.accuracy_ci;
    svm_row.auc = svm_eval.auc;
    svm_row.auc_ci = svm_eval.auc_ci;
    svm_row.notes = "C=" + fmt(grid.best_c) +
                    ";gamma=" + grid.best_gamma.name() +
                    ";gamma_value=" + fmt(grid.best_gamma_value) +
                    ";cv_accuracy=" + fmt(grid.best_cv_accuracy) +
                    ";converged=" + (svm.converged ? "1" : "0");
    log << "[baselines/" << scenario << "] SVM test accuracy "
        << fmt4(svm_row.accuracy) << " [" << fmt4(svm_row.accuracy_ci.low)
        << ", " << fmt4(svm_row.accuracy_ci.high) << "], AUC "
        << fmt4(svm_row.auc) << "\n";

    MlpBaselineConfig mlp_config = baseline_config(config);
    MlpBaselineModel mlp =
        baseline_mlp_train(z_train, y_train, z_val, y_val, mlp_config);
    RVector mlp_witness = mlp_scores(mlp.phi, z_test);
    ScoredPredictions mlp_preds;
    mlp_preds.labels = y_test;
    mlp_preds.scores.assign(mlp_witness.data(),
                            mlp_witness.data() + mlp_witness.size());
    EvaluatedPredictions mlp_eval =
        evaluate_predictions(mlp_preds, config.bootstrap_samples,
                             config.confidence, config.seed);

    MetricRow mlp_row;
    mlp_row.model = "mlp";
    mlp_row.scenario = scenario;
    mlp_row.accuracy = mlp_eval.accuracy;
    mlp_row.accuracy_ci = mlp_eval.accuracy_ci;
    mlp_row.auc = mlp_eval.auc;
    mlp_row.auc_ci = mlp_eval.auc_ci;
    mlp_row.notes = "hidden=" + hidden_sizes_tag(mlp_config.hidden_sizes) +
                    ";best_epoch=" + std::to_string(mlp.best_epoch);
    log << "[baselines/" << scenario << "] MLP test accuracy "
        << fmt4(mlp_row.accuracy) << " [" << fmt4(mlp_row.accuracy_ci.low)
        << ", " << fmt4(mlp_row.accuracy_ci.high) << "], AUC "
        << fmt4(mlp_row.auc) << "\n";

    return {svm_row, mlp_row};
}

void cmd_dataset(const ExperimentConfig& config, std::ostream& log) {
    DatasetSplit dataset = materialize_dataset(config);
    std::string dir = (fs::path(config.out_dir) / "dataset").string();
    save_dataset(dataset, dir);
    log << "[dataset] wrote " << dataset.train.size() << "/"
        << dataset.validation.size() << "/" << dataset.test.size()
        << " train/validation/test samples to " << dir << "\n";

    int entangled = 0;
    double min_negativity = 1.0;
    for (const std::vector<LabeledState>* split :
         {&dataset.train, &dataset.validation, &dataset.test}) {
        for (const LabeledState& sample : *split) {
            if (sample.label == 1) {
                ++entangled;
                min_negativity =
                    std::min(min_negativity, sample.max_negativity());
            }
        }
    }
    log << "[dataset] " << entangled << "/" << dataset.total_size()
        << " entangled, minimum label-1 negativity " << fmt(min_negativity)
        << "\n";
}

void cmd_train(const ExperimentConfig& config, std::ostream& log) {
    std::string prefix = artifact_prefix(config);
    DatasetSplit dataset = materialize_dataset(config);
    HybridRun run = train_hybrid(config, dataset, config.loss_p, log);

    Checkpoint checkpoint;
    checkpoint.shape = config.shape;
    checkpoint.num_layers = config.num_layers;
    checkpoint.loss_p = config.loss_p;
    checkpoint.num_ancillas = 0;
    checkpoint.theta = run.result.theta;
    checkpoint.phi = run.result.phi;
    checkpoint.adam = run.result.adam;
    checkpoint.history = run.result.history;
    checkpoint.best_epoch = run.result.best_epoch;
    save_checkpoint(checkpoint, prefix + "_checkpoint");
    write_history_csv(run.result.history, prefix + "_history.csv");

    MetricRow row;
    row.model = "hybrid";
    row.scenario = "quantum";
    row.accuracy = run.test.accuracy;
    row.accuracy_ci = run.test.accuracy_ci;
    row.auc = run.test.auc;
    row.auc_ci = run.test.auc_ci;
    row.notes = "loss_p=" + fmt(config.loss_p) + ";shots=" +
                (config.analytic ? std::string("analytic")
                                 : std::to_string(config.shots)) +
                ";best_epoch=" + std::to_string(run.result.best_epoch);
    write_metrics_csv({row}, prefix + "_metrics.csv");
    write_roc_csv(roc_curve(run.test.preds), prefix + "_roc.csv");
    write_pr_csv(pr_curve(run.test.preds), prefix + "_pr.csv");
    log << "[train] artifacts written with prefix " << prefix << "_*\n";
}

void cmd_baselines(const ExperimentConfig& config, std::ostream& log) {
    std::string prefix = artifact_prefix(config);
    DatasetSplit dataset = materialize_dataset(config);
    std::vector<MetricRow> rows;
    for (const std::string scenario : {"engineered", "matched"}) {
        std::vector<MetricRow> scenario_rows = run_baselines_scenario(
            config, dataset, scenario,
            prefix + "_svm_cv_" + scenario + ".csv", log);
        rows.insert(rows.end(), scenario_rows.begin(), scenario_rows.end());
    }
    write_metrics_csv(rows, prefix + "_baseline_metrics.csv");
    log << "[baselines] wrote " << rows.size() << " metric rows to "
        << prefix << "_baseline_metrics.csv\n";
}

void cmd_loss_sweep(const ExperimentConfig& config, std::ostream& log) {
    std::string prefix = artifact_prefix(config);
    DatasetSplit dataset = materialize_dataset(config);

    std::vector<double> grid = config.loss_grid;
    std::sort(grid.begin(), grid.end());

    std::ofstream out = open_out(prefix + "_sweep.csv");
    out << "series,loss_p,accuracy,ci_low,ci_high\n";
    for (double loss_p : grid) {
        HybridRun run = train_hybrid(config, dataset, loss_p, log);
        out << "hybrid," << fmt(loss_p) << ',' << fmt(run.test.accuracy)
            << ',' << fmt(run.test.accuracy_ci.low) << ','
            << fmt(run.test.accuracy_ci.high) << '\n';
        out.flush();
        write_history_csv(run.result.history,
                          prefix + "_history_p" + fmt4(loss_p) + ".csv");
    }

    // Reference rows: the classical baselines never see the circuit, so
    // their accuracy is a single noiseless line per model.
    std::vector<MetricRow> reference = run_baselines_scenario(
        config, dataset, "engineered", prefix + "_svm_cv_engineered.csv",
        log);
    for (const MetricRow& row : reference) {
        out << row.model << "_engineered,0," << fmt(row.accuracy) << ','
            << fmt(row.accuracy_ci.low) << ',' << fmt(row.accuracy_ci.high)
            << '\n';
    }
    log << "[loss-sweep] wrote " << prefix << "_sweep.csv\n";
}

void cmd_report(const ExperimentConfig& config, std::ostream& log) {
    std::vector<std::string> metric_files;
    if (fs::exists(config.out_dir)) {
        for (const fs::directory_entry& entry :
             fs::directory_iterator(config.out_dir)) {
            std::string name = entry.path().filename().string();
            if (name.size() > 12 &&
                name.substr(name.size() - 12) == "_metrics.csv") {
                metric_files.push_back(entry.path().string());
            }
        }
    }
    std::sort(metric_files.begin(), metric_files.end());
    if (metric_files.empty()) {
        throw ConfigError("no *_metrics.csv files under " + config.out_dir +
                          "; run train/baselines first");
    }

    std::ofstream out =
        open_out((fs::path(config.out_dir) / "report.csv").string());
    out << "source,model,scenario,accuracy,accuracy_ci_low,"
           "accuracy_ci_high,auc,auc_ci_low,auc_ci_high,notes\n";
    log << "source                        model   scenario    accuracy"
           "            auc\n";
    for (const std::string& file : metric_files) {
        std::string source = fs::path(file).filename().stem().string();
        for (const MetricRow& row : read_metrics_csv(file)) {
            out << source << ',' << row.model << ',' << row.scenario << ','
                << fmt(row.accuracy) << ',' << fmt(row.accuracy_ci.low)
                << ',' << fmt(row.accuracy_ci.high) << ',' << fmt(row.auc)
                << ',' << fmt(row.auc_ci.low) << ',' << fmt(row.auc_ci.high)
                << ',' << row.notes << '\n';
            char line[160];
            std::snprintf(line, sizeof(line),
                          "%-29s %-7s %-11s %.4f [%.4f, %.4f] %.4f\n",
                          source.c_str(), row.model.c_str(),
                          row.scenario.c_str(), row.accuracy,
                          row.accuracy_ci.low, row.accuracy_ci.high,
                          row.auc);
            log << line;
        }
    }

    std::string sweep_file =
        (fs::path(config.out_dir) / "loss_sweep_sweep.csv").string();
    if (fs::exists(sweep_file)) {
        std::ifstream sweep(sweep_file);
        std::string line;
        std::getline(sweep, line);
        log << "\nseries          loss_p  accuracy\n";
        while (std::getline(sweep, line)) {
            std::vector<std::string> fields = split_line(line);
            if (fields.size() != 5) continue;
            char text[120];
            std::snprintf(text, sizeof(text),
                          "%-15s %-7.7s %.4f [%.4f, %.4f]\n",
                          fields[0].c_str(), fields[1].c_str(),
                          std::stod(fields[2]), std::stod(fields[3]),
                          std::stod(fields[4]));
            log << text;
        }
    }
    log << "\n[report] wrote "
        << (fs::path(config.out_dir) / "report.csv").string() << "\n";
}

} // namespace cvqw
