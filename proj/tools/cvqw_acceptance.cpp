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

// Acceptance gate: each criterion reproduces one headline result end to end
// and prints a single [PASS]/[FAIL] line. Run with no arguments for all
// five, or pass criterion numbers to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cvqw/config.hpp"
#include "cvqw/eval.hpp"
#include "cvqw/experiments.hpp"

using namespace cvqw;

namespace {

struct CriterionResult {
    bool pass = false;
    std::string detail;
};

std::string pct(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

std::string ci_text(const ConfidenceInterval& ci) {
    return "[" + pct(ci.low) + ", " + pct(ci.high) + "]";
}

/// Criteria 3 and 4 share the three-mode dataset; build each distinct
/// configuration once.
const DatasetSplit& dataset_for(const ExperimentConfig& config) {
    static std::map<std::string, DatasetSplit> cache;
    std::ostringstream key;
    key << config.shape.modes << 'x' << config.shape.cutoff << '/'
        << config.dataset_size << '/' << config.seed;
    auto it = cache.find(key.str());
    if (it == cache.end()) {
        std::cout << "[setup] building dataset " << key.str() << "\n";
        it = cache.emplace(key.str(), materialize_dataset(config)).first;
    }
    return it->second;
}

CriterionResult criterion_two_mode_hybrid() {
    ExperimentConfig config = two_mode_preset();
    HybridRun run =
        train_hybrid(config, dataset_for(config), config.loss_p, std::cout);
    CriterionResult result;
    result.pass = run.test.accuracy >= 0.95 && run.test.auc >= 0.99;
    result.detail = "two-mode hybrid: accuracy " + pct(run.test.accuracy) +
                    " (need >= 0.95), AUC " + pct(run.test.auc) +
                    " (need >= 0.99) at " + std::to_string(config.shots) +
                    " shots";
    return result;
}

CriterionResult criterion_two_mode_baselines() {
    ExperimentConfig config = two_mode_preset();
    std::filesystem::create_directories("acceptance_out");
    std::vector<MetricRow> rows = run_baselines_scenario(
        config, dataset_for(config), "engineered",
        "acceptance_out/two_mode_svm_cv_engineered.csv", std::cout);
    CriterionResult result;
    result.pass = rows[0].accuracy >= 0.95 && rows[1].accuracy >= 0.95;
    result.detail = "two-mode engineered baselines: SVM " +
                    pct(rows[0].accuracy) + ", MLP " + pct(rows[1].accuracy) +
                    " (each needs >= 0.95)";
    return result;
}

CriterionResult criterion_three_mode_gap() {
    ExperimentConfig config = three_mode_preset();
    const DatasetSplit& dataset = dataset_for(config);
    HybridRun run = train_hybrid(config, dataset, config.loss_p, std::cout);
    std::filesystem::create_directories("acceptance_out");
    std::vector<MetricRow> rows = run_baselines_scenario(
        config, dataset, "engineered",
        "acceptance_out/three_mode_svm_cv_engineered.csv", std::cout);

    double hybrid_acc = run.test.accuracy;
    bool gaps = hybrid_acc - rows[0].accuracy >= 0.10 &&
                hybrid_acc - rows[1].accuracy >= 0.10;
    bool disjoint = ci_disjoint(run.test.accuracy_ci, rows[0].accuracy_ci) &&
                    ci_disjoint(run.test.accuracy_ci, rows[1].accuracy_ci);
    CriterionResult result;
    result.pass = hybrid_acc >= 0.90 && gaps && disjoint;
    result.detail =
        "three-mode: hybrid " + pct(hybrid_acc) + " " +
        ci_text(run.test.accuracy_ci) + " vs SVM " + pct(rows[0].accuracy) +
        " " + ci_text(rows[0].accuracy_ci) + " and MLP " +
        pct(rows[1].accuracy) + " " + ci_text(rows[1].accuracy_ci) +
        " (need hybrid >= 0.90, gaps >= 0.10, disjoint CIs)";
    return result;
}

CriterionResult criterion_loss_sweep() {
    ExperimentConfig config = loss_sweep_preset();
    const DatasetSplit& dataset = dataset_for(config);

    std::vector<double> grid = config.loss_grid;
    std::sort(grid.begin(), grid.end());
    std::vector<double> accuracies;
    std::vector<ConfidenceInterval> intervals;
    double accuracy_at_010 = 0.0;
    for (double loss_p : grid) {
        HybridRun run = train_hybrid(config, dataset, loss_p, std::cout);
        accuracies.push_back(run.test.accuracy);
        intervals.push_back(run.test.accuracy_ci);
        if (loss_p == 0.10) accuracy_at_010 = run.test.accuracy;
    }

    // Graceful degradation: every increase along the grid must be
    // explainable by CI overlap.
    bool monotone = true;
    for (std::size_t i = 1; i < accuracies.size(); ++i) {
        if (accuracies[i] > accuracies[i - 1] &&
            ci_disjoint(intervals[i], intervals[i - 1])) {
            monotone = false;
        }
    }
    CriterionResult result;
    result.pass = accuracy_at_010 >= 0.90 && monotone;
    std::string series;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) series += " ";
        series += pct(accuracies[i]);
    }
    result.detail = "loss sweep accuracies [" + series + "], at p=0.10: " +
                    pct(accuracy_at_010) +
                    " (need >= 0.90, non-increasing within CI overlap: " +
                    (monotone ? "yes" : "no") + ")";
    return result;
}

CriterionResult criterion_property_suites() {
    auto start = std::chrono::steady_clock::now();
    int status = std::system(CVQW_TEST_BINARY);
    double seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    bool green = status != -1 && WIFEXITED(status) &&
                 WEXITSTATUS(status) == 0;
    CriterionResult result;
    result.pass = green && seconds < 300.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "property suites (gate/channel laws, oracles, gradients, "
                  "contraction, statistics, determinism): %s in %.1fs "
                  "(need green, < 300s)",
                  green ? "green" : "FAILED", seconds);
    result.detail = buf;
    return result;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> requested;
    for (int i = 1; i < argc; ++i) {
        int id = std::atoi(argv[i]);
        if (id < 1 || id > 5) {
            std::cerr << "usage: cvqw_acceptance [1..5]...\n";
            return 2;
        }
        requested.push_back(id);
    }
    if (requested.empty()) requested = {1, 2, 3, 4, 5};

    CriterionResult (*criteria[])() = {
        criterion_two_mode_hybrid, criterion_two_mode_baselines,
        criterion_three_mode_gap, criterion_loss_sweep,
        criterion_property_suites,
    };

    bool all_pass = true;
    std::vector<std::string> lines;
    for (int id : requested) {
        CriterionResult result;
        try {
            result = criteria[id - 1]();
        } catch (const std::exception& e) {
            result.pass = false;
            result.detail = std::string("exception: ") + e.what();
        }
        all_pass = all_pass && result.pass;
        std::string line = std::string(result.pass ? "[PASS]" : "[FAIL]") +
                           " criterion " + std::to_string(id) + ": " +
                           result.detail;
        std::cout << line << "\n";
        std::cout.flush();
        lines.push_back(line);
    }

    if (requested.size() > 1) {
        std::cout << "\n=== acceptance summary ===\n";
        for (const std::string& line : lines) std::cout << line << "\n";
    }
    return all_pass ? 0 : 1;
}
