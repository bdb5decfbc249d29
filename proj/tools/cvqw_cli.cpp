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

#include <cstdint>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "cvqw/config.hpp"
#include "cvqw/experiments.hpp"
#include "cvqw/util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct CliFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = -1;
    int shots = -1;
    bool analytic = false;

    bool seed_set = false;
    bool out_set = false;
};

void add_common_flags(CLI::App* cmd, CliFlags& flags) {
    cmd->add_option("--config", flags.config_path,
                    "Config file (defaults to the two_mode preset)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "Override the experiment seed")
        ->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--out", flags.out_dir, "Override the output directory")
        ->each([&](const std::string&) { flags.out_set = true; });
    cmd->add_option("--threads", flags.threads,
                    "Cap internal worker threads (0 = library default)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--shots", flags.shots,
                    "Override the readout shot budget")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--analytic", flags.analytic,
                  "Evaluate with exact probabilities instead of sampling");
}

cvqw::ExperimentConfig resolve_config(const CliFlags& flags) {
    cvqw::ExperimentConfig config = flags.config_path.empty()
                                        ? cvqw::two_mode_preset()
                                        : cvqw::load_config(flags.config_path);
    if (flags.seed_set) config.seed = flags.seed;
    if (flags.out_set) config.out_dir = flags.out_dir;
    if (flags.threads >= 0) config.threads = flags.threads;
    if (flags.shots >= 0) config.shots = flags.shots;
    if (flags.analytic) config.analytic = true;
    cvqw::validate_config(config);
    if (config.threads > 0) Eigen::setNbThreads(config.threads);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and training toolkit for a hybrid "
                 "quantum-classical nonlinear entanglement witness"};
    app.require_subcommand(1);

    CliFlags flags;
    std::function<void(const cvqw::ExperimentConfig&, std::ostream&)> action;

    struct Verb {
        const char* name;
        const char* help;
        void (*run)(const cvqw::ExperimentConfig&, std::ostream&);
    };
    const Verb verbs[] = {
        {"dataset", "Build and persist the labeled dataset",
         cvqw::cmd_dataset},
        {"train", "Train the hybrid witness and export metrics",
         cvqw::cmd_train},
        {"baselines", "Run the SVM and MLP baselines on both feature sets",
         cvqw::cmd_baselines},
        {"loss-sweep", "Retrain across the photon-loss grid",
         cvqw::cmd_loss_sweep},
        {"report", "Aggregate metric CSVs into a summary table",
         cvqw::cmd_report},
    };
    for (const Verb& verb : verbs) {
        CLI::App* cmd = app.add_subcommand(verb.name, verb.help);
        add_common_flags(cmd, flags);
        cmd->callback([&action, &verb]() { action = verb.run; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        cvqw::ExperimentConfig config = resolve_config(flags);
        action(config, std::cout);
        return kExitOk;
    } catch (const cvqw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}
