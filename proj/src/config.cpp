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

#include "cvqw/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cvqw/util.hpp"

namespace cvqw {

namespace {

using Json = nlohmann::ordered_json;

void require_keys(const Json& object, const char* section,
                  std::initializer_list<const char*> allowed) {
    for (const auto& item : object.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError(std::string("unknown key '") + item.key() +
                              "' in " + section);
        }
    }
}

template <typename T>
void read_field(const Json& object, const char* section, const char* key,
                T& out) {
    if (!object.contains(key)) return;
    try {
        out = object.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("field ") + section + "." + key +
                          " has the wrong type");
    }
}

Json gamma_to_json(const GammaChoice& choice) {
    if (choice.rule == GammaRule::kValue) return choice.value;
    return choice.name();
}

GammaChoice gamma_from_json(const Json& value) {
    if (value.is_number()) return GammaChoice::literal(value.get<double>());
    if (value.is_string()) {
        std::string name = value.get<std::string>();
        if (name == "scale") return GammaChoice::scale();
        if (name == "auto") return GammaChoice::automatic();
        throw ConfigError("gamma entries must be numbers, 'scale', or "
                          "'auto', got '" +
                          name + "'");
    }
    throw ConfigError("gamma entries must be numbers or strings");
}

void check(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

} // namespace

const char* kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::kTwoMode: return "two_mode";
        case ExperimentKind::kThreeMode: return "three_mode";
        case ExperimentKind::kLossSweep: return "loss_sweep";
        case ExperimentKind::kDatasetOnly: return "dataset_only";
        case ExperimentKind::kBaselineOnly: return "baseline_only";
    }
    throw UsageError("unknown experiment kind");
}

ExperimentKind kind_from_name(const std::string& name) {
    if (name == "two_mode") return ExperimentKind::kTwoMode;
    if (name == "three_mode") return ExperimentKind::kThreeMode;
    if (name == "loss_sweep") return ExperimentKind::kLossSweep;
    if (name == "dataset_only") return ExperimentKind::kDatasetOnly;
    if (name == "baseline_only") return ExperimentKind::kBaselineOnly;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

ExperimentConfig two_mode_preset() { return ExperimentConfig{}; }

ExperimentConfig three_mode_preset() {
    ExperimentConfig config;
    config.kind = ExperimentKind::kThreeMode;
    config.shape = ModeShape{3, 3};
    config.baseline_hidden_sizes = {128, 64};
    return config;
}

ExperimentConfig loss_sweep_preset() {
    ExperimentConfig config = three_mode_preset();
    config.kind = ExperimentKind::kLossSweep;
    return config;
}

void validate_config(const ExperimentConfig& config) {
    check(config.shape.modes >= 2, "circuit.modes must be at least 2");
    check(config.shape.cutoff >= 2, "circuit.cutoff must be at least 2");
    check(config.num_layers >= 1, "circuit.layers must be at least 1");
    check(config.loss_p >= 0.0 && config.loss_p < 1.0,
          "circuit.loss_p must lie in [0, 1)");
    check(config.dataset_size >= 20, "dataset.size must be at least 20");
    check(config.analytic || config.shots >= 1,
          "readout.shots must be positive unless analytic mode is set");

    const TrainConfig& t = config.training;
    check(t.batch_size >= 1, "training.batch_size must be positive");
    check(t.max_epochs >= 1, "training.max_epochs must be positive");
    check(t.patience >= 1, "training.patience must be positive");
    check(t.learning_rate > 0.0, "training.learning_rate must be positive");
    check(t.fd_epsilon > 0.0, "training.fd_epsilon must be positive");
    check(t.gamma >= 0.0, "training.gamma must be non-negative");
    check(t.dropout_rate >= 0.0 && t.dropout_rate < 1.0,
          "training.dropout_rate must lie in [0, 1)");
    check(!t.hidden_sizes.empty(),
          "training.hidden_sizes must not be empty");
    for (int width : t.hidden_sizes) {
        check(width >= 1, "training.hidden_sizes entries must be positive");
    }
    check(!t.stochastic_gradients || t.gradient_shots >= 1,
          "training.gradient_shots must be positive when "
          "stochastic_gradients is set");

    check(!config.loss_grid.empty(), "sweep.loss_grid must not be empty");
    for (double p : config.loss_grid) {
        check(p >= 0.0 && p < 1.0, "sweep.loss_grid entries must lie in "
                                   "[0, 1)");
    }

    check(!config.svm_c_grid.empty(),
          "baselines.svm_c_grid must not be empty");
    for (double c : config.svm_c_grid) {
        check(c > 0.0, "baselines.svm_c_grid entries must be positive");
    }
    check(!config.svm_gamma_grid.empty(),
          "baselines.svm_gamma_grid must not be empty");
    for (const GammaChoice& g : config.svm_gamma_grid) {
        check(g.rule != GammaRule::kValue || g.value > 0.0,
              "baselines.svm_gamma_grid literals must be positive");
    }
    check(!config.baseline_hidden_sizes.empty(),
          "baselines.mlp_hidden_sizes must not be empty");
    for (int width : config.baseline_hidden_sizes) {
        check(width >= 1,
              "baselines.mlp_hidden_sizes entries must be positive");
    }
    check(config.cv_folds >= 2, "baselines.cv_folds must be at least 2");

    check(config.bootstrap_samples >= 1,
          "evaluation.bootstrap_samples must be positive");
    check(config.confidence > 0.0 && config.confidence < 1.0,
          "evaluation.confidence must lie in (0, 1)");

    check(!config.out_dir.empty(), "output.directory must not be empty");
    check(config.threads >= 0, "output.threads must be non-negative");
}

ExperimentConfig parse_config(const std::string& text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") +
                          e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    require_keys(root, "the top level",
                 {"experiment", "circuit", "dataset", "readout", "training",
                  "sweep", "baselines", "evaluation", "output"});
    if (!root.contains("experiment")) {
        throw ConfigError("config is missing the 'experiment' key");
    }

    ExperimentConfig config;
    config.kind = kind_from_name(root.at("experiment").get<std::string>());

    if (root.contains("circuit")) {
        const Json& section = root.at("circuit");
        require_keys(section, "circuit",
                     {"modes", "cutoff", "layers", "loss_p"});
        read_field(section, "circuit", "modes", config.shape.modes);
        read_field(section, "circuit", "cutoff", config.shape.cutoff);
        read_field(section, "circuit", "layers", config.num_layers);
        read_field(section, "circuit", "loss_p", config.loss_p);
    }
    if (root.contains("dataset")) {
        const Json& section = root.at("dataset");
        require_keys(section, "dataset", {"size", "seed"});
        read_field(section, "dataset", "size", config.dataset_size);
        read_field(section, "dataset", "seed", config.seed);
    }
    if (root.contains("readout")) {
        const Json& section = root.at("readout");
        require_keys(section, "readout", {"shots", "analytic"});
        read_field(section, "readout", "shots", config.shots);
        read_field(section, "readout", "analytic", config.analytic);
    }
    if (root.contains("training")) {
        const Json& section = root.at("training");
        require_keys(section, "training",
                     {"batch_size", "max_epochs", "patience",
                      "learning_rate", "gamma", "fd_epsilon",
                      "hidden_sizes", "dropout_rate", "use_shift_rule",
                      "stochastic_gradients", "gradient_shots"});
        TrainConfig& t = config.training;
        read_field(section, "training", "batch_size", t.batch_size);
        read_field(section, "training", "max_epochs", t.max_epochs);
        read_field(section, "training", "patience", t.patience);
        read_field(section, "training", "learning_rate", t.learning_rate);
        read_field(section, "training", "gamma", t.gamma);
        read_field(section, "training", "fd_epsilon", t.fd_epsilon);
        read_field(section, "training", "hidden_sizes", t.hidden_sizes);
        read_field(section, "training", "dropout_rate", t.dropout_rate);
        read_field(section, "training", "use_shift_rule", t.use_shift_rule);
        read_field(section, "training", "stochastic_gradients",
                   t.stochastic_gradients);
        read_field(section, "training", "gradient_shots", t.gradient_shots);
    }
    if (root.contains("sweep")) {
        const Json& section = root.at("sweep");
        require_keys(section, "sweep", {"loss_grid"});
        read_field(section, "sweep", "loss_grid", config.loss_grid);
    }
    if (root.contains("baselines")) {
        const Json& section = root.at("baselines");
        require_keys(section, "baselines",
                     {"svm_c_grid", "svm_gamma_grid", "mlp_hidden_sizes",
                      "cv_folds"});
        read_field(section, "baselines", "svm_c_grid", config.svm_c_grid);
        if (section.contains("svm_gamma_grid")) {
            const Json& grid = section.at("svm_gamma_grid");
            if (!grid.is_array()) {
                throw ConfigError("baselines.svm_gamma_grid must be a list");
            }
            config.svm_gamma_grid.clear();
            for (const Json& entry : grid) {
                config.svm_gamma_grid.push_back(gamma_from_json(entry));
            }
        }
        read_field(section, "baselines", "mlp_hidden_sizes",
                   config.baseline_hidden_sizes);
        read_field(section, "baselines", "cv_folds", config.cv_folds);
    }
    if (root.contains("evaluation")) {
        const Json& section = root.at("evaluation");
        require_keys(section, "evaluation",
                     {"bootstrap_samples", "confidence"});
        read_field(section, "evaluation", "bootstrap_samples",
                   config.bootstrap_samples);
        read_field(section, "evaluation", "confidence", config.confidence);
    }
    if (root.contains("output")) {
        const Json& section = root.at("output");
        require_keys(section, "output", {"directory", "threads"});
        read_field(section, "output", "directory", config.out_dir);
        read_field(section, "output", "threads", config.threads);
    }

    validate_config(config);
    return config;
}

std::string serialize_config(const ExperimentConfig& config) {
    Json root;
    root["experiment"] = kind_name(config.kind);
    root["circuit"] = {{"modes", config.shape.modes},
                       {"cutoff", config.shape.cutoff},
                       {"layers", config.num_layers},
                       {"loss_p", config.loss_p}};
    root["dataset"] = {{"size", config.dataset_size},
                       {"seed", config.seed}};
    root["readout"] = {{"shots", config.shots},
                       {"analytic", config.analytic}};
    const TrainConfig& t = config.training;
    root["training"] = {{"batch_size", t.batch_size},
                        {"max_epochs", t.max_epochs},
                        {"patience", t.patience},
                        {"learning_rate", t.learning_rate},
                        {"gamma", t.gamma},
                        {"fd_epsilon", t.fd_epsilon},
                        {"hidden_sizes", t.hidden_sizes},
                        {"dropout_rate", t.dropout_rate},
                        {"use_shift_rule", t.use_shift_rule},
                        {"stochastic_gradients", t.stochastic_gradients},
                        {"gradient_shots", t.gradient_shots}};
    root["sweep"] = {{"loss_grid", config.loss_grid}};
    Json gammas = Json::array();
    for (const GammaChoice& g : config.svm_gamma_grid) {
        gammas.push_back(gamma_to_json(g));
    }
    root["baselines"] = {{"svm_c_grid", config.svm_c_grid},
                         {"svm_gamma_grid", gammas},
                         {"mlp_hidden_sizes", config.baseline_hidden_sizes},
                         {"cv_folds", config.cv_folds}};
    root["evaluation"] = {{"bootstrap_samples", config.bootstrap_samples},
                          {"confidence", config.confidence}};
    root["output"] = {{"directory", config.out_dir},
                      {"threads", config.threads}};
    return root.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

void save_config(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path);
    out << serialize_config(config);
}

} // namespace cvqw
