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

#include "cvqw/learn.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cvqw/gates.hpp"
#include "cvqw/util.hpp"
#include "doctest.h"

using namespace cvqw;

namespace {

MLPParams random_mlp(const std::vector<int>& sizes, std::uint64_t seed) {
    MLPParams phi = MLPParams::init(sizes, seed);
    // init() leaves biases/offsets at zero; randomize everything so the
    // gradient checks exercise those paths too.
    std::mt19937_64 rng = make_rng(seed, 991);
    std::normal_distribution<double> dist(0.0, 0.5);
    std::vector<double> flat = phi.flatten();
    for (double& x : flat) x += dist(rng);
    return MLPParams::unflatten(sizes, flat, phi.dropout_rate);
}

RVector random_features(int n, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed, 404);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    RVector x(n);
    for (int i = 0; i < n; ++i) x(i) = dist(rng);
    return x;
}

double max_rel_error(const std::vector<double>& a,
                     const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double scale = std::max(std::abs(b[i]), 1e-6);
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

LabeledState make_labeled(const PureState& psi, int label) {
    LabeledState s;
    s.rho = DensityMatrix::from_pure(psi);
    s.ensemble = MixedStateEnsemble::from_pure(psi);
    s.label = label;
    return s;
}

/// Two Fock classes that any sane witness separates: |0...0> vs |d-1,...>.
DatasetSplit toy_dataset(const ModeShape& shape, int per_class_train,
                         int per_class_val) {
    DatasetSplit split;
    split.shape = shape;
    std::vector<int> zeros(std::size_t(shape.modes), 0);
    std::vector<int> tops(std::size_t(shape.modes), shape.cutoff - 1);
    PureState lo = PureState::fock_basis(shape, zeros);
    PureState hi = PureState::fock_basis(shape, tops);
    for (int i = 0; i < per_class_train; ++i) {
        split.train.push_back(make_labeled(lo, 0));
        split.train.push_back(make_labeled(hi, 1));
    }
    for (int i = 0; i < per_class_val; ++i) {
        split.validation.push_back(make_labeled(lo, 0));
        split.validation.push_back(make_labeled(hi, 1));
    }
    return split;
}

std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("cvqw_learn_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("zero head parameters give a zero witness") {
    std::vector<int> sizes{4, 3, 1};
    int count = MLPParams::init(sizes, 0).parameter_count();
    MLPParams phi = MLPParams::unflatten(
        sizes, std::vector<double>(std::size_t(count), 0.0));
    RVector x = random_features(4, 1);
    CHECK(head_forward(x, phi, nullptr, nullptr) == 0.0);
    // logistic(0) = 0.5: the untrained head is maximally uncertain.
    CHECK(1.0 / (1.0 + std::exp(-0.0)) == 0.5);
}

TEST_CASE("head forward matches a hand-computed two-unit network") {
    std::vector<int> sizes{1, 2, 1};
    MLPParams phi = MLPParams::init(sizes, 0);
    phi.weights[0] << 2.0, -1.0;
    phi.biases[0] << 0.5, 0.25;
    phi.gains[0] << 1.5, 0.75;
    phi.offsets[0] << 0.1, -0.2;
    phi.weights[1] << 3.0, -2.0;
    phi.biases[1] << 0.125;

    double x = 0.8;
    double z0 = 2.0 * x + 0.5;
    double z1 = -1.0 * x + 0.25;
    double mu = (z0 + z1) / 2.0;
    double var = ((z0 - mu) * (z0 - mu) + (z1 - mu) * (z1 - mu)) / 2.0;
    double sigma = std::sqrt(var + 1e-5);
    double h0 = std::max(0.0, 1.5 * (z0 - mu) / sigma + 0.1);
    double h1 = std::max(0.0, 0.75 * (z1 - mu) / sigma - 0.2);
    double expected = 3.0 * h0 - 2.0 * h1 + 0.125;

    RVector in(1);
    in << x;
    CHECK(head_forward(in, phi, nullptr, nullptr) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("a single-unit hidden layer normalizes itself away") {
    // With one unit, layer norm maps any pre-activation to zero, so the
    // witness depends only on the offset and the output layer.
    std::vector<int> sizes{3, 1, 1};
    MLPParams phi = MLPParams::init(sizes, 2);
    phi.offsets[0] << 0.4;
    phi.weights[1] << 2.0;
    phi.biases[1] << -0.1;
    double expected = 2.0 * 0.4 - 0.1;
    CHECK(head_forward(random_features(3, 7), phi, nullptr, nullptr) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(head_forward(random_features(3, 8), phi, nullptr, nullptr) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("inference is deterministic and dropout masks behave") {
    std::vector<int> sizes{6, 8, 8, 1};
    MLPParams phi = random_mlp(sizes, 3);
    RVector x = random_features(6, 4);
    CHECK(head_forward(x, phi, nullptr, nullptr) ==
          head_forward(x, phi, nullptr, nullptr));

    phi.dropout_rate = 0.5;
    std::mt19937_64 rng = make_rng(11, 0);
    double mean = 0.0;
    int zeros = 0;
    int total = 0;
    for (int trial = 0; trial < 500; ++trial) {
        DropoutMasks masks = draw_dropout_masks(phi, rng);
        REQUIRE(masks.masks.size() == 2);
        for (const RVector& m : masks.masks) {
            for (int i = 0; i < m.size(); ++i) {
                CHECK((m(i) == 0.0 || m(i) == doctest::Approx(2.0)));
                mean += m(i);
                zeros += m(i) == 0.0;
                ++total;
            }
        }
    }
    // Inverted scaling keeps the mask mean near one.
    CHECK(mean / total == doctest::Approx(1.0).epsilon(0.05));
    CHECK(double(zeros) / total == doctest::Approx(0.5).epsilon(0.1));

    // Fixed masks make the training-mode forward pass repeatable.
    std::mt19937_64 rng2 = make_rng(12, 0);
    DropoutMasks masks = draw_dropout_masks(phi, rng2);
    CHECK(head_forward(x, phi, &masks, nullptr) ==
          head_forward(x, phi, &masks, nullptr));
}

TEST_CASE("loss values match the closed forms") {
    CHECK(total_loss(0.0, 0, 1.0, 1.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(total_loss(0.0, 1, 1.0, 1.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(total_loss(20.0, 1, 1.0, 1.0) < 1e-8);
    CHECK(total_loss(-20.0, 0, 1.0, 1.0) < 1e-8);
    CHECK(total_loss(0.0, 1, 0.9, 1.0) ==
          doctest::Approx(std::log(2.0) + 0.01).epsilon(1e-12));
    CHECK(total_loss(0.0, 1, 0.9, 0.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // Stable at extreme logits where the naive form overflows.
    CHECK(std::isfinite(total_loss(800.0, 0, 1.0, 1.0)));
    CHECK(total_loss(800.0, 0, 1.0, 1.0) == doctest::Approx(800.0));
    CHECK(std::isfinite(total_loss(-800.0, 1, 1.0, 1.0)));
    for (double w : {-3.0, -0.2, 0.0, 1.7}) {
        for (int label : {0, 1}) {
            CHECK(total_loss(w, label, 1.0, 1.0) >= 0.0);
        }
    }
    CHECK_THROWS_AS(bce_with_logits(0.0, 2), UsageError);
}

TEST_CASE("flatten and unflatten round trip the head parameters") {
    std::vector<int> sizes{7, 6, 5, 1};
    MLPParams phi = random_mlp(sizes, 5);
    std::vector<double> flat = phi.flatten();
    CHECK(int(flat.size()) == phi.parameter_count());
    MLPParams back = MLPParams::unflatten(sizes, flat, phi.dropout_rate);
    CHECK(back.flatten() == flat);
    flat.pop_back();
    CHECK_THROWS_AS(MLPParams::unflatten(sizes, flat), UsageError);
}

TEST_CASE("classical gradients match central finite differences") {
    std::vector<int> sizes{6, 5, 4, 1};
    MLPParams phi = random_mlp(sizes, 6);
    RVector x = random_features(6, 9);
    int label = 1;
    double h = 1e-5;

    auto loss_at = [&](const std::vector<double>& flat,
                       const DropoutMasks* masks) {
        MLPParams p = MLPParams::unflatten(sizes, flat, phi.dropout_rate);
        double w = head_forward(x, p, masks, nullptr);
        return total_loss(w, label, 1.0, 1.0);
    };

    SUBCASE("inference mode") {
        ForwardCache cache;
        double w = head_forward(x, phi, nullptr, &cache);
        double gw = 1.0 / (1.0 + std::exp(-w)) - label;
        std::vector<double> analytic =
            head_backward(phi, cache, nullptr, gw, nullptr).flatten();

        std::vector<double> flat = phi.flatten();
        std::vector<double> numeric(flat.size());
        for (std::size_t i = 0; i < flat.size(); ++i) {
            std::vector<double> up = flat, down = flat;
            up[i] += h;
            down[i] -= h;
            numeric[i] = (loss_at(up, nullptr) - loss_at(down, nullptr)) /
                         (2.0 * h);
        }
        CHECK(max_rel_error(analytic, numeric) < 1e-4);
    }

    SUBCASE("fixed dropout masks") {
        MLPParams dropped = phi;
        dropped.dropout_rate = 0.3;
        std::mt19937_64 rng = make_rng(21, 0);
        DropoutMasks masks = draw_dropout_masks(dropped, rng);

        ForwardCache cache;
        double w = head_forward(x, dropped, &masks, &cache);
        double gw = 1.0 / (1.0 + std::exp(-w)) - label;
        std::vector<double> analytic =
            head_backward(dropped, cache, &masks, gw, nullptr).flatten();

        std::vector<double> flat = dropped.flatten();
        std::vector<double> numeric(flat.size());
        for (std::size_t i = 0; i < flat.size(); ++i) {
            std::vector<double> up = flat, down = flat;
            up[i] += h;
            down[i] -= h;
            numeric[i] = (loss_at(up, &masks) - loss_at(down, &masks)) /
                         (2.0 * h);
        }
        CHECK(max_rel_error(analytic, numeric) < 1e-4);
    }

    SUBCASE("input gradient") {
        ForwardCache cache;
        double w = head_forward(x, phi, nullptr, &cache);
        double gw = 1.0 / (1.0 + std::exp(-w)) - label;
        RVector input_grad;
        head_backward(phi, cache, nullptr, gw, &input_grad);
        for (int i = 0; i < x.size(); ++i) {
            RVector up = x, down = x;
            up(i) += h;
            down(i) -= h;
            double fd =
                (total_loss(head_forward(up, phi, nullptr, nullptr), label,
                            1.0, 1.0) -
                 total_loss(head_forward(down, phi, nullptr, nullptr), label,
                            1.0, 1.0)) /
                (2.0 * h);
            CHECK(std::abs(input_grad(i) - fd) <
                  1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("a saturated correct prediction has a vanishing gradient") {
    std::vector<int> sizes{3, 2, 1};
    MLPParams phi = random_mlp(sizes, 10);
    phi.biases[1](0) = 25.0;
    RVector x = random_features(3, 11);
    ForwardCache cache;
    double w = head_forward(x, phi, nullptr, &cache);
    REQUIRE(w > 20.0);
    double gw = 1.0 / (1.0 + std::exp(-w)) - 1;
    std::vector<double> grads =
        head_backward(phi, cache, nullptr, gw, nullptr).flatten();
    double norm = 0.0;
    for (double g : grads) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-6);
}

TEST_CASE("the mean-batch gradient is the mean of sample gradients") {
    std::vector<int> sizes{4, 3, 1};
    MLPParams phi = random_mlp(sizes, 12);
    std::vector<RVector> xs = {random_features(4, 13), random_features(4, 14),
                               random_features(4, 15)};
    std::vector<int> labels = {0, 1, 1};

    std::vector<double> mean_grad(std::size_t(phi.parameter_count()), 0.0);
    for (std::size_t s = 0; s < xs.size(); ++s) {
        ForwardCache cache;
        double w = head_forward(xs[s], phi, nullptr, &cache);
        double gw = 1.0 / (1.0 + std::exp(-w)) - labels[s];
        std::vector<double> g =
            head_backward(phi, cache, nullptr, gw, nullptr).flatten();
        for (std::size_t i = 0; i < g.size(); ++i) {
            mean_grad[i] += g[i] / double(xs.size());
        }
    }

    double h = 1e-5;
    std::vector<double> flat = phi.flatten();
    auto mean_loss = [&](const std::vector<double>& f) {
        MLPParams p = MLPParams::unflatten(sizes, f, phi.dropout_rate);
        double total = 0.0;
        for (std::size_t s = 0; s < xs.size(); ++s) {
            total += total_loss(head_forward(xs[s], p, nullptr, nullptr),
                                labels[s], 1.0, 1.0);
        }
        return total / double(xs.size());
    };
    std::vector<double> numeric(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        std::vector<double> up = flat, down = flat;
        up[i] += h;
        down[i] -= h;
        numeric[i] = (mean_loss(up) - mean_loss(down)) / (2.0 * h);
    }
    CHECK(max_rel_error(mean_grad, numeric) < 1e-4);
}

TEST_CASE("adam steps follow the closed-form recursion") {
    SUBCASE("first step has magnitude close to the learning rate") {
        AdamState adam = AdamState::init(2, 1e-3);
        std::vector<double> params{0.5, -0.25};
        adam.update(params, {2.0, -3.0});
        CHECK(params[0] ==
              doctest::Approx(0.5 - 1e-3 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
        CHECK(params[1] ==
              doctest::Approx(-0.25 + 1e-3 * 3.0 / (3.0 + 1e-8))
                  .epsilon(1e-12));
        CHECK(std::abs(std::abs(params[0] - 0.5) - 1e-3) < 1e-9);
    }

    SUBCASE("zero gradient leaves parameters untouched") {
        AdamState adam = AdamState::init(3, 1e-3);
        std::vector<double> params{1.0, 2.0, 3.0};
        std::vector<double> before = params;
        adam.update(params, {0.0, 0.0, 0.0});
        CHECK(params == before);
        CHECK(adam.step == 1);
    }

    SUBCASE("two constant-gradient steps match hand arithmetic") {
        double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.7;
        AdamState adam = AdamState::init(1, lr);
        std::vector<double> params{0.0};

        double m = (1 - b1) * g;
        double v = (1 - b2) * g * g;
        double p = -lr * (m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + eps);
        adam.update(params, {g});
        CHECK(params[0] == doctest::Approx(p).epsilon(1e-14));

        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        p -= lr * (m / (1 - b1 * b1)) /
             (std::sqrt(v / (1 - b2 * b2)) + eps);
        adam.update(params, {g});
        CHECK(params[0] == doctest::Approx(p).epsilon(1e-14));
        CHECK(adam.step == 2);
    }

    SUBCASE("mismatched sizes are rejected") {
        AdamState adam = AdamState::init(2, 1e-3);
        std::vector<double> params{1.0, 2.0};
        CHECK_THROWS_AS(adam.update(params, {1.0}), UsageError);
    }
}

TEST_CASE("parameter kinds and layers enumerate the flat layout") {
    ModeShape shape{2, 4};
    std::vector<ParamKind> kinds = parameter_kinds(shape, 2);
    std::vector<int> layers = parameter_layers(shape, 2);
    REQUIRE(kinds.size() == 24);
    REQUIRE(layers.size() == 24);
    std::vector<ParamKind> one_layer{
        ParamKind::kRotation, ParamKind::kRotation, ParamKind::kBsTheta,
        ParamKind::kBsPhi,    ParamKind::kSqueeze,  ParamKind::kSqueeze,
        ParamKind::kDispRe,   ParamKind::kDispIm,   ParamKind::kDispRe,
        ParamKind::kDispIm,   ParamKind::kKerr,     ParamKind::kKerr};
    for (int l = 0; l < 2; ++l) {
        for (int i = 0; i < 12; ++i) {
            CHECK(kinds[std::size_t(12 * l + i)] ==
                  one_layer[std::size_t(i)]);
            CHECK(layers[std::size_t(12 * l + i)] == l);
        }
    }
    CHECK(parameter_kinds(ModeShape{3, 3}, 2).size() == 42);
}

TEST_CASE("quantum gradients agree with high-precision differences") {
    ModeShape shape{2, 4};
    CircuitEvaluator evaluator(shape, 2, 0.0);
    evaluator.set_params(CircuitParams::random_init(shape, 2, 31, 0.25));
    MLPParams phi = random_mlp({evaluator.feature_dim(), 8, 1}, 32);

    std::vector<LabeledState> states;
    states.push_back(make_labeled(bell_like(4, 0.7), 1));
    states.push_back(make_labeled(two_mode_squeezed_vacuum(4, 0.9), 1));
    {
        PureState coh = PureState::vacuum(shape);
        CMatrix d0 = embed_one_mode(shape, displace_gate(4, {0.5, 0.2}), 0);
        coh.amplitudes = d0 * coh.amplitudes;
        states.push_back(make_labeled(coh, 0));
    }

    TrainConfig coarse;
    coarse.fd_epsilon = 1e-4;
    TrainConfig fine;
    fine.fd_epsilon = 1e-6;

    std::vector<BatchSample> batch;
    for (const LabeledState& s : states) {
        BatchSample sample;
        sample.state = &s;
        batch.push_back(sample);
    }
    for (BatchSample& s : batch) {
        s.features = evaluator.features(s.state->ensemble,
                                        ShotMode::analytic());
    }
    std::vector<double> g_coarse =
        quantum_gradients(batch, evaluator, phi, coarse);
    std::vector<double> g_fine =
        quantum_gradients(batch, evaluator, phi, fine);
    CHECK(max_rel_error(g_coarse, g_fine) < 1e-3);

    // The evaluator is restored and the estimate is deterministic.
    std::vector<double> again =
        quantum_gradients(batch, evaluator, phi, coarse);
    CHECK(again == g_coarse);

    double norm = 0.0;
    for (double g : g_fine) norm += g * g;
    CHECK(std::sqrt(norm) > 1e-4);
}

TEST_CASE("symmetry-protected parameters have exactly zero gradient") {
    ModeShape shape{2, 4};
    CircuitEvaluator evaluator(shape, 2, 0.0);
    evaluator.set_params(CircuitParams(shape, 2));
    MLPParams phi = random_mlp({evaluator.feature_dim(), 6, 1}, 33);

    LabeledState vac = make_labeled(PureState::vacuum(shape), 0);
    std::vector<BatchSample> batch(1);
    batch[0].state = &vac;
    batch[0].features =
        evaluator.features(vac.ensemble, ShotMode::analytic());

    TrainConfig config;
    std::vector<double> grad = quantum_gradients(batch, evaluator, phi,
                                                 config);
    std::vector<ParamKind> kinds = parameter_kinds(shape, 2);
    bool any_nonzero = false;
    for (std::size_t j = 0; j < grad.size(); ++j) {
        switch (kinds[j]) {
            // At zero parameters the circuit is the identity, so the vacuum
            // never sees a photon: number-conserving generators (phases,
            // beamsplitters, Kerr) cannot move the loss at all.
            case ParamKind::kRotation:
            case ParamKind::kBsTheta:
            case ParamKind::kBsPhi:
            case ParamKind::kKerr:
                CHECK(grad[j] == 0.0);
                break;
            default:
                any_nonzero = any_nonzero || std::abs(grad[j]) > 1e-6;
        }
    }
    CHECK(any_nonzero);
}

TEST_CASE("the pi/2 shift rule matches differences where it is exact") {
    ModeShape shape{2, 2};
    CircuitEvaluator evaluator(shape, 2, 0.0);
    evaluator.set_params(CircuitParams::random_init(shape, 2, 41, 0.3));
    MLPParams phi = random_mlp({evaluator.feature_dim(), 6, 1}, 42);

    LabeledState a = make_labeled(bell_like(2, 0.4), 1);
    LabeledState b = make_labeled(PureState::vacuum(shape), 0);
    std::vector<BatchSample> batch(2);
    batch[0].state = &a;
    batch[1].state = &b;
    for (BatchSample& s : batch) {
        s.features = evaluator.features(s.state->ensemble,
                                        ShotMode::analytic());
    }

    TrainConfig fd;
    TrainConfig shifted;
    shifted.use_shift_rule = true;
    std::vector<double> g_fd = quantum_gradients(batch, evaluator, phi, fd);
    std::vector<double> g_shift =
        quantum_gradients(batch, evaluator, phi, shifted);

    std::vector<ParamKind> kinds = parameter_kinds(shape, 2);
    for (std::size_t j = 0; j < g_fd.size(); ++j) {
        if (kinds[j] == ParamKind::kRotation) {
            CHECK(std::abs(g_fd[j] - g_shift[j]) <
                  1e-5 * std::max(1.0, std::abs(g_fd[j])));
        } else {
            // Everything else takes the identical FD path.
            CHECK(g_fd[j] == g_shift[j]);
        }
    }
}

TEST_CASE("lossy gradients via prefix resume match a brute-force sweep") {
    ModeShape shape{2, 3};
    CircuitEvaluator evaluator(shape, 2, 0.1);
    CircuitParams base = CircuitParams::random_init(shape, 2, 51, 0.2);
    evaluator.set_params(base);
    MLPParams phi = random_mlp({evaluator.feature_dim(), 5, 1}, 52);

    LabeledState pure = make_labeled(bell_like(3, 1.1), 1);
    LabeledState mixed;
    {
        PureState psi = two_mode_squeezed_vacuum(3, 0.6);
        MixedStateEnsemble ens = MixedStateEnsemble::from_pure(psi);
        ens.weights[0] = 0.85;
        ens.white_weight = 0.15;
        mixed.ensemble = ens;
        mixed.rho = ens.to_density();
        mixed.label = 0;
    }
    std::vector<BatchSample> batch(2);
    batch[0].state = &pure;
    batch[1].state = &mixed;
    for (BatchSample& s : batch) {
        s.features = evaluator.features(s.state->rho, ShotMode::analytic());
    }

    TrainConfig config;
    std::vector<double> grad = quantum_gradients(batch, evaluator, phi,
                                                 config);

    std::vector<double> flat = base.flatten();
    auto mean_loss = [&](const std::vector<double>& f) {
        CircuitEvaluator fresh(shape, 2, 0.1);
        fresh.set_flat_params(f);
        double total = 0.0;
        for (const BatchSample& s : batch) {
            FeatureVector fv =
                fresh.features(s.state->rho, ShotMode::analytic());
            double w = head_forward(fv.values, phi, nullptr, nullptr);
            total += total_loss(w, s.state->label, fv.trace, config.gamma);
        }
        return total / 2.0;
    };
    for (std::size_t j = 0; j < flat.size(); ++j) {
        std::vector<double> up = flat, down = flat;
        up[j] += config.fd_epsilon;
        down[j] -= config.fd_epsilon;
        double brute =
            (mean_loss(up) - mean_loss(down)) / (2.0 * config.fd_epsilon);
        CHECK(std::abs(grad[j] - brute) < 1e-10);
    }
    // Base parameters restored after the sweep.
    CHECK(evaluator.params().flatten() == flat);
}

TEST_CASE("non-finite shifted losses name the offending parameter") {
    ModeShape shape{2, 3};
    CircuitEvaluator evaluator(shape, 2, 0.0);
    evaluator.set_params(CircuitParams(shape, 2));
    // Gains and output weights this large overflow the witness to infinity
    // for any input, so the very first shifted evaluation trips the guard.
    MLPParams phi = MLPParams::init({evaluator.feature_dim(), 4, 1}, 61);
    phi.gains[0].setConstant(1e200);
    phi.weights[1].setConstant(1e200);

    LabeledState vac = make_labeled(PureState::vacuum(shape), 0);
    std::vector<BatchSample> batch(1);
    batch[0].state = &vac;
    batch[0].features = evaluator.features(vac.ensemble,
                                           ShotMode::analytic());

    TrainConfig config;
    try {
        quantum_gradients(batch, evaluator, phi, config);
        FAIL("expected TrainingFailureError");
    } catch (const TrainingFailureError& e) {
        std::string message = e.what();
        CHECK(message.find("parameter 0") != std::string::npos);
        CHECK(message.find("rotation") != std::string::npos);
    }
}

TEST_CASE("training fits a separable toy problem") {
    ModeShape shape{2, 2};
    DatasetSplit dataset = toy_dataset(shape, 12, 4);
    CircuitEvaluator evaluator(shape, 2, 0.0);

    TrainConfig config;
    config.seed = 7;
    config.max_epochs = 50;
    config.batch_size = 8;
    config.learning_rate = 0.01;
    config.hidden_sizes = {16, 16};

    TrainResult result = train(dataset, config, evaluator);
    REQUIRE(!result.history.empty());
    CHECK(int(result.history.size()) <= 50);
    CHECK(result.best_epoch <= result.history.back().epoch);

    bool hit_perfect = false;
    for (const EpochStats& stats : result.history) {
        hit_perfect = hit_perfect || stats.train_acc == 1.0;
        CHECK(std::isfinite(stats.grad_norm));
    }
    CHECK(hit_perfect);
    if (result.history.size() >= 10) {
        CHECK(result.history[9].train_loss < result.history[0].train_loss);
    }

    // The returned parameters beat the validation accuracy at init.
    for (std::uint64_t seed : {1, 2, 3}) {
        TrainConfig c = config;
        c.seed = seed;
        c.max_epochs = 25;
        CircuitEvaluator fresh(shape, 2, 0.0);
        CircuitParams theta0 = CircuitParams::random_init(
            fresh.circuit_shape(), fresh.num_layers(), seed);
        std::vector<int> sizes{fresh.feature_dim(), 16, 16, 1};
        MLPParams phi0 = MLPParams::init(sizes, seed, c.dropout_rate);
        fresh.set_params(theta0);
        double init_acc =
            evaluate_split(dataset.validation, fresh, phi0, c.gamma).accuracy;

        TrainResult r = train(dataset, c, fresh);
        double final_acc =
            evaluate_split(dataset.validation, fresh, r.phi, c.gamma)
                .accuracy;
        CHECK(final_acc >= init_acc);
        CHECK(final_acc == r.history[std::size_t(r.best_epoch)].val_acc);
    }
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    ModeShape shape{2, 2};
    DatasetSplit dataset = toy_dataset(shape, 8, 3);
    TrainConfig config;
    config.seed = 17;
    config.max_epochs = 6;
    config.batch_size = 8;

    CircuitEvaluator eval_a(shape, 2, 0.0);
    CircuitEvaluator eval_b(shape, 2, 0.0);
    TrainResult a = train(dataset, config, eval_a);
    TrainResult b = train(dataset, config, eval_b);

    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_loss == b.history[i].val_loss);
        CHECK(a.history[i].grad_norm == b.history[i].grad_norm);
    }
    CHECK(a.theta.flatten() == b.theta.flatten());
    CHECK(a.phi.flatten() == b.phi.flatten());

    TrainConfig other = config;
    other.seed = 18;
    CircuitEvaluator eval_c(shape, 2, 0.0);
    TrainResult c = train(dataset, other, eval_c);
    CHECK(a.theta.flatten() != c.theta.flatten());
}

TEST_CASE("divergent training raises TrainingFailureError") {
    ModeShape shape{2, 2};
    DatasetSplit dataset = toy_dataset(shape, 12, 3);
    TrainConfig config;
    config.seed = 23;
    config.max_epochs = 5;
    config.batch_size = 8;
    config.learning_rate = 1e200;

    CircuitEvaluator evaluator(shape, 2, 0.0);
    try {
        train(dataset, config, evaluator);
        FAIL("expected TrainingFailureError");
    } catch (const TrainingFailureError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("train validates its configuration and inputs") {
    ModeShape shape{2, 2};
    DatasetSplit dataset = toy_dataset(shape, 4, 2);
    CircuitEvaluator evaluator(shape, 2, 0.0);

    TrainConfig config;
    config.max_epochs = 0;
    CHECK_THROWS_AS(train(dataset, config, evaluator), ConfigError);
    config = TrainConfig{};
    config.dropout_rate = 1.0;
    CHECK_THROWS_AS(train(dataset, config, evaluator), ConfigError);
    config = TrainConfig{};
    config.hidden_sizes.clear();
    CHECK_THROWS_AS(train(dataset, config, evaluator), ConfigError);

    DatasetSplit empty;
    empty.shape = shape;
    CHECK_THROWS_AS(train(empty, TrainConfig{}, evaluator), UsageError);

    CircuitEvaluator wrong(ModeShape{2, 3}, 2, 0.0);
    CHECK_THROWS_AS(train(dataset, TrainConfig{}, wrong), UsageError);
}

TEST_CASE("scored predictions are deterministic and threshold at zero") {
    ModeShape shape{2, 2};
    DatasetSplit dataset = toy_dataset(shape, 3, 2);
    CircuitEvaluator evaluator(shape, 2, 0.0);
    evaluator.set_params(CircuitParams::random_init(shape, 2, 71));
    MLPParams phi = random_mlp({evaluator.feature_dim(), 6, 1}, 72);

    ScoredPredictions analytic =
        score_split(dataset.train, evaluator, phi, 0, 0);
    CHECK(analytic.scores.size() == dataset.train.size());
    CHECK(analytic.threshold == 0.0);

    ScoredPredictions shot_a =
        score_split(dataset.train, evaluator, phi, 200, 99);
    ScoredPredictions shot_b =
        score_split(dataset.train, evaluator, phi, 200, 99);
    CHECK(shot_a.scores == shot_b.scores);

    EvalMetrics metrics =
        evaluate_split(dataset.train, evaluator, phi, 1.0);
    int correct = 0;
    for (std::size_t i = 0; i < analytic.scores.size(); ++i) {
        int predicted = analytic.scores[i] > 0.0 ? 1 : 0;
        correct += predicted == analytic.labels[i];
    }
    CHECK(metrics.accuracy ==
          doctest::Approx(double(correct) / double(analytic.scores.size())));
}

TEST_CASE("checkpoints round trip through disk") {
    ModeShape shape{2, 2};
    DatasetSplit dataset = toy_dataset(shape, 6, 2);
    TrainConfig config;
    config.seed = 29;
    config.max_epochs = 4;
    config.hidden_sizes = {8};

    CircuitEvaluator evaluator(shape, 2, 0.0);
    TrainResult result = train(dataset, config, evaluator);

    Checkpoint checkpoint;
    checkpoint.shape = shape;
    checkpoint.num_layers = 2;
    checkpoint.loss_p = 0.0;
    checkpoint.num_ancillas = 0;
    checkpoint.theta = result.theta;
    checkpoint.phi = result.phi;
    checkpoint.adam = result.adam;
    checkpoint.history = result.history;
    checkpoint.best_epoch = result.best_epoch;

    auto dir = temp_dir("ckpt");
    std::string path = (dir / "model").string();
    save_checkpoint(checkpoint, path);
    Checkpoint loaded = load_checkpoint(path);

    CHECK(loaded.shape == shape);
    CHECK(loaded.num_layers == 2);
    CHECK(loaded.loss_p == 0.0);
    CHECK(loaded.theta.flatten() == checkpoint.theta.flatten());
    CHECK(loaded.phi.flatten() == checkpoint.phi.flatten());
    CHECK(loaded.phi.sizes == checkpoint.phi.sizes);
    CHECK(loaded.adam.m == checkpoint.adam.m);
    CHECK(loaded.adam.v == checkpoint.adam.v);
    CHECK(loaded.adam.step == checkpoint.adam.step);
    REQUIRE(loaded.history.size() == checkpoint.history.size());
    for (std::size_t i = 0; i < loaded.history.size(); ++i) {
        CHECK(loaded.history[i].epoch == checkpoint.history[i].epoch);
        CHECK(loaded.history[i].val_loss == checkpoint.history[i].val_loss);
    }
    CHECK(loaded.best_epoch == checkpoint.best_epoch);

    CHECK_THROWS_AS(load_checkpoint((dir / "missing").string()), ConfigError);

    std::filesystem::remove_all(dir);
}

TEST_CASE("history CSV lists one row per epoch") {
    std::vector<EpochStats> history;
    history.push_back(EpochStats{0, 0.9, 0.95, 0.5, 0.45, 1.25});
    history.push_back(EpochStats{1, 0.7, 0.8, 0.75, 0.7, 0.9});

    auto dir = temp_dir("csv");
    std::string path = (dir / "history.csv").string();
    write_history_csv(history, path);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "epoch,train_loss,val_loss,train_acc,val_acc,grad_norm");
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        if (rows == 1) {
            std::istringstream ss(line);
            std::string field;
            std::getline(ss, field, ',');
            CHECK(field == "0");
            std::getline(ss, field, ',');
            CHECK(std::stod(field) == doctest::Approx(0.9));
        }
    }
    CHECK(rows == 2);
    std::filesystem::remove_all(dir);
}
