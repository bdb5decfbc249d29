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

#include "cvqw/datagen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "cvqw/gates.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "archive writer assumes a little-endian host");

namespace cvqw {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kNegativityThreshold = 1e-7;
constexpr int kMaxConsecutiveRejects = 1000;

const std::map<StateFamily, const char*>& family_names() {
    static const std::map<StateFamily, const char*> names = {
        {StateFamily::kBellLike, "bell_like"},
        {StateFamily::kGhzLike, "ghz_like"},
        {StateFamily::kWLike, "w_like"},
        {StateFamily::kTmsv, "tmsv"},
        {StateFamily::kCat, "cat"},
        {StateFamily::kSeparable, "separable"},
    };
    return names;
}

/// Single-mode draw for the separable branch: coherent, Fock, or thermal
/// with equal probability. Returns the per-mode ensemble and records the
/// sampled parameters under mode-prefixed keys.
MixedStateEnsemble draw_single_mode(int cutoff, int mode,
                                    std::mt19937_64& rng,
                                    std::map<std::string, double>& params) {
    ModeShape single{1, cutoff};
    std::string prefix = "mode" + std::to_string(mode) + "_";
    std::uniform_int_distribution<int> kind_dist(0, 2);
    int kind = kind_dist(rng);
    params[prefix + "kind"] = double(kind);
    MixedStateEnsemble out;
    out.shape = single;
    if (kind == 0) {
        std::uniform_real_distribution<double> amp(0.0, 1.0);
        double alpha = amp(rng);
        params[prefix + "alpha"] = alpha;
        out = MixedStateEnsemble::from_pure(coherent_state(cutoff, alpha));
    } else if (kind == 1) {
        std::uniform_int_distribution<int> level(0, cutoff - 1);
        int n = level(rng);
        params[prefix + "n"] = double(n);
        out = MixedStateEnsemble::from_pure(
            PureState::fock_basis(single, {n}));
    } else {
        std::uniform_real_distribution<double> mean(0.0, 1.0);
        double nbar = mean(rng);
        params[prefix + "nbar"] = nbar;
        DensityMatrix thermal = thermal_state(cutoff, nbar);
        for (int n = 0; n < cutoff; ++n) {
            out.weights.push_back(thermal.rho(n, n).real());
            CVector basis = CVector::Zero(cutoff);
            basis(n) = 1.0;
            out.vectors.push_back(basis);
        }
    }
    return out;
}

/// Tensor product of per-mode ensembles: the component set is the cartesian
/// product, so a product of diagonal mixtures stays an exact small ensemble.
MixedStateEnsemble ensemble_product(const MixedStateEnsemble& a,
                                    const MixedStateEnsemble& b) {
    MixedStateEnsemble out;
    out.shape = ModeShape{a.shape.modes + b.shape.modes, a.shape.cutoff};
    if (a.shape.cutoff != b.shape.cutoff) {
        throw UsageError("ensemble product requires matching cutoffs");
    }
    int da = a.shape.total_dim();
    int db = b.shape.total_dim();
    for (std::size_t i = 0; i < a.vectors.size(); ++i) {
        for (std::size_t j = 0; j < b.vectors.size(); ++j) {
            out.weights.push_back(a.weights[i] * b.weights[j]);
            CVector v(da * db);
            for (int x = 0; x < da; ++x) {
                for (int y = 0; y < db; ++y) {
                    v(x * db + y) = a.vectors[i](x) * b.vectors[j](y);
                }
            }
            out.vectors.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<double> split_negativities(const DensityMatrix& rho) {
    std::vector<double> values;
    for (const BipartiteSplit& split : all_bipartite_splits(rho.shape)) {
        values.push_back(negativity(rho, split));
    }
    return values;
}

std::vector<StateFamily> weighted_families(const ModeShape& shape,
                                           const FamilyWeights& weights,
                                           std::vector<double>& out_weights) {
    std::vector<StateFamily> pool;
    FamilyWeights effective = weights;
    if (effective.empty()) {
        for (StateFamily f : families_for(shape)) effective[f] = 1.0;
    }
    bool has_entangled = false, has_separable = false;
    for (const auto& [family, weight] : effective) {
        if (weight < 0.0) throw ConfigError("family weights must be >= 0");
        if (weight == 0.0) continue;
        std::vector<StateFamily> allowed = families_for(shape);
        if (std::find(allowed.begin(), allowed.end(), family) ==
            allowed.end()) {
            throw UsageError(std::string("family ") + family_name(family) +
                             " is incompatible with " +
                             std::to_string(shape.modes) + " modes");
        }
        pool.push_back(family);
        out_weights.push_back(weight);
        (family_is_entangled(family) ? has_entangled : has_separable) = true;
    }
    if (!has_entangled || !has_separable) {
        throw ConfigError(
            "family weights must give positive mass to both classes");
    }
    return pool;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

constexpr std::uint32_t kArchiveVersion = 1;
constexpr char kMagic[5] = "CVDS";

void write_archive(const std::string& path,
                   const std::vector<LabeledState>& samples,
                   const DatasetSplit& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    write_u32(out, kArchiveVersion);
    write_u32(out, std::uint32_t(dataset.shape.modes));
    write_u32(out, std::uint32_t(dataset.shape.cutoff));
    write_u64(out, dataset.seed);
    write_u32(out, std::uint32_t(dataset.family_weights.size()));
    for (const auto& [family, weight] : dataset.family_weights) {
        write_u32(out, std::uint32_t(family));
        write_f64(out, weight);
    }
    write_u64(out, samples.size());

    int dim = dataset.shape.total_dim();
    for (const LabeledState& sample : samples) {
        write_u32(out, std::uint32_t(sample.label));
        write_u32(out, std::uint32_t(sample.family));
        write_u32(out, std::uint32_t(sample.gen_params.size()));
        for (const auto& [key, value] : sample.gen_params) {
            write_u32(out, std::uint32_t(key.size()));
            out.write(key.data(), std::streamsize(key.size()));
            write_f64(out, value);
        }
        write_u32(out, std::uint32_t(sample.negativities.size()));
        for (double v : sample.negativities) write_f64(out, v);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                write_f64(out, sample.rho.rho(i, j).real());
                write_f64(out, sample.rho.rho(i, j).imag());
            }
        }
    }
    if (!out) throw UsageError("write failed for " + path);
}

std::vector<LabeledState> read_archive(const std::string& path,
                                       DatasetSplit& dataset,
                                       bool first_archive) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
        throw UsageError(path + " is not a dataset archive");
    }
    std::uint32_t version = read_u32(in);
    if (version != kArchiveVersion) {
        throw UsageError("unsupported archive version in " + path);
    }
    ModeShape shape{int(read_u32(in)), int(read_u32(in))};
    std::uint64_t seed = read_u64(in);
    std::uint32_t n_weights = read_u32(in);
    FamilyWeights weights;
    for (std::uint32_t k = 0; k < n_weights; ++k) {
        StateFamily family = StateFamily(read_u32(in));
        weights[family] = read_f64(in);
    }
    if (first_archive) {
        dataset.shape = shape;
        dataset.seed = seed;
        dataset.family_weights = weights;
    } else if (!(shape == dataset.shape) || seed != dataset.seed) {
        throw UsageError("archives in this dataset disagree on the header");
    }

    std::uint64_t count = read_u64(in);
    int dim = shape.total_dim();
    std::vector<LabeledState> samples;
    samples.reserve(count);
    for (std::uint64_t s = 0; s < count; ++s) {
        LabeledState sample;
        sample.label = int(read_u32(in));
        sample.family = StateFamily(read_u32(in));
        std::uint32_t n_params = read_u32(in);
        for (std::uint32_t k = 0; k < n_params; ++k) {
            std::uint32_t len = read_u32(in);
            std::string key(len, '\0');
            in.read(key.data(), len);
            sample.gen_params[key] = read_f64(in);
        }
        std::uint32_t n_neg = read_u32(in);
        sample.negativities.resize(n_neg);
        for (std::uint32_t k = 0; k < n_neg; ++k) {
            sample.negativities[k] = read_f64(in);
        }
        CMatrix rho(dim, dim);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                double re = read_f64(in);
                double im = read_f64(in);
                rho(i, j) = Complex(re, im);
            }
        }
        if (!in) throw UsageError("truncated archive " + path);
        sample.rho = DensityMatrix(shape, std::move(rho));
        sample.ensemble = ensemble_from_density(sample.rho);
        samples.push_back(std::move(sample));
    }
    return samples;
}

} // namespace

const char* family_name(StateFamily family) {
    auto it = family_names().find(family);
    if (it == family_names().end()) throw UsageError("unknown family");
    return it->second;
}

StateFamily family_from_name(const std::string& name) {
    for (const auto& [family, tag] : family_names()) {
        if (name == tag) return family;
    }
    throw UsageError("unknown state family: " + name);
}

std::vector<StateFamily> families_for(const ModeShape& shape) {
    if (shape.modes < 2) {
        throw UsageError("datasets need at least two modes");
    }
    std::vector<StateFamily> families;
    if (shape.modes == 2) {
        families.push_back(StateFamily::kBellLike);
        families.push_back(StateFamily::kTmsv);
    }
    if (shape.modes == 3) {
        families.push_back(StateFamily::kGhzLike);
        families.push_back(StateFamily::kWLike);
    }
    families.push_back(StateFamily::kCat);
    families.push_back(StateFamily::kSeparable);
    return families;
}

bool family_is_entangled(StateFamily family) {
    return family != StateFamily::kSeparable;
}

PureState bell_like(int cutoff, double chi) {
    ModeShape shape{2, cutoff};
    if (cutoff < 2) throw UsageError("bell_like needs cutoff >= 2");
    CVector amp = CVector::Zero(shape.total_dim());
    amp(fock_index(shape, {0, 0})) = 1.0;
    amp(fock_index(shape, {1, 1})) = std::polar(1.0, chi);
    PureState psi(shape, std::move(amp));
    psi.normalize();
    return psi;
}

PureState ghz_like(int cutoff, double chi) {
    ModeShape shape{3, cutoff};
    if (cutoff < 2) throw UsageError("ghz_like needs cutoff >= 2");
    CVector amp = CVector::Zero(shape.total_dim());
    amp(fock_index(shape, {0, 0, 0})) = 1.0;
    amp(fock_index(shape, {1, 1, 1})) = std::polar(1.0, chi);
    PureState psi(shape, std::move(amp));
    psi.normalize();
    return psi;
}

PureState w_like(int cutoff, double phi0, double phi1, double phi2) {
    ModeShape shape{3, cutoff};
    if (cutoff < 2) throw UsageError("w_like needs cutoff >= 2");
    CVector amp = CVector::Zero(shape.total_dim());
    amp(fock_index(shape, {1, 0, 0})) = std::polar(1.0, phi0);
    amp(fock_index(shape, {0, 1, 0})) = std::polar(1.0, phi1);
    amp(fock_index(shape, {0, 0, 1})) = std::polar(1.0, phi2);
    PureState psi(shape, std::move(amp));
    psi.normalize();
    return psi;
}

PureState two_mode_squeezed_vacuum(int cutoff, double r) {
    ModeShape shape{2, cutoff};
    CVector amp = CVector::Zero(shape.total_dim());
    double t = std::tanh(r);
    double coeff = 1.0;
    for (int n = 0; n < cutoff; ++n) {
        amp(fock_index(shape, {n, n})) = coeff;
        coeff *= t;
    }
    PureState psi(shape, std::move(amp));
    psi.normalize();
    return psi;
}

PureState cat_state(const ModeShape& shape, double alpha, double chi) {
    PureState plus = coherent_state(shape.cutoff, alpha);
    PureState minus = coherent_state(shape.cutoff, -alpha);
    PureState branch_plus = plus;
    PureState branch_minus = minus;
    for (int m = 1; m < shape.modes; ++m) {
        branch_plus = tensor_product(branch_plus, plus);
        branch_minus = tensor_product(branch_minus, minus);
    }
    PureState psi(shape, branch_plus.amplitudes +
                             std::polar(1.0, chi) * branch_minus.amplitudes);
    psi.normalize();
    return psi;
}

DensityMatrix wernerize(const PureState& psi, double p) {
    if (p < 0.0 || p > 1.0) throw UsageError("mixing probability not in [0,1]");
    int dim = psi.shape.total_dim();
    CMatrix rho = (1.0 - p) * (psi.amplitudes * psi.amplitudes.adjoint());
    rho += (p / double(dim)) * CMatrix::Identity(dim, dim);
    return DensityMatrix(psi.shape, std::move(rho));
}

FamilyDraw gen_family(StateFamily family, const ModeShape& shape,
                      std::mt19937_64& rng) {
    std::vector<StateFamily> allowed = families_for(shape);
    if (std::find(allowed.begin(), allowed.end(), family) == allowed.end()) {
        throw UsageError(std::string("family ") + family_name(family) +
                         " is incompatible with " +
                         std::to_string(shape.modes) + " modes");
    }
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    FamilyDraw draw;
    switch (family) {
    case StateFamily::kBellLike: {
        double chi = angle(rng);
        draw.gen_params["chi"] = chi;
        draw.ensemble =
            MixedStateEnsemble::from_pure(bell_like(shape.cutoff, chi));
        break;
    }
    case StateFamily::kGhzLike: {
        double chi = angle(rng);
        draw.gen_params["chi"] = chi;
        draw.ensemble =
            MixedStateEnsemble::from_pure(ghz_like(shape.cutoff, chi));
        break;
    }
    case StateFamily::kWLike: {
        double phi0 = angle(rng), phi1 = angle(rng), phi2 = angle(rng);
        draw.gen_params["phi0"] = phi0;
        draw.gen_params["phi1"] = phi1;
        draw.gen_params["phi2"] = phi2;
        draw.ensemble = MixedStateEnsemble::from_pure(
            w_like(shape.cutoff, phi0, phi1, phi2));
        break;
    }
    case StateFamily::kTmsv: {
        std::uniform_real_distribution<double> squeeze(0.0, 1.5);
        double r = squeeze(rng);
        draw.gen_params["r"] = r;
        draw.ensemble = MixedStateEnsemble::from_pure(
            two_mode_squeezed_vacuum(shape.cutoff, r));
        break;
    }
    case StateFamily::kCat: {
        std::uniform_real_distribution<double> amp(0.3, 1.0);
        double alpha = amp(rng);
        double chi = angle(rng);
        draw.gen_params["alpha"] = alpha;
        draw.gen_params["chi"] = chi;
        draw.ensemble =
            MixedStateEnsemble::from_pure(cat_state(shape, alpha, chi));
        break;
    }
    case StateFamily::kSeparable: {
        MixedStateEnsemble product =
            draw_single_mode(shape.cutoff, 0, rng, draw.gen_params);
        for (int m = 1; m < shape.modes; ++m) {
            product = ensemble_product(
                product,
                draw_single_mode(shape.cutoff, m, rng, draw.gen_params));
        }
        draw.ensemble = std::move(product);
        break;
    }
    }
    return draw;
}

double LabeledState::max_negativity() const {
    double best = 0.0;
    for (double v : negativities) best = std::max(best, v);
    return best;
}

DatasetSplit build_dataset(int n, const ModeShape& shape, std::uint64_t seed,
                           const FamilyWeights& weights) {
    if (n < 20) throw UsageError("dataset size must be at least 20");
    std::vector<double> pool_weights;
    std::vector<StateFamily> pool = weighted_families(shape, weights, pool_weights);
    double weight_total = 0.0;
    for (double w : pool_weights) weight_total += w;

    DatasetSplit dataset;
    dataset.shape = shape;
    dataset.seed = seed;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        dataset.family_weights[pool[i]] = pool_weights[i];
    }

    std::size_t need_separable = std::size_t(n / 2);
    std::size_t need_entangled = std::size_t(n) - need_separable;
    std::vector<LabeledState> separable, entangled;
    std::map<StateFamily, int> consecutive_rejects;

    std::uint64_t sample_index = 0;
    while (separable.size() < need_separable ||
           entangled.size() < need_entangled) {
        std::mt19937_64 rng =
            make_rng(seed, stream_tag("datagen"), sample_index++);
        std::uniform_real_distribution<double> pick(0.0, weight_total);
        double ticket = pick(rng);
        StateFamily family = pool.back();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (ticket < pool_weights[i]) {
                family = pool[i];
                break;
            }
            ticket -= pool_weights[i];
        }

        LabeledState sample;
        sample.family = family;
        if (!family_is_entangled(family)) {
            FamilyDraw draw = gen_family(family, shape, rng);
            sample.label = 0;
            sample.ensemble = std::move(draw.ensemble);
            sample.gen_params = std::move(draw.gen_params);
            sample.rho = sample.ensemble.to_density();
            sample.negativities = split_negativities(sample.rho);
            separable.push_back(std::move(sample));
            continue;
        }

        // Entangled branch: Werner-mix, verify, and regenerate from the
        // same stream until some split is NPT.
        int& rejects = consecutive_rejects[family];
        while (true) {
            FamilyDraw draw = gen_family(family, shape, rng);
            std::uniform_real_distribution<double> mix(0.0, 0.3);
            double p = mix(rng);
            draw.gen_params["mix_p"] = p;

            MixedStateEnsemble ensemble = std::move(draw.ensemble);
            for (double& w : ensemble.weights) w *= (1.0 - p);
            ensemble.white_weight += p;
            DensityMatrix rho = ensemble.to_density();
            std::vector<double> negs = split_negativities(rho);
            double best = *std::max_element(negs.begin(), negs.end());
            if (best > kNegativityThreshold) {
                rejects = 0;
                sample.label = 1;
                sample.ensemble = std::move(ensemble);
                sample.gen_params = std::move(draw.gen_params);
                sample.rho = std::move(rho);
                sample.negativities = std::move(negs);
                entangled.push_back(std::move(sample));
                break;
            }
            if (++rejects > kMaxConsecutiveRejects) {
                throw GenerationExhaustedError(
                    std::string("family ") + family_name(family) +
                    " failed entanglement verification " +
                    std::to_string(rejects) + " times in a row");
            }
        }
    }

    // Undersample the majority class to an exact 50/50 balance.
    std::mt19937_64 trim_rng = make_rng(seed, stream_tag("undersample"));
    seeded_shuffle(separable, trim_rng);
    seeded_shuffle(entangled, trim_rng);
    separable.resize(need_separable);
    entangled.resize(need_entangled);

    std::vector<LabeledState> all;
    all.reserve(std::size_t(n));
    for (LabeledState& s : separable) all.push_back(std::move(s));
    for (LabeledState& s : entangled) all.push_back(std::move(s));
    std::mt19937_64 split_rng = make_rng(seed, stream_tag("split"));
    seeded_shuffle(all, split_rng);

    std::size_t n_train = std::size_t(std::llround(0.6 * n));
    std::size_t n_val = std::size_t(std::llround(0.2 * n));
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i < n_train)
            dataset.train.push_back(std::move(all[i]));
        else if (i < n_train + n_val)
            dataset.validation.push_back(std::move(all[i]));
        else
            dataset.test.push_back(std::move(all[i]));
    }
    return dataset;
}

int engineered_feature_length(const ModeShape& shape) {
    int dim = shape.total_dim();
    int splits = int(all_bipartite_splits(shape).size());
    return 1 + shape.modes + splits + 2 * dim * dim;
}

RVector engineered_features(const DensityMatrix& state) {
    int dim = state.shape.total_dim();
    RVector features(engineered_feature_length(state.shape));
    int at = 0;
    features(at++) = purity(state);
    for (int m = 0; m < state.shape.modes; ++m) {
        features(at++) = mode_entropy(state, m);
    }
    for (const BipartiteSplit& split : all_bipartite_splits(state.shape)) {
        features(at++) = negativity(state, split);
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) features(at++) = state.rho(i, j).real();
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) features(at++) = state.rho(i, j).imag();
    }
    return features;
}

RVector engineered_features(const LabeledState& state) {
    return engineered_features(state.rho);
}

MixedStateEnsemble ensemble_from_density(const DensityMatrix& state,
                                         double floor) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(state.rho);
    if (solver.info() != Eigen::Success) {
        throw DegenerateStateError("eigendecomposition failed");
    }
    MixedStateEnsemble ensemble;
    ensemble.shape = state.shape;
    for (int k = 0; k < solver.eigenvalues().size(); ++k) {
        double w = solver.eigenvalues()(k);
        if (w <= floor) continue;
        ensemble.weights.push_back(w);
        ensemble.vectors.push_back(solver.eigenvectors().col(k));
    }
    return ensemble;
}

void save_dataset(const DatasetSplit& dataset, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_archive((fs::path(dir) / "train.cvds").string(), dataset.train,
                  dataset);
    write_archive((fs::path(dir) / "validation.cvds").string(),
                  dataset.validation, dataset);
    write_archive((fs::path(dir) / "test.cvds").string(), dataset.test,
                  dataset);

    nlohmann::json manifest;
    manifest["format_version"] = kArchiveVersion;
    manifest["modes"] = dataset.shape.modes;
    manifest["cutoff"] = dataset.shape.cutoff;
    manifest["seed"] = dataset.seed;
    nlohmann::json weights = nlohmann::json::object();
    for (const auto& [family, weight] : dataset.family_weights) {
        weights[family_name(family)] = weight;
    }
    manifest["family_weights"] = weights;
    manifest["counts"] = {{"train", dataset.train.size()},
                          {"validation", dataset.validation.size()},
                          {"test", dataset.test.size()}};

    auto split_summary = [](const std::vector<LabeledState>& samples) {
        nlohmann::json labels = {{"label_0", 0}, {"label_1", 0}};
        nlohmann::json families = nlohmann::json::object();
        double entangled_min = std::numeric_limits<double>::infinity();
        double separable_max = 0.0;
        for (const LabeledState& sample : samples) {
            labels[sample.label == 1 ? "label_1" : "label_0"] =
                labels[sample.label == 1 ? "label_1" : "label_0"]
                    .get<int>() +
                1;
            std::string key = family_name(sample.family);
            families[key] = families.contains(key)
                                ? families[key].get<int>() + 1
                                : 1;
            double negativity = sample.max_negativity();
            if (sample.label == 1) {
                entangled_min = std::min(entangled_min, negativity);
            } else {
                separable_max = std::max(separable_max, negativity);
            }
        }
        nlohmann::json out = {{"labels", labels}, {"families", families}};
        if (labels["label_1"].get<int>() > 0) {
            out["min_label1_negativity"] = entangled_min;
        }
        out["max_label0_negativity"] = separable_max;
        return out;
    };
    manifest["summary"] = {{"train", split_summary(dataset.train)},
                           {"validation", split_summary(dataset.validation)},
                           {"test", split_summary(dataset.test)}};
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
}

DatasetSplit load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    DatasetSplit dataset;
    dataset.train =
        read_archive((fs::path(dir) / "train.cvds").string(), dataset, true);
    dataset.validation = read_archive(
        (fs::path(dir) / "validation.cvds").string(), dataset, false);
    dataset.test =
        read_archive((fs::path(dir) / "test.cvds").string(), dataset, false);
    return dataset;
}

} // namespace cvqw
