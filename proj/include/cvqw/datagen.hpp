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

#ifndef CVQW_DATAGEN_HPP_
#define CVQW_DATAGEN_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cvqw/fock.hpp"

namespace cvqw {

enum class StateFamily {
    kBellLike,
    kGhzLike,
    kWLike,
    kTmsv,
    kCat,
    kSeparable,
};

const char* family_name(StateFamily family);
StateFamily family_from_name(const std::string& name);

/// Families compatible with the given mode count. Bell-like and two-mode
/// squeezed vacuum need M=2, GHZ-like and W-like need M=3; cat states and
/// separable products work for any M >= 2.
std::vector<StateFamily> families_for(const ModeShape& shape);

bool family_is_entangled(StateFamily family);

/// (|00> + e^{i chi}|11>) / sqrt(2).
PureState bell_like(int cutoff, double chi);

/// (|000> + e^{i chi}|111>) / sqrt(2).
PureState ghz_like(int cutoff, double chi);

/// (e^{i phi0}|100> + e^{i phi1}|010> + e^{i phi2}|001>) / sqrt(3).
PureState w_like(int cutoff, double phi0, double phi1, double phi2);

/// normalize(sum_{n<d} tanh^n(r) |n,n>).
PureState two_mode_squeezed_vacuum(int cutoff, double r);

/// normalize(|alpha>^{tensor M} + e^{i chi}|-alpha>^{tensor M}) on the
/// truncated space.
PureState cat_state(const ModeShape& shape, double alpha, double chi);

/// (1-p) |psi><psi| + p I/d^M.
DensityMatrix wernerize(const PureState& psi, double p);

/// One draw from a state family. Entangled families come back as a single
/// pure component (Werner mixing is applied by the dataset builder);
/// separable products may carry several components when a thermal factor is
/// involved. gen_params records every sampled parameter for audit.
struct FamilyDraw {
    MixedStateEnsemble ensemble;
    std::map<std::string, double> gen_params;
};

FamilyDraw gen_family(StateFamily family, const ModeShape& shape,
                      std::mt19937_64& rng);

struct LabeledState {
    DensityMatrix rho;
    MixedStateEnsemble ensemble;
    int label = 0;
    StateFamily family = StateFamily::kSeparable;
    std::map<std::string, double> gen_params;
    std::vector<double> negativities;

    double max_negativity() const;
};

using FamilyWeights = std::map<StateFamily, double>;

struct DatasetSplit {
    ModeShape shape;
    std::uint64_t seed = 0;
    FamilyWeights family_weights;
    std::vector<LabeledState> train;
    std::vector<LabeledState> validation;
    std::vector<LabeledState> test;

    std::size_t total_size() const {
        return train.size() + validation.size() + test.size();
    }
};

/// Builds a balanced, labeled, reproducible dataset of n states. Entangled
/// candidates are Werner-mixed and kept only when some bipartite split has
/// negativity above 1e-7; failures are regenerated from the same per-sample
/// stream. More than 1000 consecutive failures for one family raise
/// GenerationExhaustedError. The majority class is undersampled to balance,
/// then a single seeded shuffle partitions 60/20/20.
DatasetSplit build_dataset(int n, const ModeShape& shape, std::uint64_t seed,
                           const FamilyWeights& weights = {});

/// [purity; M single-mode entropies; negativity per bipartite split;
/// vec(Re rho); vec(Im rho)], row-major, length 1 + M + S + 2 (d^M)^2.
RVector engineered_features(const DensityMatrix& state);
RVector engineered_features(const LabeledState& state);
int engineered_feature_length(const ModeShape& shape);

/// Eigendecomposition-based ensemble of an arbitrary density matrix,
/// dropping eigenvalues at or below `floor`. Used when a dataset is loaded
/// from disk and the generation-time decomposition is no longer available.
MixedStateEnsemble ensemble_from_density(const DensityMatrix& state,
                                         double floor = 1e-12);

/// Writes train/validation/test archives plus a JSON manifest into `dir`.
/// Each archive is self-describing: header (format version, M, d, seed,
/// family weights, count) followed by per-sample records with the label,
/// family tag, generation parameters, per-split negativities, and the dense
/// matrix as interleaved little-endian real/imaginary doubles.
void save_dataset(const DatasetSplit& dataset, const std::string& dir);

DatasetSplit load_dataset(const std::string& dir);

} // namespace cvqw

#endif // CVQW_DATAGEN_HPP_
