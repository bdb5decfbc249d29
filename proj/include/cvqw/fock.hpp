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

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cvqw/util.hpp"

namespace cvqw {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Shape of a truncated multimode Fock space: `modes` oscillators, each kept
/// to `cutoff` levels |0>..|cutoff-1>.
struct ModeShape {
    int modes = 0;
    int cutoff = 0;

    ModeShape() = default;
    ModeShape(int modes_, int cutoff_);

    /// d^M, the dimension of the joint truncated Hilbert space.
    int total_dim() const;

    bool operator==(const ModeShape&) const = default;
};

/// Flattens per-mode occupations to a basis index, row-major with mode 0 the
/// most significant digit: index = sum_i n_i * cutoff^(M-1-i).
int fock_index(const ModeShape& shape, const std::vector<int>& occupations);

/// Inverse of fock_index.
std::vector<int> fock_occupations(const ModeShape& shape, int index);

/// Normalized state vector over the truncated joint space.
struct PureState {
    ModeShape shape;
    CVector amplitudes;

    PureState() = default;
    PureState(const ModeShape& shape_, CVector amplitudes_);

    /// |n1,...,nM> basis state.
    static PureState fock_basis(const ModeShape& shape,
                                const std::vector<int>& occupations);
    /// Vacuum |0,...,0>.
    static PureState vacuum(const ModeShape& shape);

    double norm() const;
    /// Rescales to unit norm; throws DegenerateStateError on the zero vector.
    void normalize();
};

/// Density operator over the truncated joint space. Stored dense; the sizes
/// used here (<= 27) keep that cheap.
struct DensityMatrix {
    ModeShape shape;
    CMatrix rho;

    DensityMatrix() = default;
    DensityMatrix(const ModeShape& shape_, CMatrix rho_);

    static DensityMatrix from_pure(const PureState& psi);
    /// Maximally mixed state I/d^M.
    static DensityMatrix maximally_mixed(const ModeShape& shape);

    double trace_real() const;
    /// Replaces rho by (rho + rho^dagger)/2, squashing round-off drift.
    void hermitize();
};

/// Convex mixture of pure states plus an optional maximally mixed ("white")
/// component. Keeping low-rank states in this form lets downstream code work
/// with a handful of vectors instead of a dense d^M x d^M matrix.
struct MixedStateEnsemble {
    ModeShape shape;
    std::vector<double> weights;
    std::vector<CVector> vectors;
    double white_weight = 0.0;

    static MixedStateEnsemble from_pure(const PureState& psi);
    DensityMatrix to_density() const;
    double weight_sum() const;
};

/// A bipartition of the mode set. subset_a always contains mode 0 so each
/// unordered split has one canonical representative.
struct BipartiteSplit {
    std::vector<int> subset_a;
    std::vector<int> subset_b;
};

/// All canonical bipartitions, ordered by the subset_a enumeration
/// {0}, {0,1}, {0,2}, ... (binary counting over modes 1..M-1).
std::vector<BipartiteSplit> all_bipartite_splits(const ModeShape& shape);

/// Kronecker product of two states, modes of `a` first.
PureState tensor_product(const PureState& a, const PureState& b);
DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b);

/// Traces out the modes listed in `traced_modes`, keeping the remaining
/// modes in their original order.
DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& traced_modes);

/// Transposes the indices of the modes in subset_b of the split.
CMatrix partial_transpose(const DensityMatrix& state,
                          const BipartiteSplit& split);

/// Logarithmic-free entanglement negativity (||rho^T_B||_1 - 1)/2 across
/// the given split.
double negativity(const DensityMatrix& state, const BipartiteSplit& split);

/// Tr(rho^2).
double purity(const DensityMatrix& state);

/// Von Neumann entropy -sum lambda ln lambda with eigenvalues below 1e-12
/// dropped. Natural log.
double von_neumann_entropy(const DensityMatrix& state);

/// Entropy of the reduced state of a single mode.
double mode_entropy(const DensityMatrix& state, int mode);

/// Maximum negativity over all canonical bipartitions.
double max_negativity(const DensityMatrix& state);

} // namespace cvqw
