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

#include "cvqw/fock.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace cvqw {

namespace {

int checked_pow(int base, int exp) {
    long long out = 1;
    for (int i = 0; i < exp; ++i) {
        out *= base;
        if (out > (1 << 26)) {
            throw UsageError("truncated Fock space dimension overflows the "
                             "dense-simulation budget");
        }
    }
    return static_cast<int>(out);
}

void check_mode(const ModeShape& shape, int mode) {
    if (mode < 0 || mode >= shape.modes) {
        throw UsageError("mode index " + std::to_string(mode) +
                         " out of range for " + std::to_string(shape.modes) +
                         " modes");
    }
}

} // namespace

ModeShape::ModeShape(int modes_, int cutoff_) : modes(modes_), cutoff(cutoff_) {
    if (modes < 1) throw UsageError("ModeShape requires at least one mode");
    if (cutoff < 2) throw UsageError("ModeShape requires cutoff >= 2");
    checked_pow(cutoff, modes);
}

int ModeShape::total_dim() const { return checked_pow(cutoff, modes); }

int fock_index(const ModeShape& shape, const std::vector<int>& occupations) {
    if (static_cast<int>(occupations.size()) != shape.modes) {
        throw UsageError("occupation list length does not match mode count");
    }
    int index = 0;
    for (int i = 0; i < shape.modes; ++i) {
        int n = occupations[i];
        if (n < 0 || n >= shape.cutoff) {
            throw UsageError("occupation " + std::to_string(n) +
                             " outside cutoff " + std::to_string(shape.cutoff));
        }
        index = index * shape.cutoff + n;
    }
    return index;
}

std::vector<int> fock_occupations(const ModeShape& shape, int index) {
    if (index < 0 || index >= shape.total_dim()) {
        throw UsageError("basis index out of range");
    }
    std::vector<int> occ(shape.modes, 0);
    for (int i = shape.modes - 1; i >= 0; --i) {
        occ[i] = index % shape.cutoff;
        index /= shape.cutoff;
    }
    return occ;
}

PureState::PureState(const ModeShape& shape_, CVector amplitudes_)
    : shape(shape_), amplitudes(std::move(amplitudes_)) {
    if (amplitudes.size() != shape.total_dim()) {
        throw UsageError("amplitude vector size does not match shape");
    }
}

PureState PureState::fock_basis(const ModeShape& shape,
                                const std::vector<int>& occupations) {
    CVector amps = CVector::Zero(shape.total_dim());
    amps(fock_index(shape, occupations)) = Complex(1.0, 0.0);
    return PureState(shape, std::move(amps));
}

PureState PureState::vacuum(const ModeShape& shape) {
    return fock_basis(shape, std::vector<int>(shape.modes, 0));
}

double PureState::norm() const { return amplitudes.norm(); }

void PureState::normalize() {
    double n = norm();
    if (n < 1e-300) {
        throw DegenerateStateError("cannot normalize the zero vector");
    }
    amplitudes /= n;
}

DensityMatrix::DensityMatrix(const ModeShape& shape_, CMatrix rho_)
    : shape(shape_), rho(std::move(rho_)) {
    if (rho.rows() != shape.total_dim() || rho.cols() != shape.total_dim()) {
        throw UsageError("density matrix size does not match shape");
    }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    return DensityMatrix(psi.shape,
                         psi.amplitudes * psi.amplitudes.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(const ModeShape& shape) {
    int d = shape.total_dim();
    return DensityMatrix(shape, CMatrix::Identity(d, d) / double(d));
}

double DensityMatrix::trace_real() const { return rho.trace().real(); }

void DensityMatrix::hermitize() { rho = 0.5 * (rho + rho.adjoint()).eval(); }

MixedStateEnsemble MixedStateEnsemble::from_pure(const PureState& psi) {
    MixedStateEnsemble ensemble;
    ensemble.shape = psi.shape;
    ensemble.weights = {1.0};
    ensemble.vectors = {psi.amplitudes};
    return ensemble;
}

DensityMatrix MixedStateEnsemble::to_density() const {
    if (weights.size() != vectors.size()) {
        throw UsageError("ensemble weights and vectors differ in length");
    }
    int dim = shape.total_dim();
    CMatrix rho = CMatrix::Zero(dim, dim);
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (vectors[k].size() != dim) {
            throw UsageError("ensemble vector dimension mismatch");
        }
        rho += weights[k] * (vectors[k] * vectors[k].adjoint());
    }
    rho += (white_weight / double(dim)) * CMatrix::Identity(dim, dim);
    return DensityMatrix(shape, std::move(rho));
}

double MixedStateEnsemble::weight_sum() const {
    double total = white_weight;
    for (double w : weights) total += w;
    return total;
}

std::vector<BipartiteSplit> all_bipartite_splits(const ModeShape& shape) {
    if (shape.modes < 2) {
        throw UsageError("bipartitions require at least two modes");
    }
    std::vector<BipartiteSplit> splits;
    int rest = shape.modes - 1;
    // subset_a = {0} + any proper subset of the remaining modes, enumerated
    // by binary counting so the order is {0}, {0,1}, {0,2}, {0,1,2}, ...
    for (int mask = 0; mask < (1 << rest) - 1; ++mask) {
        BipartiteSplit split;
        split.subset_a.push_back(0);
        for (int m = 0; m < rest; ++m) {
            if (mask & (1 << m))
                split.subset_a.push_back(m + 1);
            else
                split.subset_b.push_back(m + 1);
        }
        splits.push_back(std::move(split));
    }
    return splits;
}

PureState tensor_product(const PureState& a, const PureState& b) {
    if (a.shape.cutoff != b.shape.cutoff) {
        throw UsageError("tensor product requires matching cutoffs");
    }
    ModeShape shape(a.shape.modes + b.shape.modes, a.shape.cutoff);
    CVector out(shape.total_dim());
    for (int i = 0; i < a.amplitudes.size(); ++i) {
        for (int j = 0; j < b.amplitudes.size(); ++j) {
            out(i * b.amplitudes.size() + j) = a.amplitudes(i) * b.amplitudes(j);
        }
    }
    return PureState(shape, std::move(out));
}

DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.shape.cutoff != b.shape.cutoff) {
        throw UsageError("tensor product requires matching cutoffs");
    }
    ModeShape shape(a.shape.modes + b.shape.modes, a.shape.cutoff);
    int da = a.rho.rows(), db = b.rho.rows();
    CMatrix out(da * db, da * db);
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j)
            out.block(i * db, j * db, db, db) = a.rho(i, j) * b.rho;
    return DensityMatrix(shape, std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& traced_modes) {
    const ModeShape& shape = state.shape;
    std::vector<bool> traced(shape.modes, false);
    for (int m : traced_modes) {
        check_mode(shape, m);
        if (traced[m]) throw UsageError("duplicate mode in partial trace");
        traced[m] = true;
    }
    std::vector<int> kept;
    for (int m = 0; m < shape.modes; ++m)
        if (!traced[m]) kept.push_back(m);
    if (kept.empty()) {
        throw UsageError("partial trace must keep at least one mode");
    }

    ModeShape out_shape(static_cast<int>(kept.size()), shape.cutoff);
    int dk = out_shape.total_dim();
    int dt = shape.total_dim() / dk;
    CMatrix out = CMatrix::Zero(dk, dk);

    std::vector<int> full_i(shape.modes), full_j(shape.modes);
    for (int a = 0; a < dk; ++a) {
        std::vector<int> occ_a = fock_occupations(out_shape, a);
        for (int b = 0; b < dk; ++b) {
            std::vector<int> occ_b = fock_occupations(out_shape, b);
            Complex acc(0.0, 0.0);
            for (int t = 0; t < dt; ++t) {
                int rem = t;
                for (int m = static_cast<int>(traced_modes.size()); m-- > 0;) {
                    full_i[traced_modes[m]] = rem % shape.cutoff;
                    full_j[traced_modes[m]] = rem % shape.cutoff;
                    rem /= shape.cutoff;
                }
                for (std::size_t k = 0; k < kept.size(); ++k) {
                    full_i[kept[k]] = occ_a[k];
                    full_j[kept[k]] = occ_b[k];
                }
                acc += state.rho(fock_index(shape, full_i),
                                 fock_index(shape, full_j));
            }
            out(a, b) = acc;
        }
    }
    return DensityMatrix(out_shape, std::move(out));
}

CMatrix partial_transpose(const DensityMatrix& state,
                          const BipartiteSplit& split) {
    const ModeShape& shape = state.shape;
    std::vector<bool> in_b(shape.modes, false);
    for (int m : split.subset_b) {
        check_mode(shape, m);
        in_b[m] = true;
    }
    int d = shape.total_dim();
    CMatrix out(d, d);
    for (int i = 0; i < d; ++i) {
        std::vector<int> occ_i = fock_occupations(shape, i);
        for (int j = 0; j < d; ++j) {
            std::vector<int> occ_j = fock_occupations(shape, j);
            std::vector<int> ti = occ_i, tj = occ_j;
            for (int m = 0; m < shape.modes; ++m) {
                if (in_b[m]) std::swap(ti[m], tj[m]);
            }
            out(fock_index(shape, ti), fock_index(shape, tj)) =
                state.rho(i, j);
        }
    }
    return out;
}

double negativity(const DensityMatrix& state, const BipartiteSplit& split) {
    CMatrix pt = partial_transpose(state, split);
    CMatrix herm = 0.5 * (pt + pt.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm,
                                                  Eigen::EigenvaluesOnly);
    double trace_norm = solver.eigenvalues().cwiseAbs().sum();
    return 0.5 * (trace_norm - 1.0);
}

double purity(const DensityMatrix& state) {
    return (state.rho * state.rho).trace().real();
}

double von_neumann_entropy(const DensityMatrix& state) {
    CMatrix herm = 0.5 * (state.rho + state.rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm,
                                                  Eigen::EigenvaluesOnly);
    double entropy = 0.0;
    for (int i = 0; i < solver.eigenvalues().size(); ++i) {
        double lambda = solver.eigenvalues()(i);
        if (lambda > 1e-12) entropy -= lambda * std::log(lambda);
    }
    return entropy;
}

double mode_entropy(const DensityMatrix& state, int mode) {
    check_mode(state.shape, mode);
    std::vector<int> traced;
    for (int m = 0; m < state.shape.modes; ++m)
        if (m != mode) traced.push_back(m);
    return von_neumann_entropy(partial_trace(state, traced));
}

double max_negativity(const DensityMatrix& state) {
    double best = 0.0;
    for (const BipartiteSplit& split : all_bipartite_splits(state.shape)) {
        best = std::max(best, negativity(state, split));
    }
    return best;
}

} // namespace cvqw
