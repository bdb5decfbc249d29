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

#include "cvqw/gates.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace cvqw {

namespace {

void check_cutoff(int cutoff) {
    if (cutoff < 2) throw UsageError("gate cutoff must be at least 2");
}

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw UsageError(std::string(what) + " must lie in [0, 1]");
    }
}

} // namespace

CMatrix annihilation_operator(int cutoff) {
    check_cutoff(cutoff);
    CMatrix a = CMatrix::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

CMatrix creation_operator(int cutoff) {
    return annihilation_operator(cutoff).adjoint();
}

CMatrix number_operator(int cutoff) {
    check_cutoff(cutoff);
    CMatrix n = CMatrix::Zero(cutoff, cutoff);
    for (int k = 0; k < cutoff; ++k) n(k, k) = double(k);
    return n;
}

CMatrix matrix_exponential(const CMatrix& a) {
    if (a.rows() != a.cols()) {
        throw UsageError("matrix exponential requires a square matrix");
    }
    return a.exp();
}

CMatrix rotation_gate(int cutoff, double phi) {
    check_cutoff(cutoff);
    CMatrix u = CMatrix::Zero(cutoff, cutoff);
    for (int n = 0; n < cutoff; ++n) {
        u(n, n) = std::exp(Complex(0.0, phi * n));
    }
    return u;
}

CMatrix kerr_gate(int cutoff, double kappa) {
    check_cutoff(cutoff);
    CMatrix u = CMatrix::Zero(cutoff, cutoff);
    for (int n = 0; n < cutoff; ++n) {
        u(n, n) = std::exp(Complex(0.0, kappa * double(n) * double(n)));
    }
    return u;
}

namespace {

// Squeeze and displacement magnitudes are clamped so runaway parameters
// cannot push the truncated simulation into nonsense territory.
Complex clamp_magnitude(Complex z, double limit) {
    double mag = std::abs(z);
    if (mag <= limit) return z;
    return z * (limit / mag);
}

} // namespace

CMatrix squeeze_gate(int cutoff, Complex z) {
    z = clamp_magnitude(z, kGateMagnitudeLimit);
    CMatrix a = annihilation_operator(cutoff);
    CMatrix adag = a.adjoint();
    CMatrix gen = 0.5 * (std::conj(z) * (a * a) - z * (adag * adag));
    return matrix_exponential(gen);
}

CMatrix displace_gate(int cutoff, Complex alpha) {
    alpha = clamp_magnitude(alpha, kGateMagnitudeLimit);
    CMatrix a = annihilation_operator(cutoff);
    CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
    return matrix_exponential(gen);
}

CMatrix beamsplitter_gate(int cutoff, double theta, double phi) {
    check_cutoff(cutoff);
    int dim = cutoff * cutoff;
    CMatrix u = CMatrix::Zero(dim, dim);
    Complex hop = theta * std::exp(Complex(0.0, phi));
    for (int total = 0; total <= 2 * (cutoff - 1); ++total) {
        // Basis states with n1 + n2 == total that survive truncation.
        std::vector<int> block;
        for (int n1 = std::max(0, total - (cutoff - 1));
             n1 <= std::min(cutoff - 1, total); ++n1) {
            block.push_back(n1 * cutoff + (total - n1));
        }
        int bsize = static_cast<int>(block.size());
        CMatrix gen = CMatrix::Zero(bsize, bsize);
        for (int r = 0; r < bsize; ++r) {
            int n1 = block[r] / cutoff;
            int n2 = block[r] % cutoff;
            // adag_1 a_2 moves |n1, n2> to |n1+1, n2-1>.
            if (n2 > 0 && n1 + 1 < cutoff) {
                double amp = std::sqrt(double(n1 + 1) * double(n2));
                gen(r + 1, r) += hop * amp;
                gen(r, r + 1) -= std::conj(hop) * amp;
            }
        }
        CMatrix ublock = matrix_exponential(gen);
        for (int r = 0; r < bsize; ++r)
            for (int c = 0; c < bsize; ++c) u(block[r], block[c]) = ublock(r, c);
    }
    return u;
}

CMatrix embed_one_mode(const ModeShape& shape, const CMatrix& op, int mode) {
    if (mode < 0 || mode >= shape.modes) {
        throw UsageError("embed mode index out of range");
    }
    if (op.rows() != shape.cutoff || op.cols() != shape.cutoff) {
        throw UsageError("single-mode operator size does not match cutoff");
    }
    int dim = shape.total_dim();
    CMatrix out = CMatrix::Zero(dim, dim);
    for (int row = 0; row < dim; ++row) {
        std::vector<int> occ = fock_occupations(shape, row);
        int n = occ[mode];
        for (int m = 0; m < shape.cutoff; ++m) {
            Complex v = op(n, m);
            if (v == Complex(0.0, 0.0)) continue;
            occ[mode] = m;
            out(row, fock_index(shape, occ)) = v;
        }
        occ[mode] = n;
    }
    return out;
}

CMatrix embed_two_mode(const ModeShape& shape, const CMatrix& op, int mode_i,
                       int mode_j) {
    if (mode_i == mode_j) throw UsageError("two-mode embed needs distinct modes");
    if (mode_i < 0 || mode_i >= shape.modes || mode_j < 0 ||
        mode_j >= shape.modes) {
        throw UsageError("embed mode index out of range");
    }
    int d = shape.cutoff;
    if (op.rows() != d * d || op.cols() != d * d) {
        throw UsageError("two-mode operator size does not match cutoff^2");
    }
    int dim = shape.total_dim();
    CMatrix out = CMatrix::Zero(dim, dim);
    for (int row = 0; row < dim; ++row) {
        std::vector<int> occ = fock_occupations(shape, row);
        int r = occ[mode_i] * d + occ[mode_j];
        int ni = occ[mode_i], nj = occ[mode_j];
        for (int mi = 0; mi < d; ++mi) {
            for (int mj = 0; mj < d; ++mj) {
                Complex v = op(r, mi * d + mj);
                if (v == Complex(0.0, 0.0)) continue;
                occ[mode_i] = mi;
                occ[mode_j] = mj;
                out(row, fock_index(shape, occ)) = v;
            }
        }
        occ[mode_i] = ni;
        occ[mode_j] = nj;
    }
    return out;
}

std::vector<CMatrix> loss_kraus_operators(int cutoff, double eta) {
    check_cutoff(cutoff);
    check_probability(eta, "transmissivity eta");
    CMatrix a = annihilation_operator(cutoff);
    CMatrix eta_half = CMatrix::Zero(cutoff, cutoff);
    for (int n = 0; n < cutoff; ++n) {
        eta_half(n, n) = std::pow(eta, 0.5 * double(n));
    }
    std::vector<CMatrix> kraus;
    kraus.reserve(cutoff);
    CMatrix a_pow = CMatrix::Identity(cutoff, cutoff);
    double factorial = 1.0;
    for (int k = 0; k < cutoff; ++k) {
        if (k > 0) {
            a_pow = (a_pow * a).eval();
            factorial *= double(k);
        }
        double coeff = std::sqrt(std::pow(1.0 - eta, double(k)) / factorial);
        kraus.push_back(coeff * (eta_half * a_pow));
    }
    return kraus;
}

void apply_unitary(DensityMatrix& state, const CMatrix& u) {
    if (u.rows() != state.rho.rows() || u.cols() != state.rho.cols()) {
        throw UsageError("unitary size does not match state");
    }
    state.rho = (u * state.rho * u.adjoint()).eval();
}

void apply_kraus_channel(DensityMatrix& state,
                         const std::vector<CMatrix>& kraus, int mode) {
    int dim = state.rho.rows();
    CMatrix out = CMatrix::Zero(dim, dim);
    for (const CMatrix& e : kraus) {
        CMatrix lifted = embed_one_mode(state.shape, e, mode);
        out += lifted * state.rho * lifted.adjoint();
    }
    state.rho = std::move(out);
    state.hermitize();
}

PureState coherent_state(int cutoff, Complex alpha) {
    check_cutoff(cutoff);
    CVector amps(cutoff);
    Complex term(1.0, 0.0);
    for (int n = 0; n < cutoff; ++n) {
        if (n > 0) term *= alpha / std::sqrt(double(n));
        amps(n) = term;
    }
    PureState psi(ModeShape(1, cutoff), std::move(amps));
    psi.normalize();
    return psi;
}

DensityMatrix thermal_state(int cutoff, double nbar) {
    check_cutoff(cutoff);
    if (nbar < 0.0) throw UsageError("mean photon number must be nonnegative");
    CMatrix rho = CMatrix::Zero(cutoff, cutoff);
    double ratio = nbar / (nbar + 1.0);
    double weight = 1.0;
    double total = 0.0;
    for (int n = 0; n < cutoff; ++n) {
        rho(n, n) = weight;
        total += weight;
        weight *= ratio;
    }
    rho /= total;
    return DensityMatrix(ModeShape(1, cutoff), std::move(rho));
}

} // namespace cvqw
