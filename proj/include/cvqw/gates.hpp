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

#include <vector>

#include "cvqw/fock.hpp"

namespace cvqw {

/// Truncated annihilation operator, a|n> = sqrt(n)|n-1>.
CMatrix annihilation_operator(int cutoff);

/// Truncated creation operator, the adjoint of annihilation.
CMatrix creation_operator(int cutoff);

/// Photon number operator diag(0, 1, ..., cutoff-1).
CMatrix number_operator(int cutoff);

/// Matrix exponential by scaling and squaring. All gate generators here are
/// anti-Hermitian even after truncation, so the result is unitary to
/// round-off.
CMatrix matrix_exponential(const CMatrix& a);

/// Hard magnitude limit for squeeze and displacement parameters; larger
/// values are scaled back to this radius before exponentiation.
inline constexpr double kGateMagnitudeLimit = 3.0;

/// Phase rotation diag(exp(i phi n)).
CMatrix rotation_gate(int cutoff, double phi);

/// Kerr interaction diag(exp(i kappa n^2)).
CMatrix kerr_gate(int cutoff, double kappa);

/// Squeezing exp((conj(z) a^2 - z adag^2) / 2) of the truncated generator.
/// |z| is clamped at kGateMagnitudeLimit.
CMatrix squeeze_gate(int cutoff, Complex z);

/// Displacement exp(alpha adag - conj(alpha) a) of the truncated generator.
/// |alpha| is clamped at kGateMagnitudeLimit.
CMatrix displace_gate(int cutoff, Complex alpha);

/// Two-mode beamsplitter exp(theta (e^{i phi} adag_1 a_2 - h.c.)) over the
/// basis |n1, n2> -> n1 * cutoff + n2. The truncated generator commutes with
/// total photon number, so the gate is assembled one photon-number block at
/// a time and is exactly block diagonal.
CMatrix beamsplitter_gate(int cutoff, double theta, double phi);

/// Lifts a single-mode operator to the joint space, identity elsewhere.
CMatrix embed_one_mode(const ModeShape& shape, const CMatrix& op, int mode);

/// Lifts a two-mode operator (basis |n_i, n_j>) to the joint space.
CMatrix embed_two_mode(const ModeShape& shape, const CMatrix& op, int mode_i,
                       int mode_j);

/// Kraus operators E_k = sqrt((1-eta)^k / k!) eta^{n/2} a^k, k = 0..cutoff-1,
/// for photon loss with transmissivity eta. On the truncated space the set
/// is exactly trace preserving.
std::vector<CMatrix> loss_kraus_operators(int cutoff, double eta);

/// rho -> U rho U^dagger.
void apply_unitary(DensityMatrix& state, const CMatrix& u);

/// Applies a single-mode Kraus channel to one mode of the joint state and
/// re-hermitizes the result.
void apply_kraus_channel(DensityMatrix& state,
                         const std::vector<CMatrix>& kraus, int mode);

/// Normalized truncated coherent state sum_n alpha^n / sqrt(n!) |n>.
PureState coherent_state(int cutoff, Complex alpha);

/// Single-mode thermal state with mean photon number nbar, renormalized on
/// the truncated space.
DensityMatrix thermal_state(int cutoff, double nbar);

} // namespace cvqw
