// Test-side oracles, implemented independently of the library under test.
// Everything here favors the most literal possible formulation (index loops,
// textbook Jacobi sweeps, pairwise counting) over speed.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cvqw/fock.hpp"

namespace oracles {

using cvqw::CMatrix;
using cvqw::Complex;
using cvqw::CVector;
using cvqw::ModeShape;
using cvqw::RMatrix;

// Cyclic Jacobi eigenvalue iteration for a real symmetric matrix.
inline std::vector<double> jacobi_eigenvalues(RMatrix a) {
    const int n = static_cast<int>(a.rows());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-18) continue;
                double phi =
                    0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
                double c = std::cos(phi), s = std::sin(phi);
                for (int k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> evs(n);
    for (int i = 0; i < n; ++i) evs[i] = a(i, i);
    std::sort(evs.begin(), evs.end());
    return evs;
}

// Eigenvalues of a complex Hermitian matrix via the real symmetric embedding
// [[X, -Y], [Y, X]], whose spectrum is that of X + iY with every multiplicity
// doubled; the even-indexed entries of the sorted list recover the original.
inline std::vector<double> hermitian_eigenvalues(const CMatrix& h) {
    const int n = static_cast<int>(h.rows());
    RMatrix big(2 * n, 2 * n);
    big.topLeftCorner(n, n) = h.real();
    big.topRightCorner(n, n) = -h.imag();
    big.bottomLeftCorner(n, n) = h.imag();
    big.bottomRightCorner(n, n) = h.real();
    std::vector<double> doubled = jacobi_eigenvalues(big);
    std::vector<double> evs(n);
    for (int i = 0; i < n; ++i) evs[i] = doubled[2 * i];
    return evs;
}

inline double trace_norm(const CMatrix& h) {
    double out = 0.0;
    for (double ev : hermitian_eigenvalues(h)) out += std::abs(ev);
    return out;
}

inline double entropy_from_matrix(const CMatrix& rho) {
    double out = 0.0;
    for (double ev : hermitian_eigenvalues(rho)) {
        if (ev > 1e-12) out -= ev * std::log(ev);
    }
    return out;
}

// Kronecker product by the raw index formula.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            for (int r = 0; r < b.rows(); ++r)
                for (int c = 0; c < b.cols(); ++c)
                    out(i * b.rows() + r, j * b.cols() + c) = a(i, j) * b(r, c);
    return out;
}

inline CVector kron(const CVector& a, const CVector& b) {
    CVector out(a.size() * b.size());
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
    return out;
}

// Partial trace by brute-force scan of every matrix element: an entry
// contributes iff the traced-mode digits of its row and column agree.
inline CMatrix partial_trace(const CMatrix& rho, const ModeShape& shape,
                             const std::vector<int>& traced_modes) {
    std::vector<bool> traced(shape.modes, false);
    for (int m : traced_modes) traced[m] = true;
    std::vector<int> kept;
    for (int m = 0; m < shape.modes; ++m)
        if (!traced[m]) kept.push_back(m);
    ModeShape out_shape(static_cast<int>(kept.size()), shape.cutoff);
    CMatrix out = CMatrix::Zero(out_shape.total_dim(), out_shape.total_dim());
    for (int i = 0; i < shape.total_dim(); ++i) {
        std::vector<int> oi = cvqw::fock_occupations(shape, i);
        for (int j = 0; j < shape.total_dim(); ++j) {
            std::vector<int> oj = cvqw::fock_occupations(shape, j);
            bool diagonal_in_traced = true;
            for (int m : traced_modes)
                if (oi[m] != oj[m]) diagonal_in_traced = false;
            if (!diagonal_in_traced) continue;
            std::vector<int> ri, rj;
            for (int m : kept) {
                ri.push_back(oi[m]);
                rj.push_back(oj[m]);
            }
            out(cvqw::fock_index(out_shape, ri),
                cvqw::fock_index(out_shape, rj)) += rho(i, j);
        }
    }
    return out;
}

// Partial transpose by brute-force digit swapping.
inline CMatrix partial_transpose(const CMatrix& rho, const ModeShape& shape,
                                 const std::vector<int>& transposed_modes) {
    std::vector<bool> flip(shape.modes, false);
    for (int m : transposed_modes) flip[m] = true;
    CMatrix out(rho.rows(), rho.cols());
    for (int i = 0; i < shape.total_dim(); ++i) {
        std::vector<int> oi = cvqw::fock_occupations(shape, i);
        for (int j = 0; j < shape.total_dim(); ++j) {
            std::vector<int> oj = cvqw::fock_occupations(shape, j);
            std::vector<int> ti = oi, tj = oj;
            for (int m = 0; m < shape.modes; ++m) {
                if (flip[m]) {
                    ti[m] = oj[m];
                    tj[m] = oi[m];
                }
            }
            out(cvqw::fock_index(shape, ti), cvqw::fock_index(shape, tj)) =
                rho(i, j);
        }
    }
    return out;
}

// Random test fixtures. These use their own RNG stream so they cannot
// accidentally mirror the library's stream derivation.
inline CVector random_state_vector(int dim, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    CVector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = Complex(dist(rng), dist(rng));
    v /= v.norm();
    return v;
}

inline CMatrix random_density(int dim, unsigned seed, int rank = 3) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    CMatrix rho = CMatrix::Zero(dim, dim);
    double total = 0.0;
    for (int r = 0; r < rank; ++r) {
        CVector v(dim);
        for (int i = 0; i < dim; ++i) v(i) = Complex(dist(rng), dist(rng));
        v /= v.norm();
        double w = unif(rng);
        rho += w * (v * v.adjoint());
        total += w;
    }
    return rho / total;
}

inline CMatrix random_unitary(int dim, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    CMatrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = Complex(dist(rng), dist(rng));
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) {
        Complex d = r(i, i);
        q.col(i) *= d / std::abs(d);
    }
    return q;
}

// Matrix exponential by plain truncated Taylor series plus repeated
// squaring; deliberately a different algorithm from the library's.
inline CMatrix taylor_expm(const CMatrix& a) {
    int squarings = 0;
    double norm = a.cwiseAbs().sum();
    while (norm > 0.25 && squarings < 40) {
        norm /= 2.0;
        ++squarings;
    }
    CMatrix x = a / std::pow(2.0, squarings);
    CMatrix out = CMatrix::Identity(a.rows(), a.cols());
    CMatrix term = out;
    for (int k = 1; k <= 24; ++k) {
        term = (term * x / double(k)).eval();
        out += term;
    }
    for (int s = 0; s < squarings; ++s) out = (out * out).eval();
    return out;
}

// Soft-margin SVM dual solved by projected gradient ascent. The feasible
// set {0 <= a_i <= C, sum a_i y_i = 0} is handled with an exact projection:
// bisection on the hyperplane multiplier, clipping to the box inside.
struct SvmDualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
};

inline SvmDualSolution svm_dual_qp(const RMatrix& kernel,
                                   const std::vector<double>& y, double c) {
    const int n = static_cast<int>(y.size());
    RMatrix q(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q(i, j) = y[i] * y[j] * kernel(i, j);

    auto project = [&](std::vector<double> v) {
        double span = c + 1.0;
        for (double vi : v) span = std::max(span, std::abs(vi));
        double lo = -span, hi = span;
        auto residual = [&](double lambda) {
            double r = 0.0;
            for (int i = 0; i < n; ++i) {
                double a = std::min(c, std::max(0.0, v[i] - lambda * y[i]));
                r += y[i] * a;
            }
            return r;
        };
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (residual(mid) > 0.0 ? lo : hi) = mid;
        }
        double lambda = 0.5 * (lo + hi);
        for (int i = 0; i < n; ++i)
            v[i] = std::min(c, std::max(0.0, v[i] - lambda * y[i]));
        return v;
    };

    double lipschitz = 1.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::abs(q(i, j));
        lipschitz = std::max(lipschitz, row);
    }
    double step = 1.0 / lipschitz;

    std::vector<double> alpha(n, 0.0);
    for (int iter = 0; iter < 200000; ++iter) {
        std::vector<double> next(n);
        for (int i = 0; i < n; ++i) {
            double qa = 0.0;
            for (int j = 0; j < n; ++j) qa += q(i, j) * alpha[j];
            next[i] = alpha[i] + step * (1.0 - qa);
        }
        next = project(next);
        double delta = 0.0;
        for (int i = 0; i < n; ++i)
            delta = std::max(delta, std::abs(next[i] - alpha[i]));
        alpha = next;
        if (delta < 1e-13) break;
    }

    auto margin = [&](int i) {
        double f = 0.0;
        for (int j = 0; j < n; ++j) f += alpha[j] * y[j] * kernel(i, j);
        return f;
    };
    SvmDualSolution out;
    out.alpha = alpha;
    double margin_eps = 1e-6 * c;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (alpha[i] > margin_eps && alpha[i] < c - margin_eps) {
            sum += y[i] - margin(i);
            ++count;
        }
    }
    if (count > 0) {
        out.bias = sum / count;
    } else {
        double neg = -1e300, pos = 1e300;
        for (int i = 0; i < n; ++i) {
            if (y[i] < 0.0)
                neg = std::max(neg, margin(i));
            else
                pos = std::min(pos, margin(i));
        }
        out.bias = -0.5 * (neg + pos);
    }
    return out;
}

// Pairwise-counting AUC: ties between a positive and negative score count
// one half.
inline double pairwise_auc(const std::vector<double>& scores,
                           const std::vector<int>& labels) {
    double wins = 0.0;
    long long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

} // namespace oracles
