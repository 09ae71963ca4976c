#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hyperobs/matrix.hpp"

/// Symmetric eigenvalue machinery: cyclic Jacobi diagonalization plus the
/// definiteness-margin primitive used by every certificate check.
namespace hyperobs {

/// Default absolute tolerance for definiteness verdicts; certificate entries
/// are O(1)-O(20), so an absolute margin threshold is appropriate.
inline constexpr double kDefinitenessTol = 1e-9;

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending;
/// eigenvector column i pairs with eigenvalue i, so S = Q diag(w) Q^T.
struct Spectrum {
    Vec eigenvalues;
    Mat eigenvectors;
};

namespace detail {

inline double offdiag_norm(const Mat& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace detail

/// Diagonalizes a symmetric matrix by cyclic Jacobi rotations, sweeping all
/// (p, q) pairs per pass until the off-diagonal Frobenius norm falls below
/// 1e-12 * ||s||_F. Throws std::runtime_error if the sweep budget is spent
/// without convergence (a numerical failure, not an input error).
inline Spectrum sym_eig(const SymMatrix& s, int max_sweeps = 100) {
    const std::size_t n = s.n();
    Mat a = s.full();
    Mat v = Mat::identity(n);
    const double tol = 1e-12 * frobenius_norm(a);

    if (n > 1 && detail::offdiag_norm(a) > tol) {
        bool converged = false;
        for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    const double apq = a(p, q);
                    if (apq == 0.0) continue;
                    // Stable rotation angle: t = tan(theta) from the smaller root.
                    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                    const double sign = theta >= 0.0 ? 1.0 : -1.0;
                    const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double sn = t * c;

                    const double app = a(p, p);
                    const double aqq = a(q, q);
                    a(p, p) = app - t * apq;
                    a(q, q) = aqq + t * apq;
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (i == p || i == q) continue;
                        const double aip = a(i, p);
                        const double aiq = a(i, q);
                        a(i, p) = c * aip - sn * aiq;
                        a(p, i) = a(i, p);
                        a(i, q) = sn * aip + c * aiq;
                        a(q, i) = a(i, q);
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const double vip = v(i, p);
                        const double viq = v(i, q);
                        v(i, p) = c * vip - sn * viq;
                        v(i, q) = sn * vip + c * viq;
                    }
                }
            }
            converged = detail::offdiag_norm(a) <= tol;
        }
        if (!converged) {
            throw std::runtime_error("sym_eig: Jacobi sweeps exhausted without convergence");
        }
    }

    // Sort eigenvalues ascending and permute eigenvector columns to match.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&a](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    Spectrum out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Mat(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// Smallest eigenvalue.
inline double lambda_min(const SymMatrix& s) { return sym_eig(s).eigenvalues.front(); }

/// Largest eigenvalue.
inline double lambda_max(const SymMatrix& s) { return sym_eig(s).eigenvalues.back(); }

/// Signed definiteness margin: lambda_min(s). Callers interpret the sign —
/// positive definite iff margin > tol; negative definite iff lambda_max < -tol.
inline double definiteness_margin(const SymMatrix& s) { return lambda_min(s); }

}  // namespace hyperobs
