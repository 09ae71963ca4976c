#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hyperobs/matrix.hpp"
#include "hyperobs/nonlinearity.hpp"

/// Data model for the plant (transport PDE with dynamic boundary), the
/// observer certificate, and the Lipschitz increment machinery.
namespace hyperobs {

/// Coupled system: n_x transport fields x(t, z) on z in [0, 1] with speeds
/// lambda > 0 and boundary x(t, 0) = C chi, driven by the boundary ODE
/// chi' = A chi + B Psi(Z chi); measured output y = M x(t, 1).
struct PdeOdeSystem {
    Vec lambda;             ///< transport speeds, length n_x, strictly positive
    Mat a_mat;              ///< n_chi x n_chi
    Mat b_mat;              ///< n_chi x n_l
    Mat c_mat;              ///< n_x  x n_chi
    Mat z_mat;              ///< n_z  x n_chi
    Mat m_mat;              ///< n_y  x n_x
    Nonlinearity psi;       ///< componentwise nonlinearity
    double ell = 1.0;       ///< Lipschitz constant bound, >= exact constant of psi

    std::size_t n_x() const { return lambda.size(); }
    std::size_t n_chi() const { return a_mat.rows(); }
    std::size_t n_z() const { return z_mat.rows(); }
    std::size_t n_y() const { return m_mat.rows(); }
    /// Output dimension of psi; equals n_z because the nonlinearity set is
    /// componentwise. Kept as its own accessor so a non-componentwise
    /// extension stays nonbreaking.
    std::size_t n_l() const { return n_z(); }
};

/// Candidate certificate: decision variables of the observer feasibility
/// conditions. P1 is stored as its diagonal.
struct Certificate {
    Vec p1;        ///< diagonal entries of P1, strictly positive, length n_x
    Mat p2;        ///< n_chi x n_x
    Mat p3;        ///< n_chi x n_chi, symmetric
    Mat l_gain;    ///< n_chi x n_y observer injection gain
    double mu = 0.0;    ///< exponential weight, > 0
    double iota = 0.0;  ///< S-procedure multiplier, >= 0
};

inline void validate(const PdeOdeSystem& sys) {
    if (sys.lambda.empty()) throw std::invalid_argument("system: lambda must be nonempty");
    for (double l : sys.lambda) {
        if (!(l > 0.0)) throw std::invalid_argument("system: lambda entries must be strictly positive");
    }
    validate(sys.psi);
    if (!(sys.ell > 0.0)) throw std::invalid_argument("system: ell must be strictly positive");
    if (sys.ell < lipschitz_constant(sys.psi.kind)) {
        throw std::invalid_argument("system: ell is below the exact Lipschitz constant of psi (" +
                                    to_string(sys.psi.kind) + ")");
    }
    const std::size_t nx = sys.n_x(), nchi = sys.n_chi(), nz = sys.n_z(), ny = sys.n_y();
    if (nchi == 0) throw std::invalid_argument("system: A must be nonempty");
    if (sys.a_mat.cols() != nchi) throw std::invalid_argument("system: A must be square n_chi x n_chi");
    if (sys.b_mat.rows() != nchi || sys.b_mat.cols() != sys.n_l()) {
        throw std::invalid_argument("system: B must be n_chi x n_l");
    }
    if (sys.c_mat.rows() != nx || sys.c_mat.cols() != nchi) {
        throw std::invalid_argument("system: C must be n_x x n_chi");
    }
    if (sys.z_mat.rows() != nz || sys.z_mat.cols() != nchi || nz == 0) {
        throw std::invalid_argument("system: Z must be n_z x n_chi with n_z >= 1");
    }
    if (sys.m_mat.rows() != ny || sys.m_mat.cols() != nx || ny == 0) {
        throw std::invalid_argument("system: M must be n_y x n_x with n_y >= 1");
    }
}

inline void validate(const Certificate& cert) {
    if (cert.p1.empty()) throw std::invalid_argument("certificate: P1 must be nonempty");
    for (double d : cert.p1) {
        if (!(d > 0.0)) throw std::invalid_argument("certificate: P1 diagonal must be strictly positive");
    }
    const std::size_t nchi = cert.p3.rows();
    if (cert.p3.cols() != nchi || nchi == 0) {
        throw std::invalid_argument("certificate: P3 must be square and nonempty");
    }
    // P3 must be symmetric; SymMatrix enforces the 1e-12 relative tolerance.
    SymMatrix{cert.p3};
    if (cert.p2.rows() != nchi || cert.p2.cols() != cert.p1.size()) {
        throw std::invalid_argument("certificate: P2 must be n_chi x n_x");
    }
    if (cert.l_gain.rows() != nchi || cert.l_gain.cols() == 0) {
        throw std::invalid_argument("certificate: L must be n_chi x n_y");
    }
    if (!(cert.mu > 0.0)) throw std::invalid_argument("certificate: mu must be strictly positive");
    if (!(cert.iota >= 0.0)) throw std::invalid_argument("certificate: iota must be nonnegative");
}

/// Cross-checks certificate dimensions against a system.
inline void validate_compatible(const PdeOdeSystem& sys, const Certificate& cert) {
    validate(sys);
    validate(cert);
    if (cert.p1.size() != sys.n_x()) throw std::invalid_argument("certificate/system: P1 size must equal n_x");
    if (cert.p3.rows() != sys.n_chi()) throw std::invalid_argument("certificate/system: P3 size must equal n_chi");
    if (cert.l_gain.cols() != sys.n_y()) throw std::invalid_argument("certificate/system: L must have n_y columns");
}

/// Increment of the nonlinearity between the plant state and the shifted
/// state: rho(chi, eta) = Psi(Z chi) - Psi(Z (chi - eta)).
inline Vec rho(const PdeOdeSystem& sys, const Vec& chi, const Vec& eta) {
    detail::require(chi.size() == sys.n_chi() && eta.size() == sys.n_chi(),
                    "rho: chi and eta must have dimension n_chi");
    return eval_psi(sys.psi, sys.z_mat * chi) - eval_psi(sys.psi, sys.z_mat * (chi - eta));
}

/// Quadratic Lipschitz bound on the increment:
/// rho^T rho - ell^2 eta^T Z^T Z eta <= 0 (with 1e-12 rounding slack).
inline bool rho_bound_holds(const PdeOdeSystem& sys, const Vec& chi, const Vec& eta) {
    const Vec r = rho(sys, chi, eta);
    const Vec zeta = sys.z_mat * eta;
    return dot(r, r) - sys.ell * sys.ell * dot(zeta, zeta) <= 1e-12;
}

namespace detail {

/// In-place Householder reduction to upper Hessenberg form.
inline void to_hessenberg(Mat& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double nrm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) nrm += a(i, k) * a(i, k);
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) continue;
        const double alpha = a(k + 1, k) >= 0.0 ? -nrm : nrm;
        Vec v(n, 0.0);
        v[k + 1] = a(k + 1, k) - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vtv = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vtv += v[i] * v[i];
        if (vtv == 0.0) continue;
        const double beta = 2.0 / vtv;
        // A <- (I - beta v v^T) A
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        // A <- A (I - beta v v^T)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
    }
}

/// Real parts of all eigenvalues of a general real square matrix, computed by
/// reduction to Hessenberg form followed by a shifted QR iteration: a couple
/// of unshifted warmup steps per deflation window, then Francis double-shift
/// steps (with the customary exceptional shift every 11th stalled iteration),
/// deflating converged 1x1 and 2x2 trailing blocks. Diagnostic accuracy;
/// intended for n <= 16.
inline Vec eigen_real_parts(Mat h) {
    const std::size_t n = h.rows();
    require(n >= 1 && h.cols() == n, "eigen_real_parts: matrix must be square and nonempty");
    Vec re;
    re.reserve(n);
    to_hessenberg(h);

    const double eps = std::numeric_limits<double>::epsilon();
    int hi = static_cast<int>(n) - 1;
    int stalled = 0;
    int total = 0;
    const int total_budget = 50 * static_cast<int>(n) * static_cast<int>(n) + 100;

    auto push_2x2 = [&re](double a, double b, double c, double d) {
        const double tr2 = 0.5 * (a + d);
        const double disc = 0.25 * (a - d) * (a - d) + b * c;
        if (disc >= 0.0) {
            const double r = std::sqrt(disc);
            re.push_back(tr2 + r);
            re.push_back(tr2 - r);
        } else {
            re.push_back(tr2);  // complex pair: both real parts equal tr/2
            re.push_back(tr2);
        }
    };

    while (hi >= 0) {
        if (hi == 0) {
            re.push_back(h(0, 0));
            break;
        }
        // Scan for a negligible subdiagonal entry to split the active window.
        int lo = hi;
        while (lo > 0) {
            double scale = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (scale == 0.0) scale = frobenius_norm(h);
            if (std::abs(h(lo, lo - 1)) <= 16.0 * eps * scale) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            re.push_back(h(hi, hi));
            --hi;
            stalled = 0;
            continue;
        }
        if (lo == hi - 1) {
            push_2x2(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi));
            hi -= 2;
            stalled = 0;
            continue;
        }
        if (++total > total_budget) {
            throw std::runtime_error("eigen_real_parts: QR iteration failed to converge");
        }

        // Shift polynomial x^2 - s x + t.
        double s, t;
        ++stalled;
        if (stalled <= 2) {
            s = 0.0;  // unshifted warmup steps
            t = 0.0;
        } else if (stalled % 11 == 0) {
            const double w = std::abs(h(hi, hi - 1)) + std::abs(h(hi - 1, hi - 2));
            s = 1.5 * w;  // exceptional shift to break symmetry-induced stalls
            t = w * w;
        } else {
            s = h(hi - 1, hi - 1) + h(hi, hi);
            t = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
        }

        // First column of H^2 - s H + t I restricted to the window.
        double x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) - s * h(lo, lo) + t;
        double y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - s);
        double z = h(lo + 2, lo + 1) * h(lo + 1, lo);

        // Chase the bulge with 3x1 Householder reflectors.
        for (int k = lo; k <= hi - 2; ++k) {
            const double nrm = std::sqrt(x * x + y * y + z * z);
            if (nrm != 0.0) {
                const double alpha = x >= 0.0 ? -nrm : nrm;
                const double v0 = x - alpha, v1 = y, v2 = z;
                const double vtv = v0 * v0 + v1 * v1 + v2 * v2;
                if (vtv != 0.0) {
                    const double beta = 2.0 / vtv;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double sum =
                            v0 * h(k, j) + v1 * h(k + 1, j) + v2 * h(k + 2, j);
                        const double bs = beta * sum;
                        h(k, j) -= bs * v0;
                        h(k + 1, j) -= bs * v1;
                        h(k + 2, j) -= bs * v2;
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const double sum =
                            h(i, k) * v0 + h(i, k + 1) * v1 + h(i, k + 2) * v2;
                        const double bs = beta * sum;
                        h(i, k) -= bs * v0;
                        h(i, k + 1) -= bs * v1;
                        h(i, k + 2) -= bs * v2;
                    }
                }
            }
            if (k < hi - 2) {
                x = h(k + 1, k);
                y = h(k + 2, k);
                z = k + 3 <= hi ? h(k + 3, k) : 0.0;
            }
        }
        // Final 2x1 reflector clears the leftover bulge entry h(hi, hi-2).
        {
            const double x2 = h(hi - 1, hi - 2);
            const double y2 = h(hi, hi - 2);
            const double nrm = std::sqrt(x2 * x2 + y2 * y2);
            if (nrm != 0.0) {
                const double alpha = x2 >= 0.0 ? -nrm : nrm;
                const double v0 = x2 - alpha, v1 = y2;
                const double vtv = v0 * v0 + v1 * v1;
                if (vtv != 0.0) {
                    const double beta = 2.0 / vtv;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double sum = v0 * h(hi - 1, j) + v1 * h(hi, j);
                        const double bs = beta * sum;
                        h(hi - 1, j) -= bs * v0;
                        h(hi, j) -= bs * v1;
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const double sum = h(i, hi - 1) * v0 + h(i, hi) * v1;
                        const double bs = beta * sum;
                        h(i, hi - 1) -= bs * v0;
                        h(i, hi) -= bs * v1;
                    }
                }
            }
        }
    }
    return re;
}

}  // namespace detail

/// True iff all eigenvalues of a have strictly negative real part. The n <= 2
/// cases use the characteristic-polynomial route (trace/determinant); larger
/// matrices use the shifted-QR eigenvalue method above. Diagnostic-only.
inline bool is_hurwitz(const Mat& a) {
    detail::require(a.rows() == a.cols() && a.rows() >= 1, "is_hurwitz: matrix must be square");
    const std::size_t n = a.rows();
    if (n == 1) return a(0, 0) < 0.0;
    if (n == 2) {
        // w^2 - tr w + det: both roots in the open left half plane iff
        // tr < 0 and det > 0, for real or complex-conjugate root pairs.
        const double tr = a(0, 0) + a(1, 1);
        const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        return tr < 0.0 && det > 0.0;
    }
    const Vec re = detail::eigen_real_parts(a);
    // Real parts on the imaginary axis come out of the iteration as rounding
    // noise of either sign; classify them as not strictly negative.
    const double axis_tol = 1e-10 * std::max(1.0, frobenius_norm(a));
    for (double r : re) {
        if (!(r < -axis_tol)) return false;
    }
    return true;
}

}  // namespace hyperobs
