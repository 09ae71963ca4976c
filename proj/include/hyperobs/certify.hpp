#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hyperobs/eig.hpp"
#include "hyperobs/io.hpp"
#include "hyperobs/matrix.hpp"
#include "hyperobs/system.hpp"

/// Certificate matrices for the boundary observer, feasibility verification,
/// and the guaranteed decay constants that follow from a feasible certificate.
namespace hyperobs {

/// Verdict of checking a candidate certificate against a system.
struct VerificationReport {
    bool feasible = false;        ///< structural_ok and both margins clear tolerance
    double boundary_margin = 0.0; ///< lambda_min of the boundary matrix
    double k_margin = 0.0;        ///< lambda_max of K (negative when feasible)
    bool structural_ok = false;   ///< certificate invariants (signs, symmetry)
    double tolerance = 0.0;       ///< absolute eigenvalue tolerance used
};

/// Guaranteed exponential decay data derived from a feasible certificate:
/// the error energy V satisfies alpha1 d^2 <= V <= alpha2 d^2 and
/// dV/dt <= -alpha3 d^2, giving |d(t)| <= kappa e^{-lambda_rate t} |d(0)|.
struct DecayEstimate {
    double alpha1 = 0.0;       ///< lambda_min of the boundary matrix
    double alpha2 = 0.0;       ///< lambda_max of the unweighted (z = 0) matrix
    double alpha3 = 0.0;       ///< |lambda_max(K)|
    double kappa = 0.0;        ///< sqrt(alpha2 / alpha1) >= 1
    double lambda_rate = 0.0;  ///< alpha3 / (2 alpha2)
};

namespace detail {

inline void require_cert_shapes(const Certificate& cert) {
    require(!cert.p1.empty() && cert.p3.rows() == cert.p3.cols() && cert.p3.rows() >= 1 &&
                cert.p2.rows() == cert.p3.rows() && cert.p2.cols() == cert.p1.size(),
            "certificate block shapes are inconsistent");
}

inline void require_cert_shapes(const PdeOdeSystem& sys, const Certificate& cert) {
    require_cert_shapes(cert);
    require(cert.p1.size() == sys.n_x() && cert.p3.rows() == sys.n_chi() &&
                cert.l_gain.rows() == sys.n_chi() && cert.l_gain.cols() == sys.n_y(),
            "certificate dimensions do not match the system");
}

inline void require_unit_interval(double z, const char* who) {
    require(z >= 0.0 && z <= 1.0, std::string(who) + ": z must lie in [0, 1]");
}

/// Shared 3x3-block core in the variables (eps(z), eps(1), eta). The (1,1)
/// block carries the caller-chosen exponential factor exp11 (e^{-mu z} for the
/// z-dependent form, frozen e^{-mu} for K); every other block is constant.
inline Mat certificate_core(const PdeOdeSystem& sys, const Certificate& cert, double exp11) {
    const std::size_t nx = sys.n_x();
    const std::size_t nchi = sys.n_chi();
    const double emu = std::exp(-cert.mu);

    const Mat lambda_diag = Mat::diag(sys.lambda);
    Mat lam_p1(nx, nx);
    for (std::size_t i = 0; i < nx; ++i) lam_p1(i, i) = sys.lambda[i] * cert.p1[i];

    const Mat p2t = transpose(cert.p2);
    const Mat lm = cert.l_gain * sys.m_mat;  // n_chi x n_x

    Mat out(2 * nx + nchi, 2 * nx + nchi);
    // (1,1): -exp11 mu Lambda P1
    set_block(out, 0, 0, (-exp11 * cert.mu) * lam_p1);
    // (1,2): -P2^T L M
    const Mat b12 = (-1.0) * (p2t * lm);
    set_block(out, 0, nx, b12);
    set_block(out, nx, 0, transpose(b12));
    // (1,3): P2^T A
    const Mat b13 = p2t * sys.a_mat;
    set_block(out, 0, 2 * nx, b13);
    set_block(out, 2 * nx, 0, transpose(b13));
    // (2,2): -Lambda P1 e^{-mu}
    set_block(out, nx, nx, (-emu) * lam_p1);
    // (2,3): -Lambda P2^T - M^T L^T P3
    const Mat b23 = (-1.0) * (lambda_diag * p2t) - transpose(lm) * cert.p3;
    set_block(out, nx, 2 * nx, b23);
    set_block(out, 2 * nx, nx, transpose(b23));
    // (3,3): He(P3 A + P2 Lambda C) + C^T Lambda P1 C
    const Mat he_arg = cert.p3 * sys.a_mat + cert.p2 * (lambda_diag * sys.c_mat);
    const Mat b33 = he_arg + transpose(he_arg) + sym_part(transpose(sys.c_mat) * (lam_p1 * sys.c_mat));
    set_block(out, 2 * nx, 2 * nx, b33);
    return out;
}

/// Extends the core with the nonlinearity channel: S-procedure term
/// iota ell^2 Z^T Z added to the (3,3) block, coupling column
/// Gamma = (P2^T B; 0; P3 B), and trailing block -iota I.
inline Mat certificate_full(const PdeOdeSystem& sys, const Certificate& cert, double exp11) {
    const std::size_t nx = sys.n_x();
    const std::size_t nchi = sys.n_chi();
    const std::size_t nl = sys.n_l();
    const std::size_t off = 2 * nx + nchi;

    Mat out(off + nl, off + nl);
    set_block(out, 0, 0, certificate_core(sys, cert, exp11));

    const Mat ztz = (cert.iota * sys.ell * sys.ell) * sym_part(transpose(sys.z_mat) * sys.z_mat);
    for (std::size_t i = 0; i < nchi; ++i)
        for (std::size_t j = 0; j < nchi; ++j) out(2 * nx + i, 2 * nx + j) += ztz(i, j);

    const Mat gamma_top = transpose(cert.p2) * sys.b_mat;  // n_x x n_l
    const Mat gamma_bot = cert.p3 * sys.b_mat;             // n_chi x n_l
    set_block(out, 0, off, gamma_top);
    set_block(out, off, 0, transpose(gamma_top));
    set_block(out, 2 * nx, off, gamma_bot);
    set_block(out, off, 2 * nx, transpose(gamma_bot));

    for (std::size_t i = 0; i < nl; ++i) out(off + i, off + i) = -cert.iota;
    return out;
}

}  // namespace detail

/// Weight matrix G(z) = [[e^{-mu z} P1, P2^T], [P2, P3]] of the error energy.
inline SymMatrix build_g(const Certificate& cert, double z) {
    detail::require_unit_interval(z, "build_g");
    detail::require_cert_shapes(cert);
    const std::size_t nx = cert.p1.size();
    const std::size_t nchi = cert.p3.rows();
    const double w = std::exp(-cert.mu * z);
    Mat g(nx + nchi, nx + nchi);
    for (std::size_t i = 0; i < nx; ++i) g(i, i) = w * cert.p1[i];
    set_block(g, 0, nx, transpose(cert.p2));
    set_block(g, nx, 0, cert.p2);
    set_block(g, nx, nx, cert.p3);
    return SymMatrix{g};
}

/// Boundary feasibility matrix [[P1 e^{-mu}, P2^T], [P2, P3]]; must be
/// positive definite for a feasible certificate. Equals G(1).
inline SymMatrix build_boundary_matrix(const Certificate& cert) {
    return build_g(cert, 1.0);
}

/// z-dependent 3x3-block dissipation matrix in (eps(z), eps(1), eta), without
/// the nonlinearity channel.
inline SymMatrix build_m(const PdeOdeSystem& sys, const Certificate& cert, double z) {
    detail::require_unit_interval(z, "build_m");
    detail::require_cert_shapes(sys, cert);
    return SymMatrix{detail::certificate_core(sys, cert, std::exp(-cert.mu * z))};
}

/// Constant feasibility matrix K in (eps(z), eps(1), eta, rho): the core with
/// the (1,1) exponential frozen at e^{-mu}, extended by the S-procedure term,
/// the coupling column Gamma, and -iota I. Must be negative definite.
inline SymMatrix build_k(const PdeOdeSystem& sys, const Certificate& cert) {
    detail::require_cert_shapes(sys, cert);
    return SymMatrix{detail::certificate_full(sys, cert, std::exp(-cert.mu))};
}

/// z-dependent counterpart Q(z) of K, with e^{-mu z} live in the (1,1) block.
/// Satisfies Q(1) = K entrywise and Q(z) <= K in the semidefinite order.
inline SymMatrix build_q(const PdeOdeSystem& sys, const Certificate& cert, double z) {
    detail::require_unit_interval(z, "build_q");
    detail::require_cert_shapes(sys, cert);
    return SymMatrix{detail::certificate_full(sys, cert, std::exp(-cert.mu * z))};
}

/// Checks a candidate certificate: boundary matrix strictly positive definite
/// and K strictly negative definite, both by an absolute eigenvalue margin of
/// tol, plus the structural certificate invariants. Certificate invariant
/// violations are reported (structural_ok = false), not thrown; dimension
/// mismatches against the system are hard errors.
inline VerificationReport verify(const PdeOdeSystem& sys, const Certificate& cert,
                                 double tol = 1e-9) {
    validate(sys);
    if (cert.p1.size() != sys.n_x() || cert.p2.rows() != sys.n_chi() ||
        cert.p2.cols() != sys.n_x() || cert.p3.rows() != sys.n_chi() ||
        cert.p3.cols() != sys.n_chi() || cert.l_gain.rows() != sys.n_chi() ||
        cert.l_gain.cols() != sys.n_y()) {
        throw std::invalid_argument("verify: certificate dimensions do not match the system");
    }

    VerificationReport rep;
    rep.tolerance = tol;
    rep.structural_ok = true;
    try {
        validate(cert);
    } catch (const std::invalid_argument&) {
        rep.structural_ok = false;
    }

    rep.boundary_margin = std::numeric_limits<double>::quiet_NaN();
    rep.k_margin = std::numeric_limits<double>::quiet_NaN();
    try {
        rep.boundary_margin = lambda_min(build_boundary_matrix(cert));
        rep.k_margin = lambda_max(build_k(sys, cert));
    } catch (const std::exception&) {
        // A candidate can be too malformed to evaluate (e.g., grossly
        // asymmetric P3); the NaN margins keep it infeasible below.
    }

    rep.feasible = rep.structural_ok && rep.boundary_margin > tol && rep.k_margin < -tol;
    return rep;
}

/// Decay constants guaranteed by a feasible certificate. Requires
/// verify(sys, cert) to be feasible at the default tolerance.
inline DecayEstimate decay_estimate(const PdeOdeSystem& sys, const Certificate& cert) {
    const VerificationReport rep = verify(sys, cert);
    if (!rep.feasible) {
        throw std::invalid_argument(
            "decay_estimate: certificate is not feasible, decay guarantee undefined");
    }
    DecayEstimate d;
    d.alpha1 = rep.boundary_margin;
    d.alpha2 = lambda_max(build_g(cert, 0.0));
    d.alpha3 = std::abs(rep.k_margin);
    d.kappa = std::sqrt(d.alpha2 / d.alpha1);
    d.lambda_rate = d.alpha3 / (2.0 * d.alpha2);
    return d;
}

/// Serializes a report as a JSON document (two-space indent, trailing newline).
inline std::string save_report(const VerificationReport& rep) {
    json j;
    j["feasible"] = rep.feasible;
    j["boundary_margin"] = rep.boundary_margin;
    j["k_margin"] = rep.k_margin;
    j["structural_ok"] = rep.structural_ok;
    j["tolerance"] = rep.tolerance;
    return j.dump(2) + "\n";
}

}  // namespace hyperobs
