#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperobs/certify.hpp"
#include "hyperobs/matrix.hpp"
#include "hyperobs/sim.hpp"
#include "hyperobs/system.hpp"

/// Lyapunov functional evaluation, error metrics, envelope and decay-rate
/// diagnostics, and a numerical check of the inner-product identity behind
/// the certificate conditions.
namespace hyperobs {

/// Least-squares exponential fit of V over a time window.
struct DecayFit {
    double rate = 0.0;          ///< fitted decay rate of V (minus the log-slope)
    double intercept = 0.0;     ///< fitted ln V at t = 0
    double rms_residual = 0.0;  ///< RMS residual on ln V
    double window_lo = 0.0;
    double window_hi = 0.0;
};

/// Outcome of the exponential-envelope check over a trajectory.
struct EnvelopeReport {
    bool ok = false;
    double worst_excess = 0.0;  ///< max over snapshots of dist - allowed (<= 0 when ok)
    double worst_ratio = 0.0;   ///< dist / allowed at the worst snapshot
    double worst_t = 0.0;
    double slack = 0.0;
};

/// Polynomial test data for the identity check: column k of eps_coeffs holds
/// the coefficient vector of z^k.
struct PolyTestState {
    Mat eps_coeffs;  ///< n_x rows, degree + 1 columns
    Vec eta;         ///< n_chi
    Vec rho_tilde;   ///< free vector in the nonlinearity slot, n_l entries
};

namespace detail {

inline Vec concat(const Vec& a, const Vec& b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline double quad_form(const SymMatrix& s, const Vec& v) { return dot(v, s.full() * v); }

}  // namespace detail

/// Integral Lyapunov functional: composite trapezoid over the uniform grid of
/// [eps(z); eta]^T G(z) [eps(z); eta].
inline double lyapunov_v(const Certificate& cert, const Mat& eps_grid, const Vec& eta) {
    validate(cert);
    detail::require(eps_grid.rows() == cert.p1.size(),
                    "lyapunov_v: eps rows must match the certificate's n_x");
    detail::require(eta.size() == cert.p3.rows(),
                    "lyapunov_v: eta must match the certificate's n_chi");
    detail::require(eps_grid.cols() >= 2, "lyapunov_v: need at least two grid nodes");
    const std::size_t n = eps_grid.cols() - 1;
    const double dz = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double z = static_cast<double>(j) / static_cast<double>(n);
        const Vec u = detail::concat(column(eps_grid, j), eta);
        const double val = detail::quad_form(build_g(cert, z), u);
        acc += (j == 0 || j == n) ? 0.5 * val : val;
    }
    return acc * dz;
}

/// Convenience overload on a full simulation state (eps = x - xhat,
/// eta = chi - chihat).
inline double lyapunov_v(const Certificate& cert, const GridState& st) {
    return lyapunov_v(cert, st.x - st.xhat, st.chi - st.chihat);
}

/// Distance to the zero-error set: sqrt of the trapezoid quadrature of
/// |x - xhat|^2 plus |chi - chihat|^2.
inline double error_distance(const GridState& st) {
    detail::require(st.x.rows() == st.xhat.rows() && st.x.cols() == st.xhat.cols(),
                    "error_distance: field shapes disagree");
    detail::require(st.chi.size() == st.chihat.size(),
                    "error_distance: boundary state sizes disagree");
    detail::require(st.x.cols() >= 2, "error_distance: need at least two grid nodes");
    const std::size_t n = st.x.cols() - 1;
    const double dz = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        double sq = 0.0;
        for (std::size_t i = 0; i < st.x.rows(); ++i) {
            const double d = st.x(i, j) - st.xhat(i, j);
            sq += d * d;
        }
        acc += (j == 0 || j == n) ? 0.5 * sq : sq;
    }
    double lumped = 0.0;
    for (std::size_t i = 0; i < st.chi.size(); ++i) {
        const double d = st.chi[i] - st.chihat[i];
        lumped += d * d;
    }
    return std::sqrt(acc * dz + lumped);
}

/// Checks dist(t) <= (1 + slack) * kappa * exp(-lambda_rate t) * dist(0) at
/// every snapshot and reports the worst margin.
inline EnvelopeReport ges_envelope_check(const Trajectory& traj, const DecayEstimate& decay,
                                         double slack = 0.1) {
    detail::require(!traj.snapshots.empty(), "ges_envelope_check: empty trajectory");
    detail::require(slack >= 0.0, "ges_envelope_check: slack must be nonnegative");
    const double d0 = error_distance(traj.snapshots.front());
    EnvelopeReport rep;
    rep.slack = slack;
    rep.ok = true;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    for (const GridState& st : traj.snapshots) {
        const double dist = error_distance(st);
        const double allowed =
            (1.0 + slack) * decay.kappa * std::exp(-decay.lambda_rate * st.t) * d0;
        const double excess = dist - allowed;
        if (excess > rep.worst_excess) {
            rep.worst_excess = excess;
            rep.worst_t = st.t;
            if (allowed > 0.0) {
                rep.worst_ratio = dist / allowed;
            } else {
                rep.worst_ratio = dist == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
            }
        }
        if (excess > 0.0) rep.ok = false;
    }
    return rep;
}

/// Ordinary least squares of ln V against t over the samples inside the
/// window; the rate is the negated slope. Shared by the trajectory-level fit
/// and the diagnostics-file tooling.
inline DecayFit fit_log_decay(const std::vector<double>& sample_ts,
                              const std::vector<double>& sample_vs, double window_lo,
                              double window_hi) {
    detail::require(sample_ts.size() == sample_vs.size(),
                    "decay_fit: time and value sample counts disagree");
    detail::require(window_lo < window_hi, "decay_fit: window must have positive length");

    std::vector<double> ts;
    std::vector<double> logs;
    for (std::size_t i = 0; i < sample_ts.size(); ++i) {
        if (sample_ts[i] < window_lo || sample_ts[i] > window_hi) continue;
        if (!(sample_vs[i] > 0.0)) {
            throw std::runtime_error("decay_fit: V is not positive at t = " +
                                     std::to_string(sample_ts[i]));
        }
        ts.push_back(sample_ts[i]);
        logs.push_back(std::log(sample_vs[i]));
    }
    detail::require(ts.size() >= 5, "decay_fit: need at least 5 samples inside the window");

    const double n = static_cast<double>(ts.size());
    double tbar = 0.0;
    double ybar = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tbar += ts[i];
        ybar += logs[i];
    }
    tbar /= n;
    ybar /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxx += (ts[i] - tbar) * (ts[i] - tbar);
        sxy += (ts[i] - tbar) * (logs[i] - ybar);
    }
    detail::require(sxx > 0.0, "decay_fit: window samples share a single time");
    const double slope = sxy / sxx;

    DecayFit fit;
    fit.rate = -slope;
    fit.intercept = ybar - slope * tbar;
    fit.window_lo = window_lo;
    fit.window_hi = window_hi;
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = logs[i] - (slope * ts[i] + fit.intercept);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

/// Fits the functional's decay over a window of a simulated trajectory.
inline DecayFit decay_fit(const Trajectory& traj, const Certificate& cert, double window_lo,
                          double window_hi) {
    detail::require(!traj.snapshots.empty(), "decay_fit: empty trajectory");
    detail::require(window_lo >= traj.snapshots.front().t - 1e-12 &&
                        window_hi <= traj.snapshots.back().t + 1e-12,
                    "decay_fit: window exceeds the trajectory time span");
    std::vector<double> ts;
    std::vector<double> vs;
    ts.reserve(traj.snapshots.size());
    vs.reserve(traj.snapshots.size());
    for (const GridState& st : traj.snapshots) {
        ts.push_back(st.t);
        vs.push_back(lyapunov_v(cert, st));
    }
    return fit_log_decay(ts, vs, window_lo, window_hi);
}

namespace detail {

inline Vec poly_eval(const Mat& coeffs, double z) {
    Vec out(coeffs.rows(), 0.0);
    for (std::size_t i = 0; i < coeffs.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t k = coeffs.cols(); k-- > 0;) acc = acc * z + coeffs(i, k);
        out[i] = acc;
    }
    return out;
}

inline Vec poly_eval_derivative(const Mat& coeffs, double z) {
    Vec out(coeffs.rows(), 0.0);
    for (std::size_t i = 0; i < coeffs.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t k = coeffs.cols(); k-- > 1;)
            acc = acc * z + static_cast<double>(k) * coeffs(i, k);
        out[i] = acc;
    }
    return out;
}

/// Composite Simpson over [0, 1] with an even number of panels.
template <typename F>
double simpson(const F& f, int panels) {
    const int n = panels % 2 == 0 ? panels : panels + 1;
    const double h = 1.0 / n;
    double acc = f(0.0) + f(1.0);
    for (int j = 1; j < n; ++j) acc += (j % 2 == 1 ? 4.0 : 2.0) * f(j * h);
    return acc * h / 3.0;
}

}  // namespace detail

/// Evaluates both sides of the inner-product identity on a polynomial test
/// state and returns their relative discrepancy. The left side integrates
/// 2 <G(z)(eps, eta), (-Lambda eps', A eta - L M eps(1) + B rho)>; the right
/// side integrates the quadratic form of the certificate core blocks plus
/// the nonlinearity coupling column applied to (eps(z), eps(1), eta, rho).
inline double identity_check(const PdeOdeSystem& sys, const Certificate& cert,
                             const PolyTestState& test, int quad_points) {
    validate_compatible(sys, cert);
    detail::require(quad_points >= 64, "identity_check: quad_points must be >= 64");
    detail::require(test.eps_coeffs.rows() == sys.n_x() && test.eps_coeffs.cols() >= 1,
                    "identity_check: eps coefficients must have n_x rows");
    detail::require(test.eta.size() == sys.n_chi(), "identity_check: eta must have size n_chi");
    detail::require(test.rho_tilde.size() == sys.n_l(),
                    "identity_check: rho_tilde must have size n_l");

    // Domain condition: eps(0) = C eta.
    {
        const Vec eps0 = detail::poly_eval(test.eps_coeffs, 0.0);
        const Vec want = sys.c_mat * test.eta;
        double scale = 1.0;
        for (double w : want) scale = std::max(scale, std::abs(w));
        for (std::size_t i = 0; i < eps0.size(); ++i) {
            if (std::abs(eps0[i] - want[i]) > 1e-12 * scale) {
                throw std::invalid_argument(
                    "identity_check: test state violates eps(0) = C eta");
            }
        }
    }

    const Vec eps1 = detail::poly_eval(test.eps_coeffs, 1.0);
    const Vec drift = sys.a_mat * test.eta - cert.l_gain * (sys.m_mat * eps1) +
                      sys.b_mat * test.rho_tilde;

    const auto lhs_integrand = [&](double z) {
        const Vec eps = detail::poly_eval(test.eps_coeffs, z);
        Vec deps = detail::poly_eval_derivative(test.eps_coeffs, z);
        for (std::size_t i = 0; i < deps.size(); ++i) deps[i] *= -sys.lambda[i];
        const Vec u = detail::concat(eps, test.eta);
        const Vec w = build_g(cert, z).full() * u;
        return 2.0 * dot(w, detail::concat(deps, drift));
    };

    const Mat gamma_top = transpose(cert.p2) * sys.b_mat;
    const Mat gamma_bot = cert.p3 * sys.b_mat;
    const Vec couple_top = gamma_top * test.rho_tilde;
    const Vec couple_bot = gamma_bot * test.rho_tilde;
    const Vec zero_mid(sys.n_x(), 0.0);
    const Vec couple = detail::concat(couple_top, detail::concat(zero_mid, couple_bot));

    const auto rhs_integrand = [&](double z) {
        const Vec eps = detail::poly_eval(test.eps_coeffs, z);
        const Vec v = detail::concat(eps, detail::concat(eps1, test.eta));
        return detail::quad_form(build_m(sys, cert, z), v) + 2.0 * dot(v, couple);
    };

    const double lhs = detail::simpson(lhs_integrand, quad_points);
    const double rhs = detail::simpson(rhs_integrand, quad_points);
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

/// Per-snapshot diagnostics CSV: `t,V,dist,envelope` where the envelope is
/// kappa * exp(-lambda_rate t) * dist(0).
inline void write_diagnostics_csv(const Trajectory& traj, const Certificate& cert,
                                  std::ostream& os) {
    detail::require(!traj.snapshots.empty(), "write_diagnostics_csv: empty trajectory");
    const DecayEstimate decay = decay_estimate(traj.system, cert);
    const double d0 = error_distance(traj.snapshots.front());
    os << "t,V,dist,envelope\n";
    for (const GridState& st : traj.snapshots) {
        const double v = lyapunov_v(cert, st);
        const double dist = error_distance(st);
        const double env = decay.kappa * std::exp(-decay.lambda_rate * st.t) * d0;
        os << detail::format_double(st.t) << ',' << detail::format_double(v) << ','
           << detail::format_double(dist) << ',' << detail::format_double(env) << '\n';
    }
}

}  // namespace hyperobs
