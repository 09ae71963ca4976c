// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Each criterion is self-contained and uses the public library API;
// criterion 3 additionally cross-checks against the independent inertia
// bisection solver in tests/support.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hyperobs/hyperobs.hpp"
#include "support/bisect_eig.hpp"

using namespace hyperobs;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    if (!ok) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double uniform_pm1(std::mt19937_64& rng) { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; }

char buf[256];

// ---------------------------------------------------------------------------
// 1. Published-certificate verification through the JSON loaders, < 1 s.
void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const PdeOdeSystem sys = load_system(save_system(paper_example_system()));
    const Certificate cert = load_certificate(save_certificate(paper_example_certificate()));
    const VerificationReport rep = verify(sys, cert);
    const double secs = seconds_since(t0);
    const bool ok = rep.feasible && rep.structural_ok && rep.boundary_margin > 1e-6 &&
                    rep.k_margin < -1e-6 && secs < 1.0;
    std::snprintf(buf, sizeof buf,
                  "feasible=%s boundary_margin=%.6f k_margin=%.6f in %.3f s (budget 1 s)",
                  rep.feasible ? "true" : "false", rep.boundary_margin, rep.k_margin, secs);
    report(1, "published certificate verifies", ok, buf);
}

// ---------------------------------------------------------------------------
// 2. Majorization: lambda_max(Q(z) - K) <= 1e-10 at 101 equispaced z.
void criterion2() {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const Mat k = build_k(sys, cert).full();
    double worst = -1e300;
    for (int i = 0; i <= 100; ++i) {
        const double z = static_cast<double>(i) / 100.0;
        const Mat diff = build_q(sys, cert, z).full() - k;
        worst = std::max(worst, lambda_max(SymMatrix(diff)));
    }
    const bool ok = worst <= 1e-10;
    std::snprintf(buf, sizeof buf, "max over 101 z of lambda_max(Q(z) - K) = %.3e (<= 1e-10)",
                  worst);
    report(2, "Q(z) is majorized by K", ok, buf);
}

// ---------------------------------------------------------------------------
// 3. Decay constants agree between the Jacobi solver and the independent
//    inertia-bisection solver to 1e-8 relative.
void criterion3() {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const DecayEstimate jac = decay_estimate(sys, cert);

    const double a1 = bisect_eig::min_eigenvalue(build_boundary_matrix(cert).full());
    const double a2 = bisect_eig::max_eigenvalue(build_g(cert, 0.0).full());
    const double a3 = std::abs(bisect_eig::max_eigenvalue(build_k(sys, cert).full()));
    const double kappa = std::sqrt(a2 / a1);
    const double rate = a3 / (2.0 * a2);

    const auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)});
    };
    const double worst = std::max({rel(a1, jac.alpha1), rel(a2, jac.alpha2), rel(a3, jac.alpha3),
                                   rel(kappa, jac.kappa), rel(rate, jac.lambda_rate)});
    const bool ok = worst <= 1e-8;
    std::snprintf(buf, sizeof buf,
                  "kappa=%.9f lambda=%.9e; worst relative gap Jacobi vs bisection = %.3e",
                  jac.kappa, jac.lambda_rate, worst);
    report(3, "decay constants cross-check", ok, buf);
}

// ---------------------------------------------------------------------------
// 4. Lyapunov decay reproduction: n_cells=200, cfl=0.9, t_end=10; V > 0,
//    fitted rate >= 2*lambda_rate*0.85, envelope with slack 0.1; < 10 s.
void criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const DecayEstimate dec = decay_estimate(sys, cert);

    SimConfig cfg;
    cfg.n_cells = 200;
    cfg.cfl = 0.9;
    cfg.t_end = 10.0;
    cfg.record_every = 20;
    const Trajectory traj =
        simulate(sys, cert.l_gain, make_initial(sys, cfg.n_cells, "paper-example"), cfg);

    bool positive = true;
    for (const GridState& st : traj.snapshots) {
        if (!(lyapunov_v(cert, st) > 0.0)) positive = false;
    }
    const DecayFit fit = decay_fit(traj, cert, 0.0, cfg.t_end);
    const EnvelopeReport env = ges_envelope_check(traj, dec, 0.1);
    const double secs = seconds_since(t0);

    const bool rate_ok = fit.rate >= 2.0 * dec.lambda_rate * (1.0 - 0.15);
    const bool ok = positive && rate_ok && env.ok && secs < 10.0;
    std::snprintf(buf, sizeof buf,
                  "V>0=%s fitted_rate=%.4f (guarantee %.3e) envelope_ok=%s worst_ratio=%.3f "
                  "in %.2f s (budget 10 s)",
                  positive ? "true" : "false", fit.rate, 2.0 * dec.lambda_rate,
                  env.ok ? "true" : "false", env.worst_ratio, secs);
    report(4, "Lyapunov decay reproduction", ok, buf);
}

// ---------------------------------------------------------------------------
// 5. Transport oracle equivalence: exactness at cfl = 1 over 500 steps and
//    first-order convergence at cfl = 0.5.
void criterion5() {
    PdeOdeSystem sys;
    sys.lambda = {1.0};
    sys.a_mat = Mat{{0.0}};
    sys.b_mat = Mat{{0.0}};
    sys.c_mat = Mat{{0.0}};
    sys.z_mat = Mat{{0.0}};
    sys.m_mat = Mat{{0.0}};
    sys.psi = Nonlinearity{NonlinKind::zero, 1.0};
    sys.ell = 1e-300;

    const auto profile = [](double z) {
        const double s = std::sin(2.0 * std::acos(-1.0) * z);
        return s * s;
    };
    const auto init_of = [&](int n) {
        Mat x0(1, n + 1);
        for (int j = 0; j <= n; ++j) x0(0, j) = profile(static_cast<double>(j) / n);
        return make_initial(sys, x0, Vec{0.0}, Mat(1, n + 1), Vec{0.0});
    };
    const auto zero_hist = [](double) { return Vec{0.0}; };
    const auto init_prof = [&](double z) { return Vec{profile(z)}; };

    // (a) cfl = 1: every recorded snapshot matches the oracle to 1e-12.
    double worst_exact = 0.0;
    {
        const int n = 128;
        SimConfig cfg;
        cfg.n_cells = n;
        cfg.cfl = 1.0;
        cfg.t_end = 500.0 / n;  // exactly 500 unit-CFL steps
        cfg.record_every = 50;
        const Trajectory traj = simulate(sys, Mat(1, 1), init_of(n), cfg);
        for (const GridState& st : traj.snapshots) {
            for (int j = 0; j <= n; ++j) {
                const double z = static_cast<double>(j) / n;
                const double exact =
                    characteristics_oracle(sys, zero_hist, init_prof, st.t, z)[0];
                worst_exact = std::max(worst_exact, std::abs(st.x(0, j) - exact));
            }
        }
    }

    // (b) cfl = 0.5: halving dz cuts the L2 error by a first-order factor.
    const auto l2_err = [&](int n) {
        SimConfig cfg;
        cfg.n_cells = n;
        cfg.cfl = 0.5;
        cfg.t_end = 0.5;
        cfg.record_every = 1 << 30;
        const Trajectory traj = simulate(sys, Mat(1, 1), init_of(n), cfg);
        const GridState& fin = traj.snapshots.back();
        double acc = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double z = static_cast<double>(j) / n;
            const double d =
                fin.x(0, j) - characteristics_oracle(sys, zero_hist, init_prof, 0.5, z)[0];
            acc += d * d;
        }
        return std::sqrt(acc / (n + 1));
    };
    const double ratio = l2_err(100) / l2_err(200);

    const bool ok = worst_exact <= 1e-12 && ratio >= 1.6 && ratio <= 2.4;
    std::snprintf(buf, sizeof buf,
                  "cfl=1 max-norm vs oracle over 500 steps = %.3e (<= 1e-12); "
                  "halving-dz error ratio = %.4f (in [1.6, 2.4])",
                  worst_exact, ratio);
    report(5, "transport oracle equivalence", ok, buf);
}

// ---------------------------------------------------------------------------
// 6. Identity suite: 100 random cubic test states, 256 quadrature points,
//    discrepancy <= 1e-8.
void criterion6() {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    std::mt19937_64 rng(20260815);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        PolyTestState ts;
        ts.eta = {uniform_pm1(rng), uniform_pm1(rng)};
        ts.rho_tilde = {uniform_pm1(rng)};
        ts.eps_coeffs = Mat(2, 4);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t k = 1; k < 4; ++k) ts.eps_coeffs(i, k) = uniform_pm1(rng);
        const Vec eps0 = sys.c_mat * ts.eta;
        ts.eps_coeffs(0, 0) = eps0[0];
        ts.eps_coeffs(1, 0) = eps0[1];
        worst = std::max(worst, identity_check(sys, cert, ts, 256));
    }
    const bool ok = worst <= 1e-8;
    std::snprintf(buf, sizeof buf, "worst relative discrepancy over 100 cubics = %.3e (<= 1e-8)",
                  worst);
    report(6, "inner-product identity suite", ok, buf);
}

// ---------------------------------------------------------------------------
// 7. Lipschitz / increment-bound property suite: 1e4 samples per kind, zero
//    violations.
void criterion7() {
    std::mt19937_64 rng(777);
    const auto sample = [&](double range) { return range * uniform_pm1(rng); };

    std::size_t lip_violations = 0;
    std::size_t rho_violations = 0;
    for (const NonlinKind kind :
         {NonlinKind::deadzone, NonlinKind::saturation, NonlinKind::zero,
          NonlinKind::componentwise_sine}) {
        const Nonlinearity psi{kind, 0.5 + 2.0 * ((rng() >> 11) * 0x1.0p-53)};
        const double k_psi = lipschitz_constant(psi.kind);

        PdeOdeSystem sys = paper_example_system();
        sys.psi = psi;
        sys.ell = std::max(k_psi, 1e-6);

        for (int trial = 0; trial < 10000; ++trial) {
            Vec u(3), v(3);
            for (int i = 0; i < 3; ++i) {
                u[i] = sample(10.0);
                v[i] = sample(10.0);
            }
            const Vec du = eval_psi(psi, u) - eval_psi(psi, v);
            const Vec dv = u - v;
            if (std::sqrt(dot(du, du)) >
                k_psi * std::sqrt(dot(dv, dv)) * (1.0 + 1e-12) + 1e-15) {
                ++lip_violations;
            }

            const Vec chi = {sample(10.0), sample(10.0)};
            const Vec eta = {sample(10.0), sample(10.0)};
            if (!rho_bound_holds(sys, chi, eta)) ++rho_violations;
        }
    }
    const bool ok = lip_violations == 0 && rho_violations == 0;
    std::snprintf(buf, sizeof buf,
                  "4 kinds x 10000 samples: %zu Lipschitz violations, %zu increment-bound "
                  "violations",
                  lip_violations, rho_violations);
    report(7, "nonlinearity property suite", ok, buf);
}

// ---------------------------------------------------------------------------
// 8. Synthesis: default config on the worked example succeeds inside 60 s and
//    the result passes criterion-1-style verification; the infeasible scalar
//    reports not-found.
void criterion8() {
    const auto t0 = std::chrono::steady_clock::now();
    const PdeOdeSystem sys = paper_example_system();
    SynthConfig cfg;  // defaults: 5 restarts per grid point
    const SynthResult res = synthesize(sys, cfg);
    const double secs = seconds_since(t0);

    bool found_ok = false;
    double bm = 0.0;
    double km = 0.0;
    if (res.certificate) {
        const VerificationReport rep = verify(sys, *res.certificate);
        bm = rep.boundary_margin;
        km = rep.k_margin;
        found_ok = rep.feasible && rep.boundary_margin > 1e-6 && rep.k_margin < -1e-6;
    }

    PdeOdeSystem scalar;
    scalar.lambda = {1.0};
    scalar.a_mat = Mat{{1.0}};
    scalar.b_mat = Mat{{0.0}};
    scalar.c_mat = Mat{{0.0}};
    scalar.z_mat = Mat{{0.0}};
    scalar.m_mat = Mat{{0.0}};
    scalar.psi = Nonlinearity{NonlinKind::zero, 1.0};
    scalar.ell = 1e-6;
    SynthConfig scfg;
    scfg.mu_grid = {0.2, 0.6, 1.0};
    scfg.restarts = 2;
    const SynthResult sres = synthesize(scalar, scfg);
    const bool scalar_ok = !sres.certificate.has_value();

    const bool ok = found_ok && secs < 60.0 && scalar_ok;
    std::snprintf(buf, sizeof buf,
                  "designed certificate: feasible=%s (boundary %.4f, K %.2e) in %.2f s "
                  "(budget 60 s); infeasible scalar -> not found: %s",
                  found_ok ? "true" : "false", bm, km, secs, scalar_ok ? "true" : "false");
    report(8, "gain synthesis", ok, buf);
}

// ---------------------------------------------------------------------------
// 9. Sandwich property on 1000 random grid states.
void criterion9() {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const DecayEstimate dec = decay_estimate(sys, cert);
    std::mt19937_64 rng(909);

    std::size_t violations = 0;
    double worst_lo = 1e300;
    double worst_hi = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 8 + static_cast<int>(rng() % 64);
        GridState st;
        st.x = Mat(2, n + 1);
        st.xhat = Mat(2, n + 1);
        for (std::size_t i = 0; i < 2; ++i)
            for (int j = 0; j <= n; ++j) st.x(i, j) = uniform_pm1(rng);
        st.chi = {uniform_pm1(rng), uniform_pm1(rng)};
        st.chihat = {0.0, 0.0};

        const double v = lyapunov_v(cert, st);
        const double d2 = error_distance(st) * error_distance(st);
        if (v < dec.alpha1 * d2 * (1.0 - 1e-6) || v > dec.alpha2 * d2 * (1.0 + 1e-6)) {
            ++violations;
        }
        worst_lo = std::min(worst_lo, v / (dec.alpha1 * d2));
        worst_hi = std::max(worst_hi, v / (dec.alpha2 * d2));
    }
    const bool ok = violations == 0;
    std::snprintf(buf, sizeof buf,
                  "1000 states: 0 required, %zu violations; V/(a1 d^2) >= %.3f, "
                  "V/(a2 d^2) <= %.3f",
                  violations, worst_lo, worst_hi);
    report(9, "sandwich bounds", ok, buf);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (failures == 0) {
        std::printf("all 9 acceptance criteria passed\n");
    } else {
        std::printf("%d acceptance criteria FAILED\n", failures);
    }
    return failures;
}
