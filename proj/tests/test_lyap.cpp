#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "hyperobs/lyap.hpp"
#include "hyperobs/paper_example.hpp"

using namespace hyperobs;

namespace {

double uniform_pm1(std::mt19937_64& rng) { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; }

// Random grid-error state on the worked example's dimensions.
GridState random_error_state(std::mt19937_64& rng, int n) {
    GridState st;
    st.x = Mat(2, n + 1);
    st.xhat = Mat(2, n + 1);
    for (std::size_t i = 0; i < 2; ++i)
        for (int j = 0; j <= n; ++j) st.x(i, j) = uniform_pm1(rng);
    st.chi = {uniform_pm1(rng), uniform_pm1(rng)};
    st.chihat = {0.0, 0.0};
    return st;
}

// Random cubic test polynomial satisfying the domain condition eps(0) = C eta.
PolyTestState random_cubic(const PdeOdeSystem& sys, std::mt19937_64& rng) {
    PolyTestState ts;
    ts.eta = Vec(sys.n_chi());
    for (double& v : ts.eta) v = uniform_pm1(rng);
    ts.rho_tilde = Vec(sys.n_l());
    for (double& v : ts.rho_tilde) v = uniform_pm1(rng);
    ts.eps_coeffs = Mat(sys.n_x(), 4);
    for (std::size_t i = 0; i < sys.n_x(); ++i)
        for (std::size_t k = 1; k < 4; ++k) ts.eps_coeffs(i, k) = uniform_pm1(rng);
    const Vec eps0 = sys.c_mat * ts.eta;
    for (std::size_t i = 0; i < sys.n_x(); ++i) ts.eps_coeffs(i, 0) = eps0[i];
    return ts;
}

// Synthetic trajectory whose error scales as amp * exp(-rate/2 * t), so that
// V(t) = amp^2 exp(-rate t) * V(base).
Trajectory synthetic_decay(const Certificate& cert, double rate, double v_target_at_0) {
    GridState base;
    const int n = 16;
    base.x = Mat(2, n + 1);
    base.xhat = Mat(2, n + 1);
    for (int j = 0; j <= n; ++j) {
        const double z = static_cast<double>(j) / n;
        base.x(0, j) = 1.0 + z;
        base.x(1, j) = 0.5 - z * z;
    }
    base.chi = {0.3, -0.7};
    base.chihat = {0.0, 0.0};
    const double v0 = lyapunov_v(cert, base);
    const double norm = std::sqrt(v_target_at_0 / v0);

    Trajectory traj;
    traj.config.n_cells = n;
    for (int k = 0; k <= 6; ++k) {
        const double t = 0.5 * k;
        const double s = norm * std::exp(-0.5 * rate * t);
        GridState st = base;
        st.t = t;
        for (std::size_t i = 0; i < 2; ++i)
            for (int j = 0; j <= n; ++j) st.x(i, j) *= s;
        st.chi[0] *= s;
        st.chi[1] *= s;
        traj.snapshots.push_back(st);
    }
    return traj;
}

}  // namespace

TEST_CASE("lyapunov functional on simple states") {
    const Certificate cert = paper_example_certificate();
    const int n = 16;

    SECTION("zero error gives zero") {
        CHECK(lyapunov_v(cert, Mat(2, n + 1), Vec{0.0, 0.0}) == 0.0);
    }

    SECTION("constant-in-z integrand from eta alone equals eta' P3 eta") {
        const Vec eta = {1.5, -0.25};
        const double want =
            dot(eta, cert.p3 * eta);  // trapezoid of a constant is exact
        CHECK_THAT(lyapunov_v(cert, Mat(2, n + 1), eta), Catch::Matchers::WithinRel(want, 1e-13));
    }

    SECTION("tiny mu limit with constant eps recovers e' P1 e") {
        Certificate flat = cert;
        flat.mu = 1e-12;
        Mat eps(2, n + 1);
        for (int j = 0; j <= n; ++j) {
            eps(0, j) = 2.0;
            eps(1, j) = -1.0;
        }
        const double want = 4.0 * flat.p1[0] + 1.0 * flat.p1[1];
        CHECK_THAT(lyapunov_v(flat, eps, Vec{0.0, 0.0}), Catch::Matchers::WithinRel(want, 1e-9));
    }

    SECTION("quadratic scaling") {
        std::mt19937_64 rng(42);
        const GridState st = random_error_state(rng, n);
        const double v1 = lyapunov_v(cert, st);

        GridState doubled = st;
        for (std::size_t i = 0; i < 2; ++i)
            for (int j = 0; j <= n; ++j) doubled.x(i, j) *= 2.0;
        doubled.chi[0] *= 2.0;
        doubled.chi[1] *= 2.0;
        CHECK(lyapunov_v(cert, doubled) == 4.0 * v1);  // powers of two scale exactly

        GridState tripled = st;
        for (std::size_t i = 0; i < 2; ++i)
            for (int j = 0; j <= n; ++j) tripled.x(i, j) *= 3.0;
        tripled.chi[0] *= 3.0;
        tripled.chi[1] *= 3.0;
        CHECK_THAT(lyapunov_v(cert, tripled), Catch::Matchers::WithinRel(9.0 * v1, 1e-13));
    }

    SECTION("dimension mismatches") {
        CHECK_THROWS_AS(lyapunov_v(cert, Mat(3, n + 1), Vec{0.0, 0.0}), std::invalid_argument);
        CHECK_THROWS_AS(lyapunov_v(cert, Mat(2, n + 1), Vec{0.0}), std::invalid_argument);
        CHECK_THROWS_AS(lyapunov_v(cert, Mat(2, 1), Vec{0.0, 0.0}), std::invalid_argument);
    }
}

TEST_CASE("error distance on simple states") {
    const int n = 16;
    GridState st;
    st.x = Mat(2, n + 1);
    st.xhat = Mat(2, n + 1);
    st.chi = {0.0, 0.0};
    st.chihat = {0.0, 0.0};

    SECTION("matched states have zero distance") { CHECK(error_distance(st) == 0.0); }

    SECTION("pure boundary error is the Euclidean norm") {
        st.chi = {3.0, -4.0};
        CHECK(error_distance(st) == 5.0);
    }

    SECTION("constant unit field has unit L2 norm") {
        for (int j = 0; j <= n; ++j) st.x(0, j) = 1.0;
        CHECK(error_distance(st) == 1.0);
    }

    SECTION("shape mismatch") {
        GridState bad = st;
        bad.xhat = Mat(2, n);
        CHECK_THROWS_AS(error_distance(bad), std::invalid_argument);
    }
}

TEST_CASE("state overload of the functional matches the explicit difference") {
    const Certificate cert = paper_example_certificate();
    std::mt19937_64 rng(5);
    GridState st = random_error_state(rng, 24);
    for (std::size_t i = 0; i < 2; ++i)
        for (int j = 0; j <= 24; ++j) st.xhat(i, j) = uniform_pm1(rng);
    st.chihat = {uniform_pm1(rng), uniform_pm1(rng)};
    CHECK(lyapunov_v(cert, st) == lyapunov_v(cert, st.x - st.xhat, st.chi - st.chihat));
}

TEST_CASE("sandwich bounds hold for random states") {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const DecayEstimate dec = decay_estimate(sys, cert);
    std::mt19937_64 rng(2026);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 16 + static_cast<int>(rng() % 48);
        const GridState st = random_error_state(rng, n);
        const double v = lyapunov_v(cert, st);
        const double d2 = error_distance(st) * error_distance(st);
        REQUIRE(v >= dec.alpha1 * d2 * (1.0 - 1e-6));
        REQUIRE(v <= dec.alpha2 * d2 * (1.0 + 1e-6));
    }
}

TEST_CASE("decay fit recovers synthetic exponentials") {
    const Certificate cert = paper_example_certificate();

    SECTION("V = exp(-2t)") {
        const Trajectory traj = synthetic_decay(cert, 2.0, 1.0);
        const DecayFit fit = decay_fit(traj, cert, 0.0, 3.0);
        CHECK_THAT(fit.rate, Catch::Matchers::WithinAbs(2.0, 1e-9));
        CHECK_THAT(fit.intercept, Catch::Matchers::WithinAbs(0.0, 1e-9));
        CHECK(fit.rms_residual <= 1e-9);
        CHECK(fit.window_lo == 0.0);
        CHECK(fit.window_hi == 3.0);
    }

    SECTION("V = 5 exp(-t/2)") {
        const Trajectory traj = synthetic_decay(cert, 0.5, 5.0);
        const DecayFit fit = decay_fit(traj, cert, 0.0, 3.0);
        CHECK_THAT(fit.rate, Catch::Matchers::WithinAbs(0.5, 1e-9));
        CHECK_THAT(fit.intercept, Catch::Matchers::WithinAbs(std::log(5.0), 1e-9));
    }

    SECTION("window must hold at least five samples") {
        const Trajectory traj = synthetic_decay(cert, 2.0, 1.0);
        CHECK_THROWS_AS(decay_fit(traj, cert, 0.0, 1.2), std::invalid_argument);
    }

    SECTION("window must lie inside the trajectory span") {
        const Trajectory traj = synthetic_decay(cert, 2.0, 1.0);
        CHECK_THROWS_AS(decay_fit(traj, cert, 0.0, 4.0), std::invalid_argument);
        CHECK_THROWS_AS(decay_fit(traj, cert, 2.0, 2.0), std::invalid_argument);
    }

    SECTION("nonpositive V is rejected") {
        Trajectory traj = synthetic_decay(cert, 2.0, 1.0);
        for (GridState& st : traj.snapshots) {
            st.xhat = st.x;  // zero error everywhere -> V = 0
            st.chihat = st.chi;
        }
        CHECK_THROWS_AS(decay_fit(traj, cert, 0.0, 3.0), std::runtime_error);
    }
}

TEST_CASE("worked example trajectory decays at least at the guaranteed rate") {
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

    // Initial values of the functional and the distance on this profile.
    CHECK_THAT(lyapunov_v(cert, traj.snapshots.front()),
               Catch::Matchers::WithinRel(56.204013, 1e-5));
    CHECK_THAT(error_distance(traj.snapshots.front()),
               Catch::Matchers::WithinRel(std::sqrt(7.5), 1e-6));

    SECTION("V stays positive and nonincreasing between snapshots") {
        double prev = -1.0;
        for (const GridState& st : traj.snapshots) {
            const double v = lyapunov_v(cert, st);
            REQUIRE(v > 0.0);
            if (prev >= 0.0) REQUIRE(v <= prev * (1.0 + 1e-6));
            prev = v;
        }
    }

    SECTION("fitted rate clears the certificate guarantee") {
        const DecayFit fit = decay_fit(traj, cert, 0.0, 10.0);
        CHECK(fit.rate >= 2.0 * dec.lambda_rate - 1e-3);
        CHECK_THAT(fit.rate, Catch::Matchers::WithinAbs(3.0801, 0.05));
    }

    SECTION("guaranteed envelope holds with ten percent slack") {
        const EnvelopeReport rep = ges_envelope_check(traj, dec, 0.1);
        CHECK(rep.ok);
        CHECK(rep.worst_excess < 0.0);
        CHECK_THAT(rep.worst_ratio, Catch::Matchers::WithinAbs(0.199, 0.02));
        CHECK(rep.slack == 0.1);
    }
}

TEST_CASE("envelope check edge cases") {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const DecayEstimate dec = decay_estimate(sys, cert);

    SECTION("zero initial error is trivially inside the envelope") {
        SimConfig cfg;
        cfg.n_cells = 16;
        cfg.cfl = 0.9;
        cfg.t_end = 0.5;
        GridState init = make_initial(sys, cfg.n_cells, "paper-example");
        init.xhat = init.x;
        init.chihat = init.chi;
        const Trajectory traj = simulate(sys, cert.l_gain, init, cfg);
        const EnvelopeReport rep = ges_envelope_check(traj, dec, 0.1);
        CHECK(rep.ok);
        CHECK(rep.worst_excess == 0.0);
        CHECK(rep.worst_ratio == 0.0);
    }

    SECTION("negative slack is rejected") {
        const Trajectory traj =
            simulate(sys, cert.l_gain, make_initial(sys, 16, "paper-example"),
                     SimConfig{16, 0.9, 0.0, Scheme::upwind, 1});
        CHECK_THROWS_AS(ges_envelope_check(traj, dec, -0.1), std::invalid_argument);
    }
}

TEST_CASE("zero gain on the unstable plant eventually violates the envelope") {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const DecayEstimate dec = decay_estimate(sys, cert);

    SimConfig cfg;
    cfg.n_cells = 64;
    cfg.cfl = 0.9;
    cfg.t_end = 300.0;
    cfg.record_every = 2000;
    const Trajectory traj =
        simulate(sys, Mat(2, 1), make_initial(sys, cfg.n_cells, "paper-example"), cfg);
    const EnvelopeReport rep = ges_envelope_check(traj, dec, 0.1);
    CHECK_FALSE(rep.ok);
    CHECK(rep.worst_excess > 1.0);
    CHECK(error_distance(traj.snapshots.back()) > 100.0);
}

TEST_CASE("inner-product identity holds on polynomial test states") {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    std::mt19937_64 rng(314);

    SECTION("constant eps = C eta needs no derivative terms") {
        PolyTestState ts;
        ts.eta = {0.7, -1.3};
        const Vec eps0 = sys.c_mat * ts.eta;
        ts.eps_coeffs = Mat(2, 1);
        ts.eps_coeffs(0, 0) = eps0[0];
        ts.eps_coeffs(1, 0) = eps0[1];
        ts.rho_tilde = {0.4};
        CHECK(identity_check(sys, cert, ts, 64) <= 1e-10);
    }

    SECTION("random cubics at 256 points") {
        for (int trial = 0; trial < 25; ++trial) {
            const PolyTestState ts = random_cubic(sys, rng);
            REQUIRE(identity_check(sys, cert, ts, 256) <= 1e-8);
        }
    }

    SECTION("rho = 0 disables the coupling column") {
        PolyTestState ts = random_cubic(sys, rng);
        ts.rho_tilde = {0.0};
        CHECK(identity_check(sys, cert, ts, 256) <= 1e-8);
    }

    SECTION("discrepancy decays at better than second order under refinement") {
        const PolyTestState ts = random_cubic(sys, rng);
        const double d64 = identity_check(sys, cert, ts, 64);
        const double d128 = identity_check(sys, cert, ts, 128);
        INFO("64 panels: " << d64 << ", 128 panels: " << d128);
        CHECK(d64 / d128 >= 4.0);
    }

    SECTION("domain condition violations are rejected") {
        PolyTestState ts = random_cubic(sys, rng);
        ts.eps_coeffs(0, 0) += 1e-6;
        CHECK_THROWS_AS(identity_check(sys, cert, ts, 64), std::invalid_argument);
    }

    SECTION("coarse quadrature and shape errors are rejected") {
        const PolyTestState ts = random_cubic(sys, rng);
        CHECK_THROWS_AS(identity_check(sys, cert, ts, 32), std::invalid_argument);
        PolyTestState bad = ts;
        bad.rho_tilde = {0.0, 0.0};
        CHECK_THROWS_AS(identity_check(sys, cert, bad, 64), std::invalid_argument);
        bad = ts;
        bad.eta = {1.0};
        CHECK_THROWS_AS(identity_check(sys, cert, bad, 64), std::invalid_argument);
    }
}

TEST_CASE("diagnostics CSV lists V, distance, and the guaranteed envelope") {
    const PdeOdeSystem sys = paper_example_system();
    const Certificate cert = paper_example_certificate();
    const DecayEstimate dec = decay_estimate(sys, cert);

    SimConfig cfg;
    cfg.n_cells = 32;
    cfg.cfl = 0.9;
    cfg.t_end = 0.5;
    cfg.record_every = 5;
    const Trajectory traj =
        simulate(sys, cert.l_gain, make_initial(sys, cfg.n_cells, "paper-example"), cfg);

    std::ostringstream os;
    write_diagnostics_csv(traj, cert, os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "t,V,dist,envelope");

    std::size_t rows = 0;
    bool first = true;
    while (std::getline(is, line)) {
        ++rows;
        std::istringstream fields(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(fields, cell, ',')) vals.push_back(std::stod(cell));
        REQUIRE(vals.size() == 4);
        if (first) {
            first = false;
            CHECK(vals[0] == 0.0);
            CHECK_THAT(vals[1], Catch::Matchers::WithinRel(lyapunov_v(cert, traj.snapshots[0]),
                                                           1e-15));
            CHECK_THAT(vals[3],
                       Catch::Matchers::WithinRel(
                           dec.kappa * error_distance(traj.snapshots[0]), 1e-12));
        }
        // The envelope column never includes slack.
        CHECK(vals[3] <= dec.kappa * error_distance(traj.snapshots[0]) + 1e-12);
    }
    CHECK(rows == traj.snapshots.size());
}
