#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperobs/io.hpp"
#include "hyperobs/log.hpp"
#include "hyperobs/matrix.hpp"
#include "hyperobs/nonlinearity.hpp"
#include "hyperobs/system.hpp"

/// Finite-volume simulation of the plant/observer interconnection on the unit
/// interval, plus an exact method-of-characteristics oracle for testing.
namespace hyperobs {

enum class Scheme { upwind, two_step_lxf };

inline std::string to_string(Scheme s) {
    return s == Scheme::upwind ? "upwind" : "two-step-lxf";
}

inline Scheme scheme_from_string(const std::string& name) {
    if (name == "upwind") return Scheme::upwind;
    if (name == "two-step-lxf") return Scheme::two_step_lxf;
    throw std::invalid_argument("unknown scheme \"" + name + "\" (expected upwind or two-step-lxf)");
}

/// Discretization parameters. The grid has n_cells + 1 nodes z_j = j/n_cells;
/// the time step is cfl * dz / max_i lambda_i.
struct SimConfig {
    int n_cells = 128;
    double cfl = 0.9;
    double t_end = 1.0;
    Scheme scheme = Scheme::upwind;
    int record_every = 1;
};

inline void validate(const SimConfig& cfg) {
    if (cfg.n_cells < 8) throw std::invalid_argument("sim config: n_cells must be >= 8");
    if (!(cfg.cfl > 0.0) || cfg.cfl > 1.0)
        throw std::invalid_argument("sim config: cfl must lie in (0, 1]");
    if (!(cfg.t_end >= 0.0)) throw std::invalid_argument("sim config: t_end must be nonnegative");
    if (cfg.record_every < 1) throw std::invalid_argument("sim config: record_every must be >= 1");
}

/// Full simulation state at one instant: distributed fields sampled on the
/// grid (one row per component) and the lumped boundary states.
struct GridState {
    double t = 0.0;
    Mat x;       ///< n_x rows, n_cells + 1 columns
    Mat xhat;    ///< same shape
    Vec chi;     ///< n_chi
    Vec chihat;  ///< n_chi
};

/// Time-ordered snapshots with the configuration and system they came from.
struct Trajectory {
    SimConfig config;
    PdeOdeSystem system;
    std::vector<GridState> snapshots;
};

namespace detail {

inline void require_state_shapes(const PdeOdeSystem& sys, const GridState& st) {
    require(st.x.rows() == sys.n_x() && st.xhat.rows() == sys.n_x(),
            "grid state: field rows must equal n_x");
    require(st.x.cols() == st.xhat.cols() && st.x.cols() >= 2,
            "grid state: fields must share a grid of at least two nodes");
    require(st.chi.size() == sys.n_chi() && st.chihat.size() == sys.n_chi(),
            "grid state: chi and chihat must have dimension n_chi");
}

/// Overwrites node 0 with the boundary condition; reports whether any sample
/// had to move by more than a rounding tolerance.
inline bool enforce_boundary(const PdeOdeSystem& sys, GridState& st) {
    const Vec want = sys.c_mat * st.chi;
    const Vec want_hat = sys.c_mat * st.chihat;
    double worst = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < sys.n_x(); ++i) {
        worst = std::max({worst, std::abs(st.x(i, 0) - want[i]),
                          std::abs(st.xhat(i, 0) - want_hat[i])});
        scale = std::max({scale, std::abs(want[i]), std::abs(want_hat[i])});
    }
    for (std::size_t i = 0; i < sys.n_x(); ++i) {
        st.x(i, 0) = want[i];
        st.xhat(i, 0) = want_hat[i];
    }
    return worst > 1e-12 * scale;
}

/// One explicit transport step of d/dt u + lambda_i d/dz u = 0 per row.
/// ratio = dt/dz. Node 0 is left for the boundary overwrite.
inline void transport_step(Mat& u, const Vec& lambda, double ratio, Scheme scheme) {
    const std::size_t rows = u.rows();
    const std::size_t last = u.cols() - 1;
    for (std::size_t i = 0; i < rows; ++i) {
        const double c = ratio * lambda[i];
        if (scheme == Scheme::upwind) {
            // Descending sweep keeps u(i, j-1) at the old time level.
            for (std::size_t j = last; j >= 1; --j) u(i, j) -= c * (u(i, j) - u(i, j - 1));
        } else {
            // Two-step variant: half-step midpoint states between nodes, then
            // a conservative update; the outflow node falls back to upwind on
            // the old values (all speeds positive, no right boundary data).
            Vec half(last);
            for (std::size_t j = 0; j < last; ++j) {
                half[j] = 0.5 * (u(i, j) + u(i, j + 1)) - 0.5 * c * (u(i, j + 1) - u(i, j));
            }
            const double old_last = u(i, last);
            const double old_prev = u(i, last - 1);
            for (std::size_t j = 1; j < last; ++j) u(i, j) -= c * (half[j] - half[j - 1]);
            u(i, last) = old_last - c * (old_last - old_prev);
        }
    }
}

/// Classical RK4 for chi' = A chi + B Psi(Z chi) + forcing with the forcing
/// held constant over the step.
inline Vec rk4_ode(const PdeOdeSystem& sys, const Vec& chi, const Vec& forcing, double dt) {
    const auto f = [&](const Vec& c) {
        return sys.a_mat * c + sys.b_mat * eval_psi(sys.psi, sys.z_mat * c) + forcing;
    };
    const Vec k1 = f(chi);
    const Vec k2 = f(chi + (dt / 2.0) * k1);
    const Vec k3 = f(chi + (dt / 2.0) * k2);
    const Vec k4 = f(chi + dt * k3);
    return chi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One coupled step of length dt: boundary outputs are read from the current
/// grid, both ODEs advance with those outputs frozen, both fields advance
/// with the selected scheme, and node 0 is rewritten from the new lumped
/// states (Lie splitting).
inline void advance(const PdeOdeSystem& sys, const Mat& l_gain, GridState& st, double dt,
                    double dz, Scheme scheme) {
    const std::size_t last = st.x.cols() - 1;
    const Vec y = sys.m_mat * column(st.x, last);
    const Vec yhat = sys.m_mat * column(st.xhat, last);

    const Vec zero_force(sys.n_chi(), 0.0);
    const Vec injection = l_gain * (y - yhat);
    const Vec chi_new = rk4_ode(sys, st.chi, zero_force, dt);
    const Vec chihat_new = rk4_ode(sys, st.chihat, injection, dt);

    transport_step(st.x, sys.lambda, dt / dz, scheme);
    transport_step(st.xhat, sys.lambda, dt / dz, scheme);

    st.chi = chi_new;
    st.chihat = chihat_new;
    const Vec bx = sys.c_mat * chi_new;
    const Vec bxhat = sys.c_mat * chihat_new;
    for (std::size_t i = 0; i < sys.n_x(); ++i) {
        st.x(i, 0) = bx[i];
        st.xhat(i, 0) = bxhat[i];
    }
}

}  // namespace detail

/// Builds the named built-in initial state on an n_cells grid. The only
/// profile is "paper-example": x1 = cos(2 pi z), x2 = -2 cos(4 pi z),
/// chi = (1, -2), observer at rest.
inline GridState make_initial(const PdeOdeSystem& sys, int n_cells, const std::string& profile) {
    validate(sys);
    detail::require(n_cells >= 1, "make_initial: n_cells must be positive");
    if (profile != "paper-example") {
        throw std::invalid_argument("make_initial: unknown profile \"" + profile + "\"");
    }
    detail::require(sys.n_x() == 2 && sys.n_chi() == 2,
                    "make_initial: the paper-example profile needs n_x = 2 and n_chi = 2");
    GridState st;
    st.t = 0.0;
    const std::size_t cols = static_cast<std::size_t>(n_cells) + 1;
    st.x = Mat(2, cols);
    st.xhat = Mat(2, cols);
    const double pi = std::acos(-1.0);
    for (std::size_t j = 0; j < cols; ++j) {
        const double z = static_cast<double>(j) / n_cells;
        st.x(0, j) = std::cos(2.0 * pi * z);
        st.x(1, j) = -2.0 * std::cos(4.0 * pi * z);
    }
    st.chi = {1.0, -2.0};
    st.chihat = {0.0, 0.0};
    if (detail::enforce_boundary(sys, st)) {
        log_info("make_initial: node 0 repaired to satisfy the boundary condition");
    }
    return st;
}

/// Builds an initial state from explicit samples. Node 0 of each field is
/// overwritten with the boundary condition if the supplied samples violate
/// it; the repair is logged.
inline GridState make_initial(const PdeOdeSystem& sys, const Mat& x, const Vec& chi,
                              const Mat& xhat, const Vec& chihat) {
    validate(sys);
    GridState st;
    st.t = 0.0;
    st.x = x;
    st.xhat = xhat;
    st.chi = chi;
    st.chihat = chihat;
    detail::require(x.rows() == sys.n_x() && xhat.rows() == sys.n_x() &&
                        x.cols() == xhat.cols() && x.cols() >= 2,
                    "make_initial: sample shapes must be n_x rows over a shared grid");
    detail::require(chi.size() == sys.n_chi() && chihat.size() == sys.n_chi(),
                    "make_initial: chi and chihat must have dimension n_chi");
    if (detail::enforce_boundary(sys, st)) {
        log_info("make_initial: node 0 repaired to satisfy the boundary condition");
    }
    return st;
}

/// One time step of length cfl * dz / max lambda.
inline GridState step(const PdeOdeSystem& sys, const Mat& l_gain, const GridState& state,
                      const SimConfig& cfg) {
    validate(sys);
    validate(cfg);
    detail::require_state_shapes(sys, state);
    detail::require(state.x.cols() == static_cast<std::size_t>(cfg.n_cells) + 1,
                    "step: state grid does not match n_cells");
    detail::require(l_gain.rows() == sys.n_chi() && l_gain.cols() == sys.n_y(),
                    "step: gain must be n_chi x n_y");
    double max_lambda = 0.0;
    for (double l : sys.lambda) max_lambda = std::max(max_lambda, l);
    const double dz = 1.0 / cfg.n_cells;
    const double dt = cfg.cfl * dz / max_lambda;
    GridState next = state;
    detail::advance(sys, l_gain, next, dt, dz, cfg.scheme);
    next.t = state.t + dt;
    return next;
}

/// Advances from the initial state to t_end, recording every record_every-th
/// step plus the final state; the last step is shortened to land on t_end
/// exactly.
inline Trajectory simulate(const PdeOdeSystem& sys, const Mat& l_gain, const GridState& init,
                           const SimConfig& cfg) {
    validate(sys);
    validate(cfg);
    detail::require_state_shapes(sys, init);
    detail::require(init.x.cols() == static_cast<std::size_t>(cfg.n_cells) + 1,
                    "simulate: initial state grid does not match n_cells");
    detail::require(l_gain.rows() == sys.n_chi() && l_gain.cols() == sys.n_y(),
                    "simulate: gain must be n_chi x n_y");
    detail::require(init.t == 0.0, "simulate: initial state must start at t = 0");
    {
        // The boundary condition must hold on entry (make_initial enforces it).
        const Vec want = sys.c_mat * init.chi;
        const Vec want_hat = sys.c_mat * init.chihat;
        for (std::size_t i = 0; i < sys.n_x(); ++i) {
            const double scale = std::max({1.0, std::abs(want[i]), std::abs(want_hat[i])});
            detail::require(std::abs(init.x(i, 0) - want[i]) <= 1e-9 * scale &&
                                std::abs(init.xhat(i, 0) - want_hat[i]) <= 1e-9 * scale,
                            "simulate: initial state violates the boundary condition; "
                            "build it with make_initial");
        }
    }

    Trajectory traj;
    traj.config = cfg;
    traj.system = sys;
    traj.snapshots.push_back(init);
    if (cfg.t_end == 0.0) return traj;

    double max_lambda = 0.0;
    for (double l : sys.lambda) max_lambda = std::max(max_lambda, l);
    const double dz = 1.0 / cfg.n_cells;
    const double dt = cfg.cfl * dz / max_lambda;

    GridState state = init;
    long step_index = 0;
    double t_done = 0.0;
    for (;;) {
        ++step_index;
        const double t_next = static_cast<double>(step_index) * dt;
        if (t_next >= cfg.t_end * (1.0 - 1e-15)) {
            // Final (possibly shortened) step lands exactly on t_end.
            detail::advance(sys, l_gain, state, cfg.t_end - t_done, dz, cfg.scheme);
            state.t = cfg.t_end;
            traj.snapshots.push_back(state);
            break;
        }
        detail::advance(sys, l_gain, state, dt, dz, cfg.scheme);
        state.t = t_next;
        t_done = t_next;
        if (step_index % cfg.record_every == 0) traj.snapshots.push_back(state);
    }
    return traj;
}

/// Exact solution of the pure transport part by tracing characteristics:
/// component i at (t, z) is the initial profile at z - lambda_i t when that
/// point lies in [0, 1], and otherwise the boundary value at the emission
/// time t - z / lambda_i.
inline Vec characteristics_oracle(const PdeOdeSystem& sys,
                                  const std::function<Vec(double)>& boundary_history,
                                  const std::function<Vec(double)>& init_profile, double t,
                                  double z) {
    detail::require(t >= 0.0, "characteristics_oracle: t must be nonnegative");
    detail::require(z >= 0.0 && z <= 1.0, "characteristics_oracle: z must lie in [0, 1]");
    Vec out(sys.n_x());
    for (std::size_t i = 0; i < sys.n_x(); ++i) {
        const double xi = z - sys.lambda[i] * t;
        out[i] = (xi >= 0.0 && xi <= 1.0) ? init_profile(xi)[i]
                                          : boundary_history(t - z / sys.lambda[i])[i];
    }
    return out;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Long-format CSV: header `t,field,component,node,value`, one row per
/// sample. Components are 1-based; the lumped states chi and chihat carry
/// node = -1 since they live off the grid.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    os << "t,field,component,node,value\n";
    for (const GridState& st : traj.snapshots) {
        const std::string t = detail::format_double(st.t);
        const auto field_rows = [&](const char* name, const Mat& m) {
            for (std::size_t i = 0; i < m.rows(); ++i) {
                for (std::size_t j = 0; j < m.cols(); ++j) {
                    os << t << ',' << name << ',' << (i + 1) << ',' << j << ','
                       << detail::format_double(m(i, j)) << '\n';
                }
            }
        };
        field_rows("x", st.x);
        field_rows("xhat", st.xhat);
        const auto lumped_rows = [&](const char* name, const Vec& v) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                os << t << ',' << name << ',' << (i + 1) << ",-1,"
                   << detail::format_double(v[i]) << '\n';
            }
        };
        lumped_rows("chi", st.chi);
        lumped_rows("chihat", st.chihat);
    }
}

/// Compact JSON export of a trajectory with its configuration echo.
inline std::string save_trajectory_json(const Trajectory& traj) {
    json j;
    j["config"] = json{{"n_cells", traj.config.n_cells},
                       {"cfl", traj.config.cfl},
                       {"t_end", traj.config.t_end},
                       {"scheme", to_string(traj.config.scheme)},
                       {"record_every", traj.config.record_every}};
    j["system"] = detail::parse_document(save_system(traj.system), "trajectory system echo");
    json snaps = json::array();
    for (const GridState& st : traj.snapshots) {
        json s;
        s["t"] = st.t;
        s["x"] = detail::matrix_to_json(st.x);
        s["xhat"] = detail::matrix_to_json(st.xhat);
        s["chi"] = st.chi;
        s["chihat"] = st.chihat;
        snaps.push_back(s);
    }
    j["snapshots"] = snaps;
    return j.dump() + "\n";
}

}  // namespace hyperobs
