#pragma once

#include "hyperobs/matrix.hpp"
#include "hyperobs/nonlinearity.hpp"
#include "hyperobs/system.hpp"

/// The built-in worked example: two transport fields with speeds (3/2, 2),
/// a two-state boundary ODE with a deadzone nonlinearity, boundary-to-domain
/// injection C = I, and a single scalar measurement at z = 1. Ships with a
/// known-feasible certificate so every pipeline stage can be exercised
/// end to end (CLI subcommand `example paper`).
namespace hyperobs {

inline PdeOdeSystem paper_example_system() {
    PdeOdeSystem sys;
    sys.lambda = {1.5, 2.0};
    sys.a_mat = Mat{{-1.0, 2.0}, {2.05, -4.0}};
    sys.b_mat = Mat{{0.0}, {0.5}};
    sys.c_mat = Mat::identity(2);
    sys.z_mat = Mat{{1.0, 1.0}};
    sys.m_mat = Mat{{1.0, 1.0}};
    sys.psi = Nonlinearity{NonlinKind::deadzone, 1.0};
    sys.ell = 1.0;
    return sys;
}

inline Certificate paper_example_certificate() {
    Certificate cert;
    cert.p1 = {11.76, 16.24};
    cert.p2 = Mat{{-6.904, -7.157}, {-4.254, -2.427}};
    cert.p3 = Mat{{14.4, 4.976}, {4.976, 7.52}};
    cert.l_gain = Mat{{0.4593}, {0.2025}};
    cert.mu = 0.4;
    cert.iota = 3.335;
    return cert;
}

}  // namespace hyperobs
