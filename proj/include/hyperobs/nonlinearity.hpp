#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "hyperobs/matrix.hpp"

/// The closed set of boundary nonlinearities. Keeping the set closed (instead
/// of accepting user-supplied callables) guarantees that the exact Lipschitz
/// constant of each kind is known, so the quadratic bound on the increment
/// rho can be certified rather than sampled.
namespace hyperobs {

enum class NonlinKind { deadzone, saturation, zero, componentwise_sine };

/// Componentwise nonlinearity Psi: R^{n_z} -> R^{n_l} with n_l = n_z.
/// `width` is the deadzone/saturation threshold; ignored by the other kinds.
struct Nonlinearity {
    NonlinKind kind = NonlinKind::deadzone;
    double width = 1.0;
};

inline std::string to_string(NonlinKind kind) {
    switch (kind) {
        case NonlinKind::deadzone: return "deadzone";
        case NonlinKind::saturation: return "saturation";
        case NonlinKind::zero: return "zero";
        case NonlinKind::componentwise_sine: return "componentwise-sine";
    }
    throw std::invalid_argument("to_string: unknown nonlinearity kind");
}

inline NonlinKind nonlin_kind_from_string(const std::string& name) {
    if (name == "deadzone") return NonlinKind::deadzone;
    if (name == "saturation") return NonlinKind::saturation;
    if (name == "zero") return NonlinKind::zero;
    if (name == "componentwise-sine") return NonlinKind::componentwise_sine;
    throw std::invalid_argument("unknown nonlinearity kind: \"" + name + "\"");
}

/// Exact global Lipschitz constant of the kind (slope bound, independent of
/// width for the piecewise-linear kinds).
inline double lipschitz_constant(NonlinKind kind) {
    switch (kind) {
        case NonlinKind::deadzone: return 1.0;
        case NonlinKind::saturation: return 1.0;
        case NonlinKind::zero: return 0.0;
        case NonlinKind::componentwise_sine: return 1.0;
    }
    throw std::invalid_argument("lipschitz_constant: unknown nonlinearity kind");
}

inline void validate(const Nonlinearity& psi) {
    if (!(psi.width > 0.0)) {
        throw std::invalid_argument("Nonlinearity: width must be strictly positive");
    }
}

/// Componentwise application of the nonlinearity; total on all real inputs.
inline Vec eval_psi(const Nonlinearity& psi, const Vec& v) {
    Vec out(v.size());
    switch (psi.kind) {
        case NonlinKind::deadzone:
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double a = std::abs(v[i]);
                out[i] = a <= psi.width ? 0.0 : (v[i] > 0.0 ? a - psi.width : psi.width - a);
            }
            break;
        case NonlinKind::saturation:
            for (std::size_t i = 0; i < v.size(); ++i) {
                out[i] = std::clamp(v[i], -psi.width, psi.width);
            }
            break;
        case NonlinKind::zero:
            break;  // already zero-filled
        case NonlinKind::componentwise_sine:
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::sin(v[i]);
            break;
    }
    return out;
}

}  // namespace hyperobs
