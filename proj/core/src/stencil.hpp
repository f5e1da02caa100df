#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "plap/grid.hpp"

namespace plap::detail {

// One node's weight in the axial and transverse difference quotients at a midpoint.
struct MidpointTerm {
    std::size_t node;
    double c_axial;
    double c_trans;
};

// Cell-face midpoint between `left` and `right` along `axis`.
struct Midpoint {
    int axis = 0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::array<MidpointTerm, 6> terms{};
    int nterms = 0;
};

// Every midpoint touching at least one interior node.
std::vector<Midpoint> build_midpoints(const Grid& grid);

struct FaceGradient {
    double axial = 0.0;
    double trans = 0.0;
};

inline FaceGradient face_gradient(const Midpoint& m, std::span<const double> u) noexcept {
    FaceGradient g;
    for (int t = 0; t < m.nterms; ++t) {
        g.axial += m.terms[t].c_axial * u[m.terms[t].node];
        g.trans += m.terms[t].c_trans * u[m.terms[t].node];
    }
    return g;
}

// (|G|^2 + delta^2)^{(p-2)/2} * G_axial, with 0 returned for a vanishing argument.
inline double face_flux(const FaceGradient& g, double p, double delta) noexcept {
    const double s = g.axial * g.axial + g.trans * g.trans + delta * delta;
    if (s == 0.0) return 0.0;
    return std::pow(s, 0.5 * (p - 2.0)) * g.axial;
}

// Partial derivatives of face_flux with respect to (G_axial, G_trans).
inline std::array<double, 2> face_flux_derivative(const FaceGradient& g, double p, double delta) noexcept {
    const double s = g.axial * g.axial + g.trans * g.trans + delta * delta;
    if (s == 0.0) return {p == 2.0 ? 1.0 : 0.0, 0.0};
    const double w = std::pow(s, 0.5 * (p - 4.0));
    return {w * ((p - 2.0) * g.axial * g.axial + s), w * (p - 2.0) * g.axial * g.trans};
}

// Frozen-coefficient diffusivity (|G|^2 + delta^2)^{(p-2)/2}.
inline double face_diffusivity(const FaceGradient& g, double p, double delta) noexcept {
    const double s = g.axial * g.axial + g.trans * g.trans + delta * delta;
    if (s == 0.0) return p == 2.0 ? 1.0 : 0.0;
    return std::pow(s, 0.5 * (p - 2.0));
}

}  // namespace plap::detail
