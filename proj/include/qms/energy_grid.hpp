// energy_grid.hpp — dyadic measurement grid on the energy interval [0, κ).
#pragma once

#include <qms/types.hpp>

#include <cmath>

namespace qms {

// Grid of 2^r readout values {m·w : m = 0..2^r−1} with spacing w = κ·2^{−r}.
struct EnergyGrid {
    int r = 0;
    double kappa = 0.0;
    double w = 0.0;
    RVec points;

    Eigen::Index size() const { return points.size(); }
};

inline EnergyGrid energy_grid(int r, double kappa) {
    if (r < 1 || r > 24) throw std::invalid_argument("energy_grid: r must be in [1, 24]");
    if (!(kappa > 0.0)) throw std::invalid_argument("energy_grid: kappa must be positive");
    EnergyGrid g;
    g.r = r;
    g.kappa = kappa;
    g.w = kappa * std::pow(2.0, -r);
    const Eigen::Index m = Eigen::Index{1} << r;
    g.points.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) g.points(i) = static_cast<double>(i) * g.w;
    return g;
}

// Detailed-balance move weight between two energies: min{1, e^{β(from − to)}}.
// Downhill (or level) moves pass with certainty; uphill moves are damped by
// the Boltzmann factor of the climb.
inline double acceptance_probability(double beta, double e_from, double e_to) {
    return std::min(1.0, std::exp(beta * (e_from - e_to)));
}

// Acceptance factor tabulated over all ordered grid-point pairs.
inline RMat acceptance_grid(const EnergyGrid& grid, double beta) {
    const Eigen::Index n = grid.points.size();
    RMat f(n, n);
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index m2 = 0; m2 < n; ++m2)
            f(m, m2) = acceptance_probability(beta, grid.points(m), grid.points(m2));
    return f;
}

}  // namespace qms
