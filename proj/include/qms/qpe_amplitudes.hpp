// qpe_amplitudes.hpp — closed-form phase-estimation readout amplitudes and unitary.
#pragma once

#include <qms/energy_grid.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/types.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace qms {

// Normalized geometric sum (1/N) Σ_{c=0}^{N−1} e^{2πi c x} evaluated through
// the Dirichlet kernel.  Integer x is the removable singularity and returns
// exactly 1; x with N·x a nonzero integer returns exactly 0.
inline cplx geometric_kernel(double x, Eigen::Index n_points) {
    const double t = x - std::round(x);
    if (t == 0.0) return {1.0, 0.0};
    const double n = static_cast<double>(n_points);
    const double nt = n * t;
    const double nt_round = std::round(nt);
    const double nt_frac = nt - nt_round;
    if (nt_frac == 0.0) return {0.0, 0.0};
    const double sign = (std::fmod(nt_round, 2.0) == 0.0) ? 1.0 : -1.0;
    const double magnitude = sign * std::sin(pi * nt_frac) / (n * std::sin(pi * t));
    double phase_turns = (n - 1.0) * t;   // e^{iπ(N−1)t}, reduced mod 2 for accuracy
    phase_turns -= 2.0 * std::round(phase_turns / 2.0);
    return std::polar(magnitude, pi * phase_turns);
}

// ---- single-round readout distribution ----

// Row j holds the complex readout amplitudes of eigenstate j after one
// phase-estimation round on an r-bit register.  Two index conventions are
// kept: `beta` is indexed by the absolute grid point y, `gamma` by the offset
// l = y − floor_index(j) wrapped mod 2^r (so column c stores offset
// l ≡ c (mod 2^r), covering the centered window (−2^{r−1}, 2^{r−1}]).
struct AmplitudeTable {
    int r = 0;
    EnergyGrid grid;
    Mat beta;                              // dim × 2^r, grid-indexed
    Mat gamma;                             // dim × 2^r, offset-indexed
    std::vector<Eigen::Index> floor_index; // per eigenstate
    RVec epsilon;                          // μ_j − floor_index_j·2^{−r} ∈ [0, 2^{−r})

    Eigen::Index dim() const { return beta.rows(); }
    Eigen::Index points() const { return beta.cols(); }

    cplx offset_amplitude(Eigen::Index j, Eigen::Index l) const {
        const Eigen::Index n = points();
        return gamma(j, ((l % n) + n) % n);
    }
};

inline AmplitudeTable single_round_amplitudes(const EigenSystem& es, const EnergyGrid& grid) {
    const Eigen::Index d = es.dim();
    const Eigen::Index n = grid.size();
    if (es.eigenvalues(d - 1) >= grid.kappa)
        throw std::invalid_argument(
            "single_round_amplitudes: eigenvalue at or above kappa, grid does not cover spectrum");
    AmplitudeTable t;
    t.r = grid.r;
    t.grid = grid;
    t.beta.resize(d, n);
    t.gamma.resize(d, n);
    t.floor_index.resize(d);
    t.epsilon.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mu = es.eigenvalues(j) / grid.kappa;
        auto fl = static_cast<Eigen::Index>(std::floor(mu * static_cast<double>(n)));
        if (fl == n) fl = n - 1;   // guards μ·2^r rounding up to the boundary
        t.floor_index[j] = fl;
        t.epsilon(j) = mu - static_cast<double>(fl) / static_cast<double>(n);
        for (Eigen::Index y = 0; y < n; ++y) {
            const cplx amp = geometric_kernel(mu - static_cast<double>(y) / static_cast<double>(n), n);
            t.beta(j, y) = amp;
            t.gamma(j, ((y - fl) % n + n) % n) = amp;
        }
    }
    return t;
}

// Product amplitude of a g-round readout tuple (grid indices ys); the flipped
// round conjugates every factor.
inline cplx boosted_amplitude(const AmplitudeTable& t, Eigen::Index j,
                              const std::vector<Eigen::Index>& ys, bool flipped = false) {
    cplx amp = 1.0;
    for (Eigen::Index y : ys) amp *= t.beta(j, y);
    return flipped ? std::conj(amp) : amp;
}

// Median of an odd-length list.  An even g has no unique middle readout, which
// the sampler relies on, so it is rejected as a configuration error.
inline double median(std::vector<double> values) {
    if (values.empty() || values.size() % 2 == 0)
        throw std::invalid_argument("median: list length must be odd");
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

inline Eigen::Index median_index(std::vector<Eigen::Index> values) {
    if (values.empty() || values.size() % 2 == 0)
        throw std::invalid_argument("median_index: list length must be odd");
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

// ---- full single-round unitary ----

// Action of one phase-estimation round on the whole r-bit register, including
// nonzero input basis states: V[y, b] = 2^{−r} Π_t (1 + (−1)^{b_t} e^{2πi 2^t (μ − y/2^r)}).
// Column b = 0 reproduces the readout amplitudes β.  The reverse-phase variant
// used for the flipped round is the entrywise conjugate.
inline Mat qpe_round_unitary(double mu, int r, bool flipped = false) {
    const Eigen::Index n = Eigen::Index{1} << r;
    Mat v(n, n);
    for (Eigen::Index y = 0; y < n; ++y) {
        const double x = mu - static_cast<double>(y) / static_cast<double>(n);
        // factor_t = 1 + e^{2πi 2^t x}
        std::vector<cplx> plus(r);
        for (int t = 0; t < r; ++t) {
            double arg = std::ldexp(x, t);       // 2^t x
            arg -= std::round(arg);              // e^{2πi·} is 1-periodic
            plus[t] = 1.0 + std::polar(1.0, 2.0 * pi * arg);
        }
        for (Eigen::Index b = 0; b < n; ++b) {
            cplx prod = 1.0;
            for (int t = 0; t < r; ++t) {
                const cplx f = ((b >> t) & 1) ? (2.0 - plus[t]) : plus[t];
                prod *= f;
            }
            v(y, b) = prod / static_cast<double>(n);
        }
    }
    return flipped ? v.conjugate() : v;
}

}  // namespace qms
