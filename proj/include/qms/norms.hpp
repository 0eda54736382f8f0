// norms.hpp — trace norms, trace distance, and induced superoperator norms.
#pragma once

#include <qms/rng.hpp>
#include <qms/superoperator.hpp>
#include <qms/types.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace qms {

// Sum of singular values (Schatten-1 norm).
inline double trace_norm(const Mat& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().sum();
}

inline double trace_distance(const Mat& a, const Mat& b) { return 0.5 * trace_norm(a - b); }

// Unitary X maximizing |tr(M X)| = ‖M‖₁; from the SVD M = U Σ V†, X = V U†.
inline Mat trace_norm_maximizer(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixV() * svd.matrixU().adjoint();
}

// Weighted norm tr(σ^{1/2} M† σ^{1/2} M).  For Hermitian σ ⪰ I this
// dominates the squared trace norm: ‖M‖₁² ≤ 2ⁿ · ‖M‖²_σ on n qubits; the
// mixing analysis applies it with σ the inverse of the stationary state.
inline double sigma_weighted_norm_sq(const Mat& sigma_half, const Mat& m) {
    return std::real((sigma_half * m.adjoint() * sigma_half * m).trace());
}

// Partial trace over the second factor of a d1·d2-dimensional joint space
// (first-factor-major index layout).
inline Mat partial_trace_second(const Mat& joint, Eigen::Index d1, Eigen::Index d2) {
    if (joint.rows() != d1 * d2 || joint.cols() != d1 * d2)
        throw std::invalid_argument("partial_trace_second: dimension mismatch");
    Mat out = Mat::Zero(d1, d1);
    for (Eigen::Index a = 0; a < d1; ++a)
        for (Eigen::Index b = 0; b < d1; ++b)
            for (Eigen::Index k = 0; k < d2; ++k) out(a, b) += joint(a * d2 + k, b * d2 + k);
    return out;
}

struct InducedNormReport {
    double value = 0.0;        // lower bound by construction
    int restarts = 0;
    double refine_tol = 0.0;   // final refinement step size
};

// Lower-bound estimate of max over pure states of ‖S(ψψ†)‖₁ via multistart
// sampling plus greedy local refinement.  For the maps in this library the
// maximum over density matrices is attained on pure states (the objective is
// convex in ρ), so this estimates the induced trace-norm on inputs.
inline InducedNormReport induced_norm_report(const Superoperator& s, int starts = 512,
                                             std::uint64_t seed = 2024) {
    const Eigen::Index d = s.dim;
    CounterRng rng(seed, 0);
    auto objective = [&](const Vec& psi) {
        const Mat rho = psi * psi.adjoint();
        return trace_norm(s.apply(rho));
    };
    auto random_state = [&](CounterRng& r) {
        Vec psi(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            // Box-Muller pairs give an isotropic complex Gaussian.
            const double u1 = std::max(r.uniform(), 1e-300);
            const double u2 = r.uniform();
            const double mag = std::sqrt(-2.0 * std::log(u1));
            psi(i) = cplx(mag * std::cos(2.0 * pi * u2), mag * std::sin(2.0 * pi * u2));
        }
        psi.normalize();
        return psi;
    };
    double best = 0.0;
    Vec best_psi;
    for (int it = 0; it < starts; ++it) {
        rng.reset(static_cast<std::uint64_t>(it), 0);
        const Vec psi = random_state(rng);
        const double val = objective(psi);
        if (val > best) {
            best = val;
            best_psi = psi;
        }
    }
    // Greedy coordinate refinement around the best start.
    double step = 0.25;
    for (int round = 0; round < 40 && step > 1e-7; ++round) {
        bool improved = false;
        for (Eigen::Index i = 0; i < d; ++i)
            for (int dir = 0; dir < 4; ++dir) {
                Vec trial = best_psi;
                const cplx delta = (dir < 2) ? cplx((dir == 0 ? 1.0 : -1.0) * step, 0.0)
                                             : cplx(0.0, (dir == 2 ? 1.0 : -1.0) * step);
                trial(i) += delta;
                trial.normalize();
                const double val = objective(trial);
                if (val > best + 1e-15) {
                    best = val;
                    best_psi = trial;
                    improved = true;
                }
            }
        if (!improved) step *= 0.5;
    }
    return {best, starts, step};
}

inline double induced_norm_estimate(const Superoperator& s, int starts = 512,
                                    std::uint64_t seed = 2024) {
    return induced_norm_report(s, starts, seed).value;
}

}  // namespace qms
