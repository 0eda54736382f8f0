// lindblad.hpp — continuous-time generator: jump-operator form, fixed point,
// spectral gap of the additive symmetrization, evolution, and mixing bounds.
#pragma once

#include <qms/channel_fast.hpp>
#include <qms/energy_grid.hpp>
#include <qms/gram.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/norms.hpp>
#include <qms/qpe_amplitudes.hpp>
#include <qms/rng.hpp>
#include <qms/superoperator.hpp>
#include <qms/types.hpp>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qms {

// Jump-operator description of the dissipator: for each proposal move C,
// orientation, and ordered register-tuple pair (E, E'), the operator
//   V = √(μ(C)/2) √f(med E, med E') · B_{E'} C̃ B_E
// acts in the eigenbasis, where B_E = diag_j(β_{jE}) collects the readout
// amplitudes.  The generator is Σ 2 V ρ V† − {V†V, ρ}.
struct LindbladSet {
    Eigen::Index d = 0;
    Eigen::Index tuples = 0;        // 2^{rg}
    int g = 1;
    double beta = 0.0;
    Mat eigenvectors;               // lab ↔ eigenbasis change of frame
    std::vector<Mat> ctilde;        // proposal moves, eigenbasis
    std::vector<double> move_weights;
    Mat tuple_amp;                  // d × tuples product amplitudes (unflipped)
    std::vector<Eigen::Index> tuple_median;
    RMat f;                         // acceptance factor on grid medians
};

inline LindbladSet make_lindblad_set(const EigenSystem& es, const EnergyGrid& grid, int g,
                                     const JumpEnsemble& jumps, double beta) {
    if (g < 1 || g % 2 == 0)
        throw std::invalid_argument("make_lindblad_set: g must be odd and positive");
    validate_jump_ensemble(jumps);
    const AmplitudeTable table = single_round_amplitudes(es, grid);
    const Eigen::Index d = table.dim();
    const Eigen::Index n = table.points();
    double tuples_d = std::pow(static_cast<double>(n), g);
    if (tuples_d > static_cast<double>(1 << 20))
        throw std::invalid_argument("make_lindblad_set: 2^{rg} too large to enumerate");
    const auto tuples = static_cast<Eigen::Index>(tuples_d);

    LindbladSet set;
    set.d = d;
    set.tuples = tuples;
    set.g = g;
    set.beta = beta;
    set.eigenvectors = es.eigenvectors;
    for (std::size_t c = 0; c < jumps.size(); ++c) {
        set.ctilde.push_back(es.eigenvectors.adjoint() * jumps.ops[c] * es.eigenvectors);
        set.move_weights.push_back(jumps.weights[c]);
    }
    set.tuple_amp.resize(d, tuples);
    set.tuple_median.resize(static_cast<std::size_t>(tuples));
    std::vector<Eigen::Index> digits(static_cast<std::size_t>(g));
    for (Eigen::Index e = 0; e < tuples; ++e) {
        Eigen::Index rem = e;
        for (int p = 0; p < g; ++p) {
            digits[static_cast<std::size_t>(p)] = rem % n;
            rem /= n;
        }
        set.tuple_median[static_cast<std::size_t>(e)] = median_index(digits);
        for (Eigen::Index j = 0; j < d; ++j) {
            cplx a = 1.0;
            for (int p = 0; p < g; ++p) a *= table.beta(j, digits[static_cast<std::size_t>(p)]);
            set.tuple_amp(j, e) = a;
        }
    }
    set.f = acceptance_grid(grid, beta);
    return set;
}

// Σ_{E,E'} V_{EE'} / √(μ(C)/2 · f) recovers the move itself: the per-tuple
// amplitudes sum to one on each side.  Enumerates every register pair with
// the same V construction as the generator; returned in the lab frame.
inline Mat reassemble_move(const LindbladSet& set, std::size_t move, bool flipped = false) {
    const double half_weight = set.move_weights.at(move) / 2.0;
    const Mat& ct = set.ctilde.at(move);
    Mat acc = Mat::Zero(set.d, set.d);
    for (Eigen::Index e = 0; e < set.tuples; ++e)
        for (Eigen::Index e2 = 0; e2 < set.tuples; ++e2) {
            const double f = set.f(set.tuple_median[static_cast<std::size_t>(e)],
                                   set.tuple_median[static_cast<std::size_t>(e2)]);
            const double root = std::sqrt(half_weight * f);
            for (Eigen::Index a = 0; a < set.d; ++a)
                for (Eigen::Index b = 0; b < set.d; ++b) {
                    cplx amp_out = set.tuple_amp(a, e2);
                    cplx amp_in = set.tuple_amp(b, e);
                    if (flipped) {
                        amp_out = std::conj(amp_out);
                        amp_in = std::conj(amp_in);
                    }
                    const cplx v = root * amp_out * ct(a, b) * amp_in;
                    acc(a, b) += v / root;
                }
        }
    return set.eigenvectors * acc * set.eigenvectors.adjoint();
}

// Brute-force generator: streams all (move, orientation, E, E') jumps.
inline Superoperator lindblad_generator(const LindbladSet& set) {
    const Eigen::Index d = set.d;
    const Eigen::Index dd = d * d;
    Mat acc = Mat::Zero(dd, dd);
    Mat v(d, d), vdv(d, d);
    for (std::size_t c = 0; c < set.ctilde.size(); ++c) {
        const Mat& ct = set.ctilde[c];
        for (int flip = 0; flip < 2; ++flip) {
            const double w = set.move_weights[c] / 2.0;
            for (Eigen::Index e = 0; e < set.tuples; ++e)
                for (Eigen::Index e2 = 0; e2 < set.tuples; ++e2) {
                    const double fw =
                        set.f(set.tuple_median[static_cast<std::size_t>(e)],
                              set.tuple_median[static_cast<std::size_t>(e2)]);
                    const double scale = w * fw;
                    if (scale == 0.0) continue;
                    const double root = std::sqrt(scale);
                    for (Eigen::Index a = 0; a < d; ++a)
                        for (Eigen::Index b = 0; b < d; ++b) {
                            cplx amp_out = set.tuple_amp(a, e2);
                            cplx amp_in = set.tuple_amp(b, e);
                            if (flip) {
                                amp_out = std::conj(amp_out);
                                amp_in = std::conj(amp_in);
                            }
                            v(a, b) = root * amp_out * ct(a, b) * amp_in;
                        }
                    vdv.noalias() = v.adjoint() * v;
                    // acc += 2 kron(conj(V), V) − kron(I, V†V) − kron((V†V)ᵀ, I)
                    for (Eigen::Index j = 0; j < d; ++j)
                        for (Eigen::Index l = 0; l < d; ++l) {
                            const cplx vj = 2.0 * std::conj(v(j, l));
                            for (Eigen::Index i = 0; i < d; ++i)
                                for (Eigen::Index k = 0; k < d; ++k)
                                    acc(i + d * j, k + d * l) += vj * v(i, k);
                        }
                    for (Eigen::Index j = 0; j < d; ++j)
                        for (Eigen::Index i = 0; i < d; ++i)
                            for (Eigen::Index k = 0; k < d; ++k) {
                                acc(i + d * j, k + d * j) -= vdv(i, k);
                                acc(k + d * i, k + d * j) -= vdv(j, i);
                            }
                }
        }
    }
    const Mat kv = super_conjugation(set.eigenvectors).m;
    return Superoperator{d, kv * acc * kv.adjoint()};
}

// ---- fixed point and spectra ----

inline Eigen::Index null_space_dimension(const Superoperator& l, double tol = 1e-8) {
    Eigen::ComplexEigenSolver<Mat> ces(l.m);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < ces.eigenvalues().size(); ++i)
        if (std::abs(ces.eigenvalues()(i)) < tol) ++count;
    return count;
}

// Unique trace-one solution of L(ρ) = 0; throws if the stationary subspace is
// degenerate or carries no trace.
inline Mat fixed_point(const Superoperator& l, double degeneracy_tol = 1e-8) {
    Eigen::ComplexEigenSolver<Mat> ces(l.m);
    const Eigen::Index dd = l.m.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dd));
    for (Eigen::Index i = 0; i < dd; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(ces.eigenvalues()(a)) < std::abs(ces.eigenvalues()(b));
    });
    if (std::abs(ces.eigenvalues()(order[0])) > 1e-6)
        throw std::runtime_error("fixed_point: generator has no stationary direction");
    if (std::abs(ces.eigenvalues()(order[1])) < degeneracy_tol)
        throw std::runtime_error("fixed_point: stationary direction is degenerate");
    Mat rho = unvec(ces.eigenvectors().col(order[0]), l.dim);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = std::real(rho.trace());
    if (std::abs(tr) < 1e-12)
        throw std::runtime_error("fixed_point: stationary direction is traceless");
    rho /= tr;
    return rho;
}

// Hilbert-Schmidt adjoint of a superoperator.
inline Superoperator hs_adjoint(const Superoperator& s) { return {s.dim, s.m.adjoint()}; }

inline Mat matrix_power_hermitian(const Mat& h, double p) {
    Eigen::SelfAdjointEigenSolver<Mat> saes(h);
    RVec vals = saes.eigenvalues();
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) <= 0.0 && p < 1.0)
            throw std::runtime_error("matrix_power_hermitian: matrix is not positive definite");
        vals(i) = std::pow(vals(i), p);
    }
    return saes.eigenvectors() * vals.asDiagonal() * saes.eigenvectors().adjoint();
}

// Adjoint with respect to the weighted inner product ⟨M, N⟩_σ =
// tr(σ^{1/2} M† σ^{1/2} N) with σ the inverse of the stationary state:
//   L*(N) = σ^{-1/2} L†(σ^{1/2} N σ^{1/2}) σ^{-1/2}.
inline Superoperator sigma_dual(const Superoperator& l, const Mat& stationary) {
    const Mat rho_half = matrix_power_hermitian(stationary, 0.5);     // = σ^{-1/2}
    const Mat rho_inv_half = matrix_power_hermitian(stationary, -0.5);  // = σ^{1/2}
    const Mat sandwich_up = super_sandwich(rho_inv_half, rho_inv_half).m;
    const Mat sandwich_down = super_sandwich(rho_half, rho_half).m;
    return Superoperator{l.dim, sandwich_down * l.m.adjoint() * sandwich_up};
}

struct SpectralReport {
    Mat fixed_point_state;          // ρ_L, lab frame
    double fixed_point_min_eig = 0.0;
    double fixed_point_residual = 0.0;   // ‖L(ρ_L)‖₁
    double gap = 0.0;                    // Υ of the symmetrized generator
    double symmetrized_top = 0.0;        // largest symmetrized eigenvalue (≈ 0)
    double hermiticity_dev = 0.0;        // of the flat-conjugated symmetrization
    RVec symmetrized_spectrum;           // ascending
};

// Symmetrize L in the σ-inner product, flatten to an honestly Hermitian
// matrix by conjugating with the σ^{1/4} sandwich, and read off the gap.
inline SpectralReport spectral_analysis(const Superoperator& l) {
    SpectralReport rep;
    rep.fixed_point_state = fixed_point(l);
    Eigen::SelfAdjointEigenSolver<Mat> saes(rep.fixed_point_state);
    rep.fixed_point_min_eig = saes.eigenvalues().minCoeff();
    rep.fixed_point_residual = trace_norm(l.apply(rep.fixed_point_state));
    if (rep.fixed_point_min_eig <= 0.0)
        throw std::runtime_error("spectral_analysis: stationary state is not full rank");

    const Superoperator lstar = sigma_dual(l, rep.fixed_point_state);
    const Mat ls = 0.5 * (l.m + lstar.m);
    // T(N) = σ^{1/4} N σ^{1/4} = ρ^{-1/4} N ρ^{-1/4} turns the σ-self-adjoint
    // map into a Hermitian matrix.
    const Mat rho_quarter = matrix_power_hermitian(rep.fixed_point_state, 0.25);
    const Mat rho_inv_quarter = matrix_power_hermitian(rep.fixed_point_state, -0.25);
    const Mat t_up = super_sandwich(rho_inv_quarter, rho_inv_quarter).m;
    const Mat t_down = super_sandwich(rho_quarter, rho_quarter).m;
    const Mat flat = t_up * ls * t_down;
    rep.hermiticity_dev = (flat - flat.adjoint()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Mat> flat_eigs(0.5 * (flat + flat.adjoint()));
    rep.symmetrized_spectrum = flat_eigs.eigenvalues();
    const Eigen::Index dd = rep.symmetrized_spectrum.size();
    rep.symmetrized_top = rep.symmetrized_spectrum(dd - 1);
    rep.gap = -rep.symmetrized_spectrum(dd - 2);
    return rep;
}

// ---- evolution ----

// exp(tL) applied through one diagonalization of L; falls back to
// scaling-and-squaring when the eigenbasis is ill conditioned.
class Propagator {
  public:
    explicit Propagator(const Superoperator& l, double condition_limit = 1e10) : l_(l) {
        Eigen::ComplexEigenSolver<Mat> ces(l.m);
        evals_ = ces.eigenvalues();
        p_ = ces.eigenvectors();
        Eigen::JacobiSVD<Mat> svd(p_);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        condition_ = (smin > 0.0) ? svd.singularValues()(0) / smin : 1e300;
        spectral_ = condition_ < condition_limit;
        if (spectral_) pinv_ = p_.inverse();
    }

    bool spectral_path() const { return spectral_; }
    double condition() const { return condition_; }

    Mat apply(const Mat& rho, double t) const {
        if (spectral_) {
            Vec v = pinv_ * vec(rho);
            for (Eigen::Index i = 0; i < v.size(); ++i) v(i) *= std::exp(t * evals_(i));
            return unvec(p_ * v, l_.dim);
        }
        const Mat e = (t * l_.m).exp();
        return unvec(e * vec(rho), l_.dim);
    }

    // Reference path for cross-checking the spectral route.
    Mat apply_scaling_squaring(const Mat& rho, double t) const {
        const Mat e = (t * l_.m).exp();
        return unvec(e * vec(rho), l_.dim);
    }

  private:
    Superoperator l_;
    Vec evals_;
    Mat p_, pinv_;
    double condition_ = 0.0;
    bool spectral_ = false;
};

inline Mat evolve(const Superoperator& l, const Mat& rho, double t) {
    return Propagator(l).apply(rho, t);
}

// ---- mixing bounds ----

// tr(σ^{1/2} ρ σ^{1/2} ρ) with σ = stationary⁻¹; equals 1 + ‖ρ − ρ_L‖²_σ.
inline double stationary_overlap(const Mat& stationary, const Mat& rho) {
    const Mat inv_half = matrix_power_hermitian(stationary, -0.5);
    return std::real((inv_half * rho * inv_half * rho).trace());
}

// Trace-distance envelope at time t from the gap and the initial overlap.
inline double mixing_distance_bound(const SpectralReport& rep, int n_qubits, const Mat& rho,
                                    double t) {
    const double overlap = stationary_overlap(rep.fixed_point_state, rho);
    return std::pow(2.0, n_qubits / 2.0) * std::sqrt(overlap) * std::exp(-rep.gap * t);
}

// Time at which the envelope reaches ε (the full trace-distance, not halved).
inline double mixing_time_bound(const SpectralReport& rep, int n_qubits, const Mat& rho,
                                double eps) {
    if (eps <= 0.0) throw std::invalid_argument("mixing_time_bound: eps must be positive");
    const double overlap = stationary_overlap(rep.fixed_point_state, rho);
    return (std::log(1.0 / eps) + 0.5 * n_qubits * std::log(2.0) + 0.5 * std::log(overlap)) /
           rep.gap;
}

// Empirical hitting time of ‖e^{tL}ρ − ρ_L‖₁ ≤ ε over a spanning family of
// initial states (computational-basis populations, two-level superpositions,
// random pure states, plus any caller-supplied extras).  Trace distance to
// the fixed point is non-increasing in t, so bisection is sound.
inline double mixing_time_estimate(const Superoperator& l, const Mat& stationary, double eps,
                                   int random_states = 50, std::uint64_t seed = 77,
                                   const std::vector<Mat>& extra = {}) {
    if (eps <= 0.0) throw std::invalid_argument("mixing_time_estimate: eps must be positive");
    const Eigen::Index d = l.dim;
    std::vector<Mat> family;
    for (Eigen::Index i = 0; i < d; ++i) {
        Mat m = Mat::Zero(d, d);
        m(i, i) = 1.0;
        family.push_back(m);
    }
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j)
            for (int phase = 0; phase < 2; ++phase) {
                Vec psi = Vec::Zero(d);
                psi(i) = 1.0 / std::sqrt(2.0);
                psi(j) = (phase == 0) ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
                psi(j) /= std::sqrt(2.0);
                family.push_back(psi * psi.adjoint());
            }
    CounterRng rng(seed, 0);
    for (int s = 0; s < random_states; ++s) {
        Vec psi(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double u1 = std::max(rng.uniform(), 1e-300);
            const double u2 = rng.uniform();
            const double mag = std::sqrt(-2.0 * std::log(u1));
            psi(i) = cplx(mag * std::cos(2.0 * pi * u2), mag * std::sin(2.0 * pi * u2));
        }
        psi.normalize();
        family.push_back(psi * psi.adjoint());
    }
    for (const auto& m : extra) family.push_back(m);

    const Propagator prop(l);
    double worst = 0.0;
    for (const auto& rho : family) {
        if (trace_norm(prop.apply(rho, 0.0) - stationary) <= eps) continue;
        double hi = 1.0;
        int guard = 0;
        while (trace_norm(prop.apply(rho, hi) - stationary) > eps) {
            hi *= 2.0;
            if (++guard > 60)
                throw std::runtime_error("mixing_time_estimate: no convergence before 2^60");
        }
        double lo = hi / 2.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (trace_norm(prop.apply(rho, mid) - stationary) > eps)
                lo = mid;
            else
                hi = mid;
        }
        worst = std::max(worst, hi);
    }
    return worst;
}

}  // namespace qms
