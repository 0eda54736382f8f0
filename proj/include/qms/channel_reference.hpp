// channel_reference.hpp — dense register-level simulation of one sampler
// iteration.  Carries the full joint state (system, two readout registers,
// flag qubit) and extracts the iteration superoperator and its per-case
// pieces by brute force.  Serves as the oracle for the compressed builder.
#pragma once

#include <qms/energy_grid.hpp>
#include <qms/gram.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/qpe_amplitudes.hpp>
#include <qms/superoperator.hpp>
#include <qms/types.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qms {

struct ReferenceChannel {
    double tau = 0.0;
    double beta = 0.0;
    int r = 0;
    int g = 0;
    // Lab-frame superoperators: full iteration map and the three measurement
    // branches (fresh excitation, excitation after one null round, null).
    Superoperator total, accept, accept_second, reject;
};

namespace detail {

// Joint index layout: ((a * M + e2) * M + e3) * 2 + z, where a is the system
// eigenstate, e2/e3 are the two readout registers (g digits base N each,
// little-endian), z the flag.
class JointRegisters {
  public:
    JointRegisters(Eigen::Index d, Eigen::Index n_points, int g)
        : d_(d), n_(n_points), g_(g) {
        m_ = 1;
        for (int p = 0; p < g; ++p) {
            m_ *= n_;
            if (m_ > (1 << 22)) throw std::invalid_argument("reference channel: registers too large");
        }
        env_ = 2 * m_ * m_;
        dim_ = d_ * env_;
        if (dim_ > (1 << 23)) throw std::invalid_argument("reference channel: joint space too large");
        medians_.resize(static_cast<std::size_t>(m_));
        std::vector<Eigen::Index> digits(static_cast<std::size_t>(g_));
        for (Eigen::Index e = 0; e < m_; ++e) {
            Eigen::Index rem = e;
            for (int p = 0; p < g_; ++p) {
                digits[static_cast<std::size_t>(p)] = rem % n_;
                rem /= n_;
            }
            medians_[static_cast<std::size_t>(e)] = median_index(digits);
        }
    }

    Eigen::Index dim() const { return dim_; }
    Eigen::Index env() const { return env_; }
    Eigen::Index registers() const { return m_; }
    Eigen::Index median_of(Eigen::Index e) const { return medians_[static_cast<std::size_t>(e)]; }

    // Apply an N×N digit operation to digit p of one readout register,
    // conditioned on the system being in eigenstate a.
    void apply_digit(Vec& v, const Mat& op, Eigen::Index a, int reg, int p) const {
        Eigen::Index stride = (reg == 2) ? 2 * m_ : 2;
        for (int q = 0; q < p; ++q) stride *= n_;
        const Eigen::Index period = n_ * stride;
        const Eigen::Index base_sys = a * env_;
        Vec scratch(n_);
        for (Eigen::Index hi = 0; hi < env_; hi += period)
            for (Eigen::Index lo = 0; lo < stride; ++lo) {
                const Eigen::Index base = base_sys + hi + lo;
                for (Eigen::Index y = 0; y < n_; ++y) scratch(y) = v(base + y * stride);
                for (Eigen::Index y = 0; y < n_; ++y) {
                    cplx acc = 0.0;
                    for (Eigen::Index y2 = 0; y2 < n_; ++y2) acc += op(y, y2) * scratch(y2);
                    v(base + y * stride) = acc;
                }
            }
    }

    // System-conditioned phase-estimation boost on one register.
    void apply_round(Vec& v, const std::vector<Mat>& per_state_op, int reg) const {
        for (Eigen::Index a = 0; a < d_; ++a)
            for (int p = 0; p < g_; ++p) apply_digit(v, per_state_op[static_cast<std::size_t>(a)], a, reg, p);
    }

    void apply_system(Vec& v, const Mat& op) const {
        Vec scratch(d_);
        for (Eigen::Index slot = 0; slot < env_; ++slot) {
            for (Eigen::Index a = 0; a < d_; ++a) scratch(a) = v(a * env_ + slot);
            for (Eigen::Index a = 0; a < d_; ++a) {
                cplx acc = 0.0;
                for (Eigen::Index b = 0; b < d_; ++b) acc += op(a, b) * scratch(b);
                v(a * env_ + slot) = acc;
            }
        }
    }

    // Flag rotation conditioned on the two register medians.
    void apply_flag_rotation(Vec& v, const RMat& fgrid, double tau) const {
        for (Eigen::Index e2 = 0; e2 < m_; ++e2)
            for (Eigen::Index e3 = 0; e3 < m_; ++e3) {
                const double f = fgrid(median_of(e2), median_of(e3));
                const double c = std::sqrt(std::max(0.0, 1.0 - tau * tau * f));
                const double s = tau * std::sqrt(f);
                const Eigen::Index off = (e2 * m_ + e3) * 2;
                for (Eigen::Index a = 0; a < d_; ++a) {
                    const Eigen::Index i0 = a * env_ + off;
                    const cplx v0 = v(i0), v1 = v(i0 + 1);
                    v(i0) = c * v0 + s * v1;
                    v(i0 + 1) = s * v0 - c * v1;
                }
            }
    }

    void project_flag(Vec& v, int keep) const {
        const int drop = 1 - keep;
        for (Eigen::Index i = drop; i < dim_; i += 2) v(i) = 0.0;
    }

  private:
    Eigen::Index d_, n_;
    int g_;
    Eigen::Index m_ = 0, env_ = 0, dim_ = 0;
    std::vector<Eigen::Index> medians_;
};

}  // namespace detail

inline ReferenceChannel build_reference_channel(const EigenSystem& es, const EnergyGrid& grid,
                                                int g, const JumpEnsemble& jumps, double beta,
                                                double tau) {
    if (g < 1 || g % 2 == 0)
        throw std::invalid_argument("build_reference_channel: g must be odd and positive");
    if (beta < 0.0 || tau < 0.0)
        throw std::invalid_argument("build_reference_channel: beta and tau must be nonnegative");
    validate_jump_ensemble(jumps);
    const Eigen::Index d = es.eigenvalues.size();
    const Eigen::Index n_points = grid.points.size();
    if (es.eigenvalues(d - 1) >= grid.kappa)
        throw std::invalid_argument("build_reference_channel: spectrum exceeds grid range");

    detail::JointRegisters regs(d, n_points, g);
    const RMat fgrid = acceptance_grid(grid, beta);

    // Per-eigenstate single-round boost unitaries, both orientations.
    std::vector<Mat> rounds, rounds_flipped;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mu = es.eigenvalues(j) / grid.kappa;
        rounds.push_back(qpe_round_unitary(mu, grid.r, false));
        rounds_flipped.push_back(qpe_round_unitary(mu, grid.r, true));
    }

    const Eigen::Index dd = d * d;
    Mat acc_total = Mat::Zero(dd, dd);
    Mat acc_a = Mat::Zero(dd, dd);
    Mat acc_b = Mat::Zero(dd, dd);
    Mat acc_r = Mat::Zero(dd, dd);

    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Vec v(regs.dim());
    std::vector<Vec> out_a(static_cast<std::size_t>(d)), out_b(static_cast<std::size_t>(d)),
        out_r(static_cast<std::size_t>(d));

    for (std::size_t c = 0; c < jumps.size(); ++c) {
        const Mat ctilde = es.eigenvectors.adjoint() * jumps.ops[c] * es.eigenvectors;
        for (int flip = 0; flip < 2; ++flip) {
            const auto& fwd = flip ? rounds_flipped : rounds;
            const double weight = jumps.weights[c] / 2.0;
            for (Eigen::Index j = 0; j < d; ++j) {
                v.setZero();
                v(j * regs.env()) = 1.0;   // |ψ_j⟩ ⊗ |0⟩ ⊗ |0⟩ ⊗ |0⟩
                // Proposal step: estimate, jump, re-estimate.
                regs.apply_round(v, fwd, 2);
                regs.apply_system(v, ctilde);
                regs.apply_round(v, fwd, 3);
                // First weak round: x = W Δ0 U v.
                regs.project_flag(v, 0);
                regs.apply_flag_rotation(v, fgrid, tau);
                Vec x = v;
                regs.project_flag(x, 1);
                out_a[static_cast<std::size_t>(j)] = x;
                // Second weak round: y = W Δ0 (W Δ0 U v).
                regs.project_flag(v, 0);
                regs.apply_flag_rotation(v, fgrid, tau);
                Vec y = v;
                regs.project_flag(y, 1);
                out_b[static_cast<std::size_t>(j)] = y;
                // Null branch undoes the proposal.
                regs.project_flag(v, 0);
                for (Eigen::Index a = 0; a < d; ++a)
                    for (int p = 0; p < g; ++p)
                        regs.apply_digit(v, fwd[static_cast<std::size_t>(a)].adjoint(), a, 3, p);
                regs.apply_system(v, ctilde.adjoint());
                for (Eigen::Index a = 0; a < d; ++a)
                    for (int p = 0; p < g; ++p)
                        regs.apply_digit(v, fwd[static_cast<std::size_t>(a)].adjoint(), a, 2, p);
                out_r[static_cast<std::size_t>(j)] = v;
            }
            for (Eigen::Index j = 0; j < d; ++j)
                for (Eigen::Index h = 0; h < d; ++h) {
                    const Eigen::Index col = j + d * h;
                    const auto block = [&](const std::vector<Vec>& outs) {
                        Eigen::Map<const RowMajor> lhs(outs[static_cast<std::size_t>(j)].data(), d,
                                                       regs.env());
                        Eigen::Map<const RowMajor> rhs(outs[static_cast<std::size_t>(h)].data(), d,
                                                       regs.env());
                        return Mat(lhs * rhs.adjoint());
                    };
                    acc_a.col(col) += weight * vec(block(out_a));
                    acc_b.col(col) += weight * vec(block(out_b));
                    acc_r.col(col) += weight * vec(block(out_r));
                }
        }
    }
    acc_total = acc_a + acc_b + acc_r;

    const Mat kv = super_conjugation(es.eigenvectors).m;
    ReferenceChannel ref;
    ref.tau = tau;
    ref.beta = beta;
    ref.r = grid.r;
    ref.g = g;
    ref.total = Superoperator{d, kv * acc_total * kv.adjoint()};
    ref.accept = Superoperator{d, kv * acc_a * kv.adjoint()};
    ref.accept_second = Superoperator{d, kv * acc_b * kv.adjoint()};
    ref.reject = Superoperator{d, kv * acc_r * kv.adjoint()};
    return ref;
}

}  // namespace qms
