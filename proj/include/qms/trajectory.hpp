// trajectory.hpp — Monte Carlo unravellings of the sampler.
//
// Two modes: a dense register-level simulation that carries the full joint
// pure state and measures flag and readout registers exactly as the circuit
// would (small r·g only), and a Kraus-sampled mode that draws from the
// compressed per-move case maps and scales to long chains.
#pragma once

#include <qms/channel_fast.hpp>
#include <qms/channel_reference.hpp>
#include <qms/norms.hpp>
#include <qms/rng.hpp>
#include <qms/superoperator.hpp>
#include <qms/types.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qms {

// Measurement outcome of one iteration: which proposal move fired, in which
// orientation, and which branch the flag readings selected.
enum class CaseLabel : int { excite_first = 0, excite_second = 1, null_round = 2 };

struct TrajectoryRecord {
    std::uint64_t iteration = 0;
    std::size_t jump = 0;
    bool flipped = false;
    CaseLabel label = CaseLabel::null_round;
    Eigen::Index readout_pre = -1;    // measured register values (dense mode)
    Eigen::Index readout_post = -1;
    Vec post_state;                   // system pure state after the iteration, eigenbasis
};

struct ChainResult {
    std::vector<TrajectoryRecord> records;
    Vec final_state;                      // system pure state, lab frame
    std::array<std::uint64_t, 3> case_counts{};   // indexed by CaseLabel

    void count(CaseLabel label) { ++case_counts[static_cast<std::size_t>(label)]; }
};

// ---- dense register-level mode ----

class DenseTrajectory {
  public:
    DenseTrajectory(const EigenSystem& es, const EnergyGrid& grid, int g,
                    const JumpEnsemble& jumps, double beta, double tau, std::uint64_t seed)
        : es_(es),
          jumps_(jumps),
          g_(g),
          tau_(tau),
          seed_(seed),
          regs_(es.eigenvalues.size(), grid.points.size(), g),
          fgrid_(acceptance_grid(grid, beta)) {
        if (g < 1 || g % 2 == 0)
            throw std::invalid_argument("DenseTrajectory: g must be odd and positive");
        validate_jump_ensemble(jumps);
        const Eigen::Index d = es.eigenvalues.size();
        for (Eigen::Index j = 0; j < d; ++j) {
            const double mu = es.eigenvalues(j) / grid.kappa;
            rounds_.push_back(qpe_round_unitary(mu, grid.r, false));
            rounds_flipped_.push_back(qpe_round_unitary(mu, grid.r, true));
        }
        for (std::size_t c = 0; c < jumps.size(); ++c)
            ctilde_.push_back(es.eigenvectors.adjoint() * jumps.ops[c] * es.eigenvectors);
        psi_ = Vec::Zero(d);
        psi_(0) = 1.0;
    }

    void set_state_lab(const Vec& psi_lab) {
        if (psi_lab.size() != psi_.size())
            throw std::invalid_argument("DenseTrajectory: state dimension mismatch");
        psi_ = es_.eigenvectors.adjoint() * psi_lab;
        psi_.normalize();
    }

    Vec state_lab() const { return es_.eigenvectors * psi_; }
    const Vec& state_eigen() const { return psi_; }

    TrajectoryRecord step(std::uint64_t iteration) {
        CounterRng rng(seed_, iteration);
        TrajectoryRecord rec;
        rec.iteration = iteration;

        // Draw the proposal move and its orientation.
        std::vector<double> move_weights;
        move_weights.reserve(jumps_.size() * 2);
        for (std::size_t c = 0; c < jumps_.size(); ++c) {
            move_weights.push_back(jumps_.weights[c] / 2.0);
            move_weights.push_back(jumps_.weights[c] / 2.0);
        }
        const std::size_t pick = rng.sample_discrete(move_weights);
        rec.jump = pick / 2;
        rec.flipped = (pick % 2) != 0;
        const auto& fwd = rec.flipped ? rounds_flipped_ : rounds_;
        const Eigen::Index d = psi_.size();

        Vec v = Vec::Zero(regs_.dim());
        for (Eigen::Index a = 0; a < d; ++a) v(a * regs_.env()) = psi_(a);
        regs_.apply_round(v, fwd, 2);
        regs_.apply_system(v, ctilde_[rec.jump]);
        regs_.apply_round(v, fwd, 3);

        regs_.apply_flag_rotation(v, fgrid_, tau_);
        if (measure_flag(v, rng)) {
            rec.label = CaseLabel::excite_first;
        } else {
            regs_.apply_flag_rotation(v, fgrid_, tau_);
            if (measure_flag(v, rng)) {
                rec.label = CaseLabel::excite_second;
            } else {
                rec.label = CaseLabel::null_round;
                for (Eigen::Index a = 0; a < d; ++a)
                    for (int p = 0; p < g_; ++p)
                        regs_.apply_digit(v, fwd[static_cast<std::size_t>(a)].adjoint(), a, 3, p);
                regs_.apply_system(v, ctilde_[rec.jump].adjoint());
                for (Eigen::Index a = 0; a < d; ++a)
                    for (int p = 0; p < g_; ++p)
                        regs_.apply_digit(v, fwd[static_cast<std::size_t>(a)].adjoint(), a, 2, p);
            }
        }
        measure_registers(v, rng, rec);
        return rec;
    }

  private:
    // Born measurement of the flag; projects and renormalizes in place.
    bool measure_flag(Vec& v, CounterRng& rng) {
        double p1 = 0.0;
        for (Eigen::Index i = 1; i < v.size(); i += 2) p1 += std::norm(v(i));
        const bool fired = rng.uniform() < p1;
        regs_.project_flag(v, fired ? 1 : 0);
        const double norm = v.norm();
        if (norm < 1e-150) throw std::runtime_error("DenseTrajectory: measurement of weight zero");
        v /= norm;
        return fired;
    }

    // Computational-basis readout of both registers; collapses the system
    // back to a pure state stored in psi_.
    void measure_registers(const Vec& v, CounterRng& rng, TrajectoryRecord& rec) {
        const Eigen::Index d = psi_.size();
        const Eigen::Index m = regs_.registers();
        const double u = rng.uniform();
        double acc = 0.0;
        Eigen::Index stop2 = m - 1, stop3 = m - 1;
        for (Eigen::Index e2 = 0; e2 < m && acc <= u; ++e2)
            for (Eigen::Index e3 = 0; e3 < m; ++e3) {
                double q = 0.0;
                for (Eigen::Index a = 0; a < d; ++a) {
                    const Eigen::Index base = a * regs_.env() + (e2 * m + e3) * 2;
                    q += std::norm(v(base)) + std::norm(v(base + 1));
                }
                acc += q;
                if (acc > u) {
                    stop2 = e2;
                    stop3 = e3;
                    break;
                }
            }
        rec.readout_pre = stop2;
        rec.readout_post = stop3;
        for (Eigen::Index a = 0; a < d; ++a) {
            const Eigen::Index base = a * regs_.env() + (stop2 * m + stop3) * 2;
            psi_(a) = v(base) + v(base + 1);   // exactly one flag component is nonzero
        }
        const double norm = psi_.norm();
        if (norm < 1e-150) throw std::runtime_error("DenseTrajectory: register readout of weight zero");
        psi_ /= norm;
    }

    EigenSystem es_;
    JumpEnsemble jumps_;
    int g_;
    double tau_;
    std::uint64_t seed_;
    detail::JointRegisters regs_;
    RMat fgrid_;
    std::vector<Mat> rounds_, rounds_flipped_, ctilde_;
    Vec psi_;
};

inline ChainResult run_chain_dense(const EigenSystem& es, const EnergyGrid& grid, int g,
                                   const JumpEnsemble& jumps, double beta, double tau,
                                   const Vec& psi0_lab, std::uint64_t iterations,
                                   std::uint64_t seed) {
    DenseTrajectory traj(es, grid, g, jumps, beta, tau, seed);
    traj.set_state_lab(psi0_lab);
    ChainResult out;
    out.records.reserve(static_cast<std::size_t>(iterations));
    for (std::uint64_t it = 0; it < iterations; ++it) {
        TrajectoryRecord rec = traj.step(it);
        rec.post_state = traj.state_eigen();
        out.count(rec.label);
        out.records.push_back(std::move(rec));
    }
    out.final_state = traj.state_lab();
    return out;
}

// Exhaustive single-iteration average: enumerates every measurement outcome
// (move, flag readings, register readouts), weights each collapsed output by
// its branch probability, and returns both the per-case conditional states
// and the overall average.  Independent of the channel builders; used as the
// unravelling-soundness oracle.
struct IterationBreakdown {
    Mat average_state;                            // lab frame
    std::array<double, 3> case_probabilities{};   // indexed by CaseLabel
    std::array<Mat, 3> case_states;               // lab frame, normalized; zero if unreachable
};

inline IterationBreakdown iteration_breakdown(const EigenSystem& es, const EnergyGrid& grid,
                                              int g, const JumpEnsemble& jumps, double beta,
                                              double tau, const Vec& psi_lab) {
    if (g < 1 || g % 2 == 0)
        throw std::invalid_argument("iteration_breakdown: g must be odd and positive");
    validate_jump_ensemble(jumps);
    const Eigen::Index d = es.eigenvalues.size();
    detail::JointRegisters regs(d, grid.points.size(), g);
    const RMat fgrid = acceptance_grid(grid, beta);
    std::vector<Mat> rounds, rounds_flipped;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mu = es.eigenvalues(j) / grid.kappa;
        rounds.push_back(qpe_round_unitary(mu, grid.r, false));
        rounds_flipped.push_back(qpe_round_unitary(mu, grid.r, true));
    }
    Vec psi = es.eigenvectors.adjoint() * psi_lab;
    psi.normalize();

    IterationBreakdown out;
    std::array<Mat, 3> acc;
    acc.fill(Mat::Zero(d, d));
    const Eigen::Index m = regs.registers();

    // Sum of all register-readout collapses of a flag-definite joint vector.
    auto accumulate = [&](Mat& target, const Vec& v, double weight) {
        Vec block(d);
        for (Eigen::Index e2 = 0; e2 < m; ++e2)
            for (Eigen::Index e3 = 0; e3 < m; ++e3)
                for (int z = 0; z < 2; ++z) {
                    for (Eigen::Index a = 0; a < d; ++a)
                        block(a) = v(a * regs.env() + (e2 * m + e3) * 2 + z);
                    target += weight * (block * block.adjoint());
                }
    };

    for (std::size_t c = 0; c < jumps.size(); ++c) {
        const Mat ct = es.eigenvectors.adjoint() * jumps.ops[c] * es.eigenvectors;
        for (int flip = 0; flip < 2; ++flip) {
            const double weight = jumps.weights[c] / 2.0;
            const auto& fwd = flip ? rounds_flipped : rounds;
            Vec v = Vec::Zero(regs.dim());
            for (Eigen::Index a = 0; a < d; ++a) v(a * regs.env()) = psi(a);
            regs.apply_round(v, fwd, 2);
            regs.apply_system(v, ct);
            regs.apply_round(v, fwd, 3);

            regs.apply_flag_rotation(v, fgrid, tau);
            Vec branch = v;
            regs.project_flag(branch, 1);
            out.case_probabilities[0] += weight * branch.squaredNorm();
            accumulate(acc[0], branch, weight);

            regs.project_flag(v, 0);
            regs.apply_flag_rotation(v, fgrid, tau);
            branch = v;
            regs.project_flag(branch, 1);
            out.case_probabilities[1] += weight * branch.squaredNorm();
            accumulate(acc[1], branch, weight);

            regs.project_flag(v, 0);
            for (Eigen::Index a = 0; a < d; ++a)
                for (int p = 0; p < g; ++p)
                    regs.apply_digit(v, fwd[static_cast<std::size_t>(a)].adjoint(), a, 3, p);
            regs.apply_system(v, ct.adjoint());
            for (Eigen::Index a = 0; a < d; ++a)
                for (int p = 0; p < g; ++p)
                    regs.apply_digit(v, fwd[static_cast<std::size_t>(a)].adjoint(), a, 2, p);
            out.case_probabilities[2] += weight * v.squaredNorm();
            accumulate(acc[2], v, weight);
        }
    }

    const Mat kv = es.eigenvectors;
    Mat total = Mat::Zero(d, d);
    for (int s = 0; s < 3; ++s) {
        const auto si = static_cast<std::size_t>(s);
        total += acc[si];
        if (out.case_probabilities[si] > 1e-14)
            out.case_states[si] = kv * (acc[si] / out.case_probabilities[si]) * kv.adjoint();
        else
            out.case_states[si] = Mat::Zero(d, d);
    }
    out.average_state = kv * total * kv.adjoint();
    return out;
}

// ---- Kraus-sampled mode ----

// Kraus decomposition of a completely positive map via its Choi matrix.
struct KrausSet {
    std::vector<Mat> ops;
    double choi_negativity = 0.0;   // most negative Choi eigenvalue clamped away
};

inline KrausSet kraus_from_superoperator(const Superoperator& s, double clamp_tol = 1e-9) {
    const Mat choi = choi_matrix(s);
    Eigen::SelfAdjointEigenSolver<Mat> saes(0.5 * (choi + choi.adjoint()));
    KrausSet set;
    const Eigen::Index d = s.dim;
    for (Eigen::Index i = 0; i < saes.eigenvalues().size(); ++i) {
        const double lambda = saes.eigenvalues()(i);
        if (lambda < 0.0) {
            set.choi_negativity = std::min(set.choi_negativity, lambda);
            if (lambda < -clamp_tol)
                throw std::runtime_error("kraus_from_superoperator: map is not completely positive");
            continue;
        }
        if (lambda == 0.0) continue;
        Mat k(d, d);
        for (Eigen::Index col = 0; col < d; ++col)
            for (Eigen::Index row = 0; row < d; ++row)
                k(row, col) = saes.eigenvectors()(col * d + row, i);
        set.ops.push_back(std::sqrt(lambda) * k);
    }
    return set;
}

// Per-move sampler state: three case maps resolved into Kraus sets, plus the
// linear forms giving each case's firing probability.
class KrausTrajectory {
  public:
    KrausTrajectory(const EigenSystem& es, const FastChannel& fc, std::uint64_t seed)
        : es_(es), seed_(seed) {
        if (fc.pieces.empty())
            throw std::invalid_argument(
                "KrausTrajectory: channel was built without per-move pieces");
        const double tau = fc.dec.tau;
        const double t2 = tau * tau, t4 = t2 * t2;
        const Eigen::Index d = fc.dec.E.dim;
        const Mat id = Mat::Identity(d * d, d * d);
        for (const auto& piece : fc.pieces) {
            MoveSampler ms;
            ms.weight = piece.weight;
            ms.jump = piece.jump;
            ms.flipped = piece.flipped;
            const Mat accept = t2 * piece.Ma.m;
            const Mat accept2 = t2 * piece.Ma.m - t4 * piece.Ma2.m;
            const Mat reject = id - t2 * super_anticommutator(piece.R).m + t4 * piece.Jr.m;
            const Superoperator cases[3] = {{d, accept}, {d, accept2}, {d, reject}};
            double tp_dev = 0.0;
            Mat ksum = Mat::Zero(d, d);
            for (int s = 0; s < 3; ++s) {
                ms.kraus[static_cast<std::size_t>(s)] = kraus_from_superoperator(cases[s]);
                ms.prob_form[static_cast<std::size_t>(s)] =
                    cases[s].m.adjoint() * vec(Mat::Identity(d, d));
                for (const auto& k : ms.kraus[static_cast<std::size_t>(s)].ops)
                    ksum += k.adjoint() * k;
            }
            tp_dev = (ksum - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
            max_tp_dev_ = std::max(max_tp_dev_, tp_dev);
            movers_.push_back(std::move(ms));
        }
    }

    double max_tp_dev() const { return max_tp_dev_; }

    // One iteration on an eigenbasis pure state.
    Vec step(const Vec& psi_eigen, std::uint64_t iteration, TrajectoryRecord* rec_out) const {
        CounterRng rng(seed_, iteration);
        std::vector<double> weights;
        weights.reserve(movers_.size());
        for (const auto& ms : movers_) weights.push_back(ms.weight);
        const std::size_t pick = rng.sample_discrete(weights);
        const MoveSampler& ms = movers_[pick];

        const Vec rho_vec = vec(Mat(psi_eigen * psi_eigen.adjoint()));
        double probs[3];
        for (int s = 0; s < 3; ++s)
            probs[s] = std::max(0.0, std::real(ms.prob_form[static_cast<std::size_t>(s)].dot(rho_vec)));
        const std::size_t label =
            rng.sample_discrete(std::vector<double>(probs, probs + 3));

        // Within the chosen case, draw a Kraus operator by Born weight.
        const auto& kset = ms.kraus[label];
        std::vector<double> kw(kset.ops.size());
        std::vector<Vec> outs(kset.ops.size());
        for (std::size_t i = 0; i < kset.ops.size(); ++i) {
            outs[i] = kset.ops[i] * psi_eigen;
            kw[i] = outs[i].squaredNorm();
        }
        const std::size_t ki = rng.sample_discrete(kw);
        Vec next = outs[ki];
        next.normalize();
        if (rec_out) {
            rec_out->iteration = iteration;
            rec_out->jump = ms.jump;
            rec_out->flipped = ms.flipped;
            rec_out->label = static_cast<CaseLabel>(static_cast<int>(label));
        }
        return next;
    }

  private:
    struct MoveSampler {
        std::size_t jump = 0;
        bool flipped = false;
        double weight = 0.0;
        std::array<KrausSet, 3> kraus;
        std::array<Vec, 3> prob_form;   // p_case = Re⟨form, vec(ρ)⟩
    };
    EigenSystem es_;
    std::uint64_t seed_;
    std::vector<MoveSampler> movers_;
    double max_tp_dev_ = 0.0;
};

inline ChainResult run_chain_kraus(const EigenSystem& es, const FastChannel& fc,
                                   const Vec& psi0_lab, std::uint64_t iterations,
                                   std::uint64_t seed, bool keep_records = true) {
    KrausTrajectory traj(es, fc, seed);
    Vec psi = es.eigenvectors.adjoint() * psi0_lab;
    psi.normalize();
    ChainResult out;
    if (keep_records) out.records.reserve(static_cast<std::size_t>(iterations));
    for (std::uint64_t it = 0; it < iterations; ++it) {
        TrajectoryRecord rec;
        psi = traj.step(psi, it, &rec);
        out.count(rec.label);
        if (keep_records) out.records.push_back(rec);
    }
    out.final_state = es.eigenvectors * psi;
    return out;
}

// ---- sample statistics ----

inline Mat empirical_state(const std::vector<Vec>& pure_states) {
    if (pure_states.empty()) throw std::invalid_argument("empirical_state: no samples");
    const Eigen::Index d = pure_states.front().size();
    Mat acc = Mat::Zero(d, d);
    for (const auto& psi : pure_states) acc += psi * psi.adjoint();
    return acc / static_cast<double>(pure_states.size());
}

// Bootstrap spread of the trace distance between the empirical state and a
// fixed reference: resamples trajectories with replacement.
struct BootstrapDistance {
    double observed = 0.0;      // distance of the full-sample mean to the reference
    double boot_mean = 0.0;     // mean resampled distance (carries the sampling bias)
    double boot_sigma = 0.0;
    bool within(double n_sigma) const {
        return observed <= boot_mean + n_sigma * boot_sigma;
    }
};

inline BootstrapDistance bootstrap_trace_distance(const std::vector<Vec>& pure_states,
                                                  const Mat& reference, int resamples,
                                                  std::uint64_t seed) {
    if (pure_states.empty()) throw std::invalid_argument("bootstrap_trace_distance: no samples");
    BootstrapDistance out;
    out.observed = trace_distance(empirical_state(pure_states), reference);
    const std::size_t t = pure_states.size();
    const Eigen::Index d = pure_states.front().size();
    CounterRng rng(seed, 1);
    double sum = 0.0, sumsq = 0.0;
    for (int b = 0; b < resamples; ++b) {
        Mat acc = Mat::Zero(d, d);
        for (std::size_t i = 0; i < t; ++i) {
            const auto pickd = static_cast<std::size_t>(rng.uniform() * static_cast<double>(t));
            const std::size_t pick = std::min(pickd, t - 1);
            acc += pure_states[pick] * pure_states[pick].adjoint();
        }
        acc /= static_cast<double>(t);
        const double dist = trace_distance(acc, reference);
        sum += dist;
        sumsq += dist * dist;
    }
    out.boot_mean = sum / resamples;
    out.boot_sigma = std::sqrt(std::max(0.0, sumsq / resamples - out.boot_mean * out.boot_mean));
    return out;
}

// Entrywise bootstrap spread of the empirical state itself.
struct BootstrapState {
    Mat mean;
    RMat sigma_re, sigma_im;
};

inline BootstrapState bootstrap_state(const std::vector<Vec>& pure_states, int resamples,
                                      std::uint64_t seed) {
    if (pure_states.empty()) throw std::invalid_argument("bootstrap_state: no samples");
    const Eigen::Index d = pure_states.front().size();
    const std::size_t t = pure_states.size();
    BootstrapState out;
    out.mean = empirical_state(pure_states);
    RMat sum_re = RMat::Zero(d, d), sum_im = RMat::Zero(d, d);
    RMat sq_re = RMat::Zero(d, d), sq_im = RMat::Zero(d, d);
    CounterRng rng(seed, 2);
    for (int b = 0; b < resamples; ++b) {
        Mat acc = Mat::Zero(d, d);
        for (std::size_t i = 0; i < t; ++i) {
            const auto pickd = static_cast<std::size_t>(rng.uniform() * static_cast<double>(t));
            const std::size_t pick = std::min(pickd, t - 1);
            acc += pure_states[pick] * pure_states[pick].adjoint();
        }
        acc /= static_cast<double>(t);
        sum_re += acc.real();
        sum_im += acc.imag();
        sq_re += acc.real().cwiseProduct(acc.real());
        sq_im += acc.imag().cwiseProduct(acc.imag());
    }
    const double rb = resamples;
    out.sigma_re = (sq_re / rb - (sum_re / rb).cwiseProduct(sum_re / rb)).cwiseMax(0.0).cwiseSqrt();
    out.sigma_im = (sq_im / rb - (sum_im / rb).cwiseProduct(sum_im / rb)).cwiseMax(0.0).cwiseSqrt();
    return out;
}

}  // namespace qms
