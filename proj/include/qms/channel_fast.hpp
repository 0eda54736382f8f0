// channel_fast.hpp — compressed assembly of one sampler iteration.
//
// Instead of carrying the readout registers explicitly, every register sum is
// collapsed into median-resolved Gram matrices (single register) or a
// median-pair table built by an order-statistics recurrence (register pairs,
// needed for the fourth-order null-branch term).  The result is exact: the
// iteration map satisfies E = I + τ²L + τ⁴J with τ-independent L and J.
#pragma once

#include <qms/energy_grid.hpp>
#include <qms/gram.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/qpe_amplitudes.hpp>
#include <qms/superoperator.hpp>
#include <qms/types.hpp>

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qms {

// Lab-frame pieces of one iteration: E = I + τ²L + τ⁴J, with the dissipator
// L = 2·Ma − {R,·} and the fourth-order correction J = Jr − Ma2.  Ma carries
// the acceptance weights f, Ma2 the weights f², Jr the null-branch pair term.
struct ChannelDecomposition {
    double tau = 0.0;
    double beta = 0.0;
    int r = 0;
    int g = 0;
    Superoperator E, L, J;
    Superoperator Ma, Ma2, Jr;
    Mat R;                      // null-rate operator (Hermitian)
    Superoperator accept, accept_second, reject;   // the three measurement branches
};

// Eigenbasis pieces of a single proposal move (jump, orientation); used by
// the trajectory sampler to resolve which move fired.
struct JumpCasePieces {
    std::size_t jump = 0;
    bool flipped = false;
    double weight = 0.0;        // μ(C)/2
    Superoperator Ma, Ma2, Jr;  // eigenbasis frame
    Mat R;
};

struct FastChannel {
    ChannelDecomposition dec;
    std::vector<JumpCasePieces> pieces;   // filled only when requested
};

namespace detail {

// Valid per-round category counts (n_a, n_b, n_c, n_d) for the two-register
// median constraint: at least (g+1)/2 rounds must fall at-or-below each
// threshold, where a counts rounds below both, b/c below exactly one.
struct MedianPairTerm {
    int na, nb, nc, nd;
    double coeff;   // multinomial g! / (na! nb! nc! nd!)
};

inline std::vector<MedianPairTerm> median_pair_terms(int g) {
    std::vector<double> fact(static_cast<std::size_t>(g) + 1, 1.0);
    for (int i = 1; i <= g; ++i)
        fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
    const int need = (g + 1) / 2;
    std::vector<MedianPairTerm> terms;
    for (int na = 0; na <= g; ++na)
        for (int nb = 0; nb + na <= g; ++nb)
            for (int nc = 0; nc + nb + na <= g; ++nc) {
                const int nd = g - na - nb - nc;
                if (na + nb < need || na + nc < need) continue;
                const double coeff =
                    fact[static_cast<std::size_t>(g)] /
                    (fact[static_cast<std::size_t>(na)] * fact[static_cast<std::size_t>(nb)] *
                     fact[static_cast<std::size_t>(nc)] * fact[static_cast<std::size_t>(nd)]);
                terms.push_back({na, nb, nc, nd, coeff});
            }
    return terms;
}

// Given per-round pair weights w(ȳ, y), returns the table
//   Θ(m, m̃) = Σ over g-round pair tuples with med(y) = m, med(ȳ) = m̃
//              of Π_rounds w(ȳ_t, y_t),
// via 2-d cumulative sums and the multinomial split over threshold events.
inline Mat median_pair_table(const Mat& w, int g, const std::vector<MedianPairTerm>& terms) {
    const Eigen::Index n = w.rows();
    // prefix(i, j) = Σ_{ȳ < i, y < j} w(ȳ, y), one-based.
    Mat prefix = Mat::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx rowacc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            rowacc += w(i, j);
            prefix(i + 1, j + 1) = prefix(i, j + 1) + rowacc;
        }
    }
    const cplx total = prefix(n, n);
    const auto g1 = static_cast<std::size_t>(g + 1);
    std::vector<cplx> pa(g1), pb(g1), pc(g1), pd(g1);
    // s(t̄+1, t+1) = Σ over tuples with med(ȳ) ≤ t̄ and med(y) ≤ t.
    Mat s = Mat::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i <= n; ++i)
        for (Eigen::Index j = 0; j <= n; ++j) {
            if (i == 0 || j == 0) continue;   // a median cannot be below the grid
            const cplx a = prefix(i, j);
            const cplx b = prefix(n, j) - a;
            const cplx c = prefix(i, n) - a;
            const cplx dd = total - a - b - c;
            pa[0] = pb[0] = pc[0] = pd[0] = 1.0;
            for (std::size_t k = 1; k < g1; ++k) {
                pa[k] = pa[k - 1] * a;
                pb[k] = pb[k - 1] * b;
                pc[k] = pc[k - 1] * c;
                pd[k] = pd[k - 1] * dd;
            }
            cplx acc = 0.0;
            for (const auto& t : terms)
                acc += t.coeff * pa[static_cast<std::size_t>(t.na)] *
                       pb[static_cast<std::size_t>(t.nb)] * pc[static_cast<std::size_t>(t.nc)] *
                       pd[static_cast<std::size_t>(t.nd)];
            s(i, j) = acc;
        }
    Mat theta(n, n);
    for (Eigen::Index m2 = 0; m2 < n; ++m2)          // m̃ (ȳ median)
        for (Eigen::Index m = 0; m < n; ++m)          // m (y median)
            theta(m, m2) = s(m2 + 1, m + 1) - s(m2, m + 1) - s(m2 + 1, m) + s(m2, m);
    return theta;
}

// Median-pair tables for all eigenstate 4-tuples: key (j, h, v, u) stores
//   Θ(m, m̃) = Σ_{med E = m, med Ē = m̃} β_{jE} β*_{hĒ} Π_t (V_v V_u†)(Ē_t, E_t).
// The transport factor couples the two registers; it arises from tracing the
// unwound proposal of the null branch.
class MedianPairTables {
  public:
    MedianPairTables(const AmplitudeTable& table, int g) : d_(table.dim()), n_(table.points()) {
        const auto terms = median_pair_terms(g);
        RVec mu(d_);
        for (Eigen::Index j = 0; j < d_; ++j)
            mu(j) = table.grid.points(table.floor_index[static_cast<std::size_t>(j)]) /
                        table.grid.kappa +
                    table.epsilon(j);
        // Round transport kernels T^{(v,u)}(ȳ, y) = geo(μ_v − μ_u + (y − ȳ)/N).
        std::vector<Mat> transport(static_cast<std::size_t>(d_ * d_));
        for (Eigen::Index v = 0; v < d_; ++v)
            for (Eigen::Index u = 0; u < d_; ++u) {
                Mat t(n_, n_);
                for (Eigen::Index yb = 0; yb < n_; ++yb)
                    for (Eigen::Index y = 0; y < n_; ++y)
                        t(yb, y) = geometric_kernel(
                            mu(v) - mu(u) +
                                static_cast<double>(y - yb) / static_cast<double>(n_),
                            n_);
                transport[static_cast<std::size_t>(v * d_ + u)] = t;
            }
        tables_.resize(static_cast<std::size_t>(d_ * d_ * d_ * d_));
        Mat w(n_, n_);
        for (Eigen::Index j = 0; j < d_; ++j)
            for (Eigen::Index h = 0; h < d_; ++h)
                for (Eigen::Index v = 0; v < d_; ++v)
                    for (Eigen::Index u = 0; u < d_; ++u) {
                        const Mat& t = transport[static_cast<std::size_t>(v * d_ + u)];
                        for (Eigen::Index yb = 0; yb < n_; ++yb)
                            for (Eigen::Index y = 0; y < n_; ++y)
                                w(yb, y) = table.beta(j, y) * std::conj(table.beta(h, yb)) *
                                           t(yb, y);
                        tables_[key(j, h, v, u)] = median_pair_table(w, g, terms);
                    }
    }

    const Mat& at(Eigen::Index j, Eigen::Index h, Eigen::Index v, Eigen::Index u) const {
        return tables_[key(j, h, v, u)];
    }

  private:
    std::size_t key(Eigen::Index j, Eigen::Index h, Eigen::Index v, Eigen::Index u) const {
        return static_cast<std::size_t>(((j * d_ + h) * d_ + v) * d_ + u);
    }
    Eigen::Index d_, n_;
    std::vector<Mat> tables_;
};

}  // namespace detail

// Excitation map for one proposal move: Schur-weighted conjugation by the
// move, with readout statistics entering through the Gram family and the
// pairwise weights grid (acceptance probabilities or their squares).
inline Superoperator weighted_excitation_map(const Mat& ctilde, const GramFamily& grams,
                                             const RMat& weights) {
    const Eigen::Index d = ctilde.rows();
    const Eigen::Index n = grams.points();
    const Mat kc = kron(ctilde.conjugate(), ctilde);
    Mat acc = Mat::Zero(d * d, d * d);
    for (Eigen::Index m2 = 0; m2 < n; ++m2) {
        Mat fw = Mat::Zero(d, d);
        for (Eigen::Index m = 0; m < n; ++m) fw += weights(m, m2) * grams.at(m);
        acc += vec(grams.at(m2)).asDiagonal() * kc * Mat(vec(fw).asDiagonal());
    }
    return Superoperator{d, acc};
}

// Null-rate operator R for one proposal move, eigenbasis frame.
inline Mat null_rate_operator(const Mat& ctilde, const GramFamily& grams, const RMat& weights) {
    const Eigen::Index d = ctilde.rows();
    const Eigen::Index n = grams.points();
    Mat r = Mat::Zero(d, d);
    for (Eigen::Index mb = 0; mb < n; ++mb) {
        RVec q = RVec::Zero(d);
        for (Eigen::Index mb2 = 0; mb2 < n; ++mb2)
            for (Eigen::Index k = 0; k < d; ++k)
                q(k) += weights(mb, mb2) * std::real(grams.at(mb2)(k, k));
        const Mat mid = ctilde.adjoint() * q.asDiagonal() * ctilde;
        r += grams.at(mb).conjugate().cwiseProduct(mid);
    }
    return r;
}

inline FastChannel build_fast_channel_detailed(const EigenSystem& es, const EnergyGrid& grid,
                                               int g, const JumpEnsemble& jumps, double beta,
                                               double tau, bool keep_pieces) {
    if (g < 1 || g % 2 == 0)
        throw std::invalid_argument("build_fast_channel: g must be odd and positive");
    if (beta < 0.0 || tau < 0.0)
        throw std::invalid_argument("build_fast_channel: beta and tau must be nonnegative");
    validate_jump_ensemble(jumps);
    const Eigen::Index d = es.eigenvalues.size();
    const Eigen::Index dd = d * d;
    const AmplitudeTable table = single_round_amplitudes(es, grid);
    const Eigen::Index n = table.points();
    const RMat f = acceptance_grid(grid, beta);
    const RMat f2 = f.cwiseProduct(f);

    const std::array<GramFamily, 2> grams = {gram_family(table, g, false),
                                             gram_family(table, g, true)};
    const detail::MedianPairTables pair_tables(table, g);

    // Φ[k, k̃](m, m̃) = Σ_{m', m̃'} f(m, m') f(m̃, m̃') Θ^{(k, k̃, k̃, k)}(m', m̃'),
    // orientation-resolved (the flipped orientation conjugates the tables).
    std::array<std::vector<Mat>, 2> phi;
    for (int flip = 0; flip < 2; ++flip) {
        phi[static_cast<std::size_t>(flip)].resize(static_cast<std::size_t>(dd));
        for (Eigen::Index k = 0; k < d; ++k)
            for (Eigen::Index k2 = 0; k2 < d; ++k2) {
                Mat th = pair_tables.at(k, k2, k2, k);
                if (flip) th = th.conjugate().eval();
                phi[static_cast<std::size_t>(flip)][static_cast<std::size_t>(k * d + k2)] =
                    f.cast<cplx>() * th * f.transpose().cast<cplx>();
            }
    }

    FastChannel out;
    Mat ma_acc = Mat::Zero(dd, dd), ma2_acc = Mat::Zero(dd, dd), jr_acc = Mat::Zero(dd, dd);
    Mat r_acc = Mat::Zero(d, d);

    Mat psi(dd, dd);
    for (std::size_t c = 0; c < jumps.size(); ++c) {
        const Mat ctilde = es.eigenvectors.adjoint() * jumps.ops[c] * es.eigenvectors;
        // p(k, j + d·a) = C̃(k, j) · C̃*(k, a) pairs the forward and adjoint legs.
        Mat p(d, dd);
        for (Eigen::Index k = 0; k < d; ++k)
            for (Eigen::Index j = 0; j < d; ++j)
                for (Eigen::Index a = 0; a < d; ++a)
                    p(k, j + d * a) = ctilde(k, j) * std::conj(ctilde(k, a));
        for (int flip = 0; flip < 2; ++flip) {
            const auto& gr = grams[static_cast<std::size_t>(flip)];
            const double weight = jumps.weights[c] / 2.0;
            JumpCasePieces piece;
            piece.jump = c;
            piece.flipped = flip != 0;
            piece.weight = weight;
            piece.Ma = weighted_excitation_map(ctilde, gr, f);
            piece.Ma2 = weighted_excitation_map(ctilde, gr, f2);
            piece.R = null_rate_operator(ctilde, gr, f);

            Mat jr = Mat::Zero(dd, dd);
            const auto& phis = phi[static_cast<std::size_t>(flip)];
            for (Eigen::Index m = 0; m < n; ++m)
                for (Eigen::Index m2 = 0; m2 < n; ++m2) {
                    Mat phival(d, d);
                    for (Eigen::Index k = 0; k < d; ++k)
                        for (Eigen::Index k2 = 0; k2 < d; ++k2)
                            phival(k, k2) =
                                phis[static_cast<std::size_t>(k * d + k2)](m, m2);
                    psi.noalias() = p.transpose() * phival * p.conjugate();
                    for (Eigen::Index j = 0; j < d; ++j)
                        for (Eigen::Index h = 0; h < d; ++h)
                            for (Eigen::Index a = 0; a < d; ++a)
                                for (Eigen::Index a2 = 0; a2 < d; ++a2) {
                                    cplx th = pair_tables.at(j, h, a2, a)(m, m2);
                                    if (flip) th = std::conj(th);
                                    jr(a + d * a2, j + d * h) += th * psi(j + d * a, h + d * a2);
                                }
                }
            piece.Jr = Superoperator{d, jr};

            ma_acc += weight * piece.Ma.m;
            ma2_acc += weight * piece.Ma2.m;
            jr_acc += weight * piece.Jr.m;
            r_acc += weight * piece.R;
            if (keep_pieces) out.pieces.push_back(std::move(piece));
        }
    }

    // Transform the averaged pieces to the lab frame and assemble the orders.
    const Mat kv = super_conjugation(es.eigenvectors).m;
    const Mat r_lab = es.eigenvectors * r_acc * es.eigenvectors.adjoint();
    auto to_lab = [&](const Mat& s) { return Superoperator{d, kv * s * kv.adjoint()}; };

    ChannelDecomposition dec;
    dec.tau = tau;
    dec.beta = beta;
    dec.r = grid.r;
    dec.g = g;
    dec.Ma = to_lab(ma_acc);
    dec.Ma2 = to_lab(ma2_acc);
    dec.Jr = to_lab(jr_acc);
    dec.R = r_lab;
    const Mat anti = super_anticommutator(r_lab).m;
    dec.L = Superoperator{d, 2.0 * dec.Ma.m - anti};
    dec.J = Superoperator{d, dec.Jr.m - dec.Ma2.m};
    const double t2 = tau * tau, t4 = t2 * t2;
    dec.E = Superoperator{d, Mat::Identity(dd, dd) + t2 * dec.L.m + t4 * dec.J.m};
    dec.accept = Superoperator{d, t2 * dec.Ma.m};
    dec.accept_second = Superoperator{d, t2 * dec.Ma.m - t4 * dec.Ma2.m};
    dec.reject = Superoperator{d, Mat::Identity(dd, dd) - t2 * anti + t4 * dec.Jr.m};
    out.dec = std::move(dec);
    return out;
}

inline ChannelDecomposition build_fast_channel(const EigenSystem& es, const EnergyGrid& grid,
                                               int g, const JumpEnsemble& jumps, double beta,
                                               double tau) {
    return build_fast_channel_detailed(es, grid, g, jumps, beta, tau, false).dec;
}

// Recover the fourth-order piece from a sampled iteration map; the division
// by τ⁴ makes τ = 0 a hard error rather than a silent NaN.
inline Superoperator extract_fourth_order(const Superoperator& e, const Superoperator& l,
                                          double tau) {
    if (tau == 0.0)
        throw std::invalid_argument(
            "extract_fourth_order: tau must be nonzero (the fourth-order piece is E - I - "
            "tau^2 L divided by tau^4)");
    const double t2 = tau * tau, t4 = t2 * t2;
    const Eigen::Index dd = e.m.rows();
    return Superoperator{e.dim, (e.m - Mat::Identity(dd, dd) - t2 * l.m) / t4};
}

// Term-wise variation envelope for fourth-order pieces re-extracted at two
// trial τ values.  Treats the two null-branch contributions with their
// apparent τ-dependent weights ω(f, τ) = f / (1 + √(1 − τ² f)) as varying
// independently; the actual assembled piece is τ-free, so measured
// differences must sit far below this envelope.
inline double fourth_order_envelope(double tau1, double tau2) {
    double env = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double f = static_cast<double>(i) / 1000.0;
        const auto omega = [&](double t) { return f / (1.0 + std::sqrt(1.0 - t * t * f)); };
        const double w1 = omega(tau1), w2 = omega(tau2);
        const double cross = 2.0 * f * std::abs(w1 - w2);
        const double square =
            f * std::abs(tau1 * tau1 * w1 * w1 - tau2 * tau2 * w2 * w2);
        env = std::max(env, cross + square);
    }
    return env;
}

// ---- median-class-resolved rates on the floored thermal state ----
//
// For the floored spectrum, every eigenstate's register median lands (up to a
// geometrically small tail) on one of the two grid points bracketing its
// energy: the floor (shift 0) or the next point up (shift 1).  Splitting the
// excitation and null rates over those shift classes exposes the exact
// detailed-balance cancellation between them.

struct ShiftClassRates {
    // Outputs of the class-restricted maps applied to the floored thermal
    // state, eigenbasis frame.  Index order: [source shift v][destination
    // shift s].
    std::array<std::array<Mat, 2>, 2> accept{};
    std::array<std::array<Mat, 2>, 2> reject_right{};
    Mat accept_full, reject_full;   // summed over all class pairs
    Mat accept_else, reject_else;   // mass outside the bracketing classes
    double beta_w = 0.0;            // β·w of the grid used
};

inline ShiftClassRates shift_class_rates(const EigenSystem& es, const EnergyGrid& grid, int g,
                                         const JumpEnsemble& jumps, double beta) {
    validate_jump_ensemble(jumps);
    const Eigen::Index d = es.eigenvalues.size();
    const AmplitudeTable table = single_round_amplitudes(es, grid);
    const Eigen::Index n = table.points();
    const RMat f = acceptance_grid(grid, beta);
    const GramFamily gr = gram_family(table, g, false);
    const GibbsState floored = truncated_gibbs(es, beta, grid);
    const RVec& p0 = floored.probabilities;

    // jump_avg[j](m, k) = Σ_C μ(C) C̃(m, j) C̃*(k, j)
    std::vector<Mat> jump_avg(static_cast<std::size_t>(d), Mat::Zero(d, d));
    for (std::size_t c = 0; c < jumps.size(); ++c) {
        const Mat ctilde = es.eigenvectors.adjoint() * jumps.ops[c] * es.eigenvectors;
        for (Eigen::Index j = 0; j < d; ++j)
            jump_avg[static_cast<std::size_t>(j)] +=
                jumps.weights[c] * (ctilde.col(j) * ctilde.col(j).adjoint());
    }

    ShiftClassRates rates;
    rates.beta_w = beta * grid.w;
    for (auto& row : rates.accept) row = {Mat::Zero(d, d), Mat::Zero(d, d)};
    for (auto& row : rates.reject_right) row = {Mat::Zero(d, d), Mat::Zero(d, d)};
    rates.accept_full = Mat::Zero(d, d);
    rates.reject_full = Mat::Zero(d, d);

    // General class pair (p, q): source median at grid p, destination median
    // (adjoint side) at grid q.  The shift classes are the j- and
    // k-dependent choices p = floor(j) + v, q = floor(k) + s.
    for (Eigen::Index mlo = 0; mlo < n; ++mlo)
        for (Eigen::Index m2 = 0; m2 < n; ++m2) {
            Mat acc_term = Mat::Zero(d, d);
            Mat rej_term = Mat::Zero(d, d);
            for (Eigen::Index j = 0; j < d; ++j) {
                const double mass = std::real(gr.at(mlo)(j, j));
                if (mass == 0.0) continue;
                for (Eigen::Index m = 0; m < d; ++m)
                    for (Eigen::Index k = 0; k < d; ++k) {
                        const cplx ja = jump_avg[static_cast<std::size_t>(j)](m, k);
                        const double gre = std::real(gr.at(m2)(m, k));
                        acc_term(m, k) += p0(j) * f(mlo, m2) * ja * mass * gre;
                        rej_term(m, k) += p0(k) * f(m2, mlo) * ja * mass * gre;
                    }
            }
            rates.accept_full += acc_term;
            rates.reject_full += rej_term;
            // Fold into shift classes where (mlo, m2) bracket the energies.
            for (int v = 0; v < 2; ++v)
                for (int s = 0; s < 2; ++s) {
                    Mat acc_vs = Mat::Zero(d, d);
                    Mat rej_vs = Mat::Zero(d, d);
                    bool any = false;
                    for (Eigen::Index j = 0; j < d; ++j) {
                        if (table.floor_index[static_cast<std::size_t>(j)] + v != mlo) continue;
                        const double mass = std::real(gr.at(mlo)(j, j));
                        if (mass == 0.0) continue;
                        for (Eigen::Index m = 0; m < d; ++m)
                            for (Eigen::Index k = 0; k < d; ++k) {
                                if (table.floor_index[static_cast<std::size_t>(k)] + s != m2)
                                    continue;
                                any = true;
                                const cplx ja = jump_avg[static_cast<std::size_t>(j)](m, k);
                                const double gre = std::real(gr.at(m2)(m, k));
                                acc_vs(m, k) += p0(j) * f(mlo, m2) * ja * mass * gre;
                                rej_vs(m, k) += p0(k) * f(m2, mlo) * ja * mass * gre;
                            }
                    }
                    if (any) {
                        rates.accept[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)] +=
                            acc_vs;
                        rates.reject_right[static_cast<std::size_t>(v)]
                                          [static_cast<std::size_t>(s)] += rej_vs;
                    }
                }
        }
    rates.accept_else = rates.accept_full;
    rates.reject_else = rates.reject_full;
    for (int v = 0; v < 2; ++v)
        for (int s = 0; s < 2; ++s) {
            rates.accept_else -= rates.accept[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)];
            rates.reject_else -=
                rates.reject_right[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)];
        }
    return rates;
}

// Residual of the exact Gibbs state under the second-order generator,
// assembled directly from the excitation and null-rate pieces.  Skips the
// fourth-order tables entirely, so resolution sweeps stay cheap.
struct ResidualReport {
    double residual = 0.0;   // ‖L(ρ_β)‖₁
    double beta_w = 0.0;     // β times the grid spacing
    Mat generator_image;     // L(ρ_β), eigenbasis frame
};

// Second-order generator L = 2·Ma − {R,·} assembled directly, without the
// fourth-order tables.  Much cheaper than the full channel build at large r.
inline Superoperator second_order_generator(const EigenSystem& es, const EnergyGrid& grid, int g,
                                            const JumpEnsemble& jumps, double beta,
                                            bool lab_frame = true) {
    if (g < 1 || g % 2 == 0)
        throw std::invalid_argument("second_order_generator: g must be odd and positive");
    validate_jump_ensemble(jumps);
    const Eigen::Index d = es.eigenvalues.size();
    const Eigen::Index dd = d * d;
    const AmplitudeTable table = single_round_amplitudes(es, grid);
    const RMat f = acceptance_grid(grid, beta);
    const std::array<GramFamily, 2> grams = {gram_family(table, g, false),
                                             gram_family(table, g, true)};
    Mat ma = Mat::Zero(dd, dd);
    Mat r_acc = Mat::Zero(d, d);
    for (std::size_t c = 0; c < jumps.size(); ++c) {
        const Mat ct = es.eigenvectors.adjoint() * jumps.ops[c] * es.eigenvectors;
        const double weight = jumps.weights[c] / 2.0;
        for (int flip = 0; flip < 2; ++flip) {
            const auto& gr = grams[static_cast<std::size_t>(flip)];
            ma += weight * weighted_excitation_map(ct, gr, f).m;
            r_acc += weight * null_rate_operator(ct, gr, f);
        }
    }
    Mat l = 2.0 * ma - super_anticommutator(r_acc).m;
    if (lab_frame) {
        const Mat kv = super_conjugation(es.eigenvectors).m;
        l = kv * l * kv.adjoint();
    }
    return Superoperator{d, l};
}

inline ResidualReport gibbs_residual(const EigenSystem& es, const EnergyGrid& grid, int g,
                                     const JumpEnsemble& jumps, double beta) {
    const Eigen::Index d = es.eigenvalues.size();
    const Superoperator l = second_order_generator(es, grid, g, jumps, beta, false);
    const GibbsState gs = gibbs(es, beta);
    Mat rho = Mat::Zero(d, d);
    rho.diagonal() = gs.probabilities.cast<cplx>();
    const Mat image = l.apply(rho);
    ResidualReport rep;
    rep.beta_w = beta * grid.w;
    rep.generator_image = image;
    rep.residual = [&image] {
        Eigen::JacobiSVD<Mat> svd(image);
        return svd.singularValues().sum();
    }();
    return rep;
}

}  // namespace qms
