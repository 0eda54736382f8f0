// gram.hpp — median-resolved Gram matrices of boosted readout amplitudes.
#pragma once

#include <qms/qpe_amplitudes.hpp>
#include <qms/types.hpp>

#include <vector>

namespace qms {

// G^{(m)}_{jk} = Σ_{E ∈ S^g : med(E) = m} β_{jE} β*_{kE}, where E runs over
// g-tuples of grid indices and β_{jE} is the product readout amplitude.
// Summed over all medians m the diagonal masses add to 1; each block is PSD.
struct GramFamily {
    int g = 1;
    bool flipped = false;
    std::vector<Mat> by_median;   // one d×d block per grid point

    Eigen::Index points() const { return static_cast<Eigen::Index>(by_median.size()); }
    const Mat& at(Eigen::Index m) const { return by_median.at(static_cast<std::size_t>(m)); }

    Mat total() const {
        Mat t = Mat::Zero(by_median[0].rows(), by_median[0].cols());
        for (const auto& b : by_median) t += b;
        return t;
    }
};

enum class GramMethod { order_statistics, enumeration };

namespace detail {

inline std::vector<double> binomial_row(int g) {
    std::vector<double> row(static_cast<std::size_t>(g) + 1, 0.0);
    row[0] = 1.0;
    for (int i = 1; i <= g; ++i)
        for (int j = i; j >= 1; --j) row[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j - 1)];
    return row;
}

// Σ over g-tuples in which at least (g+1)/2 entries carry cumulative weight
// `below` out of `total`.  Multilinear in the weights, so it is valid for the
// complex per-point weights u_y = β_{jy} β*_{ky}.
inline cplx at_least_half_below(cplx below, cplx total, int g, const std::vector<double>& binom) {
    const int need = (g + 1) / 2;
    const cplx above = total - below;
    cplx sum = 0.0;
    cplx below_pow = 1.0;
    for (int c = 0; c <= g; ++c) {
        if (c >= need) {
            cplx above_pow = 1.0;
            for (int i = 0; i < g - c; ++i) above_pow *= above;
            sum += binom[static_cast<std::size_t>(c)] * below_pow * above_pow;
        }
        below_pow *= below;
    }
    return sum;
}

}  // namespace detail

// Cumulative order-statistics route: O(2^r · g) per matrix entry.
inline GramFamily gram_family_order_statistics(const AmplitudeTable& t, int g, bool flipped) {
    if (g < 1 || g % 2 == 0)
        throw std::invalid_argument("gram_family: g must be odd and positive");
    const Eigen::Index d = t.dim();
    const Eigen::Index n = t.points();
    const auto binom = detail::binomial_row(g);
    GramFamily fam;
    fam.g = g;
    fam.flipped = flipped;
    fam.by_median.assign(static_cast<std::size_t>(n), Mat::Zero(d, d));
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index k = j; k < d; ++k) {
            // prefix(m) = Σ_{y ≤ m} β_{jy} β*_{ky}
            Vec prefix(n);
            cplx acc = 0.0;
            for (Eigen::Index y = 0; y < n; ++y) {
                acc += t.beta(j, y) * std::conj(t.beta(k, y));
                prefix(y) = acc;
            }
            const cplx total = prefix(n - 1);
            cplx prev = 0.0;
            for (Eigen::Index m = 0; m < n; ++m) {
                const cplx cum = detail::at_least_half_below(prefix(m), total, g, binom);
                const cplx val = cum - prev;
                prev = cum;
                fam.by_median[static_cast<std::size_t>(m)](j, k) = val;
                if (k != j) fam.by_median[static_cast<std::size_t>(m)](k, j) = std::conj(val);
            }
        }
    if (flipped)
        for (auto& b : fam.by_median) b = b.conjugate().eval();
    return fam;
}

// Brute-force route for cross-checks: walks all 2^{rg} readout tuples.
inline GramFamily gram_family_enumeration(const AmplitudeTable& t, int g, bool flipped) {
    if (g < 1 || g % 2 == 0)
        throw std::invalid_argument("gram_family: g must be odd and positive");
    const Eigen::Index d = t.dim();
    const Eigen::Index n = t.points();
    double tuples_d = std::pow(static_cast<double>(n), g);
    if (tuples_d > 2e7) throw std::invalid_argument("gram_family_enumeration: 2^{rg} too large");
    GramFamily fam;
    fam.g = g;
    fam.flipped = flipped;
    fam.by_median.assign(static_cast<std::size_t>(n), Mat::Zero(d, d));
    std::vector<Eigen::Index> digits(static_cast<std::size_t>(g), 0);
    const auto tuples = static_cast<std::uint64_t>(tuples_d);
    Vec amp(d);
    for (std::uint64_t it = 0; it < tuples; ++it) {
        for (Eigen::Index j = 0; j < d; ++j) {
            cplx a = 1.0;
            for (int p = 0; p < g; ++p) a *= t.beta(j, digits[static_cast<std::size_t>(p)]);
            amp(j) = a;
        }
        const Eigen::Index med = median_index(digits);
        fam.by_median[static_cast<std::size_t>(med)] += amp * amp.adjoint();
        // odometer increment
        for (int p = 0; p < g; ++p) {
            if (++digits[static_cast<std::size_t>(p)] < n) break;
            digits[static_cast<std::size_t>(p)] = 0;
        }
    }
    if (flipped)
        for (auto& b : fam.by_median) b = b.conjugate().eval();
    return fam;
}

inline GramFamily gram_family(const AmplitudeTable& t, int g, bool flipped = false,
                              GramMethod method = GramMethod::order_statistics) {
    return method == GramMethod::order_statistics ? gram_family_order_statistics(t, g, flipped)
                                                  : gram_family_enumeration(t, g, flipped);
}

// Probability mass the g-round median assigns outside the two bracketing grid
// cells of eigenstate j; decays geometrically in g.
inline double median_tail_mass(const GramFamily& fam, const AmplitudeTable& t, Eigen::Index j) {
    const Eigen::Index n = t.points();
    double inside = 0.0;
    const Eigen::Index f0 = t.floor_index[static_cast<std::size_t>(j)];
    inside += std::real(fam.at(f0)(j, j));
    if (f0 + 1 < n) inside += std::real(fam.at(f0 + 1)(j, j));
    return std::max(0.0, 1.0 - inside);
}

}  // namespace qms
