// superoperator.hpp — dense superoperator algebra in the column-stacking convention.
#pragma once

#include <qms/types.hpp>

namespace qms {

// A linear map on d×d matrices stored as a d²×d² matrix acting on vec(ρ).
// Row/column index a = i + d·j addresses matrix entry (i, j); see types.hpp
// for the vec convention.  S(ρ)_{ij} = Σ_{kl} m(i+dj, k+dl) ρ_{kl}.
struct Superoperator {
    Eigen::Index dim = 0;   // Hilbert-space dimension d
    Mat m;                  // d² × d²

    Mat apply(const Mat& rho) const { return unvec(m * vec(rho), dim); }
};

inline Superoperator super_identity(Eigen::Index d) {
    return {d, Mat::Identity(d * d, d * d)};
}

inline Superoperator super_zero(Eigen::Index d) { return {d, Mat::Zero(d * d, d * d)}; }

// ρ ↦ A ρ B.
inline Superoperator super_sandwich(const Mat& a, const Mat& b) {
    return {a.rows(), kron(b.transpose(), a)};
}

// ρ ↦ A ρ A†.
inline Superoperator super_conjugation(const Mat& a) {
    return {a.rows(), kron(a.conjugate(), a)};
}

// ρ ↦ G ∘ ρ (entrywise product).
inline Superoperator super_hadamard(const Mat& g) {
    Superoperator s{g.rows(), Mat::Zero(g.size(), g.size())};
    s.m.diagonal() = vec(g);
    return s;
}

// ρ ↦ D ρ + ρ D.
inline Superoperator super_anticommutator(const Mat& d) {
    const Eigen::Index n = d.rows();
    return {n, kron(Mat::Identity(n, n), d) + kron(d.transpose(), Mat::Identity(n, n))};
}

// Choi matrix: block (k, l) equals S(|k⟩⟨l|).  Completely positive ⟺ PSD.
inline Mat choi_matrix(const Superoperator& s) {
    const Eigen::Index d = s.dim;
    Mat c(d * d, d * d);
    for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l)
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j)
                    c(k * d + i, l * d + j) = s.m(i + d * j, k + d * l);
    return c;
}

struct CptpReport {
    double trace_preservation_dev = 0.0;  // max |tr S(E_kl) − δ_kl|
    double choi_hermiticity_dev = 0.0;    // max |C − C†|
    double choi_min_eigenvalue = 0.0;     // of the Hermitized Choi matrix
};

inline CptpReport cptp_report(const Superoperator& s) {
    const Eigen::Index d = s.dim;
    CptpReport rep;
    for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l) {
            cplx tr = 0.0;
            for (Eigen::Index i = 0; i < d; ++i) tr += s.m(i + d * i, k + d * l);
            const double target = (k == l) ? 1.0 : 0.0;
            rep.trace_preservation_dev =
                std::max(rep.trace_preservation_dev, std::abs(tr - target));
        }
    Mat c = choi_matrix(s);
    rep.choi_hermiticity_dev = (c - c.adjoint()).cwiseAbs().maxCoeff();
    Mat ch = 0.5 * (c + c.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> solver(ch);
    rep.choi_min_eigenvalue = solver.eigenvalues()(0);
    return rep;
}

// S^k by binary exponentiation.
inline Superoperator super_power(const Superoperator& s, std::uint64_t k) {
    Superoperator acc = super_identity(s.dim);
    Mat base = s.m;
    while (k > 0) {
        if (k & 1ULL) acc.m = acc.m * base;
        base = base * base;
        k >>= 1;
    }
    return acc;
}

}  // namespace qms
