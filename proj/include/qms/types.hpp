// types.hpp — shared scalar aliases and small dense-matrix helpers.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace qms {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = 3.141592653589793238462643383279502884;

inline bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Eigen::Index n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("log2_exact: not a power of two");
    int k = 0;
    while ((Eigen::Index{1} << k) < n) ++k;
    return k;
}

// ---- column-stacking convention ----
//
// vec stacks columns: vec(ρ)[i + d·j] = ρ(i, j).  Under this convention
// vec(A ρ Bᵀ) = (B ⊗ A) vec(ρ), so the superoperator of ρ ↦ A ρ B is
// kron(Bᵀ, A).  All superoperator matrices in this library use this layout.

inline Vec vec(const Mat& m) {
    Vec v(m.size());
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) v(idx++) = m(i, j);
    return v;
}

inline Mat unvec(const Vec& v, Eigen::Index d) {
    if (v.size() != d * d) throw std::invalid_argument("unvec: size is not d*d");
    Mat m(d, d);
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) m(i, j) = v(idx++);
    return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline void require_hermitian(const Mat& m, double tol, const std::string& who) {
    if (m.rows() != m.cols()) throw std::invalid_argument(who + ": matrix is not square");
    double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (dev > tol)
        throw std::invalid_argument(who + ": matrix is not Hermitian (deviation " +
                                    std::to_string(dev) + ")");
}

}  // namespace qms
