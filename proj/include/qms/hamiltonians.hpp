// hamiltonians.hpp — model Hamiltonians, spectral data and (truncated) Gibbs states.
#pragma once

#include <qms/energy_grid.hpp>
#include <qms/pauli.hpp>
#include <qms/rng.hpp>
#include <qms/types.hpp>

#include <cmath>

namespace qms {

// ---- operator and spectral types ----

struct HermitianOperator {
    Mat matrix;
    int n_qubits = 0;
};

inline HermitianOperator make_hermitian_operator(Mat m) {
    if (m.rows() != m.cols() || !is_power_of_two(m.rows()))
        throw std::invalid_argument("make_hermitian_operator: dimension must be a power of two");
    require_hermitian(m, 1e-12, "make_hermitian_operator");
    HermitianOperator h;
    h.n_qubits = log2_exact(m.rows());
    h.matrix = std::move(m);
    return h;
}

// Spectral decomposition with the spectrum shifted so min(E) = 0.  The original
// operator is V diag(E) V† + shift·I.  κ is the smallest power of two (integer
// exponent, possibly negative) strictly greater than max(E), so E_j/κ ∈ [0, 1).
struct EigenSystem {
    RVec eigenvalues;   // ascending, eigenvalues(0) == 0
    Mat eigenvectors;   // columns, orthonormal
    double kappa = 1.0;
    double shift = 0.0;

    Eigen::Index dim() const { return eigenvalues.size(); }
};

inline double smallest_power_of_two_above(double x) {
    if (x < 0.0) throw std::invalid_argument("smallest_power_of_two_above: negative input");
    if (x == 0.0) return 1.0;
    int e = static_cast<int>(std::ceil(std::log2(x)));
    // Guard against log2 rounding on exact powers of two.
    while (std::pow(2.0, e) <= x) ++e;
    while (e > -1022 && std::pow(2.0, e - 1) > x) --e;
    return std::pow(2.0, e);
}

inline EigenSystem eigensystem(const HermitianOperator& h) {
    Eigen::SelfAdjointEigenSolver<Mat> solver(h.matrix);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigensystem: eigensolver failed to converge");
    EigenSystem es;
    es.shift = solver.eigenvalues()(0);
    es.eigenvalues = solver.eigenvalues().array() - es.shift;
    es.eigenvalues(0) = 0.0;
    es.eigenvectors = solver.eigenvectors();
    es.kappa = smallest_power_of_two_above(es.eigenvalues(es.eigenvalues.size() - 1));
    return es;
}

// ---- model builders ----

// Transverse-field Ising chain J Σ Z_i Z_{i+1} + h Σ X_i with open boundary,
// shifted so the ground energy is exactly zero.
inline HermitianOperator build_tfim(int n, double J, double h) {
    if (n < 1 || n > 6) throw std::invalid_argument("build_tfim: n must be in [1, 6]");
    const Eigen::Index d = Eigen::Index{1} << n;
    Mat m = Mat::Zero(d, d);
    for (int i = 0; i + 1 < n; ++i)
        m += J * single_site(pauli_z(), i, n) * single_site(pauli_z(), i + 1, n);
    for (int i = 0; i < n; ++i) m += h * single_site(pauli_x(), i, n);
    Eigen::SelfAdjointEigenSolver<Mat> solver(m);
    m -= solver.eigenvalues()(0) * Mat::Identity(d, d);
    return make_hermitian_operator(std::move(m));
}

// Random k-local Hamiltonian: independent coefficients uniform in [−1, 1] on
// every Pauli string with support size between 1 and k, deterministic in seed.
// Shifted so the ground energy is exactly zero.
inline HermitianOperator build_random_local(int n, int k, std::uint64_t seed) {
    if (n < 1 || n > 6) throw std::invalid_argument("build_random_local: n must be in [1, 6]");
    if (k < 1 || k > n) throw std::invalid_argument("build_random_local: k must be in [1, n]");
    const Eigen::Index d = Eigen::Index{1} << n;
    CounterRng rng(seed);
    Mat m = Mat::Zero(d, d);
    for (const auto& label : pauli_labels(n)) {
        int weight = 0;
        for (char c : label)
            if (c != 'I') ++weight;
        if (weight < 1 || weight > k) continue;
        const double coeff = 2.0 * rng.uniform() - 1.0;
        m += coeff * pauli_string(label);
    }
    Eigen::SelfAdjointEigenSolver<Mat> solver(m);
    m -= solver.eigenvalues()(0) * Mat::Identity(d, d);
    return make_hermitian_operator(std::move(m));
}

// ---- Gibbs states ----

struct GibbsState {
    Mat matrix;
    RVec probabilities;   // in eigenbasis order of the source EigenSystem
    double partition = 0.0;
};

inline GibbsState gibbs(const EigenSystem& es, double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("gibbs: beta must be nonnegative");
    GibbsState g;
    RVec weights = (-beta * es.eigenvalues.array()).exp();
    g.partition = weights.sum();
    g.probabilities = weights / g.partition;
    g.matrix = es.eigenvectors * g.probabilities.asDiagonal() * es.eigenvectors.adjoint();
    return g;
}

// Gibbs weights evaluated at grid-floored energies, normalized by the same
// partition function as the exact state.  The result has trace ≥ 1; the
// deviation from the exact state is O(βw) (see the bounds in the test suite).
// Requires 2βw ≤ 1, otherwise the grid is too coarse for the floored weights
// to stay within the guaranteed precision envelope.
inline GibbsState truncated_gibbs(const EigenSystem& es, double beta, const EnergyGrid& grid) {
    if (!(beta >= 0.0)) throw std::invalid_argument("truncated_gibbs: beta must be nonnegative");
    if (2.0 * beta * grid.w > 1.0 + 1e-15)
        throw std::invalid_argument(
            "truncated_gibbs: grid too coarse, need 2*beta*w <= 1 (raise r or lower beta)");
    GibbsState exact = gibbs(es, beta);
    GibbsState g;
    g.partition = exact.partition;
    RVec floored(es.dim());
    for (Eigen::Index j = 0; j < es.dim(); ++j)
        floored(j) = std::floor(es.eigenvalues(j) / grid.w) * grid.w;
    g.probabilities = (-beta * floored.array()).exp() / g.partition;
    g.matrix = es.eigenvectors * g.probabilities.asDiagonal() * es.eigenvectors.adjoint();
    return g;
}

}  // namespace qms
