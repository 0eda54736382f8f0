// jump_ensemble.hpp — random unitary proposal moves and their sampling weights.
#pragma once

#include <qms/pauli.hpp>
#include <qms/rng.hpp>
#include <qms/types.hpp>

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace qms {

// A finite set of unitary proposal moves C with probabilities μ(C).  The
// sampler requires closure under adjoints with matching weights so that the
// averaged dynamics is self-dual up to the detailed-balance factor.
struct JumpEnsemble {
    std::vector<Mat> ops;
    std::vector<double> weights;
    std::vector<std::size_t> adjoint_index;   // ops[adjoint_index[c]] == ops[c]†
    std::string name;

    std::size_t size() const { return ops.size(); }
};

namespace detail {

inline void fill_adjoint_index(JumpEnsemble& e, double tol) {
    const std::size_t m = e.ops.size();
    e.adjoint_index.assign(m, m);
    for (std::size_t c = 0; c < m; ++c) {
        const Mat adj = e.ops[c].adjoint();
        for (std::size_t c2 = 0; c2 < m; ++c2) {
            if ((e.ops[c2] - adj).cwiseAbs().maxCoeff() < tol &&
                std::abs(e.weights[c2] - e.weights[c]) < tol) {
                e.adjoint_index[c] = c2;
                break;
            }
        }
        if (e.adjoint_index[c] == m)
            throw std::invalid_argument("jump ensemble is not closed under adjoints");
    }
}

}  // namespace detail

inline void validate_jump_ensemble(const JumpEnsemble& e, double tol = 1e-12) {
    if (e.ops.empty()) throw std::invalid_argument("jump ensemble is empty");
    const Eigen::Index d = e.ops[0].rows();
    double total = 0.0;
    for (std::size_t c = 0; c < e.ops.size(); ++c) {
        const Mat& u = e.ops[c];
        if (u.rows() != d || u.cols() != d)
            throw std::invalid_argument("jump ensemble has mixed dimensions");
        if ((u.adjoint() * u - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("jump ensemble entry is not unitary");
        if (e.weights[c] <= 0.0) throw std::invalid_argument("jump weights must be positive");
        total += e.weights[c];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("jump weights must sum to one");
}

// Rank of span{C ⊗ C̄} over the ensemble; equals d² iff the averaged
// conjugation map can mix every matrix entry (ergodic proposals).
inline Eigen::Index jump_span_rank(const JumpEnsemble& e, double tol = 1e-9) {
    const Eigen::Index d = e.ops[0].rows();
    Mat stacked(static_cast<Eigen::Index>(e.ops.size()), d * d);
    for (std::size_t c = 0; c < e.ops.size(); ++c)
        stacked.row(static_cast<Eigen::Index>(c)) = vec(e.ops[c]).transpose();
    Eigen::JacobiSVD<Mat> svd(stacked);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * sv(0)) ++rank;
    return rank;
}

// Uniform ensemble of all non-identity Pauli strings on n qubits.  Each
// member is Hermitian, so adjoint closure is immediate.
inline JumpEnsemble pauli_jump_ensemble(int n) {
    if (n < 1 || n > 6) throw std::invalid_argument("pauli_jump_ensemble: need 1 <= n <= 6");
    JumpEnsemble e;
    e.name = "paulis";
    const auto labels = pauli_labels(n);
    for (const auto& label : labels) {
        if (label == std::string(static_cast<std::size_t>(n), 'I')) continue;
        e.ops.push_back(pauli_string(label));
    }
    e.weights.assign(e.ops.size(), 1.0 / static_cast<double>(e.ops.size()));
    detail::fill_adjoint_index(e, 1e-12);
    return e;
}

// Diagonal-only proposals (Z strings).  Commutes with any diagonal
// Hamiltonian eigenbasis structure, so it cannot mix populations of states
// it fails to connect; used as a negative control for fixed-point uniqueness.
inline JumpEnsemble z_only_ensemble(int n) {
    if (n < 1 || n > 6) throw std::invalid_argument("z_only_ensemble: need 1 <= n <= 6");
    JumpEnsemble e;
    e.name = "z_only";
    const auto labels = pauli_labels(n);
    for (const auto& label : labels) {
        if (label == std::string(static_cast<std::size_t>(n), 'I')) continue;
        if (label.find_first_not_of("IZ") != std::string::npos) continue;
        e.ops.push_back(pauli_string(label));
    }
    e.weights.assign(e.ops.size(), 1.0 / static_cast<double>(e.ops.size()));
    detail::fill_adjoint_index(e, 1e-12);
    return e;
}

inline JumpEnsemble single_jump_ensemble(const Mat& op, const std::string& name) {
    JumpEnsemble e;
    e.name = name;
    e.ops.push_back(op);
    e.weights.assign(1, 1.0);
    detail::fill_adjoint_index(e, 1e-12);
    return e;
}

inline JumpEnsemble make_jump_ensemble(const std::string& kind, int n) {
    if (kind == "paulis") return pauli_jump_ensemble(n);
    if (kind == "z_only") return z_only_ensemble(n);
    throw std::invalid_argument("unknown jump set '" + kind + "' (expected paulis or z_only)");
}

}  // namespace qms
