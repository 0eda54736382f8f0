// helpers.hpp — shared fixtures and small utilities for the unit tests.
#pragma once

#include <qms/config.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/rng.hpp>
#include <qms/types.hpp>

namespace test {

inline double max_abs(const qms::Mat& m) { return m.cwiseAbs().maxCoeff(); }

// Default desk-scale model: two-site transverse-field Ising chain.
inline const qms::EigenSystem& default_model() {
    static const qms::EigenSystem es = qms::eigensystem(qms::build_tfim(2, 1.0, 0.5));
    return es;
}

inline qms::Mat random_density(qms::CounterRng& rng, Eigen::Index d) {
    qms::Mat a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            a(i, j) = qms::cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    qms::Mat rho = a * a.adjoint() + 1e-3 * qms::Mat::Identity(d, d);
    return rho / rho.trace().real();
}

inline qms::Vec random_pure(qms::CounterRng& rng, Eigen::Index d) {
    qms::Vec psi(d);
    for (Eigen::Index i = 0; i < d; ++i)
        psi(i) = qms::cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    psi.normalize();
    return psi;
}

}  // namespace test
