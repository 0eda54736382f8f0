// test_norms.cpp — trace norms, weighted norms, and induced-norm estimation.
#include <catch2/catch_amalgamated.hpp>

#include <qms/lindblad.hpp>
#include <qms/norms.hpp>
#include <qms/rng.hpp>
#include <qms/superoperator.hpp>

#include "helpers.hpp"

using namespace qms;

namespace {

Mat random_matrix(CounterRng& rng, Eigen::Index d) {
    Mat m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    return m;
}

Mat random_unitary(CounterRng& rng, Eigen::Index d) {
    Eigen::HouseholderQR<Mat> qr(random_matrix(rng, d));
    return Mat(qr.householderQ());
}

}  // namespace

TEST_CASE("trace norm equals the root-eigenvalue sum of the square") {
    CounterRng rng(11, 0);
    for (int k = 0; k < 5; ++k) {
        const Mat m = random_matrix(rng, 4);
        Eigen::SelfAdjointEigenSolver<Mat> saes(m.adjoint() * m);
        double expected = 0.0;
        for (Eigen::Index i = 0; i < 4; ++i)
            expected += std::sqrt(std::max(0.0, saes.eigenvalues()(i)));
        REQUIRE_THAT(trace_norm(m), Catch::Matchers::WithinAbs(expected, 1e-10));
    }
}

TEST_CASE("trace norm maximizer attains the variational characterization") {
    CounterRng rng(13, 0);
    const Mat m = random_matrix(rng, 4);
    const double tn = trace_norm(m);
    const Mat x = trace_norm_maximizer(m);
    REQUIRE(test::max_abs(x.adjoint() * x - Mat::Identity(4, 4)) <= 1e-12);
    REQUIRE_THAT(std::abs((m * x).trace()), Catch::Matchers::WithinAbs(tn, 1e-10));
    for (int k = 0; k < 200; ++k) {
        const Mat u = random_unitary(rng, 4);
        REQUIRE(std::abs((m * u).trace()) <= tn + 1e-10);
    }
}

TEST_CASE("trace distance is a metric") {
    CounterRng rng(17, 0);
    const Mat a = test::random_density(rng, 4);
    const Mat b = test::random_density(rng, 4);
    const Mat c = test::random_density(rng, 4);
    REQUIRE(trace_distance(a, a) == 0.0);
    REQUIRE_THAT(trace_distance(a, b), Catch::Matchers::WithinAbs(trace_distance(b, a), 1e-14));
    REQUIRE(trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-14);
    REQUIRE(trace_distance(a, b) <= 1.0 + 1e-12);
}

TEST_CASE("weighted norm with a dominating weight controls the trace norm") {
    // With sigma the inverse of a full-rank state (so sigma is at least the
    // identity), the weighted Hilbert-Schmidt norm dominates the trace norm up
    // to the dimension factor 2^n.
    CounterRng rng(19, 0);
    for (int k = 0; k < 5; ++k) {
        const Mat rho = test::random_density(rng, 4);
        const Mat sigma_half = matrix_power_hermitian(rho, -0.5);
        Mat m = random_matrix(rng, 4);
        m = 0.5 * (m + m.adjoint());
        const double weighted_sq = sigma_weighted_norm_sq(sigma_half, m);
        REQUIRE(trace_norm(m) * trace_norm(m) <= 4.0 * weighted_sq + 1e-10);
    }
}

TEST_CASE("partial trace collapses product operators") {
    CounterRng rng(23, 0);
    const Mat a = random_matrix(rng, 2);
    const Mat b = random_matrix(rng, 3);
    Mat joint = Mat::Zero(6, 6);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j)
            for (Eigen::Index k = 0; k < 3; ++k)
                for (Eigen::Index l = 0; l < 3; ++l)
                    joint(i * 3 + k, j * 3 + l) = a(i, j) * b(k, l);
    const Mat reduced = partial_trace_second(joint, 2, 3);
    REQUIRE(test::max_abs(reduced - b.trace() * a) <= 1e-13);
}

TEST_CASE("induced norm estimate recovers known superoperator norms") {
    // Identity and unitary conjugation are trace-norm isometries.
    REQUIRE_THAT(induced_norm_estimate(super_identity(4), 64),
                 Catch::Matchers::WithinAbs(1.0, 1e-9));
    CounterRng rng(29, 0);
    const Mat u = random_unitary(rng, 4);
    REQUIRE_THAT(induced_norm_estimate(super_sandwich(u, u.adjoint()), 64),
                 Catch::Matchers::WithinAbs(1.0, 1e-9));
    // The anticommutator with a positive diagonal peaks at twice its largest
    // entry, attained on the corresponding projector.
    Mat dpos = Mat::Zero(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) dpos(i, i) = 0.25 * static_cast<double>(i + 1);
    const double est = induced_norm_estimate(super_anticommutator(dpos), 256);
    REQUIRE(est <= 2.0 + 1e-9);
    REQUIRE(est >= 2.0 - 1e-4);
}

TEST_CASE("superoperator powers follow binary exponentiation") {
    CounterRng rng(31, 0);
    Mat m = random_matrix(rng, 4);
    m /= 4.0;  // keep powers bounded
    const Superoperator s{2, m};
    Mat direct = Mat::Identity(4, 4);
    for (int i = 0; i < 7; ++i) direct = direct * m;
    REQUIRE(test::max_abs(super_power(s, 7).m - direct) <= 1e-13);
    REQUIRE(test::max_abs(super_power(s, 0).m - Mat::Identity(4, 4)) == 0.0);
}

TEST_CASE("choi matrix of a conjugation is the expected rank-one projector") {
    CounterRng rng(37, 0);
    const Mat u = random_unitary(rng, 3);
    const Mat choi = choi_matrix(super_conjugation(u));
    Eigen::SelfAdjointEigenSolver<Mat> saes(choi);
    REQUIRE_THAT(saes.eigenvalues()(saes.eigenvalues().size() - 1),
                 Catch::Matchers::WithinAbs(3.0, 1e-10));
    REQUIRE(std::abs(saes.eigenvalues()(saes.eigenvalues().size() - 2)) <= 1e-10);
    const CptpReport rep = cptp_report(super_conjugation(u));
    REQUIRE(rep.trace_preservation_dev <= 1e-12);
    REQUIRE(rep.choi_min_eigenvalue >= -1e-12);
}
