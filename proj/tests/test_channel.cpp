// test_channel.cpp — the per-iteration channel: builds, branches, and orders.
#include <catch2/catch_amalgamated.hpp>

#include <qms/channel_fast.hpp>
#include <qms/channel_reference.hpp>
#include <qms/energy_grid.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/norms.hpp>
#include <qms/superoperator.hpp>

#include "helpers.hpp"

using namespace qms;

namespace {

const JumpEnsemble& paulis() {
    static const JumpEnsemble e = pauli_jump_ensemble(2);
    return e;
}

}  // namespace

TEST_CASE("iteration map is trace preserving and completely positive") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    for (double tau : {0.05, 0.2}) {
        const ChannelDecomposition dec = build_fast_channel(es, grid, 3, paulis(), 1.0, tau);
        const CptpReport rep = cptp_report(dec.E);
        INFO("tau=" << tau << " trace_dev=" << rep.trace_preservation_dev
                    << " choi_min=" << rep.choi_min_eigenvalue);
        REQUIRE(rep.trace_preservation_dev <= 1e-10);
        REQUIRE(rep.choi_hermiticity_dev <= 1e-10);
        REQUIRE(rep.choi_min_eigenvalue >= -1e-9);
    }
}

TEST_CASE("iteration map equals identity plus the two generator orders") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    const double tau = 0.1;
    const ChannelDecomposition dec = build_fast_channel(es, grid, 3, paulis(), 1.0, tau);
    const Eigen::Index dd = dec.E.m.rows();
    const Mat assembled =
        Mat::Identity(dd, dd) + tau * tau * dec.L.m + std::pow(tau, 4) * dec.J.m;
    REQUIRE(test::max_abs(dec.E.m - assembled) <= 1e-10);
    const Superoperator extracted = extract_fourth_order(dec.E, dec.L, tau);
    REQUIRE(test::max_abs(extracted.m - dec.J.m) <= 1e-9);
}

TEST_CASE("generator orders are separately traceless") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    const ChannelDecomposition dec = build_fast_channel(es, grid, 3, paulis(), 1.0, 0.1);
    const Eigen::Index d = dec.E.dim;
    const Vec id_vec = vec(Mat::Identity(d, d));
    // Trace preservation at every coupling forces each order to vanish on the
    // trace functional separately.
    REQUIRE(test::max_abs(Mat(id_vec.adjoint() * dec.L.m)) <= 1e-12);
    REQUIRE(test::max_abs(Mat(id_vec.adjoint() * dec.J.m)) <= 1e-10);
}

TEST_CASE("fast build reproduces the register-level reference") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    for (int g : {1, 3}) {
        const ReferenceChannel ref = build_reference_channel(es, grid, g, paulis(), 1.0, 0.2);
        const ChannelDecomposition dec = build_fast_channel(es, grid, g, paulis(), 1.0, 0.2);
        INFO("g=" << g);
        REQUIRE(test::max_abs(ref.total.m - dec.E.m) <= 1e-9);
        REQUIRE(test::max_abs(ref.accept.m - dec.accept.m) <= 1e-9);
        REQUIRE(test::max_abs(ref.accept_second.m - dec.accept_second.m) <= 1e-9);
        REQUIRE(test::max_abs(ref.reject.m - dec.reject.m) <= 1e-9);
    }
}

TEST_CASE("measurement branches sum to the full map") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    const ChannelDecomposition dec = build_fast_channel(es, grid, 3, paulis(), 1.0, 0.1);
    REQUIRE(test::max_abs(dec.accept.m + dec.accept_second.m + dec.reject.m - dec.E.m) <= 1e-12);
}

TEST_CASE("per-move case maps admit a Kraus form") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const double tau = 0.2;
    const FastChannel fc = build_fast_channel_detailed(es, grid, 3, paulis(), 1.0, tau, true);
    REQUIRE_FALSE(fc.pieces.empty());
    const Eigen::Index d = fc.dec.E.dim;
    const Mat id = Mat::Identity(d * d, d * d);
    const double t2 = tau * tau, t4 = t2 * t2;
    for (const auto& piece : fc.pieces) {
        const Mat cases[3] = {t2 * piece.Ma.m, t2 * piece.Ma.m - t4 * piece.Ma2.m,
                              id - t2 * super_anticommutator(piece.R).m + t4 * piece.Jr.m};
        for (const auto& m : cases) {
            const CptpReport rep = cptp_report(Superoperator{d, m});
            REQUIRE(rep.choi_min_eigenvalue >= -1e-9);
        }
    }
}

TEST_CASE("second-order generator matches the channel route") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    const ChannelDecomposition dec = build_fast_channel(es, grid, 3, paulis(), 1.0, 0.1);
    const Superoperator direct = second_order_generator(es, grid, 3, paulis(), 1.0);
    REQUIRE(test::max_abs(direct.m - dec.L.m) <= 1e-12);
}

TEST_CASE("fourth-order piece is stable across extraction scales") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const ChannelDecomposition a = build_fast_channel(es, grid, 3, paulis(), 1.0, 0.05);
    const ChannelDecomposition b = build_fast_channel(es, grid, 3, paulis(), 1.0, 0.2);
    const double measured = test::max_abs(a.J.m - b.J.m);
    REQUIRE(measured <= fourth_order_envelope(0.05, 0.2));
}

TEST_CASE("induced norms sit inside the stated envelopes") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    const ChannelDecomposition dec = build_fast_channel(es, grid, 3, paulis(), 1.0, 0.1);
    REQUIRE(induced_norm_estimate(dec.L, 128) <= 4.0 + 1e-9);
    REQUIRE(induced_norm_estimate(dec.J, 128) <= 4.0 + 1e-9);
    REQUIRE(induced_norm_estimate(dec.E, 128) <= 1.0 + 1e-9);
}

TEST_CASE("channel build rejects invalid parameters") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    REQUIRE_THROWS(build_fast_channel(es, grid, 2, paulis(), 1.0, 0.1));
    REQUIRE_THROWS(build_fast_channel(es, grid, 3, paulis(), -1.0, 0.1));
    REQUIRE_THROWS(build_fast_channel(es, grid, 3, paulis(), 1.0, -0.1));
    REQUIRE_THROWS(extract_fourth_order(super_identity(4), super_zero(4), 0.0));
}

TEST_CASE("acceptance weights clip at unity and respect detailed balance") {
    const EnergyGrid grid = energy_grid(3, 4.0);
    const RMat f = acceptance_grid(grid, 1.0);
    const Eigen::Index n = grid.points.size();
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            REQUIRE(f(a, b) <= 1.0 + 1e-15);
            REQUIRE(f(a, b) >= 0.0);
            // One direction of every pair is a sure acceptance; the other
            // carries the thermal ratio.
            const double product = f(a, b) * f(b, a);
            const double ratio = std::exp(-std::abs(grid.points(a) - grid.points(b)));
            REQUIRE_THAT(product, Catch::Matchers::WithinAbs(ratio, 1e-12));
        }
}
