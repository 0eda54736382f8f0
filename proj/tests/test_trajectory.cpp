// test_trajectory.cpp — measurement-record unravelling of the iteration map.
#include <catch2/catch_amalgamated.hpp>

#include <qms/channel_fast.hpp>
#include <qms/energy_grid.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/norms.hpp>
#include <qms/trajectory.hpp>

#include "helpers.hpp"

using namespace qms;

namespace {

const JumpEnsemble& paulis() {
    static const JumpEnsemble e = pauli_jump_ensemble(2);
    return e;
}

Vec plus_state(Eigen::Index d) {
    Vec psi = Vec::Constant(d, cplx(1.0, 0.0));
    psi.normalize();
    return psi;
}

}  // namespace

TEST_CASE("chains are deterministic in the seed") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const Vec psi0 = plus_state(4);
    const ChainResult a = run_chain_dense(es, grid, 3, paulis(), 1.0, 0.2, psi0, 40, 99);
    const ChainResult b = run_chain_dense(es, grid, 3, paulis(), 1.0, 0.2, psi0, 40, 99);
    const ChainResult c = run_chain_dense(es, grid, 3, paulis(), 1.0, 0.2, psi0, 40, 100);
    REQUIRE(a.records.size() == 40);
    REQUIRE((a.final_state - b.final_state).norm() == 0.0);
    bool identical = true;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        identical = identical && a.records[i].jump == b.records[i].jump &&
                    a.records[i].flipped == b.records[i].flipped &&
                    a.records[i].label == b.records[i].label;
        REQUIRE((a.records[i].post_state - b.records[i].post_state).norm() == 0.0);
    }
    REQUIRE(identical);
    bool differs = (c.final_state - a.final_state).norm() > 1e-12;
    REQUIRE(differs);
}

TEST_CASE("case counts partition the iterations") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const ChainResult res =
        run_chain_dense(es, grid, 1, paulis(), 1.0, 0.3, plus_state(4), 120, 5);
    REQUIRE(res.case_counts[0] + res.case_counts[1] + res.case_counts[2] == 120);
    for (const auto& rec : res.records) {
        const int label = static_cast<int>(rec.label);
        REQUIRE(label >= 0);
        REQUIRE(label <= 2);
        REQUIRE(rec.jump < paulis().size());
        REQUIRE_THAT(rec.post_state.norm(), Catch::Matchers::WithinAbs(1.0, 1e-10));
    }
}

TEST_CASE("zero coupling freezes the flag and rewinds exactly") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const Vec psi0 = plus_state(4);
    const ChainResult res = run_chain_dense(es, grid, 3, paulis(), 1.0, 0.0, psi0, 25, 7);
    REQUIRE(res.case_counts[2] == 25);
    REQUIRE_THAT(std::abs(psi0.dot(res.final_state)), Catch::Matchers::WithinAbs(1.0, 1e-10));
}

TEST_CASE("single-iteration exhaustive average equals the assembled channel") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const double tau = 0.25;
    const Vec psi0 = plus_state(4);
    const IterationBreakdown bd = iteration_breakdown(es, grid, 3, paulis(), 1.0, tau, psi0);
    const ChannelDecomposition dec = build_fast_channel(es, grid, 3, paulis(), 1.0, tau);
    const Mat expected = dec.E.apply(Mat(psi0 * psi0.adjoint()));
    REQUIRE(test::max_abs(bd.average_state - expected) <= 1e-12);
    const double total =
        bd.case_probabilities[0] + bd.case_probabilities[1] + bd.case_probabilities[2];
    REQUIRE_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("kraus sampler is unbiased for the per-case statistics") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const double tau = 0.3;
    const Vec psi0 = plus_state(4);
    const IterationBreakdown bd = iteration_breakdown(es, grid, 3, paulis(), 1.0, tau, psi0);
    const FastChannel fc = build_fast_channel_detailed(es, grid, 3, paulis(), 1.0, tau, true);

    const int chains = 4000;
    std::array<double, 3> freq{};
    std::vector<Vec> finals;
    finals.reserve(chains);
    for (int k = 0; k < chains; ++k) {
        const ChainResult res =
            run_chain_kraus(es, fc, psi0, 1, 1000 + static_cast<std::uint64_t>(k));
        freq[static_cast<std::size_t>(res.records[0].label)] += 1.0;
        finals.push_back(res.final_state);
    }
    for (int s = 0; s < 3; ++s) {
        const auto si = static_cast<std::size_t>(s);
        const double p = bd.case_probabilities[si];
        const double sigma = std::sqrt(std::max(p * (1.0 - p) / chains, 1e-12));
        INFO("case " << s << " observed " << freq[si] / chains << " expected " << p);
        REQUIRE(std::abs(freq[si] / chains - p) <= 5.0 * sigma);
    }

    // The empirical post-iteration state must agree with the exhaustive
    // average within the bootstrap spread.
    const BootstrapDistance boot = bootstrap_trace_distance(finals, bd.average_state, 200, 31);
    INFO("observed " << boot.observed << " boot " << boot.boot_mean << " +- " << boot.boot_sigma);
    REQUIRE(boot.within(3.0));
}

TEST_CASE("empirical chain statistics follow the exact channel power") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(3, es.kappa);
    const double tau = 0.1;
    const std::uint64_t iters = 40;
    const Vec psi0 = plus_state(4);
    const FastChannel fc = build_fast_channel_detailed(es, grid, 3, paulis(), 1.0, tau, true);

    std::vector<Vec> finals;
    const int chains = 800;
    finals.reserve(chains);
    for (int k = 0; k < chains; ++k) {
        const ChainResult res =
            run_chain_kraus(es, fc, psi0, iters, 5000 + static_cast<std::uint64_t>(k), false);
        finals.push_back(res.final_state);
    }
    const Superoperator ek = super_power(fc.dec.E, iters);
    const Mat predicted = ek.apply(Mat(psi0 * psi0.adjoint()));
    const BootstrapDistance boot = bootstrap_trace_distance(finals, predicted, 200, 77);
    INFO("observed " << boot.observed << " boot " << boot.boot_mean << " +- " << boot.boot_sigma);
    REQUIRE(boot.within(3.0));
}

TEST_CASE("kraus extraction is faithful for completely positive maps") {
    const EigenSystem& es = test::default_model();
    const EnergyGrid grid = energy_grid(2, es.kappa);
    const ChannelDecomposition dec = build_fast_channel(es, grid, 1, paulis(), 1.0, 0.2);
    const KrausSet set = kraus_from_superoperator(dec.E);
    const Eigen::Index d = dec.E.dim;
    Mat completeness = Mat::Zero(d, d);
    Mat reassembled = Mat::Zero(d * d, d * d);
    for (const auto& k : set.ops) {
        completeness += k.adjoint() * k;
        reassembled += super_sandwich(k, k.adjoint()).m;
    }
    REQUIRE(test::max_abs(completeness - Mat::Identity(d, d)) <= 1e-9);
    REQUIRE(test::max_abs(reassembled - dec.E.m) <= 1e-9);
}

TEST_CASE("kraus extraction rejects maps that are not completely positive") {
    // The transpose map is positive but famously not completely positive.
    const Eigen::Index d = 2;
    Mat transpose_super = Mat::Zero(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            transpose_super(j + d * i, i + d * j) = 1.0;
    REQUIRE_THROWS(kraus_from_superoperator(Superoperator{d, transpose_super}));
}

TEST_CASE("bootstrap statistics are internally consistent") {
    CounterRng rng(3, 0);
    std::vector<Vec> states;
    for (int i = 0; i < 200; ++i) states.push_back(test::random_pure(rng, 4));
    const Mat mean = empirical_state(states);
    REQUIRE_THAT(mean.trace().real(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    const BootstrapState bs = bootstrap_state(states, 100, 5);
    REQUIRE(test::max_abs(bs.mean - mean) == 0.0);
    REQUIRE(bs.sigma_re.maxCoeff() > 0.0);
    REQUIRE(bs.sigma_re.minCoeff() >= 0.0);
    const BootstrapDistance bd = bootstrap_trace_distance(states, mean, 100, 5);
    REQUIRE(bd.observed == 0.0);
    REQUIRE(bd.boot_sigma >= 0.0);
    REQUIRE_THROWS(empirical_state({}));
}
