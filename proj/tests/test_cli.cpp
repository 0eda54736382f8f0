// Configuration layer used by the command line tool: JSON parsing, defaults,
// validation, serialization round trips, and the builders it dispatches to.
#include "helpers.hpp"

#include <qms/config.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <string>

using namespace qms;

TEST_CASE("empty config object yields the documented defaults") {
    const ExperimentConfig c = parse_config("{}");
    CHECK(c.n == 2);
    CHECK(c.model == "tfim");
    CHECK(c.tfim_j == 1.0);
    CHECK(c.tfim_h == 0.5);
    CHECK(c.local_k == 2);
    CHECK(c.model_seed == 11);
    CHECK(c.beta == 1.0);
    CHECK(c.r == 3);
    CHECK(c.g == 3);
    CHECK(c.tau == 0.1);
    CHECK(c.iterations == 100);
    CHECK(c.jump_set == "paulis");
    CHECK(c.seed == 1234);
    CHECK(c.trajectories == 1000);
    CHECK(c.tolerances.decomposition == 1e-10);
    CHECK(c.tolerances.reference_match == 1e-9);
    CHECK(c.tolerances.lindblad_match == 1e-9);
    CHECK(c.tolerances.probability == 1e-10);
    CHECK(c.sweep_r == std::vector<int>{2, 3, 4});
    CHECK(c.sweep_g == std::vector<int>{3});
}

TEST_CASE("partial config overrides only the named keys") {
    const ExperimentConfig c = parse_config(R"({"n": 3, "beta": 2.5, "g": 5})");
    CHECK(c.n == 3);
    CHECK(c.beta == 2.5);
    CHECK(c.g == 5);
    CHECK(c.r == 3);
    CHECK(c.model == "tfim");
    CHECK(c.tau == 0.1);
}

TEST_CASE("unknown keys are ignored") {
    const ExperimentConfig c = parse_config(R"({"n": 2, "frobnicate": 17})");
    CHECK(c.n == 2);
}

TEST_CASE("config serialization round trips every field") {
    ExperimentConfig c;
    c.n = 3;
    c.model = "random_local";
    c.local_k = 2;
    c.model_seed = 42;
    c.beta = 0.75;
    c.r = 4;
    c.g = 5;
    c.tau = 0.05;
    c.iterations = 250;
    c.jump_set = "z_only";
    c.seed = 999;
    c.trajectories = 123;
    c.tolerances.decomposition = 2e-10;
    c.tolerances.reference_match = 3e-9;
    c.tolerances.lindblad_match = 4e-9;
    c.tolerances.probability = 5e-10;
    c.sweep_r = {3, 5};
    c.sweep_g = {1, 5};
    c.sweep_tau = {0.05, 0.2};
    c.sweep_beta = {0.5, 2.0};

    const ExperimentConfig back = parse_config(serialize_config(c));
    CHECK(back.n == c.n);
    CHECK(back.model == c.model);
    CHECK(back.tfim_j == c.tfim_j);
    CHECK(back.tfim_h == c.tfim_h);
    CHECK(back.local_k == c.local_k);
    CHECK(back.model_seed == c.model_seed);
    CHECK(back.beta == c.beta);
    CHECK(back.r == c.r);
    CHECK(back.g == c.g);
    CHECK(back.tau == c.tau);
    CHECK(back.iterations == c.iterations);
    CHECK(back.jump_set == c.jump_set);
    CHECK(back.seed == c.seed);
    CHECK(back.trajectories == c.trajectories);
    CHECK(back.tolerances.decomposition == c.tolerances.decomposition);
    CHECK(back.tolerances.reference_match == c.tolerances.reference_match);
    CHECK(back.tolerances.lindblad_match == c.tolerances.lindblad_match);
    CHECK(back.tolerances.probability == c.tolerances.probability);
    CHECK(back.sweep_r == c.sweep_r);
    CHECK(back.sweep_g == c.sweep_g);
    CHECK(back.sweep_tau == c.sweep_tau);
    CHECK(back.sweep_beta == c.sweep_beta);
}

TEST_CASE("serialized config is a pretty printed object ending in a newline") {
    const std::string text = serialize_config(ExperimentConfig{});
    REQUIRE(!text.empty());
    CHECK(text.front() == '{');
    CHECK(text.back() == '\n');
}

TEST_CASE("malformed JSON is rejected with a parse message") {
    CHECK_THROWS_WITH(parse_config("{\"n\": "), Catch::Matchers::ContainsSubstring("malformed"));
    CHECK_THROWS_WITH(parse_config("[1, 2]"),
                      Catch::Matchers::ContainsSubstring("must be a JSON object"));
}

TEST_CASE("validation rejects out-of-range fields with explanatory messages") {
    CHECK_THROWS_WITH(parse_config(R"({"g": 4})"), Catch::Matchers::ContainsSubstring("odd"));
    CHECK_THROWS_WITH(parse_config(R"({"g": 0})"), Catch::Matchers::ContainsSubstring("odd"));
    CHECK_THROWS_WITH(parse_config(R"({"sweep_g": [2]})"),
                      Catch::Matchers::ContainsSubstring("sweep_g"));
    CHECK_THROWS_WITH(parse_config(R"({"model": "heisenberg"})"),
                      Catch::Matchers::ContainsSubstring("model"));
    CHECK_THROWS_WITH(parse_config(R"({"n": 0})"), Catch::Matchers::ContainsSubstring("n must"));
    CHECK_THROWS_WITH(parse_config(R"({"n": 7})"), Catch::Matchers::ContainsSubstring("n must"));
    CHECK_THROWS_WITH(parse_config(R"({"r": 0})"), Catch::Matchers::ContainsSubstring("r must"));
    CHECK_THROWS_WITH(parse_config(R"({"r": 25})"), Catch::Matchers::ContainsSubstring("r must"));
    CHECK_THROWS_WITH(parse_config(R"({"tau": -0.1})"),
                      Catch::Matchers::ContainsSubstring("tau"));
    CHECK_THROWS_WITH(parse_config(R"({"beta": -1.0})"),
                      Catch::Matchers::ContainsSubstring("beta"));
    CHECK_THROWS_WITH(parse_config(R"({"local_k": 0})"),
                      Catch::Matchers::ContainsSubstring("local_k"));
    CHECK_THROWS_WITH(parse_config(R"({"local_k": 3})"),
                      Catch::Matchers::ContainsSubstring("local_k"));
    CHECK_THROWS_WITH(parse_config(R"({"jump_set": "xy"})"),
                      Catch::Matchers::ContainsSubstring("jump_set"));
}

TEST_CASE("model builder dispatches on the model name") {
    ExperimentConfig c;
    const EigenSystem tf = build_model(c);
    const EigenSystem direct = eigensystem(build_tfim(c.n, c.tfim_j, c.tfim_h));
    REQUIRE(tf.eigenvalues.size() == direct.eigenvalues.size());
    CHECK((tf.eigenvalues - direct.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);

    c.model = "random_local";
    c.n = 3;
    c.local_k = 2;
    const EigenSystem ra = build_model(c);
    const EigenSystem rb = build_model(c);
    CHECK(ra.eigenvalues.isApprox(rb.eigenvalues, 1e-14));
    CHECK(ra.eigenvalues.size() == 8);
    c.model_seed = 99;
    const EigenSystem rc = build_model(c);
    CHECK((ra.eigenvalues - rc.eigenvalues).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("jump set builder produces validated ensembles of the right size") {
    ExperimentConfig c;
    const JumpEnsemble paulis = build_jump_set(c);
    CHECK(paulis.name == "paulis");
    CHECK(paulis.size() == 15);
    CHECK_NOTHROW(validate_jump_ensemble(paulis));

    c.jump_set = "z_only";
    const JumpEnsemble zs = build_jump_set(c);
    CHECK(zs.name == "z_only");
    CHECK(zs.size() == 3);
    CHECK_NOTHROW(validate_jump_ensemble(zs));

    for (std::size_t i = 0; i < paulis.size(); ++i) {
        const std::size_t j = paulis.adjoint_index[i];
        REQUIRE(j < paulis.size());
        CHECK(test::max_abs(paulis.ops[j] - paulis.ops[i].adjoint()) < 1e-12);
    }
}

TEST_CASE("resolution threshold advisory is inactive at unit inverse temperature") {
    ExperimentConfig c;
    CHECK(r_threshold(4.0, 1.0) == Catch::Approx(3.0));
    CHECK(r_threshold(4.0, 4.0) == Catch::Approx(5.0));
    CHECK_FALSE(r_below_threshold(c, 4.0));

    c.beta = 4.0;
    c.r = 2;
    CHECK(r_below_threshold(c, 4.0));
    c.r = 6;
    CHECK_FALSE(r_below_threshold(c, 4.0));
}

TEST_CASE("library version string is stamped from the build") {
    const std::string v = qms::version;
    REQUIRE(!v.empty());
    CHECK(std::isdigit(static_cast<unsigned char>(v.front())) != 0);
    CHECK(v == "0.1.0");
}
