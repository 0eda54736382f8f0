// config.hpp — experiment configuration: JSON parsing, validation, defaults.
#pragma once

#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/version.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace qms {

struct Tolerances {
    double decomposition = 1e-10;    // channel = identity + tau^2 L + tau^4 J
    double reference_match = 1e-9;   // compressed vs register-level builder
    double lindblad_match = 1e-9;    // generator enumeration vs channel route
    double probability = 1e-10;      // completeness sums, CPTP deviations
};

struct ExperimentConfig {
    int n = 2;
    std::string model = "tfim";      // tfim | random_local
    double tfim_j = 1.0;
    double tfim_h = 0.5;
    int local_k = 2;                 // locality for the random model
    std::uint64_t model_seed = 11;
    double beta = 1.0;
    int r = 3;                       // phase-estimation bits
    int g = 3;                       // rounds per estimate (odd)
    double tau = 0.1;
    std::uint64_t iterations = 100;  // chain length K
    std::string jump_set = "paulis"; // paulis | z_only
    std::uint64_t seed = 1234;
    std::uint64_t trajectories = 1000;
    Tolerances tolerances;
    std::vector<int> sweep_r{2, 3, 4};
    std::vector<int> sweep_g{3};
    std::vector<double> sweep_tau{0.1};
    std::vector<double> sweep_beta{1.0};
};

namespace detail {

inline void check_config(const ExperimentConfig& c) {
    if (c.n < 1 || c.n > 6)
        throw std::invalid_argument("config: n must be between 1 and 6");
    if (c.model != "tfim" && c.model != "random_local")
        throw std::invalid_argument("config: model must be tfim or random_local");
    if (c.r < 1 || c.r > 24)
        throw std::invalid_argument("config: r must be between 1 and 24");
    if (c.g < 1 || c.g % 2 == 0)
        throw std::invalid_argument(
            "config: g must be a positive odd integer (the per-round estimate is a median "
            "of g samples, which needs an odd count)");
    for (int gv : c.sweep_g)
        if (gv < 1 || gv % 2 == 0)
            throw std::invalid_argument(
                "config: sweep_g entries must be positive odd integers (median of g samples)");
    if (c.tau < 0.0) throw std::invalid_argument("config: tau must be nonnegative");
    if (c.beta < 0.0) throw std::invalid_argument("config: beta must be nonnegative");
    if (c.local_k < 1 || c.local_k > c.n)
        throw std::invalid_argument("config: local_k must be between 1 and n");
    if (c.jump_set != "paulis" && c.jump_set != "z_only")
        throw std::invalid_argument("config: jump_set must be paulis or z_only");
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["n"] = c.n;
    j["model"] = c.model;
    j["tfim_j"] = c.tfim_j;
    j["tfim_h"] = c.tfim_h;
    j["local_k"] = c.local_k;
    j["model_seed"] = c.model_seed;
    j["beta"] = c.beta;
    j["r"] = c.r;
    j["g"] = c.g;
    j["tau"] = c.tau;
    j["iterations"] = c.iterations;
    j["jump_set"] = c.jump_set;
    j["seed"] = c.seed;
    j["trajectories"] = c.trajectories;
    j["tolerances"] = {{"decomposition", c.tolerances.decomposition},
                       {"reference_match", c.tolerances.reference_match},
                       {"lindblad_match", c.tolerances.lindblad_match},
                       {"probability", c.tolerances.probability}};
    j["sweep_r"] = c.sweep_r;
    j["sweep_g"] = c.sweep_g;
    j["sweep_tau"] = c.sweep_tau;
    j["sweep_beta"] = c.sweep_beta;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
    ExperimentConfig c;
    auto get = [&j](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("n", c.n);
    get("model", c.model);
    get("tfim_j", c.tfim_j);
    get("tfim_h", c.tfim_h);
    get("local_k", c.local_k);
    get("model_seed", c.model_seed);
    get("beta", c.beta);
    get("r", c.r);
    get("g", c.g);
    get("tau", c.tau);
    get("iterations", c.iterations);
    get("jump_set", c.jump_set);
    get("seed", c.seed);
    get("trajectories", c.trajectories);
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        auto gett = [&t](const char* key, double& slot) {
            if (t.contains(key)) slot = t.at(key).get<double>();
        };
        gett("decomposition", c.tolerances.decomposition);
        gett("reference_match", c.tolerances.reference_match);
        gett("lindblad_match", c.tolerances.lindblad_match);
        gett("probability", c.tolerances.probability);
    }
    get("sweep_r", c.sweep_r);
    get("sweep_g", c.sweep_g);
    get("sweep_tau", c.sweep_tau);
    get("sweep_beta", c.sweep_beta);
    detail::check_config(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) {
    return config_to_json(c).dump(2) + "\n";
}

// Builds the configured Hamiltonian.
inline EigenSystem build_model(const ExperimentConfig& c) {
    if (c.model == "tfim") return eigensystem(build_tfim(c.n, c.tfim_j, c.tfim_h));
    return eigensystem(build_random_local(c.n, c.local_k, c.model_seed));
}

inline JumpEnsemble build_jump_set(const ExperimentConfig& c) {
    return make_jump_ensemble(c.jump_set, c.n);
}

// Resolution threshold: below this many phase bits the grid spacing is too
// coarse for the inverse temperature, and fixed-point guarantees degrade.
// Advisory only; callers warn rather than reject.
inline double r_threshold(double kappa, double beta) {
    const double lb = beta > 1.0 ? std::log2(beta) : 0.0;
    return 1.0 + std::log2(kappa) + lb;
}

inline bool r_below_threshold(const ExperimentConfig& c, double kappa) {
    return c.beta > 1.0 && static_cast<double>(c.r) < r_threshold(kappa, c.beta);
}

// Verbosity from the QMS_LOG environment variable (0 when unset).
inline int log_level() {
    const char* env = std::getenv("QMS_LOG");
    if (!env) return 0;
    try {
        return std::stoi(env);
    } catch (...) {
        return 1;
    }
}

}  // namespace qms
