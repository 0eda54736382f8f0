// verify.hpp — runnable verification battery: every structural fact the
// library relies on, bound to a numerical check with an explicit tolerance.
#pragma once

#include <qms/channel_fast.hpp>
#include <qms/channel_reference.hpp>
#include <qms/config.hpp>
#include <qms/gram.hpp>
#include <qms/hamiltonians.hpp>
#include <qms/jump_ensemble.hpp>
#include <qms/lindblad.hpp>
#include <qms/norms.hpp>
#include <qms/qpe_amplitudes.hpp>
#include <qms/rng.hpp>
#include <qms/superoperator.hpp>
#include <qms/trajectory.hpp>
#include <qms/version.hpp>

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qms {

struct CheckResult {
    std::string name;
    std::string anchor;     // one-line statement of the property being checked
    double measured = 0.0;
    double bound = 0.0;
    double tol = 0.0;
    bool pass = false;
    double seconds = 0.0;
};

struct VerificationReport {
    ExperimentConfig config;
    std::vector<CheckResult> checks;
    bool all_pass = true;
    double total_seconds = 0.0;
};

inline nlohmann::json check_to_json(const CheckResult& c) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return nullptr;
        return v;
    };
    return {{"name", c.name},     {"anchor", c.anchor}, {"measured", num(c.measured)},
            {"bound", c.bound},   {"tol", c.tol},       {"pass", c.pass},
            {"seconds", c.seconds}};
}

inline nlohmann::json report_to_json(const VerificationReport& rep) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : rep.checks) checks.push_back(check_to_json(c));
    return {{"version", version},
            {"config", config_to_json(rep.config)},
            {"all_pass", rep.all_pass},
            {"total_seconds", rep.total_seconds},
            {"checks", checks}};
}

namespace detail {

// Build-once cache for expensive shared artifacts; a failed construction is
// remembered so later checks fail fast instead of rebuilding.
template <typename T>
class Lazy {
  public:
    template <typename F>
    T& get(F&& f) {
        if (failed_) throw std::runtime_error("prerequisite construction failed earlier");
        if (!value_) {
            try {
                value_.emplace(f());
            } catch (...) {
                failed_ = true;
                throw;
            }
        }
        return *value_;
    }

  private:
    std::optional<T> value_;
    bool failed_ = false;
};

inline Mat random_hermitian(CounterRng& rng, Eigen::Index d) {
    Mat m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    return 0.5 * (m + m.adjoint());
}

inline Mat random_density(CounterRng& rng, Eigen::Index d) {
    Mat a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    Mat rho = a * a.adjoint() + 1e-3 * Mat::Identity(d, d);
    return rho / rho.trace().real();
}

inline Mat random_unitary(CounterRng& rng, Eigen::Index d) {
    Mat a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ();
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < d; ++i) {
        const cplx rii = r(i, i);
        const cplx phase = (std::abs(rii) > 0.0) ? rii / std::abs(rii) : cplx(1.0, 0.0);
        q.col(i) *= phase;
    }
    return q;
}

inline Vec random_pure(CounterRng& rng, Eigen::Index d) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    v.normalize();
    return v;
}

}  // namespace detail

inline VerificationReport run_all(const ExperimentConfig& cfg) {
    using clock = std::chrono::steady_clock;
    VerificationReport report;
    report.config = cfg;
    const auto battery_start = clock::now();

    const EigenSystem es = build_model(cfg);
    const EnergyGrid grid = energy_grid(cfg.r, es.kappa);
    const JumpEnsemble jumps = build_jump_set(cfg);
    const int n_qubits = cfg.n;
    const Eigen::Index d = es.dim();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    // Shared artifacts, built on first use.
    detail::Lazy<AmplitudeTable> lazy_table;
    detail::Lazy<FastChannel> lazy_fast;
    detail::Lazy<ReferenceChannel> lazy_reference_small;
    detail::Lazy<FastChannel> lazy_fast_small;
    detail::Lazy<Superoperator> lazy_generator;
    detail::Lazy<LindbladSet> lazy_lset;
    detail::Lazy<SpectralReport> lazy_spectral;
    detail::Lazy<ResidualReport> lazy_residual;
    detail::Lazy<ShiftClassRates> lazy_classes;
    detail::Lazy<double> lazy_tmix;

    const int small_r = std::min(cfg.r, 2);
    const EnergyGrid grid_small = energy_grid(small_r, es.kappa);
    const double tau_small = 0.2;

    auto table = [&]() -> AmplitudeTable& {
        return lazy_table.get([&] { return single_round_amplitudes(es, grid); });
    };
    auto fast = [&]() -> FastChannel& {
        return lazy_fast.get([&] {
            return build_fast_channel_detailed(es, grid, cfg.g, jumps, cfg.beta, cfg.tau, false);
        });
    };
    auto reference_small = [&]() -> ReferenceChannel& {
        return lazy_reference_small.get([&] {
            return build_reference_channel(es, grid_small, std::min(cfg.g, 3), jumps, cfg.beta,
                                           tau_small);
        });
    };
    auto fast_small = [&]() -> FastChannel& {
        return lazy_fast_small.get([&] {
            return build_fast_channel_detailed(es, grid_small, std::min(cfg.g, 3), jumps, cfg.beta,
                                               tau_small, false);
        });
    };
    auto lset = [&]() -> LindbladSet& {
        return lazy_lset.get([&] { return make_lindblad_set(es, grid, cfg.g, jumps, cfg.beta); });
    };
    auto generator = [&]() -> Superoperator& {
        return lazy_generator.get([&] { return lindblad_generator(lset()); });
    };
    auto spectral = [&]() -> SpectralReport& {
        return lazy_spectral.get([&] { return spectral_analysis(fast().dec.L); });
    };
    auto residual = [&]() -> ResidualReport& {
        return lazy_residual.get([&] { return gibbs_residual(es, grid, cfg.g, jumps, cfg.beta); });
    };
    auto classes = [&]() -> ShiftClassRates& {
        return lazy_classes.get([&] { return shift_class_rates(es, grid, cfg.g, jumps, cfg.beta); });
    };
    auto tmix001 = [&]() -> double& {
        return lazy_tmix.get([&] {
            return mixing_time_estimate(fast().dec.L, spectral().fixed_point_state, 0.01, 10,
                                        cfg.seed, {gibbs(es, cfg.beta).matrix});
        });
    };

    auto run_check = [&](const std::string& name, const std::string& anchor,
                         const std::function<void(CheckResult&)>& body) {
        CheckResult c;
        c.name = name;
        c.anchor = anchor;
        const auto t0 = clock::now();
        try {
            body(c);
        } catch (const std::exception&) {
            c.measured = nan;
            c.pass = false;
        }
        c.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        report.all_pass = report.all_pass && c.pass;
        report.checks.push_back(c);
    };

    // ---- readout amplitudes and Gram families ----

    run_check("amplitude-row-normalization",
              "single-round readout amplitudes form a unit vector for every eigenstate", [&](CheckResult& c) {
                  double dev = 0.0;
                  for (Eigen::Index j = 0; j < d; ++j)
                      dev = std::max(dev, std::abs(table().beta.row(j).squaredNorm() - 1.0));
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-12;
                  c.pass = dev <= c.tol;
              });

    run_check("amplitude-offset-closure",
              "offset amplitudes sum to exactly one (plain sum, not squared)", [&](CheckResult& c) {
                  double dev = 0.0;
                  for (Eigen::Index j = 0; j < d; ++j) {
                      cplx sum = 0.0;
                      for (Eigen::Index l = 0; l < table().points(); ++l) sum += table().gamma(j, l);
                      dev = std::max(dev, std::abs(sum - 1.0));
                  }
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-12;
                  c.pass = dev <= c.tol;
              });

    run_check("amplitude-floor-completeness",
              "floor plus adjacent grid point capture at least 8/pi^2 of the readout mass",
              [&](CheckResult& c) {
                  double worst = 1.0;
                  for (Eigen::Index j = 0; j < d; ++j) {
                      const double mass = std::norm(table().offset_amplitude(j, 0)) +
                                          std::norm(table().offset_amplitude(j, 1));
                      worst = std::min(worst, mass);
                  }
                  c.measured = worst;
                  c.bound = 0.8;
                  c.tol = 0.0;
                  c.pass = worst >= c.bound;
              });

    run_check("gram-diagonal-completeness",
              "median-resolved Gram diagonals sum to one across medians, both orientations",
              [&](CheckResult& c) {
                  double dev = 0.0;
                  for (int flip = 0; flip < 2; ++flip) {
                      const GramFamily fam = gram_family(table(), cfg.g, flip != 0);
                      for (Eigen::Index j = 0; j < d; ++j) {
                          cplx sum = 0.0;
                          for (Eigen::Index m = 0; m < fam.points(); ++m) sum += fam.at(m)(j, j);
                          dev = std::max(dev, std::abs(sum - 1.0));
                      }
                  }
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-10;
                  c.pass = dev <= c.tol;
              });

    run_check("gram-positive-semidefinite",
              "every median-resolved Gram matrix is positive semidefinite", [&](CheckResult& c) {
                  double worst = 0.0;
                  for (int flip = 0; flip < 2; ++flip) {
                      const GramFamily fam = gram_family(table(), cfg.g, flip != 0);
                      for (Eigen::Index m = 0; m < fam.points(); ++m) {
                          Eigen::SelfAdjointEigenSolver<Mat> saes(fam.at(m));
                          worst = std::min(worst, saes.eigenvalues()(0));
                      }
                  }
                  c.measured = worst;
                  c.bound = 0.0;
                  c.tol = 1e-12;
                  c.pass = worst >= -c.tol;
              });

    run_check("gram-two-route-agreement",
              "order-statistics recurrence matches brute-force tuple enumeration at r=2, g=3",
              [&](CheckResult& c) {
                  const AmplitudeTable t2 = single_round_amplitudes(es, grid_small);
                  double dev = 0.0;
                  for (int flip = 0; flip < 2; ++flip) {
                      const GramFamily a =
                          gram_family(t2, 3, flip != 0, GramMethod::order_statistics);
                      const GramFamily b = gram_family(t2, 3, flip != 0, GramMethod::enumeration);
                      for (Eigen::Index m = 0; m < a.points(); ++m)
                          dev = std::max(dev, (a.at(m) - b.at(m)).cwiseAbs().maxCoeff());
                  }
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-10;
                  c.pass = dev <= c.tol;
              });

    run_check("grid-resolution-advisory",
              "phase bits vs resolution threshold for the configured temperature (advisory only)",
              [&](CheckResult& c) {
                  c.measured = static_cast<double>(cfg.r);
                  c.bound = r_threshold(es.kappa, cfg.beta);
                  c.tol = 0.0;
                  c.pass = true;   // warn-only by contract
              });

    // ---- iteration channel ----

    run_check("channel-trace-preservation", "one iteration preserves trace", [&](CheckResult& c) {
        const CptpReport rep = cptp_report(fast().dec.E);
        c.measured = rep.trace_preservation_dev;
        c.bound = 0.0;
        c.tol = cfg.tolerances.probability;
        c.pass = c.measured <= c.tol;
    });

    run_check("channel-complete-positivity", "one iteration is completely positive",
              [&](CheckResult& c) {
                  const CptpReport rep = cptp_report(fast().dec.E);
                  c.measured = rep.choi_min_eigenvalue;
                  c.bound = 0.0;
                  c.tol = 1e-9;
                  c.pass = c.measured >= -c.tol;
              });

    run_check("channel-two-route-agreement",
              "register-level channel equals compressed channel entrywise at r=2",
              [&](CheckResult& c) {
                  c.measured =
                      (reference_small().total.m - fast_small().dec.E.m).cwiseAbs().maxCoeff();
                  c.bound = 0.0;
                  c.tol = cfg.tolerances.reference_match;
                  c.pass = c.measured <= c.tol;
              });

    run_check("channel-decomposition-identity",
              "register-level channel equals identity + tau^2 L + tau^4 J from the compressed build",
              [&](CheckResult& c) {
                  const Eigen::Index dd = d * d;
                  const Mat assembled = Mat::Identity(dd, dd) +
                                        tau_small * tau_small * fast_small().dec.L.m +
                                        std::pow(tau_small, 4) * fast_small().dec.J.m;
                  c.measured = (reference_small().total.m - assembled).cwiseAbs().maxCoeff();
                  c.bound = 0.0;
                  c.tol = cfg.tolerances.decomposition;
                  c.pass = c.measured <= c.tol;
              });

    run_check("fourth-order-extraction",
              "fourth-order term recovered from the register-level channel matches the build",
              [&](CheckResult& c) {
                  const Superoperator j =
                      extract_fourth_order(reference_small().total, fast_small().dec.L, tau_small);
                  c.measured = (j.m - fast_small().dec.J.m).cwiseAbs().maxCoeff();
                  c.bound = 0.0;
                  c.tol = cfg.tolerances.decomposition / std::pow(tau_small, 4);
                  c.pass = c.measured <= c.tol;
              });

    const double norm_slack = 1e-6;
    run_check("excitation-norm-bound", "induced norm of the excitation map is at most 1",
              [&](CheckResult& c) {
                  c.measured = induced_norm_estimate(fast().dec.Ma);
                  c.bound = 1.0;
                  c.tol = norm_slack;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("null-anticommutator-norm-bound",
              "induced norm of the null-branch anticommutator is at most 2", [&](CheckResult& c) {
                  const Superoperator anti = super_anticommutator(fast().dec.R);
                  c.measured = induced_norm_estimate(anti);
                  c.bound = 2.0;
                  c.tol = norm_slack;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("second-excitation-norm-bound",
              "induced norm of the second-excitation correction is at most 3", [&](CheckResult& c) {
                  c.measured = induced_norm_estimate(fast().dec.Ma2);
                  c.bound = 3.0;
                  c.tol = norm_slack;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("null-pair-norm-bound",
              "induced norm of the fourth-order null-branch term is at most 1", [&](CheckResult& c) {
                  c.measured = induced_norm_estimate(fast().dec.Jr);
                  c.bound = 1.0;
                  c.tol = norm_slack;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("generator-norm-bound", "induced norm of the dissipative generator is at most 4",
              [&](CheckResult& c) {
                  c.measured = induced_norm_estimate(fast().dec.L);
                  c.bound = 4.0;
                  c.tol = norm_slack;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("fourth-order-norm-bound", "induced norm of the fourth-order term is at most 4",
              [&](CheckResult& c) {
                  c.measured = induced_norm_estimate(fast().dec.J);
                  c.bound = 4.0;
                  c.tol = norm_slack;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("second-accept-proximity",
              "first- and second-chance accept branches differ by at most 3 tau^4",
              [&](CheckResult& c) {
                  const Superoperator diff{d, fast().dec.accept.m - fast().dec.accept_second.m};
                  c.measured = induced_norm_estimate(diff);
                  c.bound = 3.0 * std::pow(cfg.tau, 4);
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    // ---- class structure of the accept/reject balance ----

    run_check("detailed-balance-classes",
              "right-reject class equals exp(beta (s - v) w) times the accept class entrywise",
              [&](CheckResult& c) {
                  double dev = 0.0;
                  for (int v = 0; v < 2; ++v)
                      for (int s = 0; s < 2; ++s) {
                          const double factor = std::exp(cfg.beta * (s - v) * grid.w);
                          const auto vi = static_cast<std::size_t>(v);
                          const auto si = static_cast<std::size_t>(s);
                          dev = std::max(dev, (classes().reject_right[vi][si] -
                                               factor * classes().accept[vi][si])
                                                  .cwiseAbs()
                                                  .maxCoeff());
                      }
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-10;
                  c.pass = dev <= c.tol;
              });

    run_check("uniform-error-class-norms",
              "every bracketing-class accept/reject difference has trace norm at most 4 beta w",
              [&](CheckResult& c) {
                  double worst = 0.0;
                  for (int v = 0; v < 2; ++v)
                      for (int s = 0; s < 2; ++s) {
                          const auto vi = static_cast<std::size_t>(v);
                          const auto si = static_cast<std::size_t>(s);
                          worst = std::max(worst, trace_norm(classes().accept[vi][si] -
                                                             classes().reject_right[vi][si]));
                      }
                  c.measured = worst;
                  c.bound = 4.0 * classes().beta_w;
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("residual-reduction-bound",
              "Gibbs residual is bounded by twice the accept/reject imbalance plus truncation",
              [&](CheckResult& c) {
                  const double imbalance =
                      trace_norm(classes().accept_full - classes().reject_full);
                  c.measured = residual().residual;
                  c.bound = 2.0 * imbalance + 8.0 * classes().beta_w;
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("tail-class-suppression",
              "readout mass outside the bracketing classes shrinks as rounds increase",
              [&](CheckResult& c) {
                  std::vector<double> mass;
                  for (int gg : {1, 3, 5}) {
                      const ShiftClassRates rates =
                          shift_class_rates(es, grid, gg, jumps, cfg.beta);
                      mass.push_back(trace_norm(rates.accept_else) +
                                     trace_norm(rates.reject_else));
                  }
                  double worst_ratio = 0.0;
                  for (std::size_t i = 1; i < mass.size(); ++i) {
                      const double denom = std::max(mass[i - 1], 1e-300);
                      worst_ratio = std::max(worst_ratio, mass[i] / denom);
                  }
                  c.measured = worst_ratio;
                  c.bound = 1.0;
                  c.tol = 0.0;
                  c.pass = worst_ratio < c.bound;
              });

    run_check("floored-state-distance",
              "grid-floored thermal state stays within 2 beta w of the exact Gibbs state",
              [&](CheckResult& c) {
                  const GibbsState exact = gibbs(es, cfg.beta);
                  const GibbsState floored = truncated_gibbs(es, cfg.beta, grid);
                  c.measured = trace_norm(exact.matrix - floored.matrix);
                  c.bound = 2.0 * cfg.beta * grid.w;
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("floored-state-weights",
              "per-level floored weights deviate by at most a 2 beta w relative factor",
              [&](CheckResult& c) {
                  const GibbsState exact = gibbs(es, cfg.beta);
                  const GibbsState floored = truncated_gibbs(es, cfg.beta, grid);
                  double ratio = 0.0;
                  for (Eigen::Index j = 0; j < d; ++j)
                      ratio = std::max(ratio,
                                       std::abs(floored.probabilities(j) - exact.probabilities(j)) /
                                           exact.probabilities(j));
                  c.measured = ratio;
                  c.bound = 2.0 * cfg.beta * grid.w;
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    // ---- continuous-time generator ----

    run_check("generator-two-route-agreement",
              "jump-operator enumeration of the generator matches the channel extraction",
              [&](CheckResult& c) {
                  c.measured = (generator().m - fast().dec.L.m).cwiseAbs().maxCoeff();
                  c.bound = 0.0;
                  c.tol = cfg.tolerances.lindblad_match;
                  c.pass = c.measured <= c.tol;
              });

    run_check("jump-reassembly",
              "summing the per-readout jump operators recovers the proposal unitary",
              [&](CheckResult& c) {
                  double dev = 0.0;
                  for (std::size_t m = 0; m < jumps.size(); ++m)
                      dev = std::max(dev,
                                     (reassemble_move(lset(), m) - jumps.ops[m]).cwiseAbs().maxCoeff());
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-9;
                  c.pass = dev <= c.tol;
              });

    run_check("stationary-uniqueness", "the generator has exactly one stationary direction",
              [&](CheckResult& c) {
                  c.measured = static_cast<double>(null_space_dimension(fast().dec.L));
                  c.bound = 1.0;
                  c.tol = 0.1;
                  c.pass = std::abs(c.measured - c.bound) <= c.tol;
              });

    run_check("stationary-full-rank", "the stationary state is full rank", [&](CheckResult& c) {
        c.measured = spectral().fixed_point_min_eig;
        c.bound = 0.0;
        c.tol = 1e-10;
        c.pass = c.measured > c.tol;
    });

    run_check("stationary-residual", "the stationary state is annihilated by the generator",
              [&](CheckResult& c) {
                  c.measured = spectral().fixed_point_residual;
                  c.bound = 0.0;
                  c.tol = cfg.tolerances.probability;
                  c.pass = c.measured <= c.tol;
              });

    run_check("weighted-adjoint-identity",
              "the weighted adjoint satisfies the defining inner-product identity on random pairs",
              [&](CheckResult& c) {
                  const Mat rho_l = spectral().fixed_point_state;
                  const Mat sigma_half = matrix_power_hermitian(rho_l, -0.5);
                  const Superoperator dual = sigma_dual(fast().dec.L, rho_l);
                  CounterRng rng(cfg.seed, 3);
                  double dev = 0.0;
                  for (int k = 0; k < 100; ++k) {
                      const Mat m = detail::random_hermitian(rng, d);
                      const Mat n = detail::random_hermitian(rng, d);
                      const cplx lhs =
                          (sigma_half * m.adjoint() * sigma_half * fast().dec.L.apply(n)).trace();
                      const cplx rhs =
                          (sigma_half * dual.apply(m).adjoint() * sigma_half * n).trace();
                      const double scale = std::max(1.0, std::abs(lhs));
                      dev = std::max(dev, std::abs(lhs - rhs) / scale);
                  }
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-8;
                  c.pass = dev <= c.tol;
              });

    run_check("symmetrized-hermiticity",
              "flat-conjugated symmetrized generator is Hermitian to tolerance",
              [&](CheckResult& c) {
                  c.measured = spectral().hermiticity_dev;
                  c.bound = 0.0;
                  c.tol = 1e-8;
                  c.pass = c.measured <= c.tol;
              });

    run_check("spectral-gap-positive", "the symmetrized generator has a positive spectral gap",
              [&](CheckResult& c) {
                  c.measured = spectral().gap;
                  c.bound = 0.0;
                  c.tol = 1e-10;
                  c.pass = c.measured > c.tol;
              });

    run_check("symmetrized-null-top", "the top symmetrized eigenvalue sits at zero",
              [&](CheckResult& c) {
                  c.measured = std::abs(spectral().symmetrized_top);
                  c.bound = 0.0;
                  c.tol = 1e-8;
                  c.pass = c.measured <= c.tol;
              });

    run_check("propagator-route-agreement",
              "spectral propagator matches scaling-and-squaring exponential on test states",
              [&](CheckResult& c) {
                  const Propagator prop(fast().dec.L);
                  CounterRng rng(cfg.seed, 4);
                  const Mat rho1 = truncated_gibbs(es, cfg.beta, grid).matrix;
                  const Mat rho2 = detail::random_density(rng, d);
                  double dev = 0.0;
                  for (double t : {0.3, 3.0}) {
                      dev = std::max(dev, (prop.apply(rho1, t) - prop.apply_scaling_squaring(rho1, t))
                                              .cwiseAbs()
                                              .maxCoeff());
                      dev = std::max(dev, (prop.apply(rho2, t) - prop.apply_scaling_squaring(rho2, t))
                                              .cwiseAbs()
                                              .maxCoeff());
                  }
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-9;
                  c.pass = dev <= c.tol;
              });

    run_check("mixing-distance-bound",
              "trace distance to the stationary state decays within the overlap-weighted envelope",
              [&](CheckResult& c) {
                  const Propagator prop(fast().dec.L);
                  CounterRng rng(cfg.seed, 5);
                  double worst = -1e300;
                  for (int k = 0; k < 10; ++k) {
                      const Mat rho = detail::random_density(rng, d);
                      for (int ti = 0; ti < 20; ++ti) {
                          const double t = 0.25 * ti;
                          const double dist =
                              trace_norm(prop.apply(rho, t) - spectral().fixed_point_state);
                          const double bound =
                              mixing_distance_bound(spectral(), n_qubits, rho, t);
                          worst = std::max(worst, dist - bound);
                      }
                  }
                  c.measured = worst;
                  c.bound = 0.0;
                  c.tol = 1e-9;
                  c.pass = worst <= c.tol;
              });

    run_check("mixing-time-within-bound",
              "bisected mixing-time estimate respects the worst-case analytic bound",
              [&](CheckResult& c) {
                  const double eps = 0.05;
                  const double est =
                      mixing_time_estimate(fast().dec.L, spectral().fixed_point_state, eps, 10,
                                           cfg.seed, {gibbs(es, cfg.beta).matrix});
                  const double overlap_cap = 1.0 / spectral().fixed_point_min_eig;
                  const double bound = (std::log(1.0 / eps) + 0.5 * n_qubits * std::log(2.0) +
                                        0.5 * std::log(overlap_cap)) /
                                       spectral().gap;
                  c.measured = est;
                  c.bound = bound;
                  c.tol = 1e-9;
                  c.pass = est <= bound + c.tol;
              });

    run_check("stationary-vs-gibbs-distance",
              "stationary state sits within residual times mixing time of the Gibbs state",
              [&](CheckResult& c) {
                  const double eps = 0.01;
                  const GibbsState exact = gibbs(es, cfg.beta);
                  c.measured = trace_norm(spectral().fixed_point_state - exact.matrix);
                  c.bound = eps + residual().residual * tmix001();
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("discrete-semigroup-distance",
              "iterated channel stays within 2 e^4 K tau^4 of the continuous semigroup",
              [&](CheckResult& c) {
                  const std::uint64_t k = 50;
                  const Superoperator ek = super_power(fast().dec.E, k);
                  const double t = static_cast<double>(k) * cfg.tau * cfg.tau;
                  const Mat expm = (t * fast().dec.L.m).exp();
                  const Superoperator diff{d, ek.m - expm};
                  c.measured = induced_norm_estimate(diff);
                  c.bound = 2.0 * std::exp(4.0) * static_cast<double>(k) * std::pow(cfg.tau, 4);
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    // ---- norm utilities ----

    run_check("trace-norm-variational-upper",
              "no unitary pairing exceeds the trace norm (1000 random draws)", [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 6);
                  const Mat m = detail::random_hermitian(rng, d);
                  const double tn = trace_norm(m);
                  double best = 0.0;
                  for (int k = 0; k < 1000; ++k) {
                      const Mat u = detail::random_unitary(rng, d);
                      best = std::max(best, std::abs((m * u).trace()));
                  }
                  c.measured = best - tn;
                  c.bound = 0.0;
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.tol;
              });

    run_check("trace-norm-variational-attained",
              "the singular-vector unitary attains the trace norm exactly", [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 7);
                  const Mat m = detail::random_hermitian(rng, d);
                  const Mat u = trace_norm_maximizer(m);
                  c.measured = std::abs(std::abs((m * u).trace()) - trace_norm(m));
                  c.bound = 0.0;
                  c.tol = 1e-10;
                  c.pass = c.measured <= c.tol;
              });

    run_check("weighted-norm-domination",
              "squared trace norm is at most 2^n times the weighted norm square",
              [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 8);
                  double worst = 0.0;
                  for (int k = 0; k < 50; ++k) {
                      const Mat m = detail::random_hermitian(rng, d);
                      const Mat rho = detail::random_density(rng, d);
                      const Mat sigma_half = matrix_power_hermitian(rho, -0.5);
                      const double lhs = trace_norm(m) * trace_norm(m);
                      const double rhs = std::pow(2.0, n_qubits) * sigma_weighted_norm_sq(sigma_half, m);
                      worst = std::max(worst, lhs / rhs);
                  }
                  c.measured = worst;
                  c.bound = 1.0;
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    run_check("contraction-rank-one-bound",
              "partial trace of a contracted rank-one joint operator has trace norm at most 1",
              [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 9);
                  const Eigen::Index d2 = 8;
                  double worst = 0.0;
                  for (int k = 0; k < 50; ++k) {
                      const Vec u = detail::random_pure(rng, d);
                      const Vec v = detail::random_pure(rng, d);
                      const Vec w = detail::random_pure(rng, d2);
                      const Mat p = detail::random_unitary(rng, d * d2);
                      const Mat q = detail::random_unitary(rng, d * d2);
                      const Mat joint = kron(Mat(u * v.adjoint()), Mat(w * w.adjoint()));
                      worst = std::max(worst, trace_norm(partial_trace_second(
                                                  Mat(p * joint * q), d, d2)));
                  }
                  c.measured = worst;
                  c.bound = 1.0;
                  c.tol = 1e-12;
                  c.pass = c.measured <= c.bound + c.tol;
              });

    // ---- trajectory unravelling ----

    run_check("unravelling-soundness",
              "outcome-weighted average over one iteration equals the channel output", [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 10);
                  const Vec psi = detail::random_pure(rng, d);
                  const ChannelDecomposition dec =
                      build_fast_channel(es, grid_small, 1, jumps, cfg.beta, tau_small);
                  const IterationBreakdown bd =
                      iteration_breakdown(es, grid_small, 1, jumps, cfg.beta, tau_small, psi);
                  const Mat expect = dec.E.apply(Mat(psi * psi.adjoint()));
                  c.measured = (bd.average_state - expect).cwiseAbs().maxCoeff();
                  c.bound = 0.0;
                  c.tol = 1e-9;
                  c.pass = c.measured <= c.tol;
              });

    run_check("case-probability-oracle",
              "first-accept probability equals tau^2 times the excitation rate; cases sum to one",
              [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 11);
                  const Vec psi = detail::random_pure(rng, d);
                  const ChannelDecomposition dec =
                      build_fast_channel(es, grid_small, 1, jumps, cfg.beta, tau_small);
                  const IterationBreakdown bd =
                      iteration_breakdown(es, grid_small, 1, jumps, cfg.beta, tau_small, psi);
                  const Mat rho = psi * psi.adjoint();
                  const double rate = dec.Ma.apply(rho).trace().real();
                  double dev = std::abs(bd.case_probabilities[0] - tau_small * tau_small * rate);
                  dev = std::max(dev, std::abs(bd.case_probabilities[0] + bd.case_probabilities[1] +
                                               bd.case_probabilities[2] - 1.0));
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-12;
                  c.pass = dev <= c.tol;
              });

    run_check("rewind-exactness",
              "at tau = 0 every iteration lands in the null branch and restores the input state",
              [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 12);
                  const Vec psi0 = detail::random_pure(rng, d);
                  DenseTrajectory traj(es, grid_small, 1, jumps, cfg.beta, 0.0, cfg.seed);
                  traj.set_state_lab(psi0);
                  const Vec ref = traj.state_eigen();
                  double dev = 0.0;
                  for (std::uint64_t it = 0; it < 30; ++it) {
                      const TrajectoryRecord rec = traj.step(it);
                      if (rec.label != CaseLabel::null_round) dev = 1.0;
                      dev = std::max(dev, (traj.state_eigen() - ref).cwiseAbs().maxCoeff());
                  }
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-10;
                  c.pass = dev <= c.tol;
              });

    run_check("trajectory-determinism",
              "identical seeds reproduce identical records and states in both samplers",
              [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 13);
                  const Vec psi0 = detail::random_pure(rng, d);
                  const auto a =
                      run_chain_dense(es, grid_small, 1, jumps, cfg.beta, tau_small, psi0, 40, 99);
                  const auto b =
                      run_chain_dense(es, grid_small, 1, jumps, cfg.beta, tau_small, psi0, 40, 99);
                  double dev = (a.final_state - b.final_state).cwiseAbs().maxCoeff();
                  for (std::size_t i = 0; i < a.records.size(); ++i)
                      if (a.records[i].label != b.records[i].label ||
                          a.records[i].jump != b.records[i].jump ||
                          a.records[i].flipped != b.records[i].flipped)
                          dev = 1.0;
                  const FastChannel fc = build_fast_channel_detailed(es, grid_small, 1, jumps,
                                                                     cfg.beta, tau_small, true);
                  const auto ka = run_chain_kraus(es, fc, psi0, 40, 99);
                  const auto kb = run_chain_kraus(es, fc, psi0, 40, 99);
                  dev = std::max(dev, (ka.final_state - kb.final_state).cwiseAbs().maxCoeff());
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 0.0;
                  c.pass = dev == 0.0;
              });

    run_check("empirical-state-sanity",
              "empirical average of trajectory outputs is Hermitian, positive, and unit trace",
              [&](CheckResult& c) {
                  CounterRng rng(cfg.seed, 14);
                  const Vec psi0 = detail::random_pure(rng, d);
                  std::vector<Vec> finals;
                  for (int chain = 0; chain < 100; ++chain) {
                      const auto res = run_chain_dense(es, grid_small, 1, jumps, cfg.beta,
                                                       tau_small, psi0, 5,
                                                       1000 + static_cast<std::uint64_t>(chain));
                      finals.push_back(res.records.back().post_state);
                  }
                  const Mat rho = empirical_state(finals);
                  double dev = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
                  dev = std::max(dev, std::abs(rho.trace().real() - 1.0));
                  Eigen::SelfAdjointEigenSolver<Mat> saes(0.5 * (rho + rho.adjoint()));
                  dev = std::max(dev, std::max(0.0, -saes.eigenvalues()(0)));
                  c.measured = dev;
                  c.bound = 0.0;
                  c.tol = 1e-12;
                  c.pass = dev <= c.tol;
              });

    report.total_seconds = std::chrono::duration<double>(clock::now() - battery_start).count();
    return report;
}

}  // namespace qms
