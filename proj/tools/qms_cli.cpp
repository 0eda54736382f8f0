// qms_cli.cpp — command line driver: model inspection, channel builds,
// spectral analysis, evolution, trajectories, the verification battery, and
// parameter sweeps.  All artifacts land under --out in reports/, sweeps/,
// and states/, each stamped with the library version.
#include <qms/config.hpp>
#include <qms/channel_fast.hpp>
#include <qms/channel_reference.hpp>
#include <qms/lindblad.hpp>
#include <qms/norms.hpp>
#include <qms/qpe_amplitudes.hpp>
#include <qms/superoperator.hpp>
#include <qms/trajectory.hpp>
#include <qms/verify.hpp>
#include <qms/version.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Output {
    fs::path root;

    explicit Output(const std::string& dir) : root(dir) {
        fs::create_directories(root / "reports");
        fs::create_directories(root / "sweeps");
        fs::create_directories(root / "states");
    }

    void write(const fs::path& rel, const std::string& content) const {
        const fs::path full = root / rel;
        std::ofstream out(full, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + full.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + full.string());
        if (qms::log_level() >= 1) std::cerr << "wrote " << full.string() << "\n";
    }

    void write_json(const fs::path& rel, const json& j) const { write(rel, j.dump(2) + "\n"); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fixed-width float formatting keeps CSV output identical across runs.
std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

json matrix_to_json(const qms::Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back({std::real(m(i, j)), std::imag(m(i, j))});
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const qms::RVec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json artifact_header(const qms::ExperimentConfig& cfg, bool r_warning) {
    return {{"version", qms::version}, {"config", qms::config_to_json(cfg)}, {"r_warning", r_warning}};
}

std::string csv_header() { return std::string("# qms ") + qms::version + "\n"; }

// Emits the advisory when the grid is too coarse for the temperature.
bool warn_resolution(const qms::ExperimentConfig& cfg, const qms::EigenSystem& es) {
    if (!qms::r_below_threshold(cfg, es.kappa)) return false;
    std::cerr << "warning: r=" << cfg.r << " is below the resolution threshold "
              << qms::r_threshold(es.kappa, cfg.beta) << " for beta=" << cfg.beta
              << " (kappa=" << es.kappa << "); fixed-point guarantees degrade\n";
    return true;
}

int cmd_model(const qms::ExperimentConfig& cfg, const Output& out) {
    const qms::EigenSystem es = qms::build_model(cfg);
    const bool warned = warn_resolution(cfg, es);
    const qms::EnergyGrid grid = qms::energy_grid(cfg.r, es.kappa);
    const qms::GibbsState gs = qms::gibbs(es, cfg.beta);
    json j = artifact_header(cfg, warned);
    j["eigenvalues_shifted"] = vector_to_json(es.eigenvalues);
    j["kappa"] = es.kappa;
    j["shift"] = es.shift;
    j["grid_spacing"] = grid.w;
    j["grid_points"] = vector_to_json(grid.points);
    j["gibbs_probabilities"] = vector_to_json(gs.probabilities);
    j["partition"] = gs.partition;
    if (2.0 * cfg.beta * grid.w <= 1.0) {
        const qms::GibbsState floored = qms::truncated_gibbs(es, cfg.beta, grid);
        j["floored_probabilities"] = vector_to_json(floored.probabilities);
        j["floored_distance"] = qms::trace_norm(gs.matrix - floored.matrix);
    }
    out.write_json("reports/model.json", j);
    return 0;
}

int cmd_qpe_table(const qms::ExperimentConfig& cfg, const Output& out) {
    const qms::EigenSystem es = qms::build_model(cfg);
    const bool warned = warn_resolution(cfg, es);
    const qms::EnergyGrid grid = qms::energy_grid(cfg.r, es.kappa);
    const qms::AmplitudeTable table = qms::single_round_amplitudes(es, grid);
    json j = artifact_header(cfg, warned);
    json states = json::array();
    for (Eigen::Index s = 0; s < table.dim(); ++s) {
        json row;
        row["floor_index"] = table.floor_index[static_cast<std::size_t>(s)];
        row["epsilon"] = table.epsilon(s);
        row["norm_dev"] = std::abs(table.beta.row(s).squaredNorm() - 1.0);
        row["floor_mass"] = std::norm(table.offset_amplitude(s, 0)) +
                            std::norm(table.offset_amplitude(s, 1));
        states.push_back(row);
    }
    j["states"] = states;
    if (table.dim() * table.points() <= 4096) {
        j["amplitudes"] = matrix_to_json(table.beta);
        j["offset_amplitudes"] = matrix_to_json(table.gamma);
    }
    const qms::GramFamily fam = qms::gram_family(table, cfg.g, false);
    double diag_dev = 0.0;
    for (Eigen::Index s = 0; s < table.dim(); ++s) {
        qms::cplx sum = 0.0;
        for (Eigen::Index m = 0; m < fam.points(); ++m) sum += fam.at(m)(s, s);
        diag_dev = std::max(diag_dev, std::abs(sum - 1.0));
    }
    j["gram_diagonal_dev"] = diag_dev;
    out.write_json("reports/qpe_table.json", j);
    return 0;
}

int cmd_channel(const qms::ExperimentConfig& cfg, const Output& out) {
    const qms::EigenSystem es = qms::build_model(cfg);
    const bool warned = warn_resolution(cfg, es);
    const qms::EnergyGrid grid = qms::energy_grid(cfg.r, es.kappa);
    const qms::JumpEnsemble jumps = qms::build_jump_set(cfg);
    const qms::ChannelDecomposition dec =
        qms::build_fast_channel(es, grid, cfg.g, jumps, cfg.beta, cfg.tau);
    const qms::CptpReport rep = qms::cptp_report(dec.E);
    json j = artifact_header(cfg, warned);
    j["trace_preservation_dev"] = rep.trace_preservation_dev;
    j["choi_min_eigenvalue"] = rep.choi_min_eigenvalue;
    j["choi_hermiticity_dev"] = rep.choi_hermiticity_dev;
    j["generator_norm_estimate"] = qms::induced_norm_estimate(dec.L);
    j["fourth_order_norm_estimate"] = qms::induced_norm_estimate(dec.J);
    const bool pass = rep.trace_preservation_dev <= cfg.tolerances.probability &&
                      rep.choi_min_eigenvalue >= -1e-9;
    j["pass"] = pass;
    out.write_json("reports/channel.json", j);
    if (es.dim() <= 8) {
        json m = artifact_header(cfg, warned);
        m["E"] = matrix_to_json(dec.E.m);
        m["L"] = matrix_to_json(dec.L.m);
        m["J"] = matrix_to_json(dec.J.m);
        out.write_json("states/channel_matrices.json", m);
    }
    return pass ? 0 : 1;
}

int cmd_gap(const qms::ExperimentConfig& cfg, const Output& out) {
    const qms::EigenSystem es = qms::build_model(cfg);
    const bool warned = warn_resolution(cfg, es);
    const qms::EnergyGrid grid = qms::energy_grid(cfg.r, es.kappa);
    const qms::JumpEnsemble jumps = qms::build_jump_set(cfg);
    const qms::Superoperator l =
        qms::second_order_generator(es, grid, cfg.g, jumps, cfg.beta);
    const qms::SpectralReport rep = qms::spectral_analysis(l);
    const qms::ResidualReport res = qms::gibbs_residual(es, grid, cfg.g, jumps, cfg.beta);
    const double tmix = qms::mixing_time_estimate(l, rep.fixed_point_state, 0.05, 10, cfg.seed,
                                                  {qms::gibbs(es, cfg.beta).matrix});
    json j = artifact_header(cfg, warned);
    j["gap"] = rep.gap;
    j["symmetrized_top"] = rep.symmetrized_top;
    j["hermiticity_dev"] = rep.hermiticity_dev;
    j["fixed_point_min_eig"] = rep.fixed_point_min_eig;
    j["fixed_point_residual"] = rep.fixed_point_residual;
    j["gibbs_residual"] = res.residual;
    j["beta_w"] = res.beta_w;
    j["tmix_estimate_eps05"] = tmix;
    j["distance_to_gibbs"] =
        qms::trace_norm(rep.fixed_point_state - qms::gibbs(es, cfg.beta).matrix);
    j["symmetrized_spectrum"] = vector_to_json(rep.symmetrized_spectrum);
    out.write_json("reports/gap.json", j);
    json st = artifact_header(cfg, warned);
    st["fixed_point"] = matrix_to_json(rep.fixed_point_state);
    out.write_json("states/fixed_point.json", st);
    return 0;
}

int cmd_evolve(const qms::ExperimentConfig& cfg, const Output& out) {
    const qms::EigenSystem es = qms::build_model(cfg);
    const bool warned = warn_resolution(cfg, es);
    const qms::EnergyGrid grid = qms::energy_grid(cfg.r, es.kappa);
    const qms::JumpEnsemble jumps = qms::build_jump_set(cfg);
    const qms::Superoperator l =
        qms::second_order_generator(es, grid, cfg.g, jumps, cfg.beta);
    const qms::SpectralReport rep = qms::spectral_analysis(l);
    const qms::Propagator prop(l);
    const qms::GibbsState gs = qms::gibbs(es, cfg.beta);
    const Eigen::Index d = es.dim();
    qms::Mat rho = qms::Mat::Zero(d, d);
    rho(0, 0) = 1.0;   // computational all-zeros start
    const double horizon =
        2.0 * qms::mixing_time_estimate(l, rep.fixed_point_state, 0.05, 5, cfg.seed);
    std::ostringstream csv;
    csv << csv_header() << "t,distance_stationary,distance_gibbs,envelope\n";
    qms::Mat final_state = rho;
    for (int i = 0; i <= 40; ++i) {
        const double t = horizon * i / 40.0;
        const qms::Mat evolved = prop.apply(rho, t);
        csv << fmt(t) << "," << fmt(qms::trace_norm(evolved - rep.fixed_point_state)) << ","
            << fmt(qms::trace_norm(evolved - gs.matrix)) << ","
            << fmt(qms::mixing_distance_bound(rep, cfg.n, rho, t)) << "\n";
        final_state = evolved;
    }
    out.write("sweeps/evolve.csv", csv.str());
    json st = artifact_header(cfg, warned);
    st["horizon"] = horizon;
    st["final_state"] = matrix_to_json(final_state);
    out.write_json("states/evolve_final.json", st);
    return 0;
}

int cmd_trajectory(const qms::ExperimentConfig& cfg, const Output& out) {
    const qms::EigenSystem es = qms::build_model(cfg);
    const bool warned = warn_resolution(cfg, es);
    const qms::EnergyGrid grid = qms::energy_grid(cfg.r, es.kappa);
    const qms::JumpEnsemble jumps = qms::build_jump_set(cfg);
    const Eigen::Index d = es.dim();
    qms::Vec psi0 = qms::Vec::Zero(d);
    psi0(0) = 1.0;

    const bool dense = cfg.r * cfg.g <= 6;
    std::vector<qms::Vec> finals;
    std::array<std::uint64_t, 3> counts{};
    std::ostringstream csv;
    csv << csv_header() << "iteration,case,jump,flip,flag1,flag2\n";
    auto stream_records = [&csv](const qms::ChainResult& res) {
        for (const auto& rec : res.records) {
            const int label = static_cast<int>(rec.label);
            const int flag1 = label == 0 ? 1 : 0;
            const int flag2 = label == 0 ? -1 : (label == 1 ? 1 : 0);
            csv << rec.iteration << "," << label << "," << rec.jump << ","
                << (rec.flipped ? 1 : 0) << "," << flag1 << "," << flag2 << "\n";
        }
    };

    std::optional<qms::FastChannel> fc;
    if (!dense)
        fc = qms::build_fast_channel_detailed(es, grid, cfg.g, jumps, cfg.beta, cfg.tau, true);
    for (std::uint64_t chain = 0; chain < cfg.trajectories; ++chain) {
        const std::uint64_t seed = cfg.seed + chain;
        qms::ChainResult res;
        if (dense)
            res = qms::run_chain_dense(es, grid, cfg.g, jumps, cfg.beta, cfg.tau, psi0,
                                       cfg.iterations, seed);
        else
            res = qms::run_chain_kraus(es, *fc, psi0, cfg.iterations, seed, chain == 0);
        if (chain == 0) stream_records(res);
        for (int s = 0; s < 3; ++s)
            counts[static_cast<std::size_t>(s)] += res.case_counts[static_cast<std::size_t>(s)];
        finals.push_back(es.eigenvectors.adjoint() * res.final_state);
    }
    out.write("sweeps/trajectory_records.csv", csv.str());

    const qms::Mat empirical_eigen = qms::empirical_state(finals);
    const qms::Mat kv = es.eigenvectors;
    const qms::Mat empirical_lab = kv * empirical_eigen * kv.adjoint();

    // Exact prediction: the iterated channel applied to the start state.
    const qms::Superoperator e_map =
        fc ? fc->dec.E : qms::build_fast_channel(es, grid, cfg.g, jumps, cfg.beta, cfg.tau).E;
    const qms::Superoperator ek = qms::super_power(e_map, cfg.iterations);
    const qms::Mat predicted = ek.apply(qms::Mat(psi0 * psi0.adjoint()));
    const qms::Mat predicted_eigen = kv.adjoint() * predicted * kv;
    const qms::BootstrapDistance boot =
        qms::bootstrap_trace_distance(finals, predicted_eigen, 200, cfg.seed);

    json j = artifact_header(cfg, warned);
    j["mode"] = dense ? "dense" : "kraus";
    j["chains"] = cfg.trajectories;
    j["iterations"] = cfg.iterations;
    j["case_counts"] = {counts[0], counts[1], counts[2]};
    j["distance_to_prediction"] = boot.observed;
    j["bootstrap_mean"] = boot.boot_mean;
    j["bootstrap_sigma"] = boot.boot_sigma;
    out.write_json("reports/trajectory.json", j);
    json st = artifact_header(cfg, warned);
    st["empirical_state"] = matrix_to_json(empirical_lab);
    st["predicted_state"] = matrix_to_json(predicted);
    out.write_json("states/trajectory_empirical.json", st);
    return 0;
}

int cmd_verify(const qms::ExperimentConfig& cfg, const Output& out) {
    const qms::VerificationReport rep = qms::run_all(cfg);
    for (const auto& c : rep.checks) {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  measured=" << c.measured
                  << " bound=" << c.bound << " tol=" << c.tol << "  (" << c.seconds << " s)\n";
    }
    std::cout << (rep.all_pass ? "all checks passed" : "some checks FAILED") << " in "
              << rep.total_seconds << " s\n";
    out.write_json("reports/verify.json", qms::report_to_json(rep));
    return rep.all_pass ? 0 : 1;
}

int cmd_sweep(const qms::ExperimentConfig& cfg, const Output& out, int jobs) {
    const qms::EigenSystem es = qms::build_model(cfg);
    const qms::JumpEnsemble jumps = qms::build_jump_set(cfg);

    struct Point {
        int r, g;
        double tau, beta;
    };
    std::vector<Point> points;
    for (int r : cfg.sweep_r)
        for (int g : cfg.sweep_g)
            for (double tau : cfg.sweep_tau)
                for (double beta : cfg.sweep_beta) points.push_back({r, g, tau, beta});

    std::vector<std::string> rows(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) break;
            const Point& p = points[i];
            const qms::EnergyGrid grid = qms::energy_grid(p.r, es.kappa);
            const qms::Superoperator l =
                qms::second_order_generator(es, grid, p.g, jumps, p.beta);
            const qms::SpectralReport rep = qms::spectral_analysis(l);
            const double residual = qms::gibbs_residual(es, grid, p.g, jumps, p.beta).residual;
            const double tmix = qms::mixing_time_estimate(l, rep.fixed_point_state, 0.05, 5,
                                                          cfg.seed);
            const double distance =
                qms::trace_norm(rep.fixed_point_state - qms::gibbs(es, p.beta).matrix);
            std::ostringstream row;
            row << p.r << "," << p.g << "," << fmt(p.tau) << "," << fmt(p.beta) << ","
                << fmt(residual) << "," << fmt(rep.gap) << "," << fmt(tmix) << ","
                << fmt(distance);
            rows[i] = row.str();
            if (qms::log_level() >= 1) {
                static std::mutex log_mutex;
                const std::lock_guard<std::mutex> hold(log_mutex);
                std::cerr << "sweep point " << rows[i] << "\n";
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::ostringstream csv;
    csv << csv_header() << "r,g,tau,beta,residual,gap,tmix_est,distance\n";
    for (const auto& row : rows) csv << row << "\n";
    out.write("sweeps/sweep.csv", csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("qms ") + qms::version +
                 " - weak-measurement thermal sampler: exact simulation and verification"};
    app.fallthrough();
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_override = 0;
    int jobs = 1;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory (reports/, sweeps/, states/)");
    auto* seed_opt = app.add_option("--seed", seed_override, "override the config seed");
    app.add_option("--jobs", jobs, "worker threads for sweeps");
    app.require_subcommand(1);

    auto* sub_model = app.add_subcommand("model", "diagonalize the configured Hamiltonian");
    auto* sub_qpe = app.add_subcommand("qpe-table", "emit readout amplitude tables");
    auto* sub_channel = app.add_subcommand("channel-build", "build and validate one iteration");
    auto* sub_gap = app.add_subcommand("gap", "stationary state and spectral gap analysis");
    auto* sub_evolve = app.add_subcommand("evolve", "continuous-time relaxation curves");
    auto* sub_traj = app.add_subcommand("trajectory", "Monte Carlo trajectory chains");
    auto* sub_verify = app.add_subcommand("verify", "run the full verification battery");
    auto* sub_sweep = app.add_subcommand("sweep", "parameter sweep over r, g, tau, beta");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    qms::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = qms::parse_config(read_file(config_path));
        if (seed_opt->count() > 0) cfg.seed = seed_override;
        if (jobs < 1) throw std::invalid_argument("--jobs must be at least 1");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        const Output out(out_dir);
        if (sub_model->parsed()) return cmd_model(cfg, out);
        if (sub_qpe->parsed()) return cmd_qpe_table(cfg, out);
        if (sub_channel->parsed()) return cmd_channel(cfg, out);
        if (sub_gap->parsed()) return cmd_gap(cfg, out);
        if (sub_evolve->parsed()) return cmd_evolve(cfg, out);
        if (sub_traj->parsed()) return cmd_trajectory(cfg, out);
        if (sub_verify->parsed()) return cmd_verify(cfg, out);
        if (sub_sweep->parsed()) return cmd_sweep(cfg, out, jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;   // no subcommand matched; require_subcommand should prevent this
}
