// Command-line front end: wires JSON/CSV files to the library operations.
//
// Exit codes: 0 success (or positive verdict), 2 well-formed negative verdict
// (infeasible certificate, no design found, envelope violated), 1 any error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyperobs/hyperobs.hpp"

namespace {

using namespace hyperobs;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open \"" + path + "\" for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw std::runtime_error("failed while reading \"" + path + "\"");
    return buf.str();
}

// All outputs go through write-then-rename so readers never observe a
// partially written file.
void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open \"" + tmp + "\" for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("failed while writing \"" + tmp + "\"");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("cannot rename \"" + tmp + "\" to \"" + path + "\"");
    }
    log_debug("wrote " + path);
}

GridState load_initial_state(const PdeOdeSystem& sys, int n_cells, const std::string& init) {
    if (init == "paper-example") return make_initial(sys, n_cells, init);
    const json j = detail::parse_document(read_file(init), "initial state");
    detail::reject_unknown_fields(j, {"x", "chi", "xhat", "chihat"}, "initial state");
    const std::size_t cols = static_cast<std::size_t>(n_cells) + 1;
    const Mat x = detail::get_matrix(j, "x", sys.n_x(), cols, "initial state");
    const Vec chi = detail::get_vector(j, "chi", sys.n_chi(), "initial state");
    const Mat xhat = j.contains("xhat")
                         ? detail::get_matrix(j, "xhat", sys.n_x(), cols, "initial state")
                         : Mat(sys.n_x(), cols);
    const Vec chihat = j.contains("chihat")
                           ? detail::get_vector(j, "chihat", sys.n_chi(), "initial state")
                           : Vec(sys.n_chi(), 0.0);
    return make_initial(sys, x, chi, xhat, chihat);
}

struct DiagSamples {
    std::vector<double> t, v, dist, envelope;
};

DiagSamples load_diagnostics_csv(const std::string& path) {
    std::istringstream is(read_file(path));
    std::string line;
    if (!std::getline(is, line) || line != "t,V,dist,envelope") {
        throw std::invalid_argument("diagnostics file \"" + path +
                                    "\": expected header t,V,dist,envelope");
    }
    DiagSamples out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(fields, cell, ',')) {
            std::size_t used = 0;
            vals.push_back(std::stod(cell, &used));
            if (used != cell.size()) {
                throw std::invalid_argument("diagnostics file \"" + path + "\": bad number at line " +
                                            std::to_string(lineno));
            }
        }
        if (vals.size() != 4) {
            throw std::invalid_argument("diagnostics file \"" + path + "\": expected 4 columns at line " +
                                        std::to_string(lineno));
        }
        out.t.push_back(vals[0]);
        out.v.push_back(vals[1]);
        out.dist.push_back(vals[2]);
        out.envelope.push_back(vals[3]);
    }
    if (out.t.empty()) {
        throw std::invalid_argument("diagnostics file \"" + path + "\": no data rows");
    }
    return out;
}

int cmd_verify(const std::string& sys_path, const std::string& cert_path, double tol) {
    const PdeOdeSystem sys = load_system(read_file(sys_path));
    const Certificate cert = load_certificate(read_file(cert_path));
    const VerificationReport rep = verify(sys, cert, tol);
    std::cout << save_report(rep);
    return rep.feasible ? 0 : 2;
}

int cmd_design(const std::string& sys_path, const std::string& out_path,
               const std::vector<double>& mu_grid, unsigned seed, int restarts) {
    const PdeOdeSystem sys = load_system(read_file(sys_path));
    SynthConfig cfg;
    if (!mu_grid.empty()) cfg.mu_grid = mu_grid;
    cfg.seed = seed;
    cfg.restarts = restarts;
    const SynthResult res = synthesize(sys, cfg);
    std::cout << save_synth_result(res);
    if (!res.certificate) {
        log_info("design: no feasible certificate found");
        return 2;
    }
    write_file_atomic(out_path, save_certificate(*res.certificate));
    return 0;
}

int cmd_simulate(const std::string& sys_path, const std::string& cert_path, double t_end,
                 int cells, double cfl, const std::string& scheme, int record_every,
                 const std::string& out_path, const std::string& diag_path,
                 const std::string& init, const std::string& format) {
    const PdeOdeSystem sys = load_system(read_file(sys_path));
    const Certificate cert = load_certificate(read_file(cert_path));
    validate_compatible(sys, cert);

    SimConfig cfg;
    cfg.n_cells = cells;
    cfg.cfl = cfl;
    cfg.t_end = t_end;
    cfg.scheme = scheme_from_string(scheme);
    cfg.record_every = record_every;
    validate(cfg);

    const GridState initial = load_initial_state(sys, cells, init);
    const Trajectory traj = simulate(sys, cert.l_gain, initial, cfg);
    log_info("simulate: " + std::to_string(traj.snapshots.size()) + " snapshots recorded");

    if (format == "json") {
        write_file_atomic(out_path, save_trajectory_json(traj));
    } else {
        std::ostringstream os;
        write_trajectory_csv(traj, os);
        write_file_atomic(out_path, os.str());
    }
    if (!diag_path.empty()) {
        std::ostringstream os;
        write_diagnostics_csv(traj, cert, os);
        write_file_atomic(diag_path, os.str());
    }
    return 0;
}

int cmd_decay(const std::string& diag_path, const std::string& cert_path,
              const std::string& sys_path, const std::vector<double>& window, double slack) {
    const PdeOdeSystem sys = load_system(read_file(sys_path));
    const Certificate cert = load_certificate(read_file(cert_path));
    const DecayEstimate est = decay_estimate(sys, cert);
    const DiagSamples diag = load_diagnostics_csv(diag_path);

    double lo = diag.t.front();
    double hi = diag.t.back();
    if (!window.empty()) {
        if (window.size() != 2) throw std::invalid_argument("--window expects two values a,b");
        lo = window[0];
        hi = window[1];
    }
    const DecayFit fit = fit_log_decay(diag.t, diag.v, lo, hi);

    bool ok = true;
    double worst_excess = -std::numeric_limits<double>::infinity();
    double worst_t = diag.t.front();
    for (std::size_t i = 0; i < diag.t.size(); ++i) {
        const double excess = diag.dist[i] - (1.0 + slack) * diag.envelope[i];
        if (excess > worst_excess) {
            worst_excess = excess;
            worst_t = diag.t[i];
        }
        if (excess > 0.0) ok = false;
    }

    json j;
    j["fit"] = json{{"rate", fit.rate},
                    {"intercept", fit.intercept},
                    {"rms_residual", fit.rms_residual},
                    {"window", json::array({fit.window_lo, fit.window_hi})}};
    j["envelope"] = json{{"ok", ok},
                         {"slack", slack},
                         {"worst_excess", worst_excess},
                         {"worst_t", worst_t}};
    j["estimate"] = json{{"kappa", est.kappa},
                         {"lambda_rate", est.lambda_rate},
                         {"guaranteed_v_rate", 2.0 * est.lambda_rate}};
    std::cout << j.dump(2) << "\n";
    return ok ? 0 : 2;
}

int cmd_example(const std::string& which, const std::string& out_dir) {
    if (which != "paper") {
        throw std::invalid_argument("unknown example \"" + which + "\" (only: paper)");
    }
    const std::string sys_path = out_dir + "/system.json";
    const std::string cert_path = out_dir + "/certificate.json";
    write_file_atomic(sys_path, save_system(paper_example_system()));
    write_file_atomic(cert_path, save_certificate(paper_example_certificate()));
    std::cout << sys_path << "\n" << cert_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary-observer toolkit for 1-D transport systems with nonlinear "
                 "boundary dynamics"};
    app.require_subcommand(1);

    // verify ------------------------------------------------------------
    auto* verify_cmd = app.add_subcommand("verify", "Check a certificate against a system");
    std::string v_sys, v_cert;
    double v_tol = 1e-9;
    verify_cmd->add_option("--system", v_sys, "System JSON file")->required();
    verify_cmd->add_option("--certificate", v_cert, "Certificate JSON file")->required();
    verify_cmd->add_option("--tol", v_tol, "Margin tolerance (default 1e-9)");

    // design ------------------------------------------------------------
    auto* design_cmd = app.add_subcommand("design", "Search for a feasible certificate");
    std::string d_sys, d_out;
    std::vector<double> d_mu_grid;
    unsigned d_seed = 1;
    int d_restarts = 5;
    design_cmd->add_option("--system", d_sys, "System JSON file")->required();
    design_cmd->add_option("--out", d_out, "Output certificate JSON file")->required();
    design_cmd->add_option("--mu-grid", d_mu_grid, "Comma-separated decay weights to try")
        ->delimiter(',');
    design_cmd->add_option("--seed", d_seed, "Random seed (default 1)");
    design_cmd->add_option("--restarts", d_restarts, "Restarts per grid point (default 5)");

    // simulate ----------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("simulate", "Run the plant/observer interconnection");
    std::string s_sys, s_cert, s_out, s_diag, s_init = "paper-example", s_scheme = "upwind";
    std::string s_format = "csv";
    double s_t_end = 0.0, s_cfl = 0.9;
    int s_cells = 0, s_record = 1;
    sim_cmd->add_option("--system", s_sys, "System JSON file")->required();
    sim_cmd->add_option("--certificate", s_cert, "Certificate JSON file (observer gain)")
        ->required();
    sim_cmd->add_option("--t-end", s_t_end, "Final time")->required();
    sim_cmd->add_option("--cells", s_cells, "Number of grid cells (>= 8)")->required();
    sim_cmd->add_option("--cfl", s_cfl, "CFL number in (0, 1] (default 0.9)");
    sim_cmd->add_option("--scheme", s_scheme, "upwind | two-step-lxf (default upwind)");
    sim_cmd->add_option("--record-every", s_record, "Snapshot stride in steps (default 1)");
    sim_cmd->add_option("--out", s_out, "Trajectory output file")->required();
    sim_cmd->add_option("--diag", s_diag, "Optional Lyapunov diagnostics CSV");
    sim_cmd->add_option("--init", s_init,
                        "Built-in profile name or initial-state JSON file (default paper-example)");
    sim_cmd->add_option("--format", s_format, "Trajectory format: csv | json (default csv)")
        ->check(CLI::IsMember({"csv", "json"}));

    // decay ---------------------------------------------------------------
    auto* decay_cmd = app.add_subcommand("decay", "Fit decay rate and check the envelope");
    std::string y_diag, y_cert, y_sys;
    std::vector<double> y_window;
    double y_slack = 0.1;
    decay_cmd->add_option("--diag", y_diag, "Diagnostics CSV from simulate")->required();
    decay_cmd->add_option("--certificate", y_cert, "Certificate JSON file")->required();
    decay_cmd->add_option("--system", y_sys, "System JSON file")->required();
    decay_cmd->add_option("--window", y_window, "Fit window a,b (default: full span)")
        ->delimiter(',');
    decay_cmd->add_option("--slack", y_slack, "Envelope slack fraction (default 0.1)");

    // example -------------------------------------------------------------
    auto* example_cmd = app.add_subcommand("example", "Write bundled example files");
    std::string e_which, e_dir = ".";
    example_cmd->add_option("which", e_which, "Example name (paper)")->required();
    example_cmd->add_option("--out-dir", e_dir, "Output directory (default .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help/version exit 0; any parse error is 1
    }

    try {
        if (*verify_cmd) return cmd_verify(v_sys, v_cert, v_tol);
        if (*design_cmd) return cmd_design(d_sys, d_out, d_mu_grid, d_seed, d_restarts);
        if (*sim_cmd) {
            return cmd_simulate(s_sys, s_cert, s_t_end, s_cells, s_cfl, s_scheme, s_record, s_out,
                                s_diag, s_init, s_format);
        }
        if (*decay_cmd) return cmd_decay(y_diag, y_cert, y_sys, y_window, y_slack);
        if (*example_cmd) return cmd_example(e_which, e_dir);
    } catch (const std::exception& e) {
        std::cerr << "hyperobs: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "hyperobs: no subcommand selected\n";
    return 1;
}
