// Command-line front end. Uses only the C interface of libcqsim.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cqsim/cqsim.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Thrown to unwind with a status from the library.
struct Failure {
    cqsim_status status;
    std::string message;
};

void check(cqsim_status st) {
    if (st != CQSIM_OK) {
        throw Failure{st, cqsim_last_error()};
    }
}

[[noreturn]] void config_error(const std::string& msg) {
    throw Failure{CQSIM_ERR_CONFIG, msg};
}

using Circuit = std::unique_ptr<cqsim_circuit, decltype(&cqsim_circuit_free)>;
using Weights = std::unique_ptr<cqsim_weights, decltype(&cqsim_weights_free)>;
using Traj = std::unique_ptr<cqsim_trajectory, decltype(&cqsim_trajectory_free)>;

struct Options {
    std::string netlist;
    std::string method = "euler";
    std::string solver = "reduced";
    double tau = 0.0;
    int steps = 0;
    double horizon = 1.0;
    std::string contour = "experiment";
    double eps = 1e-16;
    std::string conv = "fft";
    std::string weights_file;
    std::string out;
    std::string diode_offset;
    bool no_cache = false;

    // compare
    std::string method_b;
    std::string solver_b;
    // convergence
    std::vector<int> exponents{3, 4, 5, 6, 7, 8, 9};
    // bode / fit
    double omega_min = 1e-2;
    double omega_max = 1e4;
    int points = 1000;
    // bench
    std::vector<int> nz_list{200, 400, 800};
    std::vector<int> steps_list{256, 1024};
    int repeats = 3;
};

double diode_offset(const Options& o) {
    if (o.diode_offset.empty()) {
        return 0.0;
    }
    if (o.diode_offset == "+1" || o.diode_offset == "1") {
        return 1.0;
    }
    if (o.diode_offset == "-1") {
        return -1.0;
    }
    config_error("--diode-offset must be +1 or -1");
}

Circuit load_circuit(const Options& o, cqsim_preset preset = CQSIM_PRESET_MODEL_PROBLEM,
                     const char* model = nullptr) {
    cqsim_circuit* c = nullptr;
    if (!o.netlist.empty()) {
        check(cqsim_circuit_load(o.netlist.c_str(), diode_offset(o), &c));
    } else {
        check(cqsim_circuit_preset(preset, model, diode_offset(o), &c));
    }
    return Circuit(c, cqsim_circuit_free);
}

cqsim_run_config run_config(const Options& o, const std::string& method,
                            const std::string& solver) {
    cqsim_run_config cfg;
    cqsim_run_config_init(&cfg);
    check(cqsim_method_from_name(method.c_str(), &cfg.method));
    if (solver == "coupled") {
        cfg.solver = CQSIM_COUPLED;
    } else if (solver == "reduced") {
        cfg.solver = CQSIM_REDUCED;
    } else {
        config_error("--solver must be coupled or reduced");
    }
    if (!(o.horizon > 0.0)) {
        config_error("--horizon must be positive");
    }
    cfg.horizon = o.horizon;
    if (o.steps > 0) {
        cfg.steps = o.steps;
    } else if (o.tau > 0.0) {
        const double n = o.horizon / o.tau;
        cfg.steps = static_cast<int32_t>(std::lround(n));
        if (cfg.steps < 1 || std::abs(n - cfg.steps) > 1e-9 * n) {
            config_error("--tau must divide the horizon");
        }
    }
    if (o.contour == "experiment") {
        cfg.contour = CQSIM_CONTOUR_EXPERIMENT;
    } else if (o.contour == "conservative") {
        cfg.contour = CQSIM_CONTOUR_CONSERVATIVE;
    } else {
        config_error("--contour must be experiment or conservative");
    }
    cfg.eps = o.eps;
    if (o.conv == "fft") {
        cfg.conv = CQSIM_CONV_FFT;
    } else if (o.conv == "naive") {
        cfg.conv = CQSIM_CONV_NAIVE;
    } else {
        config_error("--conv must be naive or fft");
    }
    cfg.cache_factorization = o.no_cache ? 0 : 1;
    return cfg;
}

Weights load_weights_file(const std::string& path) {
    cqsim_weights* w = nullptr;
    check(cqsim_weights_load(path.c_str(), &w));
    return Weights(w, cqsim_weights_free);
}

Traj run(const cqsim_circuit* c, const cqsim_run_config& cfg, const cqsim_weights* w = nullptr) {
    cqsim_trajectory* t = nullptr;
    check(cqsim_simulate(c, &cfg, w, &t));
    return Traj(t, cqsim_trajectory_free);
}

void write_csv(const cqsim_trajectory* t, const std::string& out) {
    if (!out.empty()) {
        check(cqsim_trajectory_write_csv(t, out.c_str()));
        return;
    }
    std::cout << "t";
    for (int64_t i = 0; i < cqsim_trajectory_dim(t); ++i) {
        std::cout << ",y" << i + 1;
    }
    std::cout << ",newton_iters\n" << std::setprecision(17);
    for (int32_t n = 0; n <= cqsim_trajectory_steps(t); ++n) {
        std::cout << cqsim_trajectory_time(t, n);
        for (int64_t i = 0; i < cqsim_trajectory_dim(t); ++i) {
            std::cout << "," << cqsim_trajectory_value(t, n, i);
        }
        std::cout << "," << cqsim_trajectory_newton_iters(t, n) << "\n";
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) {
        throw Failure{CQSIM_ERR_IO, "cannot write " + path};
    }
    f << std::setprecision(17);
    return f;
}

void print_environment(std::ostream& os) {
#ifdef NDEBUG
    const char* profile = "release";
#else
    const char* profile = "debug";
#endif
    os << "# threads=" << std::max(1u, std::thread::hardware_concurrency())
       << " build=" << profile << "\n";
}

int cmd_weights(const Options& o) {
    Circuit c = load_circuit(o);
    const cqsim_run_config cfg = run_config(o, o.method, "reduced");
    const auto t0 = std::chrono::steady_clock::now();
    cqsim_weights* raw = nullptr;
    check(cqsim_weights_compute(c.get(), &cfg, &raw));
    Weights w(raw, cqsim_weights_free);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string out = o.out.empty() ? (o.weights_file.empty() ? "weights.cqw" : o.weights_file)
                                          : o.out;
    check(cqsim_weights_save(w.get(), out.c_str()));
    cqsim_weights_info info;
    check(cqsim_weights_get_info(w.get(), &info));
    std::cout << "weights " << out << ": " << info.count << " x (" << info.rows << "x"
              << info.cols << ")\n"
              << "L = " << info.contour_points << "\nrho = " << std::setprecision(17) << info.rho
              << "\nmax_imag_residue = " << std::setprecision(6) << info.max_imag_residue
              << "\ntransfer_evaluations = " << info.transfer_evaluations
              << "\nwall_seconds = " << secs << "\n";
    return 0;
}

int cmd_simulate(const Options& o, cqsim_preset preset = CQSIM_PRESET_MODEL_PROBLEM) {
    Circuit c = load_circuit(o, preset);
    const cqsim_run_config cfg = run_config(o, o.method, o.solver);
    Weights w(nullptr, cqsim_weights_free);
    if (!o.weights_file.empty()) {
        if (cfg.solver != CQSIM_REDUCED) {
            config_error("--weights-file only applies to the reduced solver");
        }
        w = load_weights_file(o.weights_file);
    }
    Traj t = run(c.get(), cfg, w.get());
    write_csv(t.get(), o.out);
    std::cerr << o.solver << " " << o.method << ": N = " << cqsim_trajectory_steps(t.get())
              << ", online " << cqsim_trajectory_seconds(t.get()) << " s, "
              << cqsim_trajectory_transfer_evaluations(t.get()) << " online transfer evaluations"
              << (cqsim_trajectory_fd_jacobian(t.get()) ? ", finite-difference Jacobians" : "")
              << "\n";
    return 0;
}

int cmd_compare(const Options& o) {
    Circuit c = load_circuit(o);
    const std::string method_b = o.method_b.empty() ? o.method : o.method_b;
    const std::string solver_b =
        o.solver_b.empty() ? (o.solver == "coupled" ? "reduced" : "coupled") : o.solver_b;
    const cqsim_run_config a = run_config(o, o.method, o.solver);
    const cqsim_run_config b = run_config(o, method_b, solver_b);
    Traj ta = run(c.get(), a);
    Traj tb = run(c.get(), b);
    cqsim_diff d;
    check(cqsim_compare(ta.get(), tb.get(), &d));
    std::cout << std::setprecision(6) << o.solver << " " << o.method << " vs " << solver_b << " "
              << method_b << " (N = " << a.steps << ")\n"
              << "sup_abs = " << d.sup_abs << "\nsup_rel = " << d.sup_rel
              << "\nfinal_abs = " << d.final_abs << "\nworst_step = " << d.worst_step << "\n";
    if (!o.out.empty()) {
        std::ofstream f = open_out(o.out);
        f << "t,max_abs_diff\n";
        for (int32_t n = 0; n <= cqsim_trajectory_steps(ta.get()); ++n) {
            double m = 0.0;
            for (int64_t i = 0; i < cqsim_trajectory_dim(ta.get()); ++i) {
                m = std::max(m, std::abs(cqsim_trajectory_value(ta.get(), n, i) -
                                         cqsim_trajectory_value(tb.get(), n, i)));
            }
            f << cqsim_trajectory_time(ta.get(), n) << "," << m << "\n";
        }
    }
    return 0;
}

// Least-squares slope of log(err) over log(tau), ignoring errors <= floor.
double fitted_slope(const std::vector<double>& taus, const std::vector<double>& errs,
                    double floor) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (errs[i] > floor) {
            const double x = std::log(taus[i]);
            const double y = std::log(errs[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
    }
    if (n < 2) {
        return std::nan("");
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_convergence(const Options& o) {
    Circuit c = load_circuit(o);
    if (o.exponents.empty()) {
        config_error("--exponents must not be empty");
    }
    const int kmax = *std::max_element(o.exponents.begin(), o.exponents.end());
    Options ref_opts = o;
    ref_opts.steps = (1 << kmax) * 8;
    const cqsim_run_config ref_cfg = run_config(ref_opts, o.method, "coupled");
    std::vector<cqsim_run_config> cfgs;
    for (int k : o.exponents) {
        Options member = o;
        member.steps = 1 << k;
        cfgs.push_back(run_config(member, o.method, o.solver));
    }
    auto ref_future = std::async(std::launch::async, [&] { return run(c.get(), ref_cfg); });
    std::vector<std::future<Traj>> members;
    for (const auto& cfg : cfgs) {
        members.push_back(std::async(std::launch::async, [&c, cfg] { return run(c.get(), cfg); }));
    }
    Traj ref = ref_future.get();
    std::vector<double> taus;
    std::vector<double> sup;
    std::vector<double> fin;
    for (auto& f : members) {
        Traj t = f.get();
        cqsim_diff d;
        check(cqsim_compare(ref.get(), t.get(), &d));
        taus.push_back(cqsim_trajectory_tau(t.get()));
        sup.push_back(d.sup_abs);
        fin.push_back(d.final_abs);
    }
    std::ostream* os = &std::cout;
    std::ofstream f;
    if (!o.out.empty()) {
        f = open_out(o.out);
        os = &f;
    }
    *os << std::setprecision(17) << "tau,err_sup,err_final\n";
    for (std::size_t i = 0; i < taus.size(); ++i) {
        *os << taus[i] << "," << sup[i] << "," << fin[i] << "\n";
    }
    cqsim_method m;
    check(cqsim_method_from_name(o.method.c_str(), &m));
    std::cerr << o.solver << " " << o.method << ": fitted slope "
              << fitted_slope(taus, sup, 1e-11) << " (expected "
              << cqsim_method_convergence_order(m) << ")\n";
    return 0;
}

void omega_grid_check(const Options& o) {
    if (!(o.omega_min > 0.0) || !(o.omega_max > o.omega_min) || o.points < 2) {
        config_error("need 0 < --omega-min < --omega-max and --points >= 2");
    }
}

int cmd_bode(const Options& o) {
    omega_grid_check(o);
    Circuit c = load_circuit(o);
    std::vector<double> w(static_cast<std::size_t>(o.points));
    std::vector<double> mag(w.size());
    std::vector<double> ph(w.size());
    check(cqsim_bode(c.get(), o.omega_min, o.omega_max, o.points, w.data(), mag.data(), ph.data()));
    std::ostream* os = &std::cout;
    std::ofstream f;
    if (!o.out.empty()) {
        f = open_out(o.out);
        os = &f;
    }
    *os << std::setprecision(17) << "omega,mag_db,phase_deg\n";
    for (std::size_t i = 0; i < w.size(); ++i) {
        *os << w[i] << "," << mag[i] << "," << ph[i] << "\n";
    }
    return 0;
}

int cmd_fit(const Options& o) {
    omega_grid_check(o);
    Circuit c = load_circuit(o);
    cqsim_fit_result fit;
    check(cqsim_fit_device(c.get(), o.omega_min, o.omega_max, o.points, &fit));
    std::ostringstream report;
    report << std::setprecision(10) << "a = " << fit.a << "\nc = " << fit.c << "\nd = " << fit.d
           << "\nresidual = " << fit.residual << "\nrelative_residual = " << fit.relative_residual
           << "\nR1 = " << fit.R1 << "\nR2 = " << fit.R2 << "\nL1 = " << fit.L1 << "\n";

    // Time-domain check against a coupled reference on an 8x finer grid.
    cqsim_circuit* raw = nullptr;
    check(cqsim_circuit_with_equivalent_device(c.get(), &fit, &raw));
    Circuit ec(raw, cqsim_circuit_free);
    const cqsim_run_config cfg = run_config(o, o.method, "coupled");
    Options ref_opts = o;
    ref_opts.steps = cfg.steps * 8;
    ref_opts.tau = 0.0;
    Traj ref = run(c.get(), run_config(ref_opts, o.method, "coupled"));
    Traj t_ec = run(ec.get(), cfg);
    Traj t_cq = run(c.get(), run_config(o, o.method, "reduced"));
    cqsim_diff d_ec;
    cqsim_diff d_cq;
    check(cqsim_compare(ref.get(), t_ec.get(), &d_ec));
    check(cqsim_compare(ref.get(), t_cq.get(), &d_cq));
    report << "time_domain_error_equivalent_circuit = " << d_ec.sup_abs
           << "\ntime_domain_error_reduced_cq = " << d_cq.sup_abs << "\n";
    std::cout << report.str();
    if (!o.out.empty()) {
        std::ofstream f = open_out(o.out);
        f << report.str();
    }
    return 0;
}

int cmd_bench(const Options& o) {
    std::ostream* os = &std::cout;
    std::ofstream f;
    if (!o.out.empty()) {
        f = open_out(o.out);
        os = &f;
    }
    print_environment(*os);
    *os << "n_z,N,solver,offline_s,online_s,per_step_s,online_transfer_evaluations\n";
    for (int nz : o.nz_list) {
        const std::string model = "synthetic:eddy:" + std::to_string(nz);
        Options member = o;
        member.netlist.clear();
        Circuit c = load_circuit(member, CQSIM_PRESET_MODEL_PROBLEM, model.c_str());
        for (int n : o.steps_list) {
            member.steps = n;
            for (const char* solver : {"coupled", "reduced"}) {
                const cqsim_run_config cfg = run_config(member, o.method, solver);
                double offline = 0.0;
                Weights w(nullptr, cqsim_weights_free);
                if (cfg.solver == CQSIM_REDUCED) {
                    const auto t0 = std::chrono::steady_clock::now();
                    cqsim_weights* raw = nullptr;
                    check(cqsim_weights_compute(c.get(), &cfg, &raw));
                    w.reset(raw);
                    offline = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                  .count();
                }
                double best = 1e300;
                int64_t evals = 0;
                for (int r = 0; r < std::max(1, o.repeats); ++r) {
                    Traj t = run(c.get(), cfg, w.get());
                    best = std::min(best, cqsim_trajectory_seconds(t.get()));
                    evals = cqsim_trajectory_transfer_evaluations(t.get());
                }
                *os << cqsim_circuit_device_states(c.get()) << "," << n << "," << solver << ","
                    << offline << "," << best << "," << best / n << "," << evals << "\n";
            }
        }
    }
    return 0;
}

int cmd_rectifier(Options o) {
    Circuit c = load_circuit(o, CQSIM_PRESET_RECTIFIER);
    const cqsim_run_config cfg = run_config(o, o.method, o.solver);
    Traj t = run(c.get(), cfg);
    write_csv(t.get(), o.out);
    // the transformer shifts phase, so blocking is judged at the diode
    double max_u1 = 0.0;
    double max_u3_on = 0.0;
    double max_u3_blocked = 0.0;
    for (int32_t n = 0; n <= cqsim_trajectory_steps(t.get()); ++n) {
        const double u1 = cqsim_trajectory_value(t.get(), n, 0);
        const double u2 = cqsim_trajectory_value(t.get(), n, 1);
        const double u3 = cqsim_trajectory_value(t.get(), n, 2);
        max_u1 = std::max(max_u1, std::abs(u1));
        if (u2 < u3) {
            max_u3_blocked = std::max(max_u3_blocked, std::abs(u3));
        } else {
            max_u3_on = std::max(max_u3_on, std::abs(u3));
        }
    }
    std::cerr << std::setprecision(8) << "max|u1| = " << max_u1
              << "\nmax|u3| diode forward = " << max_u3_on
              << "\nmax|u3| diode blocking = " << max_u3_blocked << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled circuit / eddy-current simulation by convolution quadrature"};
    app.require_subcommand(1);
    Options o;

    auto add_run = [&](CLI::App* sub, bool solver = true) {
        sub->add_option("--netlist", o.netlist, "Netlist file (default: model problem)");
        sub->add_option("--method", o.method, "euler|bdf1|bdf2|radau1|radau2|radau3");
        if (solver) {
            sub->add_option("--solver", o.solver, "coupled|reduced");
        }
        auto* tau = sub->add_option("--tau", o.tau, "Step size");
        auto* steps = sub->add_option("--steps", o.steps, "Number of steps");
        tau->excludes(steps);
        sub->add_option("--horizon", o.horizon, "Final time T");
        sub->add_option("--contour", o.contour, "experiment|conservative");
        sub->add_option("--eps", o.eps, "Target accuracy of the conservative contour");
        sub->add_option("--conv", o.conv, "naive|fft");
        sub->add_option("--diode-offset", o.diode_offset, "+1|-1");
        sub->add_flag("--no-cache", o.no_cache, "Refactorize the linear pencil every step");
        sub->add_option("--out", o.out, "Output file");
    };
    auto* weights = app.add_subcommand("weights", "Compute and store CQ weights (offline stage)");
    add_run(weights, false);
    weights->add_option("--weights-file", o.weights_file, "Output weight file");
    auto* simulate = app.add_subcommand("simulate", "Run a simulation and write trajectory CSV");
    add_run(simulate);
    simulate->add_option("--weights-file", o.weights_file, "Precomputed weights (reduced)");
    auto* compare = app.add_subcommand("compare", "Compare two solver configurations");
    add_run(compare);
    compare->add_option("--method-b", o.method_b, "Method of the second run");
    compare->add_option("--solver-b", o.solver_b, "Solver of the second run");
    auto* convergence = app.add_subcommand("convergence", "Errors over tau = 2^-k T");
    add_run(convergence);
    convergence->add_option("--exponents", o.exponents, "Values of k")->delimiter(',');
    auto* bode = app.add_subcommand("bode", "Bode data of a one-port device");
    auto* fit = app.add_subcommand("fit", "(1,1) rational fit and equivalent circuit");
    for (auto* sub : {bode, fit}) {
        sub->add_option("--omega-min", o.omega_min, "Lowest angular frequency");
        sub->add_option("--omega-max", o.omega_max, "Highest angular frequency");
        sub->add_option("--points", o.points, "Number of log-spaced frequencies");
    }
    bode->add_option("--netlist", o.netlist, "Netlist file (default: model problem)");
    bode->add_option("--out", o.out, "Output CSV");
    add_run(fit, false);
    auto* bench = app.add_subcommand("bench", "Online timings over device size and N");
    add_run(bench, false);
    bench->add_option("--nz", o.nz_list, "Device sizes")->delimiter(',');
    bench->add_option("--steps-list", o.steps_list, "Step counts")->delimiter(',');
    bench->add_option("--repeats", o.repeats, "Runs per configuration (minimum is kept)");
    auto* rect = app.add_subcommand("rectifier", "Half-wave rectifier preset");
    add_run(rect);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*weights) return cmd_weights(o);
        if (*simulate) return cmd_simulate(o);
        if (*compare) return cmd_compare(o);
        if (*convergence) return cmd_convergence(o);
        if (*bode) return cmd_bode(o);
        if (*fit) {
            if (o.steps == 0 && o.tau == 0.0) {
                o.steps = 256;
            }
            return cmd_fit(o);
        }
        if (*bench) return cmd_bench(o);
        if (*rect) {
            if (rect->count("--steps") == 0 && rect->count("--tau") == 0) {
                o.steps = 1000;
            }
            if (rect->count("--contour") == 0) {
                o.contour = "conservative";
            }
            return cmd_rectifier(o);
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << cqsim_status_name(f.status) << ": " << f.message << "\n";
        return cqsim_status_is_numerical(f.status) ? kExitNumerical : kExitConfig;
    }
    return 0;
}
