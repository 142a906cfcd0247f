#include "cqsim/cqsim.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "cqsim/circuit.hpp"
#include "cqsim/error.hpp"
#include "cqsim/rational_fit.hpp"
#include "cqsim/run.hpp"

struct cqsim_circuit {
    cqsim::Netlist netlist;
    cqsim::MnaModel model;
    std::vector<std::string> unknowns;
};

struct cqsim_weights {
    cqsim::CQWeightTable table;
};

struct cqsim_trajectory {
    cqsim::Trajectory traj;
};

namespace {

thread_local std::string g_last_error;

cqsim_status status_of(cqsim::ErrorKind kind) {
    using cqsim::ErrorKind;
    switch (kind) {
        case ErrorKind::Config: return CQSIM_ERR_CONFIG;
        case ErrorKind::Parse: return CQSIM_ERR_PARSE;
        case ErrorKind::Io: return CQSIM_ERR_IO;
        case ErrorKind::DimensionMismatch: return CQSIM_ERR_DIMENSION;
        case ErrorKind::PreconditionViolation: return CQSIM_ERR_PRECONDITION;
        case ErrorKind::WeightMismatch: return CQSIM_ERR_WEIGHT_MISMATCH;
        case ErrorKind::SingularPencil: return CQSIM_ERR_SINGULAR_PENCIL;
        case ErrorKind::SingularPort: return CQSIM_ERR_SINGULAR_PORT;
        case ErrorKind::SingularSymbol: return CQSIM_ERR_SINGULAR_SYMBOL;
        case ErrorKind::IllConditionedEigenbasis: return CQSIM_ERR_ILL_CONDITIONED;
        case ErrorKind::ImaginaryResidue: return CQSIM_ERR_IMAGINARY_RESIDUE;
        case ErrorKind::NewtonDiverged: return CQSIM_ERR_NEWTON_DIVERGED;
        case ErrorKind::RankDeficient: return CQSIM_ERR_RANK_DEFICIENT;
        case ErrorKind::DegenerateParameters: return CQSIM_ERR_DEGENERATE;
        case ErrorKind::Overflow: return CQSIM_ERR_OVERFLOW;
    }
    return CQSIM_ERR_INTERNAL;
}

cqsim_status fail(cqsim_status status, const std::string& msg) {
    g_last_error = msg;
    return status;
}

template <class F>
cqsim_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return CQSIM_OK;
    } catch (const cqsim::Error& e) {
        return fail(status_of(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(CQSIM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(CQSIM_ERR_INTERNAL, e.what());
    }
}

cqsim::RunConfig to_config(const cqsim_run_config& c) {
    cqsim::RunConfig cfg;
    static const cqsim::Method methods[] = {cqsim::Method::Euler,  cqsim::Method::Bdf1,
                                            cqsim::Method::Bdf2,   cqsim::Method::Radau1,
                                            cqsim::Method::Radau2, cqsim::Method::Radau3};
    if (c.method < CQSIM_EULER || c.method > CQSIM_RADAU3) {
        throw cqsim::Error(cqsim::ErrorKind::Config, "unknown method");
    }
    cfg.method = methods[c.method];
    cfg.solver = c.solver == CQSIM_COUPLED ? cqsim::SolverKind::Coupled : cqsim::SolverKind::Reduced;
    cfg.horizon = c.horizon;
    cfg.steps = c.steps;
    cfg.contour = c.contour == CQSIM_CONTOUR_CONSERVATIVE ? cqsim::ContourMode::Conservative
                                                          : cqsim::ContourMode::Experiment;
    cfg.eps = c.eps;
    cfg.conv = c.conv == CQSIM_CONV_NAIVE ? cqsim::ConvolutionMode::Naive
                                          : cqsim::ConvolutionMode::Fft;
    cfg.stepper.cache_factorization = c.cache_factorization != 0;
    if (!(cfg.horizon > 0.0) || cfg.steps < 1 || !(cfg.eps > 0.0 && cfg.eps < 1.0)) {
        throw cqsim::Error(cqsim::ErrorKind::Config,
                           "need horizon > 0, steps >= 1 and 0 < eps < 1");
    }
    return cfg;
}

cqsim::MnaOptions mna_options(double diode_offset) {
    cqsim::MnaOptions opts;
    if (diode_offset != 0.0) {
        opts.diode_offset = diode_offset;
    }
    return opts;
}

cqsim_circuit* make_circuit(cqsim::Netlist netlist, cqsim::MnaModel model) {
    auto* c = new cqsim_circuit{std::move(netlist), std::move(model), {}};
    for (const std::string& n : c->netlist.node_names) {
        c->unknowns.push_back("u_" + n);
    }
    for (auto kind : {cqsim::ElementKind::L, cqsim::ElementKind::V}) {
        for (const cqsim::Element& e : c->netlist.elements) {
            if (e.kind == kind) {
                c->unknowns.push_back("j_" + e.name);
            }
        }
    }
    return c;
}

cqsim_circuit* circuit_from_text(const std::string& text, const std::string& source,
                                 const std::string& base_dir, double diode_offset) {
    cqsim::Netlist net = cqsim::parse_netlist(text, source, base_dir);
    cqsim::MnaModel model = cqsim::build_mna(net, mna_options(diode_offset));
    return make_circuit(std::move(net), std::move(model));
}

std::string preset_text(cqsim_preset preset, const char* device_model) {
    if (preset == CQSIM_PRESET_MODEL_PROBLEM) {
        return cqsim::model_problem_netlist(device_model ? device_model : "synthetic");
    }
    if (preset == CQSIM_PRESET_RECTIFIER) {
        return cqsim::rectifier_netlist(device_model ? device_model : "synthetic:transformer");
    }
    throw cqsim::Error(cqsim::ErrorKind::Config, "unknown preset");
}

const cqsim::DescriptorSystem& one_port_device(const cqsim_circuit* circuit) {
    const auto& dev = circuit->model.device;
    if (dev.inputs() != 1 || dev.outputs() != 1) {
        throw cqsim::Error(cqsim::ErrorKind::DimensionMismatch,
                           "frequency analysis needs a circuit with exactly one device port");
    }
    return dev;
}

void fill_fit(const cqsim::RationalFit& fit, cqsim_fit_result* out) {
    const cqsim::EquivalentCircuit ec = cqsim::to_equivalent_circuit(fit.model);
    *out = {fit.model.a, fit.model.c, fit.model.d, fit.residual, fit.relative_residual,
            ec.R1,       ec.R2,       ec.L1};
}

#define CQSIM_REQUIRE(cond)                                                   \
    do {                                                                      \
        if (!(cond)) {                                                        \
            return fail(CQSIM_ERR_INVALID_ARGUMENT, "invalid argument: " #cond); \
        }                                                                     \
    } while (0)

}  // namespace

extern "C" {

const char* cqsim_last_error(void) { return g_last_error.c_str(); }

const char* cqsim_status_name(cqsim_status status) {
    switch (status) {
        case CQSIM_OK: return "ok";
        case CQSIM_ERR_INVALID_ARGUMENT: return "invalid argument";
        case CQSIM_ERR_CONFIG: return "configuration error";
        case CQSIM_ERR_PARSE: return "parse error";
        case CQSIM_ERR_IO: return "i/o error";
        case CQSIM_ERR_DIMENSION: return "dimension mismatch";
        case CQSIM_ERR_PRECONDITION: return "precondition violated";
        case CQSIM_ERR_WEIGHT_MISMATCH: return "weight mismatch";
        case CQSIM_ERR_SINGULAR_PENCIL: return "singular pencil";
        case CQSIM_ERR_SINGULAR_PORT: return "singular port";
        case CQSIM_ERR_SINGULAR_SYMBOL: return "singular symbol";
        case CQSIM_ERR_ILL_CONDITIONED: return "ill-conditioned eigenbasis";
        case CQSIM_ERR_IMAGINARY_RESIDUE: return "imaginary residue";
        case CQSIM_ERR_NEWTON_DIVERGED: return "Newton diverged";
        case CQSIM_ERR_RANK_DEFICIENT: return "rank deficient";
        case CQSIM_ERR_DEGENERATE: return "degenerate parameters";
        case CQSIM_ERR_OVERFLOW: return "overflow";
        case CQSIM_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

int cqsim_status_is_numerical(cqsim_status status) {
    switch (status) {
        case CQSIM_ERR_SINGULAR_PENCIL:
        case CQSIM_ERR_SINGULAR_PORT:
        case CQSIM_ERR_SINGULAR_SYMBOL:
        case CQSIM_ERR_ILL_CONDITIONED:
        case CQSIM_ERR_IMAGINARY_RESIDUE:
        case CQSIM_ERR_NEWTON_DIVERGED:
        case CQSIM_ERR_RANK_DEFICIENT:
        case CQSIM_ERR_DEGENERATE:
        case CQSIM_ERR_OVERFLOW:
            return 1;
        default:
            return 0;
    }
}

cqsim_status cqsim_method_from_name(const char* name, cqsim_method* out) {
    CQSIM_REQUIRE(name && out);
    return guarded([&] { *out = static_cast<cqsim_method>(cqsim::parse_method(name)); });
}

int cqsim_method_convergence_order(cqsim_method method) {
    if (method < CQSIM_EULER || method > CQSIM_RADAU3) {
        return 0;
    }
    return cqsim::method_convergence_order(static_cast<cqsim::Method>(method));
}

void cqsim_run_config_init(cqsim_run_config* cfg) {
    if (cfg == nullptr) {
        return;
    }
    *cfg = {CQSIM_EULER, CQSIM_REDUCED, 1.0, 100, CQSIM_CONTOUR_EXPERIMENT, 1e-16,
            CQSIM_CONV_FFT, 1};
}

cqsim_status cqsim_circuit_load(const char* path, double diode_offset, cqsim_circuit** out) {
    CQSIM_REQUIRE(path && out);
    *out = nullptr;
    return guarded([&] {
        std::ifstream in(path);
        if (!in) {
            throw cqsim::Error(cqsim::ErrorKind::Io, std::string("cannot open netlist ") + path);
        }
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::filesystem::path p(path);
        *out = circuit_from_text(text, path, p.parent_path().string(), diode_offset);
    });
}

cqsim_status cqsim_circuit_parse(const char* text, const char* base_dir, double diode_offset,
                                 cqsim_circuit** out) {
    CQSIM_REQUIRE(text && out);
    *out = nullptr;
    return guarded([&] {
        *out = circuit_from_text(text, "<netlist>", base_dir ? base_dir : ".", diode_offset);
    });
}

cqsim_status cqsim_circuit_preset(cqsim_preset preset, const char* device_model,
                                  double diode_offset, cqsim_circuit** out) {
    CQSIM_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        *out = circuit_from_text(preset_text(preset, device_model), "<preset>", ".", diode_offset);
    });
}

cqsim_status cqsim_preset_netlist(cqsim_preset preset, const char* device_model, char* buf,
                                  size_t len, size_t* needed) {
    return guarded([&] {
        const std::string text = preset_text(preset, device_model);
        if (needed) {
            *needed = text.size() + 1;
        }
        if (buf && len > 0) {
            const size_t n = std::min(len - 1, text.size());
            std::memcpy(buf, text.data(), n);
            buf[n] = '\0';
        }
    });
}

void cqsim_circuit_free(cqsim_circuit* circuit) { delete circuit; }

int64_t cqsim_circuit_dim(const cqsim_circuit* c) { return c ? c->model.dim_y() : 0; }
int64_t cqsim_circuit_ports(const cqsim_circuit* c) { return c ? c->model.ports() : 0; }
int64_t cqsim_circuit_device_states(const cqsim_circuit* c) {
    return c ? c->model.device.states() : 0;
}
int64_t cqsim_circuit_nodes(const cqsim_circuit* c) { return c ? c->model.n_nodes : 0; }

const char* cqsim_circuit_unknown_name(const cqsim_circuit* c, int64_t i) {
    if (!c || i < 0 || i >= static_cast<int64_t>(c->unknowns.size())) {
        return nullptr;
    }
    return c->unknowns[static_cast<size_t>(i)].c_str();
}

cqsim_status cqsim_weights_compute(const cqsim_circuit* circuit, const cqsim_run_config* cfg,
                                   cqsim_weights** out) {
    CQSIM_REQUIRE(circuit && cfg && out);
    *out = nullptr;
    return guarded([&] {
        *out = new cqsim_weights{cqsim::compute_weights(circuit->model.device, to_config(*cfg))};
    });
}

cqsim_status cqsim_weights_save(const cqsim_weights* w, const char* path) {
    CQSIM_REQUIRE(w && path);
    return guarded([&] { cqsim::save_weights(path, w->table); });
}

cqsim_status cqsim_weights_load(const char* path, cqsim_weights** out) {
    CQSIM_REQUIRE(path && out);
    *out = nullptr;
    return guarded([&] { *out = new cqsim_weights{cqsim::load_weights(path)}; });
}

void cqsim_weights_free(cqsim_weights* w) { delete w; }

cqsim_status cqsim_weights_get_info(const cqsim_weights* w, cqsim_weights_info* info) {
    CQSIM_REQUIRE(w && info);
    const auto& t = w->table;
    *info = {t.kind == cqsim::SchemeKind::Rk ? 1 : 0,
             t.order,
             t.rows(),
             t.cols(),
             static_cast<int32_t>(t.weights.size()),
             t.N,
             t.tau,
             t.rho,
             t.L,
             t.max_imag_residue,
             t.transfer_evaluations};
    return CQSIM_OK;
}

cqsim_status cqsim_weights_entry(const cqsim_weights* w, int32_t n, int64_t i, int64_t j,
                                 double* out) {
    CQSIM_REQUIRE(w && out);
    const auto& t = w->table;
    CQSIM_REQUIRE(n >= 0 && n < static_cast<int32_t>(t.weights.size()));
    CQSIM_REQUIRE(i >= 0 && i < t.rows() && j >= 0 && j < t.cols());
    *out = t.weights[static_cast<size_t>(n)](i, j);
    return CQSIM_OK;
}

cqsim_status cqsim_simulate(const cqsim_circuit* circuit, const cqsim_run_config* cfg,
                            const cqsim_weights* weights, cqsim_trajectory** out) {
    CQSIM_REQUIRE(circuit && cfg && out);
    *out = nullptr;
    return guarded([&] {
        *out = new cqsim_trajectory{cqsim::simulate(circuit->model, to_config(*cfg),
                                                    weights ? &weights->table : nullptr)};
    });
}

void cqsim_trajectory_free(cqsim_trajectory* traj) { delete traj; }

int32_t cqsim_trajectory_steps(const cqsim_trajectory* t) { return t ? t->traj.steps() : 0; }
int64_t cqsim_trajectory_dim(const cqsim_trajectory* t) { return t ? t->traj.dim() : 0; }
double cqsim_trajectory_tau(const cqsim_trajectory* t) { return t ? t->traj.tau : 0.0; }

double cqsim_trajectory_time(const cqsim_trajectory* t, int32_t n) {
    if (!t || n < 0 || n > t->traj.steps()) {
        return 0.0;
    }
    return t->traj.t[static_cast<size_t>(n)];
}

double cqsim_trajectory_value(const cqsim_trajectory* t, int32_t n, int64_t i) {
    if (!t || n < 0 || n > t->traj.steps() || i < 0 || i >= t->traj.dim()) {
        return 0.0;
    }
    return t->traj.y[static_cast<size_t>(n)](i);
}

int32_t cqsim_trajectory_newton_iters(const cqsim_trajectory* t, int32_t n) {
    if (!t || n < 0 || n > t->traj.steps()) {
        return 0;
    }
    return t->traj.newton_iters[static_cast<size_t>(n)];
}

double cqsim_trajectory_seconds(const cqsim_trajectory* t) { return t ? t->traj.seconds : 0.0; }

int64_t cqsim_trajectory_transfer_evaluations(const cqsim_trajectory* t) {
    return t ? t->traj.transfer_evaluations : 0;
}

int32_t cqsim_trajectory_fd_jacobian(const cqsim_trajectory* t) {
    return t && t->traj.fd_jacobian ? 1 : 0;
}

cqsim_status cqsim_trajectory_write_csv(const cqsim_trajectory* t, const char* path) {
    CQSIM_REQUIRE(t && path);
    return guarded([&] {
        std::ofstream out(path);
        if (!out) {
            throw cqsim::Error(cqsim::ErrorKind::Io, std::string("cannot write ") + path);
        }
        cqsim::write_trajectory_csv(out, t->traj);
    });
}

cqsim_status cqsim_compare(const cqsim_trajectory* ref, const cqsim_trajectory* other,
                           cqsim_diff* out) {
    CQSIM_REQUIRE(ref && other && out);
    return guarded([&] {
        const cqsim::TrajectoryDiff d = cqsim::compare_trajectories(ref->traj, other->traj);
        *out = {d.sup_abs, d.sup_rel, d.final_abs, d.worst_step};
    });
}

cqsim_status cqsim_bode(const cqsim_circuit* circuit, double omega_lo, double omega_hi,
                        int32_t n, double* omega, double* mag_db, double* phase_deg) {
    CQSIM_REQUIRE(circuit && omega && mag_db && phase_deg);
    return guarded([&] {
        const cqsim::TransferFunction k(one_port_device(circuit));
        const auto points =
            cqsim::bode_data(cqsim::sample_imaginary_axis(k, cqsim::log_grid(omega_lo, omega_hi, n)));
        for (size_t i = 0; i < points.size(); ++i) {
            omega[i] = points[i].omega;
            mag_db[i] = points[i].mag_db;
            phase_deg[i] = points[i].phase_deg;
        }
    });
}

cqsim_status cqsim_fit_samples(const double* omega, const double* re, const double* im,
                               int32_t n, cqsim_fit_result* out) {
    CQSIM_REQUIRE(omega && re && im && out && n >= 0);
    return guarded([&] {
        std::vector<cqsim::FrequencySample> samples;
        for (int32_t i = 0; i < n; ++i) {
            samples.push_back({cqsim::Complex(0.0, omega[i]), cqsim::Complex(re[i], im[i])});
        }
        fill_fit(cqsim::fit_rational_11(samples), out);
    });
}

cqsim_status cqsim_fit_device(const cqsim_circuit* circuit, double omega_lo, double omega_hi,
                              int32_t n, cqsim_fit_result* out) {
    CQSIM_REQUIRE(circuit && out);
    return guarded([&] {
        const cqsim::TransferFunction k(one_port_device(circuit));
        fill_fit(cqsim::fit_rational_11(
                     cqsim::sample_imaginary_axis(k, cqsim::log_grid(omega_lo, omega_hi, n))),
                 out);
    });
}

cqsim_status cqsim_circuit_with_equivalent_device(const cqsim_circuit* circuit,
                                                  const cqsim_fit_result* fit,
                                                  cqsim_circuit** out) {
    CQSIM_REQUIRE(circuit && fit && out);
    *out = nullptr;
    return guarded([&] {
        std::vector<cqsim::DescriptorSystem> devices;
        for (const cqsim::Element& e : circuit->netlist.elements) {
            if (e.kind != cqsim::ElementKind::M) {
                continue;
            }
            if (e.ports() != 1) {
                throw cqsim::Error(cqsim::ErrorKind::DimensionMismatch,
                                   e.name + ": equivalent circuits replace one-port devices only");
            }
            devices.push_back(cqsim::equivalent_circuit_descriptor({fit->R1, fit->R2, fit->L1}));
        }
        if (devices.empty()) {
            throw cqsim::Error(cqsim::ErrorKind::Config, "circuit has no device to replace");
        }
        cqsim::MnaOptions opts;
        cqsim::MnaModel model =
            cqsim::build_mna(circuit->netlist, cqsim::block_diagonal(devices), opts);
        // Keep the diode laws of the original model.
        model.nl.force = circuit->model.nl.force;
        model.nl.jac_force = circuit->model.nl.jac_force;
        *out = make_circuit(circuit->netlist, std::move(model));
    });
}

int64_t cqsim_transfer_evaluations(void) { return cqsim::transfer_evaluations(); }

}  // extern "C"
