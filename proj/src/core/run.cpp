#include "cqsim/run.hpp"

#include "cqsim/error.hpp"

namespace cqsim {

Method parse_method(const std::string& name) {
    if (name == "euler") return Method::Euler;
    if (name == "bdf1") return Method::Bdf1;
    if (name == "bdf2") return Method::Bdf2;
    if (name == "radau1") return Method::Radau1;
    if (name == "radau2") return Method::Radau2;
    if (name == "radau3") return Method::Radau3;
    throw Error(ErrorKind::Config, "unknown method '" + name + "'");
}

const char* method_name(Method m) noexcept {
    switch (m) {
        case Method::Euler: return "euler";
        case Method::Bdf1: return "bdf1";
        case Method::Bdf2: return "bdf2";
        case Method::Radau1: return "radau1";
        case Method::Radau2: return "radau2";
        case Method::Radau3: return "radau3";
    }
    return "?";
}

SchemeKind method_kind(Method m) noexcept {
    switch (m) {
        case Method::Euler:
        case Method::Bdf1:
        case Method::Bdf2:
            return SchemeKind::Bdf;
        default:
            return SchemeKind::Rk;
    }
}

int method_order(Method m) noexcept {
    switch (m) {
        case Method::Bdf2:
        case Method::Radau2:
            return 2;
        case Method::Radau3:
            return 3;
        default:
            return 1;
    }
}

int method_convergence_order(Method m) noexcept {
    switch (m) {
        case Method::Bdf2: return 2;
        case Method::Radau2: return 3;
        case Method::Radau3: return 5;
        default: return 1;
    }
}

CQWeightTable compute_weights(const DescriptorSystem& device, const RunConfig& cfg) {
    if (cfg.steps < 1 || !(cfg.horizon > 0.0)) {
        throw Error(ErrorKind::Config, "need horizon > 0 and steps >= 1");
    }
    const TransferFunction k(device);
    const ContourParams contour = choose_contour(cfg.steps, cfg.tau(), cfg.eps, cfg.contour);
    if (method_kind(cfg.method) == SchemeKind::Bdf) {
        return bdf_weights(k, BdfScheme::bdf(method_order(cfg.method)), contour);
    }
    return rk_weights(k, ButcherTableau::radau_iia(method_order(cfg.method)), contour);
}

Trajectory simulate(const NonlinearSubsystem& nl, const DescriptorSystem& device,
                    const RunConfig& cfg, const CQWeightTable* weights) {
    if (cfg.steps < 1 || !(cfg.horizon > 0.0)) {
        throw Error(ErrorKind::Config, "need horizon > 0 and steps >= 1");
    }
    const double tau = cfg.tau();
    const bool bdf = method_kind(cfg.method) == SchemeKind::Bdf;
    const int order = method_order(cfg.method);
    if (cfg.solver == SolverKind::Coupled) {
        if (bdf) {
            return solve_coupled_bdf(nl, device, BdfScheme::bdf(order), tau, cfg.steps,
                                     cfg.stepper);
        }
        return solve_coupled_rk(nl, device, ButcherTableau::radau_iia(order), tau, cfg.steps,
                                cfg.stepper);
    }
    std::optional<CQWeightTable> own;
    if (weights == nullptr) {
        own = compute_weights(device, cfg);
        weights = &*own;
    }
    if (bdf) {
        return solve_reduced_bdf(nl, *weights, BdfScheme::bdf(order), tau, cfg.steps, cfg.conv,
                                 cfg.stepper);
    }
    return solve_reduced_rk(nl, *weights, ButcherTableau::radau_iia(order), tau, cfg.steps,
                            cfg.conv, cfg.stepper);
}

}  // namespace cqsim
