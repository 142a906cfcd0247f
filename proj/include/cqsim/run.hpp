#pragma once

#include <optional>
#include <string>

#include "cqsim/circuit.hpp"
#include "cqsim/cq_weights.hpp"
#include "cqsim/steppers.hpp"

namespace cqsim {

enum class Method { Euler, Bdf1, Bdf2, Radau1, Radau2, Radau3 };
enum class SolverKind { Coupled, Reduced };

/// euler | bdf1 | bdf2 | radau1 | radau2 | radau3; Config error otherwise.
Method parse_method(const std::string& name);
const char* method_name(Method m) noexcept;

SchemeKind method_kind(Method m) noexcept;
/// m for BDF methods, s for Radau methods.
int method_order(Method m) noexcept;

/// Classical convergence order of the method: 1, 1, 2, 1, 3, 5.
int method_convergence_order(Method m) noexcept;

struct RunConfig {
    Method method = Method::Euler;
    SolverKind solver = SolverKind::Reduced;
    double horizon = 1.0;
    int steps = 100;
    ContourMode contour = ContourMode::Experiment;
    double eps = 1e-16;
    ConvolutionMode conv = ConvolutionMode::Fft;
    StepperOptions stepper;

    double tau() const { return horizon / steps; }
};

/// Weights of the linear subsystem for the method and grid of `cfg`.
CQWeightTable compute_weights(const DescriptorSystem& device, const RunConfig& cfg);

/// Runs the configured solver. Reduced runs use `weights` when given and
/// compute them first otherwise (not counted as online work).
Trajectory simulate(const NonlinearSubsystem& nl, const DescriptorSystem& device,
                    const RunConfig& cfg, const CQWeightTable* weights = nullptr);

inline Trajectory simulate(const MnaModel& model, const RunConfig& cfg,
                           const CQWeightTable* weights = nullptr) {
    return simulate(model.nl, model.device, cfg, weights);
}

}  // namespace cqsim
