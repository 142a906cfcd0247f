#include <chrono>
#include <deque>

#include "cqsim/error.hpp"
#include "cqsim/steppers.hpp"
#include "step_kernels.hpp"

namespace cqsim {

namespace {

using Clock = std::chrono::steady_clock;

Trajectory start_trajectory(const NonlinearSubsystem& nl, double tau, int N) {
    Trajectory traj;
    traj.tau = tau;
    traj.fd_jacobian = nl.finite_difference_jacobians();
    traj.t.reserve(static_cast<std::size_t>(N) + 1);
    traj.y.reserve(static_cast<std::size_t>(N) + 1);
    traj.t.push_back(0.0);
    traj.y.push_back(Vector::Zero(nl.dim_y));
    traj.newton_iters.push_back(0);
    return traj;
}

}  // namespace

Trajectory solve_reduced_bdf(const NonlinearSubsystem& nl, const CQWeightTable& weights,
                             const BdfScheme& scheme, double tau, int N, ConvolutionMode mode,
                             const StepperOptions& opts) {
    nl.validate();
    weights.require(SchemeKind::Bdf, scheme.m, tau, N, nl.inputs(), nl.outputs());
    const auto t0 = Clock::now();
    const std::int64_t evals0 = transfer_evaluations();
    const int m = scheme.m;
    const Matrix P = nl.selector();

    ConvolutionState conv(weights.weights, mode);
    conv.push(Vector::Zero(P.rows()));
    Trajectory traj = start_trajectory(nl, tau, N);
    std::deque<Vector> ys(static_cast<std::size_t>(m), Vector::Zero(nl.dim_y));

    detail::BdfStep step;
    step.nl = &nl;
    step.alpha_m = scheme.alpha[static_cast<std::size_t>(m)];
    step.tau = tau;
    step.coupling_jac = nl.couple_in * weights.weights.front() * P;
    Vector y = Vector::Zero(nl.dim_y);
    for (int n = 1; n <= N; ++n) {
        Vector hy = Vector::Zero(nl.dim_y);
        for (int k = 0; k < m; ++k) {
            hy += scheme.alpha[static_cast<std::size_t>(k)] * ys[static_cast<std::size_t>(k)];
        }
        step.t = n * tau;
        step.hist = hy;
        step.coupling_const = nl.couple_in * conv.sum(n);
        const int iters = detail::solve_bdf_step(step, y, opts.newton, n);
        conv.push(P * y);
        ys.pop_front();
        ys.push_back(y);
        traj.t.push_back(n * tau);
        traj.y.push_back(y);
        traj.newton_iters.push_back(iters);
    }
    traj.transfer_evaluations = transfer_evaluations() - evals0;
    traj.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return traj;
}

Trajectory solve_reduced_rk(const NonlinearSubsystem& nl, const CQWeightTable& weights,
                            const ButcherTableau& tab, double tau, int N, ConvolutionMode mode,
                            const StepperOptions& opts) {
    nl.validate();
    tab.validate();
    weights.require(SchemeKind::Rk, tab.s, tau, N, nl.inputs(), nl.outputs());
    const auto t0 = Clock::now();
    const std::int64_t evals0 = transfer_evaluations();
    const int s = tab.s;
    const Index d = nl.dim_y;
    const Matrix Ps = detail::kron_identity(s, nl.selector());
    const Matrix Cin = detail::kron_identity(s, nl.couple_in);

    ConvolutionState conv(weights.weights, mode);
    Trajectory traj = start_trajectory(nl, tau, N);

    detail::RkStep step;
    step.nl = &nl;
    step.tab = &tab;
    step.tau = tau;
    step.coupling_jac = Cin * weights.weights.front() * Ps;
    Vector y = Vector::Zero(d);
    Vector slopes = Vector::Zero(s * d);
    for (int n = 0; n < N; ++n) {
        step.t = n * tau;
        step.y = y;
        step.coupling_const = Cin * conv.sum(n);
        const int iters = detail::solve_rk_step(step, slopes, opts.newton, n + 1);
        const Vector Y = detail::rk_stage_values(tab, tau, y, slopes);
        if (n + 1 < N) {
            conv.push(Ps * Y);
        }
        y = detail::rk_advance(tab, tau, y, slopes);
        traj.t.push_back((n + 1) * tau);
        traj.y.push_back(y);
        traj.newton_iters.push_back(iters);
        if (opts.store_stages) {
            traj.stages.push_back(Y);
        }
    }
    traj.transfer_evaluations = transfer_evaluations() - evals0;
    traj.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return traj;
}

}  // namespace cqsim
