#include <chrono>
#include <deque>
#include <optional>

#include "cqsim/error.hpp"
#include "cqsim/steppers.hpp"
#include "step_kernels.hpp"

namespace cqsim {

namespace {

using Clock = std::chrono::steady_clock;

void check_setup(const NonlinearSubsystem& nl, const DescriptorSystem& lin, double tau, int N) {
    nl.validate();
    lin.validate();
    if (!(tau > 0.0) || N < 1) {
        throw Error(ErrorKind::PreconditionViolation, "need tau > 0 and N >= 1");
    }
    if (lin.inputs() != nl.inputs() || lin.outputs() != nl.outputs()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "linear subsystem ports do not match the nonlinear coupling");
    }
}

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

// Per-step data of the eliminated linear block  G z = B P y - E h / tau.
struct BdfPencil {
    CheckedLU<double> lu;
    Matrix S;             // G^{-1} B
    Matrix coupling_jac;  // couple_in C^T S P

    BdfPencil(const DescriptorSystem& lin, const Matrix& cin, const Matrix& P, double alpha_m,
              double tau) {
        if (lin.states() == 0) {
            S = Matrix::Zero(0, lin.inputs());
            coupling_jac = Matrix::Zero(cin.rows(), cin.rows());
            return;
        }
        lu = CheckedLU<double>(Matrix(alpha_m / tau * lin.E + lin.A));
        S = lu.solve(lin.B);
        coupling_jac = cin * (lin.C.transpose() * S) * P;
    }

    Vector solve(const Vector& rhs) const { return rhs.size() == 0 ? rhs : Vector(lu.solve(rhs)); }
};

}  // namespace

Trajectory solve_coupled_bdf(const NonlinearSubsystem& nl, const DescriptorSystem& lin,
                             const BdfScheme& scheme, double tau, int N,
                             const StepperOptions& opts) {
    check_setup(nl, lin, tau, N);
    const auto t0 = Clock::now();
    const std::int64_t evals0 = transfer_evaluations();
    const int m = scheme.m;
    const double alpha_m = scheme.alpha[static_cast<std::size_t>(m)];
    const Matrix P = nl.selector();
    const Index nz = lin.states();

    Trajectory traj = start_trajectory(nl, tau, N);
    if (opts.store_z) {
        traj.z.push_back(Vector::Zero(nz));
    }
    std::optional<BdfPencil> cached;
    if (opts.cache_factorization) {
        cached.emplace(lin, nl.couple_in, P, alpha_m, tau);
    }
    // Last m values of y and z, oldest first; missing history is zero.
    std::deque<Vector> ys(static_cast<std::size_t>(m), Vector::Zero(nl.dim_y));
    std::deque<Vector> zs(static_cast<std::size_t>(m), Vector::Zero(nz));

    detail::BdfStep step;
    step.nl = &nl;
    step.alpha_m = alpha_m;
    step.tau = tau;
    Vector y = Vector::Zero(nl.dim_y);
    for (int n = 1; n <= N; ++n) {
        std::optional<BdfPencil> fresh;
        if (!opts.cache_factorization) {
            fresh.emplace(lin, nl.couple_in, P, alpha_m, tau);
        }
        const BdfPencil& pencil = opts.cache_factorization ? *cached : *fresh;

        Vector hy = Vector::Zero(nl.dim_y);
        Vector hz = Vector::Zero(nz);
        for (int k = 0; k < m; ++k) {
            const double a = scheme.alpha[static_cast<std::size_t>(k)];
            hy += a * ys[static_cast<std::size_t>(k)];
            hz += a * zs[static_cast<std::size_t>(k)];
        }
        const Vector r = pencil.solve(lin.E * hz / tau);
        step.t = n * tau;
        step.hist = hy;
        step.coupling_jac = pencil.coupling_jac;
        step.coupling_const = -(nl.couple_in * (lin.C.transpose() * r));
        const int iters = detail::solve_bdf_step(step, y, opts.newton, n);
        Vector z = pencil.S * (P * y) - r;

        ys.pop_front();
        ys.push_back(y);
        zs.pop_front();
        zs.push_back(z);
        traj.t.push_back(n * tau);
        traj.y.push_back(y);
        traj.newton_iters.push_back(iters);
        if (opts.store_z) {
            traj.z.push_back(std::move(z));
        }
    }
    traj.transfer_evaluations = transfer_evaluations() - evals0;
    traj.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return traj;
}

Trajectory solve_coupled_euler(const NonlinearSubsystem& nl, const DescriptorSystem& lin,
                               double tau, int N, const StepperOptions& opts) {
    return solve_coupled_bdf(nl, lin, BdfScheme::bdf(1), tau, N, opts);
}

namespace {

// Stage pencil G = I (x) E + tau (A (x) A_lin) and the coupling it induces.
struct RkPencil {
    CheckedLU<double> lu;
    Matrix S;             // G^{-1} (I (x) B)
    Matrix AC;            // tau (A (x) C^T)
    Matrix coupling_jac;  // (I (x) couple_in) AC S (I (x) P)

    RkPencil(const DescriptorSystem& lin, const ButcherTableau& tab, const Matrix& cin,
             const Matrix& P, double tau) {
        const int s = tab.s;
        const Index nz = lin.states();
        Matrix G = Matrix::Zero(s * nz, s * nz);
        AC = Matrix::Zero(s * lin.outputs(), s * nz);
        for (int i = 0; i < s; ++i) {
            G.block(i * nz, i * nz, nz, nz) = lin.E;
            for (int j = 0; j < s; ++j) {
                G.block(i * nz, j * nz, nz, nz) += tau * tab.A(i, j) * lin.A;
                AC.block(i * lin.outputs(), j * nz, lin.outputs(), nz) =
                    tau * tab.A(i, j) * lin.C.transpose();
            }
        }
        if (nz == 0) {
            S = Matrix::Zero(0, s * lin.inputs());
            coupling_jac = Matrix::Zero(s * cin.rows(), s * cin.rows());
            return;
        }
        lu = CheckedLU<double>(G);
        S = lu.solve(detail::kron_identity(s, lin.B));
        coupling_jac = detail::kron_identity(s, cin) * (AC * S) * detail::kron_identity(s, P);
    }

    Vector solve(const Vector& rhs) const { return rhs.size() == 0 ? rhs : Vector(lu.solve(rhs)); }
};

}  // namespace

Trajectory solve_coupled_rk(const NonlinearSubsystem& nl, const DescriptorSystem& lin,
                            const ButcherTableau& tab, double tau, int N,
                            const StepperOptions& opts) {
    check_setup(nl, lin, tau, N);
    tab.validate();
    const auto t0 = Clock::now();
    const std::int64_t evals0 = transfer_evaluations();
    const int s = tab.s;
    const Index d = nl.dim_y;
    const Index nz = lin.states();
    const Matrix P = nl.selector();
    const Matrix Ps = detail::kron_identity(s, P);
    const Matrix Cin = detail::kron_identity(s, nl.couple_in);

    Trajectory traj = start_trajectory(nl, tau, N);
    if (opts.store_z) {
        traj.z.push_back(Vector::Zero(nz));
    }
    std::optional<RkPencil> cached;
    if (opts.cache_factorization) {
        cached.emplace(lin, tab, nl.couple_in, P, tau);
    }

    detail::RkStep step;
    step.nl = &nl;
    step.tab = &tab;
    step.tau = tau;
    Vector y = Vector::Zero(d);
    Vector z = Vector::Zero(nz);
    Vector slopes = Vector::Zero(s * d);
    for (int n = 0; n < N; ++n) {
        std::optional<RkPencil> fresh;
        if (!opts.cache_factorization) {
            fresh.emplace(lin, tab, nl.couple_in, P, tau);
        }
        const RkPencil& pencil = opts.cache_factorization ? *cached : *fresh;

        Vector Az(s * nz);
        Vector Ctz(s * lin.outputs());
        const Vector az = lin.A * z;
        const Vector ctz = lin.C.transpose() * z;
        for (int j = 0; j < s; ++j) {
            Az.segment(j * nz, nz) = az;
            Ctz.segment(j * lin.outputs(), lin.outputs()) = ctz;
        }
        const Vector r = pencil.solve(Az);
        step.t = n * tau;
        step.y = y;
        step.coupling_jac = pencil.coupling_jac;
        step.coupling_const = Cin * (Ctz - pencil.AC * r);
        const int iters = detail::solve_rk_step(step, slopes, opts.newton, n + 1);

        const Vector Y = detail::rk_stage_values(tab, tau, y, slopes);
        const Vector Zdot = pencil.S * (Ps * Y) - r;
        for (int j = 0; j < s; ++j) {
            z += tau * tab.b(j) * Zdot.segment(j * nz, nz);
        }
        y = detail::rk_advance(tab, tau, y, slopes);

        traj.t.push_back((n + 1) * tau);
        traj.y.push_back(y);
        traj.newton_iters.push_back(iters);
        if (opts.store_z) {
            traj.z.push_back(z);
        }
        if (opts.store_stages) {
            traj.stages.push_back(Y);
        }
    }
    traj.transfer_evaluations = transfer_evaluations() - evals0;
    traj.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return traj;
}

}  // namespace cqsim
