#include <gtest/gtest.h>

#include <cmath>

#include "cqsim/circuit.hpp"
#include "cqsim/run.hpp"
#include "cqsim/steppers.hpp"

using namespace cqsim;

namespace {

// Scalar y' + F(y, t) = 0 with no coupling; `lin` is an inert 1-state system.
NonlinearSubsystem scalar_ode(std::function<double(double, double)> f,
                              std::function<double(double, double)> df) {
    NonlinearSubsystem nl;
    nl.dim_y = 1;
    nl.mass = [](const Vector&) { return Matrix(Matrix::Ones(1, 1)); };
    nl.force = [f](const Vector& y, double t) { return Vector(Vector::Constant(1, f(y(0), t))); };
    nl.jac_mass_dir = [](const Vector&, const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    nl.jac_force = [df](const Vector& y, double t) { return Matrix(Matrix::Constant(1, 1, df(y(0), t))); };
    nl.couple_in = Matrix::Zero(1, 1);
    return nl;
}

DescriptorSystem inert_system() {
    DescriptorSystem lin;
    lin.E = Matrix::Ones(1, 1);
    lin.A = Matrix::Ones(1, 1);
    lin.B = Matrix::Zero(1, 1);
    lin.C = Matrix::Zero(1, 1);
    return lin;
}

// 1/s kernel: E = 1, A = 0
DescriptorSystem integrator_system() {
    DescriptorSystem lin;
    lin.E = Matrix::Ones(1, 1);
    lin.A = Matrix::Zero(1, 1);
    lin.B = Matrix::Ones(1, 1);
    lin.C = Matrix::Ones(1, 1);
    return lin;
}

MnaModel model_problem(const std::string& device = "synthetic:eddy:40") {
    return build_mna(parse_netlist(model_problem_netlist(device)));
}

double slope(const std::vector<double>& taus, const std::vector<double>& errs) {
    // least squares in log-log
    const int n = static_cast<int>(taus.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log(taus[static_cast<std::size_t>(i)]);
        const double y = std::log(errs[static_cast<std::size_t>(i)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double sup_rel(const Trajectory& a, const Trajectory& b) { return compare_trajectories(a, b).sup_rel; }

// y' = lambda y + g with exact solution y = t^3 (smooth when extended by
// zero to t < 0, which the zero BDF start-up history assumes).
const double kLambda = -2.0;
NonlinearSubsystem cubic_problem() {
    return scalar_ode([](double y, double t) { return -kLambda * y - (3 * t * t - kLambda * t * t * t); },
                      [](double, double) { return -kLambda; });
}

// y' = -y + g with y = sin(2t).
NonlinearSubsystem sine_problem() {
    return scalar_ode([](double y, double t) { return y - (2 * std::cos(2 * t) + std::sin(2 * t)); },
                      [](double, double) { return 1.0; });
}

}  // namespace

TEST(CoupledSteppers, ZeroDataStaysZero) {
    const auto nl = scalar_ode([](double y, double) { return y; }, [](double, double) { return 1.0; });
    DescriptorSystem lin = integrator_system();
    for (const Trajectory& t : {solve_coupled_euler(nl, lin, 0.1, 10),
                                solve_coupled_bdf(nl, lin, BdfScheme::bdf(2), 0.1, 10),
                                solve_coupled_rk(nl, lin, ButcherTableau::radau_iia(3), 0.1, 10)}) {
        ASSERT_EQ(t.steps(), 10);
        for (const Vector& y : t.y) {
            EXPECT_EQ(y(0), 0.0);
        }
    }
}

TEST(CoupledSteppers, EulerClosedFormRecurrence) {
    const auto nl = scalar_ode([](double, double t) { return -std::sin(t); }, [](double, double) { return 0.0; });
    const double tau = 0.05;
    const auto traj = solve_coupled_euler(nl, inert_system(), tau, 40);
    double y = 0.0;
    for (int n = 1; n <= 40; ++n) {
        y += tau * std::sin(n * tau);
        EXPECT_NEAR(traj.y[static_cast<std::size_t>(n)](0), y, 1e-14);
        EXPECT_DOUBLE_EQ(traj.t[static_cast<std::size_t>(n)], n * tau);
    }
}

TEST(CoupledSteppers, BdfOneIsEulerBitwise) {
    const auto m = model_problem();
    const auto a = solve_coupled_euler(m.nl, m.device, 1.0 / 32, 32);
    const auto b = solve_coupled_bdf(m.nl, m.device, BdfScheme::bdf(1), 1.0 / 32, 32);
    for (int n = 0; n <= 32; ++n) {
        EXPECT_EQ(a.y[static_cast<std::size_t>(n)], b.y[static_cast<std::size_t>(n)]);
    }
}

TEST(CoupledSteppers, RadauOneIsEuler) {
    const auto m = model_problem();
    const auto a = solve_coupled_euler(m.nl, m.device, 1.0 / 32, 32);
    const auto b = solve_coupled_rk(m.nl, m.device, ButcherTableau::radau_iia(1), 1.0 / 32, 32);
    EXPECT_LT(compare_trajectories(a, b).sup_abs, 1e-13);
}

TEST(CoupledSteppers, BdfTwoOrder) {
    const auto nl = cubic_problem();
    std::vector<double> taus, errs;
    for (int N : {20, 40, 80, 160}) {
        const auto t = solve_coupled_bdf(nl, inert_system(), BdfScheme::bdf(2), 1.0 / N, N);
        taus.push_back(1.0 / N);
        errs.push_back(std::abs(t.y.back()(0) - 1.0));
    }
    EXPECT_NEAR(slope(taus, errs), 2.0, 0.1);
}

TEST(CoupledSteppers, RadauOrders) {
    const auto nl = sine_problem();
    const double T = 1.0;
    for (int s : {2, 3}) {
        std::vector<double> taus, errs;
        for (int N : {4, 8, 16, 32}) {
            const auto t = solve_coupled_rk(nl, inert_system(), ButcherTableau::radau_iia(s), T / N, N);
            taus.push_back(T / N);
            errs.push_back(std::abs(t.y.back()(0) - std::sin(2 * T)));
        }
        const double p = slope(taus, errs);
        if (s == 2) {
            EXPECT_NEAR(p, 3.0, 0.2);
        } else {
            EXPECT_GE(p, 4.8);
        }
    }
}

TEST(CoupledSteppers, RadauStiffAccuracy) {
    const auto m = model_problem();
    StepperOptions opts;
    opts.store_stages = true;
    for (int s : {2, 3}) {
        const auto t = solve_coupled_rk(m.nl, m.device, ButcherTableau::radau_iia(s), 1.0 / 16, 16, opts);
        ASSERT_EQ(t.stages.size(), 16u);
        const Index d = t.dim();
        for (int n = 0; n < 16; ++n) {
            const Vector last = t.stages[static_cast<std::size_t>(n)].tail(d);
            EXPECT_LE((last - t.y[static_cast<std::size_t>(n + 1)]).norm(),
                      1e-12 * (1.0 + t.y[static_cast<std::size_t>(n + 1)].norm()));
        }
    }
}

TEST(CoupledSteppers, CachedFactorizationIsTransparent) {
    const auto m = model_problem();
    StepperOptions fresh;
    fresh.cache_factorization = false;
    const double tau = 1.0 / 24;
    EXPECT_LE(compare_trajectories(solve_coupled_euler(m.nl, m.device, tau, 24),
                                   solve_coupled_euler(m.nl, m.device, tau, 24, fresh)).sup_abs, 1e-14);
    EXPECT_LE(compare_trajectories(solve_coupled_bdf(m.nl, m.device, BdfScheme::bdf(2), tau, 24),
                                   solve_coupled_bdf(m.nl, m.device, BdfScheme::bdf(2), tau, 24, fresh)).sup_abs,
              1e-14);
    const auto& r3 = ButcherTableau::radau_iia(3);
    EXPECT_LE(compare_trajectories(solve_coupled_rk(m.nl, m.device, r3, tau, 24),
                                   solve_coupled_rk(m.nl, m.device, r3, tau, 24, fresh)).sup_abs, 1e-14);
}

TEST(CoupledSteppers, StoresLinearState) {
    // z' = y with y = t^3 gives z = t^4 / 4; the eliminated linear state
    // must follow the same scheme.
    const auto nl = cubic_problem();
    DescriptorSystem lin = integrator_system();
    lin.C = Matrix::Zero(1, 1);  // no feedback into the ODE
    StepperOptions opts;
    opts.store_z = true;
    const auto t = solve_coupled_rk(nl, lin, ButcherTableau::radau_iia(3), 0.1, 10, opts);
    ASSERT_EQ(t.z.size(), 11u);
    EXPECT_NEAR(t.z.back()(0), 0.25, 1e-8);
}

TEST(CoupledSteppers, RejectsBadSetup) {
    const auto nl = sine_problem();
    EXPECT_THROW(solve_coupled_euler(nl, inert_system(), 0.0, 10), Error);
    EXPECT_THROW(solve_coupled_euler(nl, inert_system(), 0.1, 0), Error);
    DescriptorSystem wrong = inert_system();
    wrong.B = Matrix::Zero(1, 3);
    EXPECT_THROW(solve_coupled_euler(nl, wrong, 0.1, 4), Error);
}

TEST(CoupledSteppers, NewtonDivergenceIsReported) {
    // y^2 + 1 = 0 has no real root
    NonlinearSubsystem nl;
    nl.dim_y = 1;
    nl.mass = [](const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    nl.force = [](const Vector& y, double) { return Vector(Vector::Constant(1, y(0) * y(0) + 1.0)); };
    nl.couple_in = Matrix::Zero(1, 1);
    try {
        solve_coupled_euler(nl, inert_system(), 0.1, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NewtonDiverged);
        EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
    }
}

TEST(CoupledSteppers, FiniteDifferenceJacobianFlagged) {
    auto nl = sine_problem();
    nl.jac_force = nullptr;
    const auto fd = solve_coupled_euler(nl, inert_system(), 0.1, 10);
    const auto exact = solve_coupled_euler(sine_problem(), inert_system(), 0.1, 10);
    EXPECT_TRUE(fd.fd_jacobian);
    EXPECT_FALSE(exact.fd_jacobian);
    EXPECT_LT(compare_trajectories(exact, fd).sup_abs, 1e-12);
}

TEST(ReducedSteppers, ZeroExcitation) {
    const auto nl = scalar_ode([](double y, double) { return y; }, [](double, double) { return 1.0; });
    auto with_coupling = nl;
    with_coupling.couple_in = Matrix::Constant(1, 1, -1.0);
    RunConfig cfg;
    cfg.steps = 16;
    for (Method m : {Method::Bdf2, Method::Radau3}) {
        cfg.method = m;
        const auto t = simulate(with_coupling, integrator_system(), cfg);
        for (const Vector& y : t.y) {
            EXPECT_EQ(y(0), 0.0);
        }
    }
}

TEST(ReducedSteppers, IntegratorKernelHandRecurrence) {
    // y' - g(t) = c * int_0^t y, with exact weights omega_n = tau
    const double tau = 0.05;
    const double c = -3.0;
    const int N = 60;
    auto g = [](double t) { return std::cos(t); };
    auto nl = scalar_ode([g](double, double t) { return -g(t); }, [](double, double) { return 0.0; });
    nl.couple_in = Matrix::Constant(1, 1, c);
    CQWeightTable w;
    w.kind = SchemeKind::Bdf;
    w.order = 1;
    w.p = w.q = 1;
    w.N = N;
    w.tau = tau;
    w.weights.assign(N + 1, Matrix::Constant(1, 1, tau));
    for (ConvolutionMode mode : {ConvolutionMode::Naive, ConvolutionMode::Fft}) {
        const auto t = solve_reduced_bdf(nl, w, BdfScheme::bdf(1), tau, N, mode);
        double y = 0.0, hist = 0.0;
        for (int n = 1; n <= N; ++n) {
            y = (y / tau + g(n * tau) + c * tau * hist) / (1.0 / tau - c * tau);
            hist += y;
            EXPECT_NEAR(t.y[static_cast<std::size_t>(n)](0), y, 1e-13 * (1.0 + std::abs(y))) << n;
        }
    }
}

TEST(ReducedSteppers, WeightMismatch) {
    const auto m = model_problem();
    RunConfig cfg;
    cfg.method = Method::Bdf2;
    cfg.steps = 16;
    const auto w = compute_weights(m.device, cfg);
    auto expect_mismatch = [&](const RunConfig& other) {
        try {
            simulate(m, other, &w);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::WeightMismatch);
        }
    };
    RunConfig steps = cfg;
    steps.steps = 32;
    expect_mismatch(steps);
    RunConfig method = cfg;
    method.method = Method::Euler;
    expect_mismatch(method);
    RunConfig rk = cfg;
    rk.method = Method::Radau2;
    expect_mismatch(rk);
    EXPECT_NO_THROW(simulate(m, cfg, &w));
}

TEST(ReducedSteppers, RadauOneEqualsBdfOne) {
    const auto m = model_problem();
    RunConfig cfg;
    cfg.steps = 40;
    cfg.method = Method::Bdf1;
    const auto a = simulate(m, cfg);
    cfg.method = Method::Radau1;
    const auto b = simulate(m, cfg);
    EXPECT_LT(compare_trajectories(a, b).sup_abs, 1e-13);
}

TEST(ReducedSteppers, EquivalentToCoupled) {
    const auto m = model_problem();
    for (Method method : {Method::Euler, Method::Bdf2, Method::Radau2, Method::Radau3}) {
        RunConfig cfg;
        cfg.method = method;
        cfg.steps = 32;
        cfg.solver = SolverKind::Coupled;
        const auto coupled = simulate(m, cfg);
        cfg.solver = SolverKind::Reduced;
        const auto reduced = simulate(m, cfg);
        EXPECT_LT(sup_rel(coupled, reduced), 1e-9) << method_name(method);
        EXPECT_EQ(reduced.transfer_evaluations, 0);
    }
}

TEST(ReducedSteppers, NaiveAndFftAgree) {
    const auto m = model_problem();
    RunConfig cfg;
    cfg.method = Method::Radau2;
    cfg.steps = 300;
    const auto w = compute_weights(m.device, cfg);
    cfg.conv = ConvolutionMode::Naive;
    const auto a = simulate(m, cfg, &w);
    cfg.conv = ConvolutionMode::Fft;
    const auto b = simulate(m, cfg, &w);
    EXPECT_LT(sup_rel(a, b), 1e-11);
}

TEST(ReducedSteppers, SmoothConvergenceOfRadau) {
    // y' + y = k * y + g with the exact-weight kernel 1/(s + 1); the
    // solution is smooth, so the classical orders show.
    DescriptorSystem lin;
    lin.E = Matrix::Ones(1, 1);
    lin.A = Matrix::Ones(1, 1);
    lin.B = Matrix::Ones(1, 1);
    lin.C = Matrix::Ones(1, 1);
    auto nl = sine_problem();
    nl.couple_in = Matrix::Constant(1, 1, 0.5);
    RunConfig cfg;
    cfg.solver = SolverKind::Coupled;
    cfg.method = Method::Radau3;
    cfg.steps = 512;
    const auto ref = simulate(nl, lin, cfg);
    // the default contours alias at about exp(-6) for this slow kernel
    std::vector<double> taus, errs;
    for (int N : {4, 8, 16, 32}) {
        const ContourParams p{.rho = std::pow(10.0, -12.0 / 256), .L = 256, .tau = 1.0 / N, .N = N};
        const auto w = rk_weights(TransferFunction(lin), ButcherTableau::radau_iia(3), p);
        const auto t = solve_reduced_rk(nl, w, ButcherTableau::radau_iia(3), 1.0 / N, N);
        taus.push_back(1.0 / N);
        errs.push_back(std::abs(t.y.back()(0) - ref.y.back()(0)));
    }
    EXPECT_GE(slope(taus, errs), 4.5);
}
