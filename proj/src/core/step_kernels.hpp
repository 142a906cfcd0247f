#pragma once

#include "cqsim/cq_weights.hpp"
#include "cqsim/nonlinear.hpp"

namespace cqsim::detail {

// One implicit BDF step:
//   M(y)(alpha_m y + hist)/tau + F(y, t) = coupling_jac y + coupling_const.
struct BdfStep {
    const NonlinearSubsystem* nl = nullptr;
    double alpha_m = 1.0;
    double tau = 0.0;
    double t = 0.0;
    Vector hist;
    Matrix coupling_jac;  // dim_y x dim_y
    Vector coupling_const;
};

/// Newton on y; `y` holds the initial guess and receives the solution.
/// Returns the iteration count.
int solve_bdf_step(const BdfStep& step, Vector& y, const NewtonOptions& opts, int index);

// One Radau step in the stage slopes Y' (stage-major), with stage values
// Y = 1 (x) y_n + tau (A (x) I) Y':
//   M(Y_j) Y'_j + F(Y_j, t_n + c_j tau) = [coupling_jac Y + coupling_const]_j.
struct RkStep {
    const NonlinearSubsystem* nl = nullptr;
    const ButcherTableau* tab = nullptr;
    double tau = 0.0;
    double t = 0.0;
    Vector y;
    Matrix coupling_jac;  // s dim_y x s dim_y
    Vector coupling_const;
};

int solve_rk_step(const RkStep& step, Vector& slopes, const NewtonOptions& opts, int index);

Vector rk_stage_values(const ButcherTableau& tab, double tau, const Vector& y,
                       const Vector& slopes);
Vector rk_advance(const ButcherTableau& tab, double tau, const Vector& y, const Vector& slopes);

/// I_s (x) m for a dense m.
Matrix kron_identity(int s, const Matrix& m);

/// `m` blocks of the per-stage Kronecker coupling (A (x) I) applied to the
/// stage-major vector x with block size d.
Vector kron_apply(const Matrix& a, const Vector& x, Index d);

}  // namespace cqsim::detail
