#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "cqsim/types.hpp"

namespace cqsim {

/// Small nonlinear subsystem  M(y) y' + F(y, t) = couple_in * (C^T z),
/// feeding the linear subsystem with port_select * y.
struct NonlinearSubsystem {
    Index dim_y = 0;
    std::function<Matrix(const Vector&)> mass;
    std::function<Vector(const Vector&, double)> force;
    /// d/dy [M(y) w]; finite differences are used when empty.
    std::function<Matrix(const Vector&, const Vector&)> jac_mass_dir;
    /// dF/dy; finite differences are used when empty.
    std::function<Matrix(const Vector&, double)> jac_force;
    Matrix couple_in;    // dim_y x q
    Matrix port_select;  // p x dim_y, 0 x 0 means identity

    Index inputs() const { return selects_all() ? dim_y : port_select.rows(); }
    bool selects_all() const { return port_select.rows() == 0 && port_select.cols() == 0; }
    Index outputs() const { return couple_in.cols(); }
    Matrix selector() const;
    bool finite_difference_jacobians() const { return !jac_mass_dir || !jac_force; }

    void validate() const;
};

/// Forward differences with increment sqrt(eps) (1 + |y_i|) per column.
Matrix fd_jacobian_force(const NonlinearSubsystem& nl, const Vector& y, double t);
Matrix fd_jacobian_mass_dir(const NonlinearSubsystem& nl, const Vector& y, const Vector& w);

struct NewtonOptions {
    double tol = 1e-12;  // on ||residual||_inf / (1 + ||y||_inf)
    int max_iter = 50;
};

struct StepperOptions {
    NewtonOptions newton;
    /// Factorize the (stage) pencil once; false refactorizes every step.
    bool cache_factorization = true;
    bool store_z = false;
    bool store_stages = false;
};

/// Uniform-grid solution y_0 = 0, y_1, ..., y_N with t_n = n tau.
struct Trajectory {
    double tau = 0.0;
    std::vector<double> t;
    std::vector<Vector> y;
    std::vector<Vector> z;       // when requested (coupled solvers)
    std::vector<Vector> stages;  // Radau stage values Y_n, stage-major
    std::vector<int> newton_iters;
    bool fd_jacobian = false;
    /// Transfer evaluations performed while stepping (not while building
    /// weights).
    std::int64_t transfer_evaluations = 0;
    double seconds = 0.0;

    int steps() const { return static_cast<int>(y.size()) - 1; }
    Index dim() const { return y.empty() ? 0 : y.front().size(); }
};

/// CSV: header `t,y1..yd,newton_iters`, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

struct TrajectoryDiff {
    double sup_abs = 0.0;    // max_n ||a_n - b_n||_2
    double sup_rel = 0.0;    // sup_abs / max_n ||ref_n||_2
    double final_abs = 0.0;  // ||a_N - b_N||_2
    int worst_step = 0;
};

/// Compares `other` against `ref` on the grid of `other`, whose step must be
/// an integer multiple of the reference step over the same horizon.
TrajectoryDiff compare_trajectories(const Trajectory& ref, const Trajectory& other);

}  // namespace cqsim
