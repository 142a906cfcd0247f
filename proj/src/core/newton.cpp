#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "cqsim/error.hpp"
#include "step_kernels.hpp"

namespace cqsim {

Matrix NonlinearSubsystem::selector() const {
    if (selects_all()) {
        return Matrix::Identity(dim_y, dim_y);
    }
    return port_select;
}

void NonlinearSubsystem::validate() const {
    if (dim_y < 1) {
        throw Error(ErrorKind::DimensionMismatch, "nonlinear subsystem needs dim_y >= 1");
    }
    if (!mass || !force) {
        throw Error(ErrorKind::Config, "nonlinear subsystem needs mass and force callbacks");
    }
    if (couple_in.rows() != dim_y) {
        throw Error(ErrorKind::DimensionMismatch, "couple_in must have dim_y rows");
    }
    if (!selects_all() && port_select.cols() != dim_y) {
        throw Error(ErrorKind::DimensionMismatch, "port_select must have dim_y columns");
    }
}

namespace {

double fd_increment(double v) {
    return std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(v));
}

}  // namespace

Matrix fd_jacobian_force(const NonlinearSubsystem& nl, const Vector& y, double t) {
    const Vector f0 = nl.force(y, t);
    Matrix J(f0.size(), y.size());
    Vector yp = y;
    for (Index i = 0; i < y.size(); ++i) {
        const double h = fd_increment(y(i));
        yp(i) = y(i) + h;
        J.col(i) = (nl.force(yp, t) - f0) / h;
        yp(i) = y(i);
    }
    return J;
}

Matrix fd_jacobian_mass_dir(const NonlinearSubsystem& nl, const Vector& y, const Vector& w) {
    const Vector m0 = nl.mass(y) * w;
    Matrix J(m0.size(), y.size());
    Vector yp = y;
    for (Index i = 0; i < y.size(); ++i) {
        const double h = fd_increment(y(i));
        yp(i) = y(i) + h;
        J.col(i) = (nl.mass(yp) * w - m0) / h;
        yp(i) = y(i);
    }
    return J;
}

namespace detail {

namespace {

Matrix jac_mass_dir(const NonlinearSubsystem& nl, const Vector& y, const Vector& w) {
    return nl.jac_mass_dir ? nl.jac_mass_dir(y, w) : fd_jacobian_mass_dir(nl, y, w);
}

Matrix jac_force(const NonlinearSubsystem& nl, const Vector& y, double t) {
    return nl.jac_force ? nl.jac_force(y, t) : fd_jacobian_force(nl, y, t);
}

[[noreturn]] void diverged(int index, const std::string& why) {
    throw Error(ErrorKind::NewtonDiverged,
                "Newton failed in step " + std::to_string(index) + ": " + why);
}

// Full Newton steps on x. eval fills the residual (and the Jacobian when
// asked) and returns the scale for the stopping test.
template <class Eval>
int newton(Eval&& eval, Vector& x, const NewtonOptions& opts, int index) {
    Vector r;
    Matrix J;
    for (int it = 0;; ++it) {
        const double scale = eval(x, r, nullptr);
        const double res = r.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(res)) {
            diverged(index, "non-finite residual");
        }
        if (res <= opts.tol * scale) {
            return it;
        }
        if (it == opts.max_iter) {
            diverged(index, "no convergence after " + std::to_string(opts.max_iter) +
                                " iterations (residual " + std::to_string(res) + ")");
        }
        eval(x, r, &J);
        Eigen::PartialPivLU<Matrix> lu(J);
        const Vector dx = lu.solve(r);
        if (!dx.allFinite()) {
            diverged(index, "singular Newton matrix");
        }
        x -= dx;
    }
}

}  // namespace

int solve_bdf_step(const BdfStep& step, Vector& y, const NewtonOptions& opts, int index) {
    const NonlinearSubsystem& nl = *step.nl;
    auto eval = [&](const Vector& v, Vector& r, Matrix* J) {
        const Vector ydot = (step.alpha_m * v + step.hist) / step.tau;
        const Matrix M = nl.mass(v);
        r = M * ydot + nl.force(v, step.t) - step.coupling_jac * v - step.coupling_const;
        if (J != nullptr) {
            *J = jac_mass_dir(nl, v, ydot) + (step.alpha_m / step.tau) * M +
                 jac_force(nl, v, step.t) - step.coupling_jac;
        }
        return 1.0 + v.lpNorm<Eigen::Infinity>();
    };
    return newton(eval, y, opts, index);
}

Matrix kron_identity(int s, const Matrix& m) {
    Matrix out = Matrix::Zero(s * m.rows(), s * m.cols());
    for (int i = 0; i < s; ++i) {
        out.block(i * m.rows(), i * m.cols(), m.rows(), m.cols()) = m;
    }
    return out;
}

Vector kron_apply(const Matrix& a, const Vector& x, Index d) {
    Vector out = Vector::Zero(a.rows() * d);
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) != 0.0) {
                out.segment(i * d, d) += a(i, j) * x.segment(j * d, d);
            }
        }
    }
    return out;
}

Vector rk_stage_values(const ButcherTableau& tab, double tau, const Vector& y,
                       const Vector& slopes) {
    const Index d = y.size();
    Vector Y = tau * kron_apply(tab.A, slopes, d);
    for (int j = 0; j < tab.s; ++j) {
        Y.segment(j * d, d) += y;
    }
    return Y;
}

Vector rk_advance(const ButcherTableau& tab, double tau, const Vector& y, const Vector& slopes) {
    const Index d = y.size();
    Vector out = y;
    for (int j = 0; j < tab.s; ++j) {
        out += tau * tab.b(j) * slopes.segment(j * d, d);
    }
    return out;
}

int solve_rk_step(const RkStep& step, Vector& slopes, const NewtonOptions& opts, int index) {
    const NonlinearSubsystem& nl = *step.nl;
    const ButcherTableau& tab = *step.tab;
    const int s = tab.s;
    const Index d = nl.dim_y;
    // d Y / d Y' = tau (A (x) I)
    Matrix dY = Matrix::Zero(s * d, s * d);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            dY.block(i * d, j * d, d, d).diagonal().setConstant(step.tau * tab.A(i, j));
        }
    }
    auto eval = [&](const Vector& v, Vector& r, Matrix* J) {
        const Vector Y = rk_stage_values(tab, step.tau, step.y, v);
        r = -(step.coupling_jac * Y + step.coupling_const);
        Matrix diag_part;
        if (J != nullptr) {
            J->setZero(s * d, s * d);
            diag_part = Matrix::Zero(s * d, s * d);
        }
        for (int j = 0; j < s; ++j) {
            const Vector Yj = Y.segment(j * d, d);
            const Vector Vj = v.segment(j * d, d);
            const double tj = step.t + tab.c(j) * step.tau;
            const Matrix M = nl.mass(Yj);
            r.segment(j * d, d) += M * Vj + nl.force(Yj, tj);
            if (J != nullptr) {
                J->block(j * d, j * d, d, d) = M;
                diag_part.block(j * d, j * d, d, d) =
                    jac_mass_dir(nl, Yj, Vj) + jac_force(nl, Yj, tj);
            }
        }
        if (J != nullptr) {
            *J += (diag_part - step.coupling_jac) * dY;
        }
        return 1.0 + Y.lpNorm<Eigen::Infinity>();
    };
    return newton(eval, slopes, opts, index);
}

}  // namespace detail
}  // namespace cqsim
