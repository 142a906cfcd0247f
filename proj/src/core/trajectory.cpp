#include <cmath>
#include <iomanip>
#include <ostream>

#include "cqsim/error.hpp"
#include "cqsim/nonlinear.hpp"

namespace cqsim {

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t";
    for (Index i = 0; i < traj.dim(); ++i) {
        out << ",y" << i + 1;
    }
    out << ",newton_iters\n";
    out << std::setprecision(17);
    for (std::size_t n = 0; n < traj.y.size(); ++n) {
        out << traj.t[n];
        for (Index i = 0; i < traj.dim(); ++i) {
            out << "," << traj.y[n](i);
        }
        out << "," << (n < traj.newton_iters.size() ? traj.newton_iters[n] : 0) << "\n";
    }
}

TrajectoryDiff compare_trajectories(const Trajectory& ref, const Trajectory& other) {
    if (ref.dim() != other.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "trajectories have different dimensions");
    }
    const int n_ref = ref.steps();
    const int n_other = other.steps();
    if (n_other < 1 || n_ref < n_other || n_ref % n_other != 0) {
        throw Error(ErrorKind::Config, "reference grid must refine the compared grid");
    }
    const int stride = n_ref / n_other;
    if (std::abs(ref.tau * stride - other.tau) > 1e-12 * other.tau) {
        throw Error(ErrorKind::Config, "trajectories cover different horizons");
    }
    TrajectoryDiff d;
    double ref_scale = 0.0;
    for (int n = 0; n <= n_other; ++n) {
        const Vector& r = ref.y[static_cast<std::size_t>(n * stride)];
        const double e = (r - other.y[static_cast<std::size_t>(n)]).norm();
        if (e > d.sup_abs) {
            d.sup_abs = e;
            d.worst_step = n;
        }
        ref_scale = std::max(ref_scale, r.norm());
    }
    d.final_abs = (ref.y.back() - other.y.back()).norm();
    d.sup_rel = ref_scale > 0.0 ? d.sup_abs / ref_scale : d.sup_abs;
    return d;
}

}  // namespace cqsim
