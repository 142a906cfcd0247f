#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <Eigen/QR>

#include "cqsim/error.hpp"
#include "cqsim/rational_fit.hpp"

namespace cqsim {

namespace {

double residual_norm(const RationalEC& m, const std::vector<FrequencySample>& samples) {
    double sum = 0.0;
    for (const FrequencySample& p : samples) {
        sum += std::norm(m(p.s) - p.k);
    }
    return std::sqrt(sum);
}

}  // namespace

RationalFit fit_rational_11(const std::vector<FrequencySample>& samples) {
    if (samples.size() < 3) {
        throw Error(ErrorKind::PreconditionViolation, "a (1,1) fit needs at least 3 samples");
    }
    const Index m = static_cast<Index>(samples.size());
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < i; ++j) {
            if (samples[static_cast<std::size_t>(i)].s == samples[static_cast<std::size_t>(j)].s) {
                throw Error(ErrorKind::PreconditionViolation, "sample frequencies must be distinct");
            }
        }
    }

    // k = (p1 s + p0) / (q1 s + 1). Leaving the denominator scale free makes
    // the true coefficients a null vector of the system.
    Matrix lhs(2 * m, 3);
    Vector rhs(2 * m);
    for (Index j = 0; j < m; ++j) {
        const auto& [s, k] = samples[static_cast<std::size_t>(j)];
        const Complex row[3] = {s, 1.0, -k * s};
        for (int c = 0; c < 3; ++c) {
            lhs(2 * j, c) = row[c].real();
            lhs(2 * j + 1, c) = row[c].imag();
        }
        rhs(2 * j) = k.real();
        rhs(2 * j + 1) = k.imag();
    }
    Vector col_scale(3);
    for (int c = 0; c < 3; ++c) {
        col_scale(c) = lhs.col(c).norm();
        if (col_scale(c) == 0.0) {
            throw Error(ErrorKind::RankDeficient, "fit system has a zero column");
        }
        lhs.col(c) /= col_scale(c);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(lhs);
    qr.setThreshold(1e-12);
    if (qr.rank() < 3) {
        throw Error(ErrorKind::RankDeficient,
                    "samples do not determine a (1,1) rational form (rank " +
                        std::to_string(qr.rank()) + ")");
    }
    const Vector x = Vector(qr.solve(rhs)).cwiseQuotient(col_scale);
    // a - s/(c s + d) has numerator (a c - 1) s + a d, which fixes the scale
    const double det = x(1) * x(2) - x(0);
    if (!(std::abs(det) > 1e-14 * (std::abs(x(1) * x(2)) + std::abs(x(0)))) ||
        !std::isfinite(det)) {
        throw Error(ErrorKind::RankDeficient, "fitted form has no s/(c s + d) part");
    }
    RationalFit fit;
    fit.model.a = x(1);
    fit.model.d = 1.0 / det;
    fit.model.c = x(2) / det;
    double res = residual_norm(fit.model, samples);

    for (int it = 0; it < 20; ++it) {
        Matrix J(2 * m, 3);
        Vector r(2 * m);
        for (Index j = 0; j < m; ++j) {
            const auto& [s, k] = samples[static_cast<std::size_t>(j)];
            const Complex den = fit.model.c * s + fit.model.d;
            const Complex e = fit.model(s) - k;
            const Complex dc = s * s / (den * den);
            const Complex dd = s / (den * den);
            r(2 * j) = e.real();
            r(2 * j + 1) = e.imag();
            J.row(2 * j) << 1.0, dc.real(), dd.real();
            J.row(2 * j + 1) << 0.0, dc.imag(), dd.imag();
        }
        const Vector step = J.colPivHouseholderQr().solve(r);
        RationalEC trial{fit.model.a - step(0), fit.model.c - step(1), fit.model.d - step(2)};
        const double trial_res = residual_norm(trial, samples);
        if (!std::isfinite(trial_res) || trial_res >= res) {
            break;
        }
        fit.model = trial;
        fit.gauss_newton_steps = it + 1;
        const double change = step.norm();
        res = trial_res;
        if (change <= 1e-15 * Eigen::Vector3d(fit.model.a, fit.model.c, fit.model.d).norm()) {
            break;
        }
    }
    double scale = 0.0;
    for (const FrequencySample& p : samples) {
        scale += std::norm(p.k);
    }
    fit.residual = res;
    fit.relative_residual = scale > 0.0 ? res / std::sqrt(scale) : res;
    return fit;
}

EquivalentCircuit to_equivalent_circuit(const RationalEC& fit) {
    const double a = fit.a;
    const double denom = fit.c * a * a - a;
    if (a == 0.0 || fit.d == 0.0 || denom == 0.0 ||
        !std::isfinite(a) || !std::isfinite(fit.c) || !std::isfinite(fit.d)) {
        throw Error(ErrorKind::DegenerateParameters,
                    "fit parameters do not map to an R-R-L circuit");
    }
    return {1.0 / denom, 1.0 / a, 1.0 / (a * a * fit.d)};
}

DescriptorSystem equivalent_circuit_descriptor(const EquivalentCircuit& ec) {
    // L1 i' = w,  w / R1 + i = j,  R2 j + w = v,  output j.
    DescriptorSystem sys;
    sys.E = Matrix::Zero(3, 3);
    sys.E(0, 0) = ec.L1;
    sys.A.resize(3, 3);
    sys.A << 0.0, -1.0, 0.0,
             1.0, 1.0 / ec.R1, -1.0,
             0.0, 1.0, ec.R2;
    sys.B = Matrix::Zero(3, 1);
    sys.B(2, 0) = 1.0;
    sys.C = Matrix::Zero(3, 1);
    sys.C(2, 0) = 1.0;
    return sys;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) {
        throw Error(ErrorKind::Config, "log grid needs 0 < lo < hi and n >= 2");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const double step = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    }
    out.back() = hi;
    return out;
}

std::vector<FrequencySample> sample_imaginary_axis(const TransferFunction& k,
                                                   const std::vector<double>& omegas) {
    if (k.outputs() != 1 || k.inputs() != 1) {
        throw Error(ErrorKind::DimensionMismatch, "frequency sampling needs a scalar transfer");
    }
    std::vector<FrequencySample> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        const Complex s(0.0, w);
        out.push_back({s, k(s)(0, 0)});
    }
    return out;
}

std::vector<BodePoint> bode_data(const std::vector<FrequencySample>& samples) {
    std::vector<BodePoint> out;
    out.reserve(samples.size());
    for (const FrequencySample& p : samples) {
        out.push_back({p.s.imag(), 20.0 * std::log10(std::abs(p.k)),
                       std::arg(p.k) * 180.0 / std::numbers::pi});
    }
    return out;
}

void write_bode_csv(std::ostream& out, const std::vector<BodePoint>& points) {
    out << "omega,mag_db,phase_deg\n" << std::setprecision(17);
    for (const BodePoint& p : points) {
        out << p.omega << "," << p.mag_db << "," << p.phase_deg << "\n";
    }
}

void write_fit_report(std::ostream& out, const RationalFit& fit, const EquivalentCircuit& ec) {
    out << std::setprecision(10) << "a = " << fit.model.a << "\nc = " << fit.model.c
        << "\nd = " << fit.model.d << "\nresidual = " << fit.residual
        << "\nrelative_residual = " << fit.relative_residual
        << "\ngauss_newton_steps = " << fit.gauss_newton_steps << "\nR1 = " << ec.R1
        << "\nR2 = " << ec.R2 << "\nL1 = " << ec.L1 << "\n";
}

}  // namespace cqsim
