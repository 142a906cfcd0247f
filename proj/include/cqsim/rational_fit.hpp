#pragma once

#include <iosfwd>
#include <vector>

#include "cqsim/cq_weights.hpp"
#include "cqsim/lti.hpp"

namespace cqsim {

/// k_EC(s) = a - s / (c s + d).
struct RationalEC {
    double a = 0.0;
    double c = 0.0;
    double d = 0.0;

    Complex operator()(Complex s) const { return a - s / (c * s + d); }
};

struct FrequencySample {
    Complex s;
    Complex k;
};

struct RationalFit {
    RationalEC model;
    double residual = 0.0;           // sqrt(sum |k_EC(s_j) - k_j|^2)
    double relative_residual = 0.0;  // residual / sqrt(sum |k_j|^2)
    int gauss_newton_steps = 0;
};

/// Linearized least squares with the denominator scaled to q1 s + 1,
/// then at most 20 Gauss-Newton steps on the true residual. Needs at least
/// 3 samples with distinct s; throws RankDeficient when the data do not fix a (1,1) form.
RationalFit fit_rational_11(const std::vector<FrequencySample>& samples);

/// R2 in series with the parallel pair R1, L1.
struct EquivalentCircuit {
    double R1 = 0.0;
    double R2 = 0.0;
    double L1 = 0.0;
};

/// R2 = 1/a, R1 = 1/(c a^2 - a), L1 = 1/(a^2 d); DegenerateParameters when a
/// value is not finite.
EquivalentCircuit to_equivalent_circuit(const RationalEC& fit);

/// One-port descriptor with z = (i_L, w, j) whose transfer function is the
/// admittance of the equivalent circuit.
DescriptorSystem equivalent_circuit_descriptor(const EquivalentCircuit& ec);

/// n log-spaced points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

/// k(i omega_j) samples of a scalar transfer function.
std::vector<FrequencySample> sample_imaginary_axis(const TransferFunction& k,
                                                   const std::vector<double>& omegas);

struct BodePoint {
    double omega = 0.0;
    double mag_db = 0.0;
    double phase_deg = 0.0;
};

std::vector<BodePoint> bode_data(const std::vector<FrequencySample>& samples);

/// `omega,mag_db,phase_deg` with 17 significant digits.
void write_bode_csv(std::ostream& out, const std::vector<BodePoint>& points);

void write_fit_report(std::ostream& out, const RationalFit& fit, const EquivalentCircuit& ec);

}  // namespace cqsim
