#include "cqsim/cq_weights.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace cqsim {

BdfScheme BdfScheme::bdf(int m) {
    switch (m) {
    case 1: return {1, {-1.0, 1.0}};
    case 2: return {2, {0.5, -2.0, 1.5}};
    default:
        throw Error(ErrorKind::Config, "only BDF-1 and BDF-2 are supported, got BDF-" +
                                           std::to_string(m));
    }
}

Complex bdf_delta(const BdfScheme& scheme, Complex xi) {
    // Horner in xi: alpha_0 xi^m + alpha_1 xi^(m-1) + ... + alpha_m.
    Complex acc = 0.0;
    for (double a : scheme.alpha) {
        acc = acc * xi + a;
    }
    return acc;
}

namespace {

ButcherTableau make_radau(int s) {
    ButcherTableau t;
    t.s = s;
    t.A = Matrix(s, s);
    t.c = Vector(s);
    if (s == 1) {
        t.A << 1.0;
        t.c << 1.0;
    } else if (s == 2) {
        t.A << 5.0 / 12.0, -1.0 / 12.0,
               3.0 / 4.0, 1.0 / 4.0;
        t.c << 1.0 / 3.0, 1.0;
    } else if (s == 3) {
        const double r6 = std::sqrt(6.0);
        t.A << (88.0 - 7.0 * r6) / 360.0, (296.0 - 169.0 * r6) / 1800.0, (-2.0 + 3.0 * r6) / 225.0,
               (296.0 + 169.0 * r6) / 1800.0, (88.0 + 7.0 * r6) / 360.0, (-2.0 - 3.0 * r6) / 225.0,
               (16.0 - r6) / 36.0, (16.0 + r6) / 36.0, 1.0 / 9.0;
        t.c << (4.0 - r6) / 10.0, (4.0 + r6) / 10.0, 1.0;
    } else {
        throw Error(ErrorKind::Config,
                    "Radau IIA is available for 1..3 stages, got " + std::to_string(s));
    }
    t.b = t.A.row(s - 1).transpose();
    t.validate();
    // Quadrature order conditions sum(b c^(k-1)) = 1/k for k <= 2s-1.
    for (int k = 1; k <= 2 * s - 1; ++k) {
        const double lhs = t.b.dot(t.c.array().pow(k - 1).matrix());
        if (std::abs(lhs - 1.0 / k) > 1e-14) {
            throw Error(ErrorKind::Config, "Radau tableau fails order condition " +
                                               std::to_string(k));
        }
    }
    return t;
}

}  // namespace

const ButcherTableau& ButcherTableau::radau_iia(int s) {
    static const ButcherTableau r1 = make_radau(1);
    static const ButcherTableau r2 = make_radau(2);
    static const ButcherTableau r3 = make_radau(3);
    switch (s) {
    case 1: return r1;
    case 2: return r2;
    case 3: return r3;
    default:
        throw Error(ErrorKind::Config,
                    "Radau IIA is available for 1..3 stages, got " + std::to_string(s));
    }
}

void ButcherTableau::validate() const {
    if (A.rows() != s || A.cols() != s || b.size() != s || c.size() != s) {
        throw Error(ErrorKind::DimensionMismatch, "Butcher tableau dimensions");
    }
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::Config, "Butcher matrix is singular");
    }
    if ((A.row(s - 1).transpose() - b).cwiseAbs().maxCoeff() > 1e-14) {
        throw Error(ErrorKind::Config, "tableau is not stiffly accurate");
    }
    if ((A.rowwise().sum() - c).cwiseAbs().maxCoeff() > 1e-14) {
        throw Error(ErrorKind::Config, "tableau row sums differ from abscissae");
    }
}

CMatrix rk_symbol(const ButcherTableau& tab, Complex xi) {
    if (!(std::abs(xi) < 1.0)) {
        throw Error(ErrorKind::PreconditionViolation, "rk_symbol needs |xi| < 1");
    }
    const Index s = tab.s;
    const CMatrix ones_b = Vector::Ones(s).cast<Complex>() * tab.b.transpose().cast<Complex>();
    const CMatrix inner = (xi / (1.0 - xi)) * ones_b + tab.A.cast<Complex>();
    Eigen::PartialPivLU<CMatrix> lu(inner);
    const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(pivot > kPivotTolerance * inner.cwiseAbs().rowwise().sum().maxCoeff())) {
        throw Error(ErrorKind::SingularSymbol, "Runge-Kutta symbol is singular");
    }
    return lu.inverse();
}

namespace detail {

// Q^T (sE + A) Z^T = sT + S with S quasi upper triangular and T upper
// triangular, so each evaluation is one block back substitution.
struct SchurPencil {
    Matrix S;
    Matrix T;
    Matrix QtB;
    Matrix CtZt;
    std::vector<Index> block_start;
    double norm_S = 0.0;
    double norm_T = 0.0;

    static std::shared_ptr<const SchurPencil> build(const DescriptorSystem& sys) {
        const Index n = sys.states();
        if (n < 8) {
            return nullptr;  // dense LU is cheaper
        }
        Eigen::RealQZ<Matrix> qz(n);
        qz.compute(sys.A, sys.E, true);
        if (qz.info() != Eigen::Success) {
            return nullptr;
        }
        auto out = std::make_shared<SchurPencil>();
        out->S = qz.matrixS();
        out->T = qz.matrixT();
        out->QtB = qz.matrixQ().transpose() * sys.B;
        out->CtZt = sys.C.transpose() * qz.matrixZ().transpose();
        out->norm_S = out->S.cwiseAbs().rowwise().sum().maxCoeff();
        out->norm_T = out->T.cwiseAbs().rowwise().sum().maxCoeff();
        for (Index i = 0; i < n;) {
            out->block_start.push_back(i);
            i += (i + 1 < n && out->S(i + 1, i) != 0.0) ? 2 : 1;
        }
        return out;
    }

    // Column oriented back substitution on real and imaginary parts, which
    // avoids forming the complex n x n matrix sT + S.
    CMatrix eval(Complex s) const {
        const Index n = S.rows();
        const Index p = QtB.cols();
        const double sr = s.real(), si = s.imag();
        const double scale = kPivotTolerance * (std::abs(s) * norm_T + norm_S);
        Matrix xr = QtB;
        Matrix xi = Matrix::Zero(n, p);
        auto h = [&](Index i, Index j) { return s * T(i, j) + S(i, j); };
        auto singular = [] {
            return Error(ErrorKind::SingularPencil, "pencil is numerically singular");
        };
        for (auto it = block_start.rbegin(); it != block_start.rend(); ++it) {
            const Index i = *it;
            const Index bs = (i + 1 < n && S(i + 1, i) != 0.0) ? 2 : 1;
            for (Index col = 0; col < p; ++col) {
                if (bs == 1) {
                    const Complex d = h(i, i);
                    if (!(std::abs(d) >= scale)) {
                        throw singular();
                    }
                    const Complex v = Complex(xr(i, col), xi(i, col)) / d;
                    xr(i, col) = v.real();
                    xi(i, col) = v.imag();
                } else {
                    const Complex a = h(i, i), b = h(i, i + 1);
                    const Complex c = h(i + 1, i), d = h(i + 1, i + 1);
                    const Complex det = a * d - b * c;
                    const double mag =
                        std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
                    if (!(std::abs(det) >= scale * mag)) {
                        throw singular();
                    }
                    const Complex r0(xr(i, col), xi(i, col));
                    const Complex r1(xr(i + 1, col), xi(i + 1, col));
                    const Complex v0 = (d * r0 - b * r1) / det;
                    const Complex v1 = (a * r1 - c * r0) / det;
                    xr(i, col) = v0.real();
                    xi(i, col) = v0.imag();
                    xr(i + 1, col) = v1.real();
                    xi(i + 1, col) = v1.imag();
                }
                if (i == 0) {
                    continue;
                }
                for (Index j = i; j < i + bs; ++j) {
                    const double a = xr(j, col), b = xi(j, col);
                    const auto Sc = S.col(j).head(i);
                    const auto Tc = T.col(j).head(i);
                    xr.col(col).head(i) -= a * Sc + (sr * a - si * b) * Tc;
                    xi.col(col).head(i) -= b * Sc + (sr * b + si * a) * Tc;
                }
            }
        }
        CMatrix x(n, p);
        x.real() = xr;
        x.imag() = xi;
        return CtZt.cast<Complex>() * x;
    }
};

}  // namespace detail

TransferFunction::TransferFunction(DescriptorSystem sys)
    : q_(sys.outputs()), p_(sys.inputs()), system_(std::move(sys)) {
    system_->validate();
    schur_ = detail::SchurPencil::build(*system_);
}

TransferFunction::TransferFunction(Index outputs, Index inputs, Callback fn)
    : q_(outputs), p_(inputs), fn_(std::move(fn)) {}

TransferFunction TransferFunction::scalar(std::function<Complex(Complex)> fn) {
    return TransferFunction(1, 1, [fn = std::move(fn)](Complex s) {
        count_transfer_evaluation();
        return CMatrix::Constant(1, 1, fn(s));
    });
}

CMatrix TransferFunction::operator()(Complex s) const {
    if (schur_) {
        count_transfer_evaluation();
        return schur_->eval(s);
    }
    if (system_) {
        return transfer_eval(*system_, s);
    }
    CMatrix k = fn_(s);
    if (k.rows() != q_ || k.cols() != p_) {
        throw Error(ErrorKind::DimensionMismatch, "transfer callback returned wrong shape");
    }
    return k;
}

CMatrix transfer_of_matrix(const TransferFunction& k, const CMatrix& M) {
    const Index s = M.rows();
    if (M.cols() != s || s == 0) {
        throw Error(ErrorKind::DimensionMismatch, "matrix argument must be square");
    }
    const Index q = k.outputs();
    const Index p = k.inputs();
    if (s == 1) {
        return k(M(0, 0));
    }
    Eigen::ComplexEigenSolver<CMatrix> eig(M);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorKind::IllConditionedEigenbasis, "eigendecomposition failed");
    }
    const CMatrix& V = eig.eigenvectors();
    Eigen::JacobiSVD<CMatrix> svd(V);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(s - 1);
    if (!(cond <= kEigenbasisConditionLimit)) {
        throw Error(ErrorKind::IllConditionedEigenbasis,
                    "eigenvector condition number " + std::to_string(cond));
    }
    const CMatrix Vinv = V.inverse();
    CMatrix out = CMatrix::Zero(s * q, s * p);
    for (Index m = 0; m < s; ++m) {
        const CMatrix km = k(eig.eigenvalues()(m));
        for (Index i = 0; i < s; ++i) {
            for (Index j = 0; j < s; ++j) {
                out.block(i * q, j * p, q, p) += (V(i, m) * Vinv(m, j)) * km;
            }
        }
    }
    return out;
}

CMatrix kronecker_transfer_eval(const DescriptorSystem& sys, const CMatrix& M) {
    sys.validate();
    const Index s = M.rows();
    if (M.cols() != s || s == 0) {
        throw Error(ErrorKind::DimensionMismatch, "matrix argument must be square");
    }
    count_transfer_evaluation();
    const Index n = sys.states();
    const Index p = sys.inputs();
    const Index q = sys.outputs();
    const CMatrix E = sys.E.cast<Complex>();
    const CMatrix A = sys.A.cast<Complex>();
    CMatrix big = CMatrix::Zero(s * n, s * n);
    CMatrix rhs = CMatrix::Zero(s * n, s * p);
    for (Index i = 0; i < s; ++i) {
        for (Index j = 0; j < s; ++j) {
            if (M(i, j) != Complex(0.0)) {
                big.block(i * n, j * n, n, n) = M(i, j) * E;
            }
        }
        big.block(i * n, i * n, n, n) += A;
        rhs.block(i * n, i * p, n, p) = sys.B.cast<Complex>();
    }
    CheckedLU<Complex> lu(big);
    const CMatrix x = lu.solve(rhs);
    CMatrix out(s * q, s * p);
    const CMatrix Ct = sys.C.transpose().cast<Complex>();
    for (Index i = 0; i < s; ++i) {
        out.middleRows(i * q, q) = Ct * x.middleRows(i * n, n);
    }
    return out;
}

CMatrix transfer_at_matrix(const TransferFunction& k, const CMatrix& M) {
    try {
        return transfer_of_matrix(k, M);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::IllConditionedEigenbasis || k.system() == nullptr) {
            throw;
        }
    }
    return kronecker_transfer_eval(*k.system(), M);
}

void ContourParams::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) {
        throw Error(ErrorKind::Config, "contour radius must lie in (0,1)");
    }
    if (L < 1 || N < 1) {
        throw Error(ErrorKind::Config, "contour needs L >= 1 and N >= 1");
    }
    if (!(tau > 0.0)) {
        throw Error(ErrorKind::Config, "step size must be positive");
    }
}

ContourParams choose_contour(int N, double tau, double eps, ContourMode mode) {
    if (N < 1) {
        throw Error(ErrorKind::Config, "choose_contour needs N >= 1");
    }
    ContourParams c;
    c.N = N;
    c.tau = tau;
    c.eps = eps;
    if (mode == ContourMode::Experiment) {
        c.L = 3 * N;
        c.rho = std::exp(-tau);
    } else {
        c.L = N;
        c.rho = std::pow(eps, 1.0 / (2.0 * N));
    }
    return c;
}

void CQWeightTable::require(SchemeKind k, int ord, double step, int steps, Index inputs,
                            Index outputs) const {
    std::ostringstream why;
    if (k != kind || ord != order) {
        why << "scheme differs (table " << (kind == SchemeKind::Bdf ? "bdf" : "rk") << order
            << ", run " << (k == SchemeKind::Bdf ? "bdf" : "rk") << ord << ")";
    } else if (std::abs(step - tau) > 1e-12 * std::abs(tau)) {
        why << "step size differs (table " << tau << ", run " << step << ")";
    } else if (steps != N) {
        why << "step count differs (table " << N << ", run " << steps << ")";
    } else if (inputs != p || outputs != q) {
        why << "port dimensions differ (table " << q << "x" << p << ", run " << outputs << "x"
            << inputs << ")";
    } else {
        return;
    }
    throw Error(ErrorKind::WeightMismatch, "weight table mismatch: " + why.str());
}

namespace {

/// Trapezoidal contour sum shared by the BDF and RK weights. sample(xi)
/// returns the (complex) matrix K(symbol(xi)/tau).
CQWeightTable contour_weights(const std::function<CMatrix(Complex)>& sample,
                              const ContourParams& params, int count, Index rows,
                              Index cols) {
    params.validate();
    const int L = params.L;
    const double rho = params.rho;
    const int half = L / 2;  // points l = 0..half cover phi in [0, pi]
    const double two_pi = 2.0 * std::numbers::pi;
    const std::int64_t evals_before = transfer_evaluations();

    std::vector<CMatrix> values(static_cast<std::size_t>(half) + 1);
    for (int l = 0; l <= half; ++l) {
        const Complex xi = std::polar(rho, two_pi * l / L);
        try {
            values[static_cast<std::size_t>(l)] = sample(xi);
        } catch (const Error& e) {
            std::ostringstream os;
            os << e.what() << " at contour point l=" << l << " (xi=" << xi.real() << "+"
               << xi.imag() << "i)";
            throw Error(e.kind(), os.str());
        }
    }

    // Unit roots e^{-2 pi i k/L}, exactly conjugate-symmetric.
    std::vector<Complex> roots(static_cast<std::size_t>(L));
    for (int k = 0; k <= half; ++k) {
        roots[static_cast<std::size_t>(k)] = std::polar(1.0, -two_pi * k / L);
    }
    for (int k = half + 1; k < L; ++k) {
        roots[static_cast<std::size_t>(k)] = std::conj(roots[static_cast<std::size_t>(L - k)]);
    }

    const bool even = L % 2 == 0;
    CQWeightTable table;
    table.p = cols;
    table.q = rows;
    table.rho = rho;
    table.L = L;
    table.N = params.N;
    table.tau = params.tau;
    table.weights.reserve(static_cast<std::size_t>(count));
    double max_weight = 0.0;
    double max_imag = 0.0;
    const double log_rho = std::log(rho);
    for (int n = 0; n < count; ++n) {
        Matrix real_sum = values[0].real();
        Matrix imag_sum = values[0].imag();
        for (int l = 1; l <= half; ++l) {
            const auto& v = values[static_cast<std::size_t>(l)];
            const Complex r =
                roots[static_cast<std::size_t>((static_cast<std::int64_t>(n) * l) % L)];
            if (even && l == half) {
                // Self-conjugate point xi = -rho.
                const CMatrix term = v * r;
                real_sum += term.real();
                imag_sum += term.imag();
            } else {
                // l and L - l contribute complex conjugates.
                real_sum += 2.0 * (v.real() * r.real() - v.imag() * r.imag());
            }
        }
        const double scale = std::exp(-n * log_rho) / L;
        Matrix w = scale * real_sum;
        if (!w.allFinite()) {
            throw Error(ErrorKind::ImaginaryResidue, "non-finite weight at n=" + std::to_string(n));
        }
        max_weight = std::max(max_weight, w.cwiseAbs().maxCoeff());
        max_imag = std::max(max_imag, scale * imag_sum.cwiseAbs().maxCoeff());
        table.weights.push_back(std::move(w));
    }
    table.max_imag_residue = max_imag;
    if (max_imag > kImaginaryResidueLimit * max_weight && max_imag > 0.0) {
        std::ostringstream os;
        os << "imaginary residue " << max_imag << " exceeds " << kImaginaryResidueLimit
           << " x max weight " << max_weight;
        throw Error(ErrorKind::ImaginaryResidue, os.str());
    }
    table.transfer_evaluations = transfer_evaluations() - evals_before;
    return table;
}

}  // namespace

CQWeightTable bdf_weights(const TransferFunction& k, const BdfScheme& scheme,
                          const ContourParams& params) {
    const double tau = params.tau;
    auto sample = [&](Complex xi) { return k(bdf_delta(scheme, xi) / tau); };
    CQWeightTable table =
        contour_weights(sample, params, params.N + 1, k.outputs(), k.inputs());
    table.kind = SchemeKind::Bdf;
    table.order = scheme.m;
    return table;
}

CQWeightTable rk_weights(const TransferFunction& k, const ButcherTableau& tab,
                         const ContourParams& params) {
    const double tau = params.tau;
    auto sample = [&](Complex xi) {
        const CMatrix arg = rk_symbol(tab, xi) / tau;
        return transfer_at_matrix(k, arg);
    };
    CQWeightTable table = contour_weights(sample, params, params.N, tab.s * k.outputs(),
                                          tab.s * k.inputs());
    table.kind = SchemeKind::Rk;
    table.order = tab.s;
    table.p = k.inputs();
    table.q = k.outputs();
    return table;
}

}  // namespace cqsim
