#include "cqsim/lti.hpp"

#include <cmath>
#include <sstream>

namespace cqsim {

namespace {

thread_local std::int64_t g_transfer_evaluations = 0;

std::string dims(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void check_symmetric(const Matrix& m, const char* name) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(name) + " must be square, got " + dims(m));
    }
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return;
    }
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        throw Error(ErrorKind::PreconditionViolation,
                    std::string(name) + " is not symmetric");
    }
}

template <typename Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

void DescriptorSystem::validate() const {
    const Index n = E.rows();
    if (E.cols() != n || A.rows() != n || A.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch,
                    "descriptor: E (" + dims(E) + ") and A (" + dims(A) +
                        ") must be square of equal size");
    }
    if (B.rows() != n || C.rows() != n) {
        throw Error(ErrorKind::DimensionMismatch,
                    "descriptor: B (" + dims(B) + ") and C (" + dims(C) +
                        ") need " + std::to_string(n) + " rows");
    }
}

template <typename Scalar>
CheckedLU<Scalar>::CheckedLU(const MatrixType& m) : lu_(m) {
    const double norm = m.size() == 0 ? 0.0 : inf_norm(m);
    const double pivot =
        m.size() == 0 ? 0.0 : lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (m.size() == 0 || !(pivot >= kPivotTolerance * norm) || norm == 0.0) {
        std::ostringstream os;
        os << "pencil is numerically singular (pivot " << pivot << ", norm "
           << norm << ")";
        throw Error(ErrorKind::SingularPencil, os.str());
    }
}

template class CheckedLU<double>;
template class CheckedLU<Complex>;

std::int64_t transfer_evaluations() noexcept { return g_transfer_evaluations; }

void count_transfer_evaluation() noexcept { ++g_transfer_evaluations; }

CMatrix transfer_eval(const DescriptorSystem& sys, Complex s) {
    sys.validate();
    count_transfer_evaluation();
    const CMatrix pencil = s * sys.E.cast<Complex>() + sys.A.cast<Complex>();
    CheckedLU<Complex> lu(pencil);
    const CMatrix x = lu.solve(sys.B.cast<Complex>());
    return sys.C.transpose().cast<Complex>() * x;
}

void SolidConductorModel::validate() const {
    check_symmetric(M_sigma, "M_sigma");
    check_symmetric(K_nu, "K_nu");
    if (K_nu.rows() != M_sigma.rows() || B1.rows() != M_sigma.rows()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "solid conductor: M_sigma " + dims(M_sigma) + ", K_nu " +
                        dims(K_nu) + ", B1 " + dims(B1));
    }
    if (B2.rows() != B1.cols() || B2.cols() != B1.cols()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "solid conductor: B2 must be ports x ports, got " + dims(B2));
    }
}

StrandedConductorModel::StrandedConductorModel(Matrix M_sigma, Matrix K_nu, Matrix B3)
    : M_sigma_(std::move(M_sigma)), K_nu_(std::move(K_nu)), B3_(std::move(B3)) {
    check_symmetric(M_sigma_, "M_sigma");
    check_symmetric(K_nu_, "K_nu");
    if (K_nu_.rows() != M_sigma_.rows() || B3_.rows() != M_sigma_.rows()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "stranded conductor: M_sigma " + dims(M_sigma_) + ", K_nu " +
                        dims(K_nu_) + ", B3 " + dims(B3_));
    }
    if (B3_.cols() == 0) {
        throw Error(ErrorKind::DimensionMismatch, "stranded conductor: B3 has no columns");
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(B3_);
    qr.setThreshold(1e-10);
    if (qr.rank() < B3_.cols()) {
        throw Error(ErrorKind::RankDeficient,
                    "stranded conductor: B3 does not have full column rank");
    }
}

CMatrix solid_transfer(const SolidConductorModel& model, Complex s) {
    model.validate();
    count_transfer_evaluation();
    const CMatrix pencil = s * model.M_sigma.cast<Complex>() + model.K_nu.cast<Complex>();
    CheckedLU<Complex> lu(pencil);
    const CMatrix b1 = model.B1.cast<Complex>();
    const CMatrix x = lu.solve(b1);
    return model.B2.cast<Complex>() - s * (b1.transpose() * x);
}

CMatrix stranded_transfer(const StrandedConductorModel& model, Complex s) {
    if (s == Complex(0.0, 0.0)) {
        throw Error(ErrorKind::PreconditionViolation,
                    "stranded transfer is undefined at s = 0");
    }
    count_transfer_evaluation();
    const CMatrix pencil =
        s * model.M_sigma().cast<Complex>() + model.K_nu().cast<Complex>();
    CheckedLU<Complex> lu(pencil);
    const CMatrix b3 = model.B3().cast<Complex>();
    const CMatrix inner = s * (b3.transpose() * lu.solve(b3));
    Eigen::JacobiSVD<CMatrix> svd(inner);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e14) {
        throw Error(ErrorKind::SingularPort, "stranded transfer: port matrix is singular");
    }
    return inner.inverse();
}

PortMap PortMap::identity(Index n) {
    PortMap map;
    map.dim_y = n;
    map.columns.resize(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) {
        map.columns[static_cast<std::size_t>(k)].push_back({k, 1.0});
    }
    return map;
}

void PortMap::validate() const {
    if (columns.empty()) {
        throw Error(ErrorKind::DimensionMismatch, "port map has no ports");
    }
    for (const auto& col : columns) {
        for (const auto& [row, sign] : col) {
            if (row < 0 || row >= dim_y) {
                throw Error(ErrorKind::DimensionMismatch,
                            "port map row " + std::to_string(row) + " outside 0.." +
                                std::to_string(dim_y - 1));
            }
            (void)sign;
        }
    }
}

Matrix PortMap::dense() const {
    Matrix p = Matrix::Zero(dim_y, ports());
    for (Index k = 0; k < ports(); ++k) {
        for (const auto& [row, sign] : columns[static_cast<std::size_t>(k)]) {
            p(row, k) += sign;
        }
    }
    return p;
}

DescriptorSystem wrap_solid_as_descriptor(const SolidConductorModel& model,
                                          const PortMap& ports) {
    model.validate();
    ports.validate();
    if (ports.ports() != model.ports()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "port map has " + std::to_string(ports.ports()) +
                        " ports, solid conductor has " + std::to_string(model.ports()));
    }
    const Index na = model.states();
    const Index np = model.ports();
    const Index nz = na + np;
    const Matrix P = ports.dense();

    DescriptorSystem sys;
    sys.E = Matrix::Zero(nz, nz);
    sys.E.topLeftCorner(na, na) = model.M_sigma;
    sys.E.bottomLeftCorner(np, na) = model.B1.transpose();
    sys.A = Matrix::Zero(nz, nz);
    sys.A.topLeftCorner(na, na) = model.K_nu;
    sys.A.bottomRightCorner(np, np) = -Matrix::Identity(np, np);
    Matrix drive(nz, np);
    drive.topRows(na) = -model.B1;
    drive.bottomRows(np) = -model.B2;
    sys.B = drive * P.transpose();
    sys.C = Matrix::Zero(nz, ports.dim_y);
    sys.C.bottomRows(np) = P.transpose();
    return sys;
}

DescriptorSystem wrap_stranded_as_descriptor(const StrandedConductorModel& model,
                                             const PortMap& ports) {
    ports.validate();
    if (ports.ports() != model.ports()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "port map has " + std::to_string(ports.ports()) +
                        " ports, stranded conductor has " + std::to_string(model.ports()));
    }
    const Index na = model.states();
    const Index np = model.ports();
    const Index nz = na + np;
    const Matrix P = ports.dense();

    DescriptorSystem sys;
    sys.E = Matrix::Zero(nz, nz);
    sys.E.topLeftCorner(na, na) = model.M_sigma();
    sys.E.bottomLeftCorner(np, na) = model.B3().transpose();
    sys.A = Matrix::Zero(nz, nz);
    sys.A.topLeftCorner(na, na) = model.K_nu();
    sys.A.topRightCorner(na, np) = -model.B3();
    Matrix drive = Matrix::Zero(nz, np);
    drive.bottomRows(np) = Matrix::Identity(np, np);
    sys.B = drive * P.transpose();
    sys.C = Matrix::Zero(nz, ports.dim_y);
    sys.C.bottomRows(np) = P.transpose();
    return sys;
}

DescriptorSystem block_diagonal(const std::vector<DescriptorSystem>& systems) {
    Index n = 0, p = 0, q = 0;
    for (const auto& s : systems) {
        s.validate();
        n += s.states();
        p += s.inputs();
        q += s.outputs();
    }
    DescriptorSystem out;
    out.E = Matrix::Zero(n, n);
    out.A = Matrix::Zero(n, n);
    out.B = Matrix::Zero(n, p);
    out.C = Matrix::Zero(n, q);
    Index on = 0, op = 0, oq = 0;
    for (const auto& s : systems) {
        const Index sn = s.states();
        out.E.block(on, on, sn, sn) = s.E;
        out.A.block(on, on, sn, sn) = s.A;
        out.B.block(on, op, sn, s.inputs()) = s.B;
        out.C.block(on, oq, sn, s.outputs()) = s.C;
        on += sn;
        op += s.inputs();
        oq += s.outputs();
    }
    return out;
}

}  // namespace cqsim
