#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cqsim/error.hpp"
#include "cqsim/types.hpp"

namespace cqsim {

/// Linear time-invariant descriptor system  E z' + A z = B u,  output C^T z.
///
/// E may be singular. The input u has p = B.cols() entries, the output
/// q = C.cols() entries, so the transfer function is the q x p matrix
/// C^T (sE + A)^{-1} B.
struct DescriptorSystem {
    Matrix E;
    Matrix A;
    Matrix B;
    Matrix C;

    Index states() const { return E.rows(); }
    Index inputs() const { return B.cols(); }
    Index outputs() const { return C.cols(); }

    /// Throws DimensionMismatch when the blocks do not fit together.
    void validate() const;
};

/// Dense LU with partial pivoting that refuses numerically singular input:
/// a pivot below 1e-14 * ||M||_inf raises SingularPencil.
template <typename Scalar>
class CheckedLU {
public:
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    CheckedLU() = default;
    explicit CheckedLU(const MatrixType& m);

    template <typename Rhs>
    auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
        return lu_.solve(rhs);
    }

    Index size() const { return lu_.rows(); }

private:
    Eigen::PartialPivLU<MatrixType> lu_;
};

extern template class CheckedLU<double>;
extern template class CheckedLU<Complex>;

inline constexpr double kPivotTolerance = 1e-14;

/// C^T (sE + A)^{-1} B via one factorization and p solves.
CMatrix transfer_eval(const DescriptorSystem& sys, Complex s);

/// Number of transfer-function evaluations performed on the calling thread.
/// Used to check that online simulations never touch the linear subsystem.
std::int64_t transfer_evaluations() noexcept;
void count_transfer_evaluation() noexcept;

/// Solid conductor after space discretization:
///   M a' + K a = -B1 v,   B1^T a' - j = -B2 v
/// so that j = k(s) v with k(s) = B2 - s B1^T (sM + K)^{-1} B1.
struct SolidConductorModel {
    Matrix M_sigma;
    Matrix K_nu;
    Matrix B1;  // n_a x ports
    Matrix B2;  // ports x ports

    Index states() const { return M_sigma.rows(); }
    Index ports() const { return B1.cols(); }

    /// Dimension checks plus symmetry of M_sigma and K_nu within 1e-12
    /// relative.
    void validate() const;
};

/// Stranded conductor (winding) model:
///   M a' + K a - B3 j = 0,   B3^T a' = v
/// so that j = k(s) v with k(s) = (s B3^T (sM + K)^{-1} B3)^{-1}.
class StrandedConductorModel {
public:
    /// Validates dimensions, symmetry and full column rank of B3 (rank
    /// revealing QR, threshold 1e-10 relative).
    StrandedConductorModel(Matrix M_sigma, Matrix K_nu, Matrix B3);

    const Matrix& M_sigma() const { return M_sigma_; }
    const Matrix& K_nu() const { return K_nu_; }
    const Matrix& B3() const { return B3_; }

    Index states() const { return M_sigma_.rows(); }
    Index ports() const { return B3_.cols(); }

private:
    Matrix M_sigma_;
    Matrix K_nu_;
    Matrix B3_;
};

CMatrix solid_transfer(const SolidConductorModel& model, Complex s);

/// Throws PreconditionViolation for s == 0 and SingularPort when the inner
/// ports x ports matrix has condition number above 1e14.
CMatrix stranded_transfer(const StrandedConductorModel& model, Complex s);

/// Signed sparse incidence columns mapping device ports onto entries of the
/// nonlinear unknown y. Column k lists (row, sign) pairs; it is the A_M
/// column of port k padded with zeros for the current unknowns.
struct PortMap {
    Index dim_y = 0;
    std::vector<std::vector<std::pair<Index, double>>> columns;

    static PortMap identity(Index n);

    Index ports() const { return static_cast<Index>(columns.size()); }

    /// dim_y x ports dense matrix.
    Matrix dense() const;

    void validate() const;
};

/// Augmented descriptor z = (a, j_M) of a solid conductor, driven by y
/// through the port map:
///   E = [[M, 0], [B1^T, 0]],  A = [[K, 0], [0, -I]],  B = [[-B1], [-B2]] P^T,
/// with C^T z = P j_M, hence transfer_eval(result, s) = P k(s) P^T.
DescriptorSystem wrap_solid_as_descriptor(const SolidConductorModel& model,
                                          const PortMap& ports);

/// Augmented descriptor z = (a, j_M) of a stranded conductor:
///   E = [[M, 0], [B3^T, 0]],  A = [[K, -B3], [0, 0]],  B = [[0], [I]] P^T,
/// with C^T z = P j_M.
DescriptorSystem wrap_stranded_as_descriptor(const StrandedConductorModel& model,
                                             const PortMap& ports);

/// Block-diagonal union of several descriptor systems (inputs and outputs
/// concatenated in order).
DescriptorSystem block_diagonal(const std::vector<DescriptorSystem>& systems);

}  // namespace cqsim
