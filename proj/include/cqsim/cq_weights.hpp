#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cqsim/lti.hpp"

namespace cqsim {

/// BDF-m written as (1/tau) sum_{k=0}^m alpha_k y_{n-m+k}.
struct BdfScheme {
    int m = 1;
    std::vector<double> alpha;

    static BdfScheme bdf(int m);
};

/// delta(xi) = sum_k alpha_k xi^(m-k).
Complex bdf_delta(const BdfScheme& scheme, Complex xi);

struct ButcherTableau {
    int s = 1;
    Matrix A;
    Vector b;
    Vector c;

    /// Radau IIA with s = 1, 2, 3 stages. Checked against the tableau
    /// invariants and the quadrature order conditions on first use.
    static const ButcherTableau& radau_iia(int s);

    /// A invertible, last row of A equal to b, row sums equal to c.
    void validate() const;
};

/// Delta(xi) = ((xi/(1-xi)) 1 b^T + A)^{-1}; requires |xi| < 1.
CMatrix rk_symbol(const ButcherTableau& tab, Complex xi);

namespace detail {
struct SchurPencil;
}

/// A (matrix valued) transfer function K(s) of size outputs x inputs. Either
/// backed by a descriptor system (which enables the Kronecker fallback for
/// matrix arguments) or by an arbitrary callback.
class TransferFunction {
public:
    using Callback = std::function<CMatrix(Complex)>;

    explicit TransferFunction(DescriptorSystem sys);
    TransferFunction(Index outputs, Index inputs, Callback fn);

    /// Scalar transfer function.
    static TransferFunction scalar(std::function<Complex(Complex)> fn);

    CMatrix operator()(Complex s) const;

    Index outputs() const { return q_; }
    Index inputs() const { return p_; }
    const DescriptorSystem* system() const { return system_ ? &*system_ : nullptr; }

private:
    Index q_ = 0;
    Index p_ = 0;
    Callback fn_;
    std::optional<DescriptorSystem> system_;
    // generalized real Schur form of (A, E), shared between copies
    std::shared_ptr<const detail::SchurPencil> schur_;
};

/// K(M) = V diag(K(lambda_k)) V^{-1} for M = V Lambda V^{-1}, generalized to
/// matrix valued K with stage-major layout (block (i,j) = sum_k V_ik K_k Vinv_kj).
/// Throws IllConditionedEigenbasis when cond(V) > 1e8.
CMatrix transfer_of_matrix(const TransferFunction& k, const CMatrix& M);

inline constexpr double kEigenbasisConditionLimit = 1e8;

/// (I (x) C^T)(M (x) E + I (x) A)^{-1}(I (x) B) by a direct solve of the
/// s * n_z system.
CMatrix kronecker_transfer_eval(const DescriptorSystem& sys, const CMatrix& M);

/// transfer_of_matrix with the Kronecker solve as fallback when the eigenbasis
/// is ill conditioned and a descriptor system is available.
CMatrix transfer_at_matrix(const TransferFunction& k, const CMatrix& M);

enum class ContourMode { Experiment, Conservative };

struct ContourParams {
    double rho = 0.0;
    int L = 0;
    double tau = 0.0;
    int N = 0;
    double eps = 1e-16;

    void validate() const;
};

/// Experiment: L = 3N, rho = exp(-tau). Conservative: L = N,
/// rho = eps^(1/(2N)).
ContourParams choose_contour(int N, double tau, double eps, ContourMode mode);

enum class SchemeKind { Bdf, Rk };

/// Convolution weights of a BDF (q x p entries) or Radau (s q x s p entries,
/// stage-major blocks W_{n,ij}) discretization.
struct CQWeightTable {
    SchemeKind kind = SchemeKind::Bdf;
    int order = 1;  // m for BDF, s for RK
    Index p = 0;
    Index q = 0;
    int N = 0;
    double tau = 0.0;
    double rho = 0.0;
    int L = 0;
    std::vector<Matrix> weights;
    double max_imag_residue = 0.0;
    std::int64_t transfer_evaluations = 0;

    int stages() const { return kind == SchemeKind::Rk ? order : 1; }
    Index rows() const { return stages() * q; }
    Index cols() const { return stages() * p; }

    /// Throws WeightMismatch when the table was not built for this setup.
    void require(SchemeKind k, int ord, double step, int steps, Index inputs,
                 Index outputs) const;
};

inline constexpr double kImaginaryResidueLimit = 1e-8;

/// omega_n = 1/(L rho^n) sum_l K(delta(rho e^{i phi_l})/tau) e^{-i n phi_l},
/// n = 0..N. Only the contour points with 0 <= phi_l <= pi are evaluated.
CQWeightTable bdf_weights(const TransferFunction& k, const BdfScheme& scheme,
                          const ContourParams& params);

/// W_n as above with Delta(xi)/tau as matrix argument, n = 0..N-1.
CQWeightTable rk_weights(const TransferFunction& k, const ButcherTableau& tab,
                         const ContourParams& params);

// Weight-table file: a `CQW kind=... m_or_s=... p=... q=... N=... tau=...
// rho=... L=...` header, then one row-major line per n.
void write_weights(std::ostream& out, const CQWeightTable& table);
CQWeightTable read_weights(std::istream& in, const std::string& source_name = "<stream>");
void save_weights(const std::string& path, const CQWeightTable& table);
CQWeightTable load_weights(const std::string& path);

}  // namespace cqsim
