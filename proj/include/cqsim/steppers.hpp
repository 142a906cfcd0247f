#pragma once

#include <memory>
#include <vector>

#include "cqsim/cq_weights.hpp"
#include "cqsim/nonlinear.hpp"

namespace cqsim {

// Monolithic integrators of the coupled system. The linear stages are
// eliminated per step, leaving Newton on the nonlinear unknowns only.

Trajectory solve_coupled_euler(const NonlinearSubsystem& nl, const DescriptorSystem& lin,
                               double tau, int N, const StepperOptions& opts = {});

Trajectory solve_coupled_bdf(const NonlinearSubsystem& nl, const DescriptorSystem& lin,
                             const BdfScheme& scheme, double tau, int N,
                             const StepperOptions& opts = {});

Trajectory solve_coupled_rk(const NonlinearSubsystem& nl, const DescriptorSystem& lin,
                            const ButcherTableau& tab, double tau, int N,
                            const StepperOptions& opts = {});

enum class ConvolutionMode { Naive, Fft };

/// Online evaluation of the strict history sums sum_{k<n} W_{n-k} x_k for a
/// weight sequence W_0, W_1, ... (rows x cols matrices).
class ConvolutionState {
public:
    /// Blocks of at most `direct_block` entries are summed directly in FFT
    /// mode.
    ConvolutionState(std::vector<Matrix> weights, ConvolutionMode mode, int direct_block = 16);
    ~ConvolutionState();
    ConvolutionState(ConvolutionState&&) noexcept;
    ConvolutionState& operator=(ConvolutionState&&) noexcept;

    /// Appends x_k with k = size().
    void push(const Vector& x);
    int size() const { return static_cast<int>(history_.size()); }

    /// sum_{k=0}^{n-1} W_{n-k} x_k; requires n <= size() and, in FFT mode,
    /// n == size().
    Vector sum(int n) const;

    ConvolutionMode mode() const { return mode_; }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }

private:
    struct FftCache;

    std::vector<Matrix> weights_;
    ConvolutionMode mode_;
    int direct_block_;
    Index rows_;
    Index cols_;
    std::vector<Vector> history_;
    std::vector<Vector> acc_;  // lag accumulator, FFT mode
    std::unique_ptr<FftCache> fft_;

    void add_block(int begin, int len);
};

/// Linear convolution c_j = sum_{i} w_{j-i} x_i of two equally long scalar
/// sequences via FFT, returning 2 len - 1 entries.
std::vector<double> fft_block_convolve(const std::vector<double>& weight_block,
                                       const std::vector<double>& history_block);

Trajectory solve_reduced_bdf(const NonlinearSubsystem& nl, const CQWeightTable& weights,
                             const BdfScheme& scheme, double tau, int N,
                             ConvolutionMode mode = ConvolutionMode::Fft,
                             const StepperOptions& opts = {});

Trajectory solve_reduced_rk(const NonlinearSubsystem& nl, const CQWeightTable& weights,
                            const ButcherTableau& tab, double tau, int N,
                            ConvolutionMode mode = ConvolutionMode::Fft,
                            const StepperOptions& opts = {});

}  // namespace cqsim
