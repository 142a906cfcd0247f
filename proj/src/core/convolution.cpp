#include <algorithm>
#include <complex>
#include <mutex>

#include <fftw3.h>

#include "cqsim/error.hpp"
#include "cqsim/steppers.hpp"

namespace cqsim {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Real transforms of one fixed size with private buffers.
class RealFft {
public:
    explicit RealFft(int size) : size_(size) {
        in_ = fftw_alloc_real(static_cast<std::size_t>(size));
        out_ = fftw_alloc_complex(static_cast<std::size_t>(bins()));
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_r2c_1d(size, in_, out_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_1d(size, out_, in_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int size() const { return size_; }
    int bins() const { return size_ / 2 + 1; }
    double* real() { return in_; }
    Complex* spectrum() { return reinterpret_cast<Complex*>(out_); }

    void forward() { fftw_execute(fwd_); }
    /// Unnormalized: the result is size() times the inverse transform.
    void inverse() { fftw_execute(inv_); }

private:
    int size_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

int next_pow2(int n) {
    int p = 1;
    while (p < n) {
        p *= 2;
    }
    return p;
}

}  // namespace

std::vector<double> fft_block_convolve(const std::vector<double>& weight_block,
                                       const std::vector<double>& history_block) {
    if (weight_block.size() != history_block.size() || weight_block.empty()) {
        throw Error(ErrorKind::DimensionMismatch, "convolution blocks must have equal length");
    }
    const int len = static_cast<int>(weight_block.size());
    RealFft fft(next_pow2(2 * len));
    const int nb = fft.bins();
    std::vector<Complex> w_hat(static_cast<std::size_t>(nb));

    std::fill(fft.real(), fft.real() + fft.size(), 0.0);
    std::copy(weight_block.begin(), weight_block.end(), fft.real());
    fft.forward();
    std::copy(fft.spectrum(), fft.spectrum() + nb, w_hat.begin());

    std::fill(fft.real(), fft.real() + fft.size(), 0.0);
    std::copy(history_block.begin(), history_block.end(), fft.real());
    fft.forward();
    for (int f = 0; f < nb; ++f) {
        fft.spectrum()[f] *= w_hat[static_cast<std::size_t>(f)];
    }
    fft.inverse();
    std::vector<double> out(static_cast<std::size_t>(2 * len - 1));
    for (int j = 0; j < 2 * len - 1; ++j) {
        out[static_cast<std::size_t>(j)] = fft.real()[j] / fft.size();
    }
    return out;
}

// Per block size b: transforms of length 2b and the spectra of the lags
// 1..2b-1 of every weight entry.
struct ConvolutionState::FftCache {
    struct Level {
        std::unique_ptr<RealFft> fft;
        std::vector<std::vector<Complex>> w_hat;  // (r, c) row-major, bins each
        std::vector<std::vector<Complex>> x_hat;  // per history component
    };
    std::vector<Level> levels;  // index log2(b)
};

ConvolutionState::ConvolutionState(std::vector<Matrix> weights, ConvolutionMode mode,
                                   int direct_block)
    : weights_(std::move(weights)), mode_(mode), direct_block_(std::max(1, direct_block)) {
    if (weights_.empty()) {
        throw Error(ErrorKind::DimensionMismatch, "convolution needs at least one weight");
    }
    rows_ = weights_.front().rows();
    cols_ = weights_.front().cols();
    for (const Matrix& w : weights_) {
        if (w.rows() != rows_ || w.cols() != cols_) {
            throw Error(ErrorKind::DimensionMismatch, "weights differ in shape");
        }
    }
    if (mode_ == ConvolutionMode::Fft) {
        acc_.assign(weights_.size(), Vector::Zero(rows_));
        fft_ = std::make_unique<FftCache>();
    }
}

ConvolutionState::~ConvolutionState() = default;
ConvolutionState::ConvolutionState(ConvolutionState&&) noexcept = default;
ConvolutionState& ConvolutionState::operator=(ConvolutionState&&) noexcept = default;

void ConvolutionState::push(const Vector& x) {
    if (x.size() != cols_) {
        throw Error(ErrorKind::DimensionMismatch, "history vector has wrong length");
    }
    history_.push_back(x);
    if (mode_ != ConvolutionMode::Fft) {
        return;
    }
    // Source block [k+1-b, k+1) at an even position feeds targets
    // [k+1, k+1+b); over all levels this covers every pair k < n once.
    const int count = size();
    for (int b = 1; b <= count; b *= 2) {
        if (count % b != 0) {
            break;
        }
        if ((count / b - 1) % 2 == 0) {
            add_block(count - b, b);
        }
    }
}

void ConvolutionState::add_block(int begin, int len) {
    const int n_weights = static_cast<int>(weights_.size());
    const int first_target = begin + len;
    if (first_target >= n_weights) {
        return;
    }
    const int targets = std::min(len, n_weights - first_target);
    if (len <= direct_block_) {
        for (int t = 0; t < targets; ++t) {
            const int n = first_target + t;
            Vector& a = acc_[static_cast<std::size_t>(n)];
            for (int i = begin; i < begin + len; ++i) {
                a.noalias() += weights_[static_cast<std::size_t>(n - i)] *
                               history_[static_cast<std::size_t>(i)];
            }
        }
        return;
    }

    int level = 0;
    while ((1 << level) < len) {
        ++level;
    }
    if (fft_->levels.size() <= static_cast<std::size_t>(level)) {
        fft_->levels.resize(static_cast<std::size_t>(level) + 1);
    }
    FftCache::Level& L = fft_->levels[static_cast<std::size_t>(level)];
    const int size = 2 * len;
    if (!L.fft) {
        L.fft = std::make_unique<RealFft>(size);
        const int nb = L.fft->bins();
        L.w_hat.assign(static_cast<std::size_t>(rows_ * cols_),
                       std::vector<Complex>(static_cast<std::size_t>(nb)));
        L.x_hat.assign(static_cast<std::size_t>(cols_),
                       std::vector<Complex>(static_cast<std::size_t>(nb)));
        double* in = L.fft->real();
        for (Index r = 0; r < rows_; ++r) {
            for (Index c = 0; c < cols_; ++c) {
                in[0] = 0.0;
                for (int lag = 1; lag < size; ++lag) {
                    in[lag] = lag < n_weights ? weights_[static_cast<std::size_t>(lag)](r, c) : 0.0;
                }
                L.fft->forward();
                std::copy(L.fft->spectrum(), L.fft->spectrum() + nb,
                          L.w_hat[static_cast<std::size_t>(r * cols_ + c)].begin());
            }
        }
    }
    RealFft& fft = *L.fft;
    const int nb = fft.bins();
    double* in = fft.real();
    Complex* spec = fft.spectrum();
    for (Index c = 0; c < cols_; ++c) {
        for (int i = 0; i < len; ++i) {
            in[i] = history_[static_cast<std::size_t>(begin + i)](c);
        }
        std::fill(in + len, in + size, 0.0);
        fft.forward();
        std::copy(spec, spec + nb, L.x_hat[static_cast<std::size_t>(c)].begin());
    }
    const double scale = 1.0 / size;
    for (Index r = 0; r < rows_; ++r) {
        std::fill(spec, spec + nb, Complex(0.0, 0.0));
        for (Index c = 0; c < cols_; ++c) {
            const auto& w = L.w_hat[static_cast<std::size_t>(r * cols_ + c)];
            const auto& x = L.x_hat[static_cast<std::size_t>(c)];
            for (int f = 0; f < nb; ++f) {
                spec[f] += w[static_cast<std::size_t>(f)] * x[static_cast<std::size_t>(f)];
            }
        }
        fft.inverse();
        // Local index len + t is target first_target + t.
        for (int t = 0; t < targets; ++t) {
            acc_[static_cast<std::size_t>(first_target + t)](r) += scale * in[len + t];
        }
    }
}

Vector ConvolutionState::sum(int n) const {
    if (n < 0 || n > size()) {
        throw Error(ErrorKind::PreconditionViolation, "history not filled up to the requested step");
    }
    if (n >= static_cast<int>(weights_.size())) {
        throw Error(ErrorKind::PreconditionViolation, "step beyond the weight table");
    }
    if (mode_ == ConvolutionMode::Fft) {
        return acc_[static_cast<std::size_t>(n)];
    }
    Vector out = Vector::Zero(rows_);
    for (int k = 0; k < n; ++k) {
        out.noalias() += weights_[static_cast<std::size_t>(n - k)] *
                         history_[static_cast<std::size_t>(k)];
    }
    return out;
}

}  // namespace cqsim
