#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace fiberlab {

/// Complex FFT pair of fixed power-of-two size. FFTW_ESTIMATE keeps planning
/// deterministic; plan creation/destruction is serialized (FFTW requirement),
/// execution on distinct arrays is thread-safe.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n == 0 || (n & (n - 1)) != 0)
            throw std::invalid_argument("Fft: size must be a power of two");
        std::vector<std::complex<double>> tmp(n);
        auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
        std::lock_guard<std::mutex> lock(plan_mutex());
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !bwd_) throw std::runtime_error("Fft: planning failed");
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(std::complex<double>* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_, p, p);
    }

    /// Inverse transform including the 1/n factor.
    void inverse(std::complex<double>* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(bwd_, p, p);
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) data[i] *= s;
    }

    std::size_t size() const { return n_; }

private:
    static std::mutex& plan_mutex() {
        static std::mutex m;
        return m;
    }
    std::size_t n_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

}  // namespace fiberlab
