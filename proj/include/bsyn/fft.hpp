#pragma once

#include <fftw3.h>

#include <complex>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

#include "bsyn/grid.hpp"

namespace bsyn {

using cplx = std::complex<double>;

namespace detail {

// FFTW's planner is not reentrant.
/// Spectral arrays are a few hundred KiB each and are created every step.
/// glibc serves blocks that size with mmap, so each one page-faults on first
/// touch; keeping them on the heap removes that cost.
inline bool tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
    return true;
}
inline const bool allocator_tuned = tune_allocator();

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

/// 2D complex transform pair for one grid size, owning its aligned buffers.
///
/// Plans are built with FFTW_ESTIMATE so the algorithm choice (and therefore
/// the roundoff pattern) does not depend on timing measurements.
class Fft2d {
public:
    Fft2d(int nx, int ny) : nx_(nx), ny_(ny), n_(static_cast<std::size_t>(nx) * ny) {
        buf_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_)));
        std::lock_guard lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft_2d(nx, ny, buf_.get(), buf_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(nx, ny, buf_.get(), buf_.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;
    ~Fft2d() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

    std::size_t size() const { return n_; }

    /// Spectral -> physical for two Hermitian spectra at once: a + i b is
    /// transformed and the real and imaginary parts are the two fields.
    void inverse_pair(std::span<const cplx> a, std::span<const cplx> b, std::span<double> out_a,
                      std::span<double> out_b) {
        cplx* z = data();
        for (std::size_t i = 0; i < n_; ++i) z[i] = a[i] + cplx(-b[i].imag(), b[i].real());
        fftw_execute(bwd_);
        for (std::size_t i = 0; i < n_; ++i) {
            out_a[i] = z[i].real();
            out_b[i] = z[i].imag();
        }
    }

    void inverse(std::span<const cplx> a, std::span<double> out) {
        cplx* z = data();
        std::memcpy(static_cast<void*>(z), a.data(), n_ * sizeof(cplx));
        fftw_execute(bwd_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = z[i].real();
    }

    /// Physical -> spectral (normalized by 1/(nx*ny)) for two real arrays at
    /// once. The outputs are exactly Hermitian.
    void forward_pair(std::span<const double> a, std::span<const double> b, std::span<cplx> out_a,
                      std::span<cplx> out_b) {
        cplx* z = data();
        for (std::size_t i = 0; i < n_; ++i) z[i] = cplx(a[i], b[i]);
        fftw_execute(fwd_);
        const double scale = 0.5 / static_cast<double>(n_);
        for (int i1 = 0; i1 < nx_; ++i1) {
            const int m1 = (nx_ - i1) % nx_;
            for (int i2 = 0; i2 < ny_; ++i2) {
                const int m2 = (ny_ - i2) % ny_;
                const cplx zk = z[static_cast<std::size_t>(i1) * ny_ + i2];
                const cplx zm = std::conj(z[static_cast<std::size_t>(m1) * ny_ + m2]);
                const std::size_t k = static_cast<std::size_t>(i1) * ny_ + i2;
                out_a[k] = (zk + zm) * scale;
                const cplx d = (zk - zm) * scale;
                out_b[k] = cplx(d.imag(), -d.real());
            }
        }
    }

    void forward(std::span<const double> a, std::span<cplx> out) {
        cplx* z = data();
        for (std::size_t i = 0; i < n_; ++i) z[i] = cplx(a[i], 0.0);
        fftw_execute(fwd_);
        const double scale = 1.0 / static_cast<double>(n_);
        for (int i1 = 0; i1 < nx_; ++i1) {
            const int m1 = (nx_ - i1) % nx_;
            for (int i2 = 0; i2 < ny_; ++i2) {
                const int m2 = (ny_ - i2) % ny_;
                const std::size_t k = static_cast<std::size_t>(i1) * ny_ + i2;
                out[k] = 0.5 * scale * (z[k] + std::conj(z[static_cast<std::size_t>(m1) * ny_ + m2]));
            }
        }
    }

    /// Fused variant of inverse_pair: gen(i) returns the two spectral values
    /// at flat index i, sink(i, a, b) receives the two physical values.
    template <class Gen, class Sink>
    void inverse_pair_with(Gen&& gen, Sink&& sink) {
        cplx* z = data();
        for (std::size_t i = 0; i < n_; ++i) {
            const auto [a, b] = gen(i);
            z[i] = a + cplx(-b.imag(), b.real());
        }
        fftw_execute(bwd_);
        for (std::size_t i = 0; i < n_; ++i) sink(i, z[i].real(), z[i].imag());
    }

    /// Fused variant of forward_pair: src(i) returns the two physical values,
    /// sink(i, A, B) receives the normalized Hermitian spectra.
    template <class Src, class Sink>
    void forward_pair_with(Src&& src, Sink&& sink) {
        cplx* z = data();
        for (std::size_t i = 0; i < n_; ++i) {
            const auto [a, b] = src(i);
            z[i] = cplx(a, b);
        }
        fftw_execute(fwd_);
        const double scale = 0.5 / static_cast<double>(n_);
        for (int i1 = 0; i1 < nx_; ++i1) {
            const cplx* row = z + static_cast<std::size_t>(i1) * ny_;
            const cplx* neg = z + static_cast<std::size_t>((nx_ - i1) % nx_) * ny_;
            const std::size_t base = static_cast<std::size_t>(i1) * ny_;
            for (int i2 = 0; i2 < ny_; ++i2) {
                const cplx zk = row[i2];
                const cplx zm = std::conj(neg[i2 == 0 ? 0 : ny_ - i2]);
                const cplx d = (zk - zm) * scale;
                sink(base + i2, (zk + zm) * scale, cplx(d.imag(), -d.real()));
            }
        }
    }

private:
    cplx* data() { return reinterpret_cast<cplx*>(buf_.get()); }

    int nx_, ny_;
    std::size_t n_;
    std::unique_ptr<fftw_complex, detail::FftwDeleter> buf_;
    fftw_plan fwd_{};
    fftw_plan bwd_{};
};

/// Per-thread plan cache keyed by grid size.
inline Fft2d& fft_for(const Grid& g) {
    thread_local std::map<std::pair<int, int>, std::unique_ptr<Fft2d>> cache;
    auto& slot = cache[{g.nx(), g.ny()}];
    if (!slot) slot = std::make_unique<Fft2d>(g.nx(), g.ny());
    return *slot;
}

}  // namespace bsyn
