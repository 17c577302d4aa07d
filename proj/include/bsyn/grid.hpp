#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "bsyn/errors.hpp"

namespace bsyn {

/// Symmetry class in the vertical direction of the extended box.
enum class Parity { EvenInX2, OddInX2 };

inline Parity flip(Parity p) { return p == Parity::EvenInX2 ? Parity::OddInX2 : Parity::EvenInX2; }
inline double parity_sign(Parity p) { return p == Parity::EvenInX2 ? 1.0 : -1.0; }
inline const char* to_string(Parity p) { return p == Parity::EvenInX2 ? "even" : "odd"; }

enum class Axis { X1, X2 };

/// Uniform collocation grid on the extended periodic box (0,L) x (-1,1).
///
/// Spectral arrays are nx*ny, row-major with the x1 index outermost, in FFT
/// ordering: index i maps to the signed integer mode i for i < n/2 and i - n
/// otherwise. The x2 period is fixed at 2.
class Grid {
public:
    Grid() : Grid(2.0, 8, 8) {}

    Grid(double L, int nx, int ny, double dealias_fraction = 2.0 / 3.0)
        : L_(L), nx_(nx), ny_(ny), dealias_fraction_(dealias_fraction) {
        if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid: L must be positive");
        if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0)
            throw ConfigError("grid: nx and ny must be even and >= 8");
        if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
            throw ConfigError("grid: dealias_fraction must lie in (0, 1]");
        kmax1_ = dealias_fraction * (nx / 2);
        kmax2_ = dealias_fraction * (ny / 2);
        build_tables();
    }

    double L() const { return L_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double dealias_fraction() const { return dealias_fraction_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
    double area() const { return 2.0 * L_; }
    double dx1() const { return L_ / nx_; }
    double dx2() const { return 2.0 / ny_; }

    std::size_t index(int i1, int i2) const { return static_cast<std::size_t>(i1) * ny_ + i2; }

    static int signed_mode(int i, int n) { return i < n / 2 ? i : i - n; }
    int mode1(int i1) const { return signed_mode(i1, nx_); }
    int mode2(int i2) const { return signed_mode(i2, ny_); }

    /// Index of the mode reflected in x2 (k2 -> -k2).
    int mirror2(int i2) const { return (ny_ - i2) % ny_; }
    int mirror1(int i1) const { return (nx_ - i1) % nx_; }

    bool is_nyquist1(int i1) const { return i1 == nx_ / 2; }
    bool is_nyquist2(int i2) const { return i2 == ny_ / 2; }

    /// Physical wavenumbers; zero on the Nyquist row so derivatives stay real.
    double k1(int i1) const { return tables_->k1[i1]; }
    double k2(int i2) const { return tables_->k2[i2]; }
    double ksq(int i1, int i2) const { return tables_->ksq[index(i1, i2)]; }
    double ksq(std::size_t i) const { return tables_->ksq[i]; }

    /// Inside the dealiased band (and off the Nyquist rows).
    bool retained(int i1, int i2) const { return tables_->mask[index(i1, i2)] != 0; }
    bool retained(std::size_t i) const { return tables_->mask[i] != 0; }

    double x1(int i1) const { return i1 * dx1(); }
    double x2(int i2) const { return -1.0 + i2 * dx2(); }

    /// Smallest positive eigenvalue of -Laplacian on the retained odd-in-x2 modes.
    double lambda1() const {
        double best = INFINITY;
        for (int i1 = 0; i1 < nx_; ++i1)
            for (int i2 = 0; i2 < ny_; ++i2)
                if (retained(i1, i2) && mode2(i2) != 0) best = std::min(best, ksq(i1, i2));
        return best;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.L_ == b.L_ && a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.dealias_fraction_ == b.dealias_fraction_;
    }

private:
    struct Tables {
        std::vector<double> k1, k2, ksq;
        std::vector<std::uint8_t> mask;
    };

    void build_tables() {
        auto t = std::make_shared<Tables>();
        t->k1.resize(nx_);
        t->k2.resize(ny_);
        for (int i = 0; i < nx_; ++i) t->k1[i] = is_nyquist1(i) ? 0.0 : 2.0 * std::numbers::pi * mode1(i) / L_;
        for (int j = 0; j < ny_; ++j) t->k2[j] = is_nyquist2(j) ? 0.0 : std::numbers::pi * mode2(j);
        t->ksq.resize(size());
        t->mask.resize(size());
        for (int i = 0; i < nx_; ++i)
            for (int j = 0; j < ny_; ++j) {
                t->ksq[index(i, j)] = t->k1[i] * t->k1[i] + t->k2[j] * t->k2[j];
                t->mask[index(i, j)] = !is_nyquist1(i) && !is_nyquist2(j) && std::abs(mode1(i)) <= kmax1_ &&
                                       std::abs(mode2(j)) <= kmax2_;
            }
        tables_ = std::move(t);
    }

    double L_ = 2.0;
    int nx_ = 8;
    int ny_ = 8;
    double dealias_fraction_ = 2.0 / 3.0;
    double kmax1_ = 0.0;
    double kmax2_ = 0.0;
    std::shared_ptr<const Tables> tables_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b)) throw ConfigError(std::string(where) + ": grid mismatch");
}

}  // namespace bsyn
