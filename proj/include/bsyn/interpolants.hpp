#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bsyn/field.hpp"
#include "bsyn/random_fields.hpp"

namespace bsyn {

enum class InterpolantKind { FourierModes, VolumeElements, NodalValues };

inline const char* to_string(InterpolantKind k) {
    switch (k) {
        case InterpolantKind::FourierModes: return "FourierModes";
        case InterpolantKind::VolumeElements: return "VolumeElements";
        case InterpolantKind::NodalValues: return "NodalValues";
    }
    return "?";
}

inline InterpolantKind interpolant_kind_from_string(const std::string& s) {
    if (s == "FourierModes") return InterpolantKind::FourierModes;
    if (s == "VolumeElements") return InterpolantKind::VolumeElements;
    if (s == "NodalValues") return InterpolantKind::NodalValues;
    throw ConfigError("unknown interpolant kind '" + s + "'");
}

/// Which approximation inequality the interpolant satisfies:
///   type 1: ||phi - I phi|| <= c0 h ||phi||_H1
///   type 2: ||phi - I phi|| <= c0 h ||phi||_H1 + c0^2 h^2 ||phi||_H2
enum class ApproximationType { Type1, Type2 };

/// Observation operator description. Elements (and nodes) form an m x n
/// lattice of cells L/m x 2/n with n even, so the partition is mirror
/// symmetric about x2 = 0.
class InterpolantSpec {
public:
    InterpolantSpec() = default;

    InterpolantSpec(InterpolantKind kind, double h, double L) : kind_(kind), h_(h), L_(L) {
        if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("interpolant: h must be positive");
        if (h > std::min(L, 2.0) / 2.0 * (1.0 + 1e-12))
            throw ConfigError("interpolant: h must not exceed min(L, 2)/2 (fewer than 2 elements per axis)");
        if (kind != InterpolantKind::FourierModes) {
            m_ = static_cast<int>(std::ceil(L / h - 1e-9));
            n_ = 2 * static_cast<int>(std::ceil(1.0 / h - 1e-9));
        }
    }

    InterpolantKind kind() const { return kind_; }
    double h() const { return h_; }
    double L() const { return L_; }
    int m() const { return m_; }
    int n() const { return n_; }

    /// Actual resolution: the requested h for Fourier modes, otherwise the
    /// largest cell side.
    double effective_h() const {
        if (kind_ == InterpolantKind::FourierModes) return h_;
        return std::max(L_ / m_, 2.0 / n_);
    }

    ApproximationType approximation_type() const {
        return kind_ == InterpolantKind::NodalValues ? ApproximationType::Type2 : ApproximationType::Type1;
    }

    void check_grid(const Grid& g) const {
        if (std::abs(g.L() - L_) > 1e-12 * L_) throw ConfigError("interpolant: built for a different box length");
        if (kind_ == InterpolantKind::FourierModes) return;
        if (L_ / m_ < g.dx1() * (1.0 - 1e-12) || 2.0 / n_ < g.dx2() * (1.0 - 1e-12))
            throw ConfigError("interpolant: elements are finer than the grid spacing");
    }

    bool fourier_retains(const Grid& g, int i1, int i2) const {
        if (g.is_nyquist1(i1) || g.is_nyquist2(i2)) return false;
        return g.ksq(i1, i2) * h_ * h_ <= 1.0 + 1e-12;
    }

    friend bool operator==(const InterpolantSpec& a, const InterpolantSpec& b) {
        return a.kind_ == b.kind_ && a.h_ == b.h_ && a.L_ == b.L_;
    }

private:
    InterpolantKind kind_ = InterpolantKind::FourierModes;
    double h_ = 0.5;
    double L_ = 2.0;
    int m_ = 0;
    int n_ = 0;
};

/// Coarse observations of u1.
///   FourierModes: (re, im) of each retained mode, FFT index order, x1 outer.
///   VolumeElements: m x n cell averages, x1 outer.
///   NodalValues: m x n node samples, x1 outer; node (i, j) sits at
///                (i L/m, -1 + 2 j/n).
struct ObservedSignal {
    InterpolantSpec spec;
    Grid grid;
    double time = 0.0;
    std::vector<double> data;
};

namespace detail {

/// Membership weights of each grid coordinate in the cells of one axis.
/// Points on a cell edge are shared half/half; otherwise weight 1.
inline std::vector<std::vector<std::pair<int, double>>> cell_weights(int npts, double spacing, double origin,
                                                                     int ncells, double cell) {
    std::vector<std::vector<std::pair<int, double>>> w(npts);
    for (int i = 0; i < npts; ++i) {
        const double s = (origin + i * spacing) / cell;
        const double r = std::round(s);
        if (std::abs(s - r) < 1e-9) {
            const int e = static_cast<int>(r);
            w[i] = {{((e - 1) % ncells + ncells) % ncells, 0.5}, {(e % ncells + ncells) % ncells, 0.5}};
        } else {
            const int e = static_cast<int>(std::floor(s));
            w[i] = {{(e % ncells + ncells) % ncells, 1.0}};
        }
    }
    return w;
}

struct CellMaps {
    std::vector<std::vector<std::pair<int, double>>> ax1, ax2;
};

inline CellMaps cell_maps(const InterpolantSpec& s, const Grid& g) {
    // x2 is measured from the bottom of the box (x2 = -1) so cell edges sit at
    // -1 + 2j/n, symmetric about x2 = 0 since n is even.
    return {cell_weights(g.nx(), g.dx1(), 0.0, s.m(), s.L() / s.m()),
            cell_weights(g.ny(), g.dx2(), 0.0, s.n(), 2.0 / s.n())};
}

inline std::vector<double> element_averages(const std::vector<double>& phys, const InterpolantSpec& s, const Grid& g) {
    const auto maps = cell_maps(s, g);
    const int m = s.m(), n = s.n();
    std::vector<double> partial(static_cast<std::size_t>(g.nx()) * n, 0.0), wpartial(partial.size(), 0.0);
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2)
            for (auto [e2, w2] : maps.ax2[i2]) {
                partial[static_cast<std::size_t>(i1) * n + e2] += w2 * phys[g.index(i1, i2)];
                wpartial[static_cast<std::size_t>(i1) * n + e2] += w2;
            }
    std::vector<double> avg(static_cast<std::size_t>(m) * n, 0.0), wsum(avg.size(), 0.0);
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (auto [e1, w1] : maps.ax1[i1])
            for (int e2 = 0; e2 < n; ++e2) {
                avg[static_cast<std::size_t>(e1) * n + e2] += w1 * partial[static_cast<std::size_t>(i1) * n + e2];
                wsum[static_cast<std::size_t>(e1) * n + e2] += w1 * wpartial[static_cast<std::size_t>(i1) * n + e2];
            }
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] /= wsum[i];
    return avg;
}

inline std::vector<double> piecewise_constant(const std::vector<double>& avg, const InterpolantSpec& s,
                                              const Grid& g) {
    const auto maps = cell_maps(s, g);
    std::vector<double> out(g.size(), 0.0);
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2) {
            double v = 0.0;
            for (auto [e1, w1] : maps.ax1[i1])
                for (auto [e2, w2] : maps.ax2[i2]) v += w1 * w2 * avg[static_cast<std::size_t>(e1) * s.n() + e2];
            out[g.index(i1, i2)] = v;
        }
    return out;
}

/// Grid indices nearest each node. The x2 half above the midline is the
/// mirror image of the lower half so ties cannot break the symmetry.
inline std::pair<std::vector<int>, std::vector<int>> node_indices(const InterpolantSpec& s, const Grid& g) {
    std::vector<int> i1s(s.m()), i2s(s.n());
    for (int i = 0; i < s.m(); ++i)
        i1s[i] = static_cast<int>(std::lround(i * (s.L() / s.m()) / g.dx1())) % g.nx();
    for (int j = 0; j <= s.n() / 2; ++j) i2s[j] = static_cast<int>(std::lround(j * (2.0 / s.n()) / g.dx2())) % g.ny();
    for (int j = s.n() / 2 + 1; j < s.n(); ++j) i2s[j] = g.mirror2(i2s[s.n() - j]);
    return {i1s, i2s};
}

inline std::vector<double> bilinear(const std::vector<double>& nodes, const InterpolantSpec& s, const Grid& g) {
    const int m = s.m(), n = s.n();
    const double c1 = s.L() / m, c2 = 2.0 / n;
    std::vector<double> out(g.size());
    for (int i1 = 0; i1 < g.nx(); ++i1) {
        const double a = g.x1(i1) / c1;
        const int j1 = static_cast<int>(std::floor(a));
        const double t = a - j1;
        const int j1a = ((j1 % m) + m) % m, j1b = (j1a + 1) % m;
        for (int i2 = 0; i2 < g.ny(); ++i2) {
            const double b = (g.x2(i2) + 1.0) / c2;
            const int j2 = static_cast<int>(std::floor(b));
            const double u = b - j2;
            const int j2a = ((j2 % n) + n) % n, j2b = (j2a + 1) % n;
            auto at = [&](int p, int q) { return nodes[static_cast<std::size_t>(p) * n + q]; };
            out[g.index(i1, i2)] = (1 - t) * (1 - u) * at(j1a, j2a) + t * (1 - u) * at(j1b, j2a) +
                                   (1 - t) * u * at(j1a, j2b) + t * u * at(j1b, j2b);
        }
    }
    return out;
}

}  // namespace detail

/// Coarse observation I_h(u1) of the horizontal velocity.
inline ObservedSignal observe(const ScalarField& u1, const InterpolantSpec& spec, double time = 0.0) {
    if (u1.parity() != Parity::EvenInX2) throw InvariantError("observe: u1 must be even in x2");
    const Grid& g = u1.grid();
    spec.check_grid(g);
    ObservedSignal obs{spec, g, time, {}};
    switch (spec.kind()) {
        case InterpolantKind::FourierModes:
            for (int i1 = 0; i1 < g.nx(); ++i1)
                for (int i2 = 0; i2 < g.ny(); ++i2)
                    if (spec.fourier_retains(g, i1, i2)) {
                        obs.data.push_back(u1(i1, i2).real());
                        obs.data.push_back(u1(i1, i2).imag());
                    }
            break;
        case InterpolantKind::VolumeElements:
            obs.data = detail::element_averages(to_physical(u1), spec, g);
            break;
        case InterpolantKind::NodalValues: {
            const auto phys = to_physical(u1);
            const auto [i1s, i2s] = detail::node_indices(spec, g);
            obs.data.resize(static_cast<std::size_t>(spec.m()) * spec.n());
            for (int i = 0; i < spec.m(); ++i)
                for (int j = 0; j < spec.n(); ++j)
                    obs.data[static_cast<std::size_t>(i) * spec.n() + j] = phys[g.index(i1s[i], i2s[j])];
            break;
        }
    }
    return obs;
}

/// Embed observations back on the fine grid as an even field.
inline ScalarField lift(const ObservedSignal& obs, const Grid& g) {
    require_same_grid(obs.grid, g, "lift");
    const InterpolantSpec& spec = obs.spec;
    switch (spec.kind()) {
        case InterpolantKind::FourierModes: {
            std::vector<cplx> c(g.size(), cplx(0.0, 0.0));
            std::size_t k = 0;
            for (int i1 = 0; i1 < g.nx(); ++i1)
                for (int i2 = 0; i2 < g.ny(); ++i2)
                    if (spec.fourier_retains(g, i1, i2)) {
                        if (k + 2 > obs.data.size()) throw ConfigError("lift: signal does not match grid");
                        c[g.index(i1, i2)] = cplx(obs.data[k], obs.data[k + 1]);
                        k += 2;
                    }
            if (k != obs.data.size()) throw ConfigError("lift: signal does not match grid");
            return ScalarField(g, Parity::EvenInX2, std::move(c));
        }
        case InterpolantKind::VolumeElements:
            return to_spectral(detail::piecewise_constant(obs.data, spec, g), Parity::EvenInX2, g);
        case InterpolantKind::NodalValues:
            return to_spectral(detail::bilinear(obs.data, spec, g), Parity::EvenInX2, g);
    }
    return ScalarField(g, Parity::EvenInX2);
}

/// Low-pass filter |k| <= 1/h (the Fourier-mode interpolant without the
/// round trip through ObservedSignal).
inline ScalarField fourier_lowpass(const ScalarField& f, const InterpolantSpec& spec) {
    const Grid& g = f.grid();
    std::vector<cplx> c(g.size(), cplx(0.0, 0.0));
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2)
            if (spec.fourier_retains(g, i1, i2)) c[g.index(i1, i2)] = f(i1, i2);
    return ScalarField::adopt(g, f.parity(), std::move(c));
}

/// I_h applied to a field: lift(observe(f)).
inline ScalarField interpolate(const ScalarField& f, const InterpolantSpec& spec) {
    if (spec.kind() == InterpolantKind::FourierModes) {
        spec.check_grid(f.grid());
        return fourier_lowpass(f, spec);
    }
    return lift(observe(f, spec), f.grid());
}

/// Smallest c with ||e|| <= c h ||phi||_H1 (type 1) or
/// ||e|| <= c h ||phi||_H1 + c^2 h^2 ||phi||_H2 (type 2).
inline double approximation_ratio(double err, double h, double h1, double h2, ApproximationType type) {
    if (err <= 0.0) return 0.0;
    const double a = h * h1;
    if (type == ApproximationType::Type1) return a > 0.0 ? err / a : INFINITY;
    const double b = h * h * h2;
    if (b <= 0.0) return a > 0.0 ? err / a : INFINITY;
    // b c^2 + a c - err = 0, positive root in a cancellation-free form.
    return 2.0 * err / (a + std::sqrt(a * a + 4.0 * b * err));
}

struct C0Estimate {
    double c0 = 0.0;              // max over all h
    std::vector<double> per_h;    // max over samples for each h
    std::vector<double> h_used;   // effective h for each entry
};

/// Empirical approximation constant. For each h, random even fields with
/// energy in a shell around |k| ~ 1/h (the scale at which the ratio peaks)
/// are drawn, mixed with broadband fields, and the largest ratio is kept.
inline C0Estimate estimate_c0(InterpolantKind kind, const Grid& g, int n_samples, const std::vector<double>& h_list,
                              std::uint64_t seed = 20240601) {
    if (n_samples < 20) throw ConfigError("estimate_c0: at least 20 samples are required");
    if (h_list.empty()) throw ConfigError("estimate_c0: empty h list");
    C0Estimate est;
    Rng rng(seed);
    std::uniform_real_distribution<double> octave(-1.0, 1.5);
    for (double h : h_list) {
        const InterpolantSpec spec(kind, h, g.L());
        const double heff = spec.effective_h();
        double best = 0.0;
        for (int s = 0; s < n_samples; ++s) {
            ScalarField f = (s % 5 == 4) ? random_scalar(g, Parity::EvenInX2, rng, {.decay = 1.5})
                                         : random_band_scalar(g, Parity::EvenInX2, rng,
                                                              std::pow(2.0, octave(rng)) / heff, 0.15);
            const ScalarField e = f - interpolate(f, spec);
            const double r = approximation_ratio(norm(e, NormKind::L2), heff, std::sqrt(h1_sq(f)),
                                                 std::sqrt(h2_sq(f)), spec.approximation_type());
            best = std::max(best, r);
        }
        est.per_h.push_back(best);
        est.h_used.push_back(heff);
        est.c0 = std::max(est.c0, best);
    }
    return est;
}

}  // namespace bsyn
