#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bsyn/field.hpp"
#include "bsyn/interpolants.hpp"

namespace bsyn {

struct PhysParams {
    double nu = 0.02;     // kinematic viscosity
    double kappa = 0.02;  // thermal diffusivity

    void validate() const {
        if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be positive");
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive");
    }
};

/// Time derivative of a FlowState.
struct Tendency {
    VelocityField dvel;
    ScalarField dtemp;  // odd
};

/// Switches for the explicit couplings; all on for the physical model.
struct TermSwitches {
    bool advection = true;
    bool buoyancy = true;
    bool source = true;  // the +u2 term from the linear background profile
};

// ---------------------------------------------------------------------------
// Spectral kernels on raw coefficient arrays

namespace detail {

/// In-place Leray projection f <- f - k (k.f)/|k|^2.
inline void leray_inplace(const Grid& g, std::span<cplx> f1, std::span<cplx> f2) {
    for (int i1 = 0; i1 < g.nx(); ++i1) {
        const double a = g.k1(i1);
        for (int i2 = 0; i2 < g.ny(); ++i2) {
            const double b = g.k2(i2);
            const double kk = a * a + b * b;
            const std::size_t i = g.index(i1, i2);
            if (kk == 0.0) continue;
            const cplx kf = (a * f1[i] + b * f2[i]) / kk;
            f1[i] -= a * kf;
            f2[i] -= b * kf;
        }
    }
}

/// Scratch space and transforms for the quadratic terms on one grid.
class ConvectionWorkspace {
public:
    explicit ConvectionWorkspace(const Grid& g)
        : g_(g), fft_(g.nx(), g.ny()), n_(g.size()), phys_(5, std::vector<double>(n_)) {}

    const Grid& grid() const { return g_; }
    double last_max_speed() const { return max_speed_; }

    /// (a.grad) b1, (a.grad) b2 and, if s is given, (a.grad) s. Inputs must
    /// already be confined to the retained band; outputs are masked to it.
    /// Outputs are exactly Hermitian and carry the parities (even, odd, odd)
    /// up to roundoff; callers re-project.
    void convect(std::span<const cplx> a1, std::span<const cplx> a2, std::span<const cplx> b1,
                 std::span<const cplx> b2, std::span<const cplx> s, std::span<cplx> out1, std::span<cplx> out2,
                 std::span<cplx> out_s) {
        const Grid& g = g_;
        const int ny = g.ny();
        auto& pa1 = phys_[0];
        auto& pa2 = phys_[1];
        auto& n1 = phys_[2];
        auto& n2 = phys_[3];
        auto& ns = phys_[4];

        double vmax = 0.0;
        fft_.inverse_pair_with([&](std::size_t i) { return std::pair{a1[i], a2[i]}; },
                               [&](std::size_t i, double x, double y) {
                                   pa1[i] = x;
                                   pa2[i] = y;
                                   vmax = std::max(vmax, x * x + y * y);
                               });
        max_speed_ = std::sqrt(vmax);

        // a.grad f with grad f synthesized directly into the transform input
        auto advect_into = [&](std::span<const cplx> f, std::vector<double>& out) {
            fft_.inverse_pair_with(
                [&](std::size_t i) {
                    const cplx ik = cplx(-f[i].imag(), f[i].real());
                    return std::pair{g.k1(static_cast<int>(i / ny)) * ik, g.k2(static_cast<int>(i % ny)) * ik};
                },
                [&](std::size_t i, double gx, double gy) { out[i] = pa1[i] * gx + pa2[i] * gy; });
        };
        advect_into(b1, n1);
        advect_into(b2, n2);
        auto masked = [&](std::size_t i, const cplx& v) { return g.retained(i) ? v : cplx(0.0, 0.0); };
        if (!s.empty()) {
            advect_into(s, ns);
            fft_.forward(ns, out_s);
            for (std::size_t i = 0; i < n_; ++i) out_s[i] = masked(i, out_s[i]);
        }
        fft_.forward_pair_with([&](std::size_t i) { return std::pair{n1[i], n2[i]}; },
                               [&](std::size_t i, const cplx& x, const cplx& y) {
                                   out1[i] = masked(i, x);
                                   out2[i] = masked(i, y);
                               });
    }

    Fft2d& fft() { return fft_; }

private:
    Grid g_;
    Fft2d fft_;
    std::size_t n_;
    std::vector<std::vector<double>> phys_;
    double max_speed_ = 0.0;
};

/// Explicit part of the Boussinesq tendency:
///   vel:  P( -(u.grad)u + theta e2 )
///   temp: -(u.grad)theta + u2
inline Tendency explicit_tendency(ConvectionWorkspace& ws, const FlowState& st, TermSwitches sw) {
    const Grid& g = st.grid();
    const std::size_t n = g.size();
    std::vector<cplx> f1(n), f2(n), ft(n);
    if (sw.advection) {
        ws.convect(st.vel.u1().coeffs(), st.vel.u2().coeffs(), st.vel.u1().coeffs(), st.vel.u2().coeffs(),
                   st.temp.coeffs(), f1, f2, ft);
    } else {
        std::fill(f1.begin(), f1.end(), cplx(0.0, 0.0));
        std::fill(f2.begin(), f2.end(), cplx(0.0, 0.0));
        std::fill(ft.begin(), ft.end(), cplx(0.0, 0.0));
    }
    const auto th = st.temp.coeffs();
    const auto u2 = st.vel.u2().coeffs();
    const double buoy = sw.buoyancy ? 1.0 : 0.0;
    const double src = sw.source ? 1.0 : 0.0;
    for (int i1 = 0; i1 < g.nx(); ++i1) {
        const double a = g.k1(i1);
        for (int i2 = 0; i2 < g.ny(); ++i2) {
            const std::size_t i = g.index(i1, i2);
            if (!g.retained(i)) continue;
            // Leray projection of (-N1, -N2 + theta)
            const double b = g.k2(i2);
            const cplx x1 = -f1[i];
            const cplx x2 = -f2[i] + buoy * th[i];
            const double kk = a * a + b * b;
            if (kk > 0.0) {
                const cplx kf = (a * x1 + b * x2) / kk;
                f1[i] = x1 - a * kf;
                f2[i] = x2 - b * kf;
            } else {
                f1[i] = x1;
                f2[i] = x2;
            }
            ft[i] = -ft[i] + src * u2[i];
        }
    }
    return Tendency{VelocityField::adopt(ScalarField::adopt(g, Parity::EvenInX2, std::move(f1)),
                                         ScalarField::adopt(g, Parity::OddInX2, std::move(f2))),
                    ScalarField::adopt(g, Parity::OddInX2, std::move(ft))};
}

/// -mu P( (I_h v1 - I_h u1) e1 ), dealiased.
inline VelocityField nudging_term(const ScalarField& v1, const ObservedSignal& obs, double mu) {
    const Grid& g = v1.grid();
    require_same_grid(obs.grid, g, "nudging");
    std::vector<cplx> f1(g.size(), cplx(0.0, 0.0)), f2(g.size(), cplx(0.0, 0.0));
    if (mu != 0.0) {
        const ScalarField diff = interpolate(v1, obs.spec) - lift(obs, g);
        const auto d = diff.coeffs();
        for (std::size_t i = 0; i < g.size(); ++i) f1[i] = -mu * d[i];
        apply_dealias(g, f1);
        leray_inplace(g, f1, f2);
    }
    return VelocityField::adopt(ScalarField::adopt(g, Parity::EvenInX2, std::move(f1)),
                                ScalarField::adopt(g, Parity::OddInX2, std::move(f2)));
}

inline void add_diffusion(Tendency& t, const FlowState& st, const PhysParams& p) {
    t.dvel += p.nu * VelocityField::adopt(laplacian(st.vel.u1()), laplacian(st.vel.u2()));
    t.dtemp += p.kappa * laplacian(st.temp);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operators

/// Helmholtz-Leray projection of an (even, odd) vector field.
inline VelocityField leray_project(const VectorField& f) {
    if (f.c1.parity() != Parity::EvenInX2 || f.c2.parity() != Parity::OddInX2)
        throw InvariantError("leray_project: components must be (even, odd) in x2");
    const Grid& g = f.c1.grid();
    std::vector<cplx> a(f.c1.coeffs().begin(), f.c1.coeffs().end());
    std::vector<cplx> b(f.c2.coeffs().begin(), f.c2.coeffs().end());
    detail::leray_inplace(g, a, b);
    return VelocityField::adopt(ScalarField::adopt(g, Parity::EvenInX2, std::move(a)),
                                ScalarField::adopt(g, Parity::OddInX2, std::move(b)));
}

/// (a.grad) b, dealiased.
inline VectorField advect_velocity(const VelocityField& a, const VelocityField& b) {
    const Grid& g = a.grid();
    require_same_grid(g, b.grid(), "advect_velocity");
    detail::ConvectionWorkspace ws(g);
    const ScalarField a1 = dealiased(a.u1()), a2 = dealiased(a.u2()), b1 = dealiased(b.u1()), b2 = dealiased(b.u2());
    std::vector<cplx> o1(g.size()), o2(g.size());
    ws.convect(a1.coeffs(), a2.coeffs(), b1.coeffs(), b2.coeffs(), {}, o1, o2, {});
    return VectorField{ScalarField(g, Parity::EvenInX2, std::move(o1)), ScalarField(g, Parity::OddInX2, std::move(o2))};
}

/// (a.grad) s for an odd scalar, dealiased.
inline ScalarField advect_scalar(const VelocityField& a, const ScalarField& s) {
    if (s.parity() != Parity::OddInX2) throw InvariantError("advect_scalar: scalar must be odd in x2");
    const Grid& g = a.grid();
    require_same_grid(g, s.grid(), "advect_scalar");
    detail::ConvectionWorkspace ws(g);
    const ScalarField a1 = dealiased(a.u1()), a2 = dealiased(a.u2()), sd = dealiased(s);
    std::vector<cplx> o1(g.size()), o2(g.size()), os(g.size());
    ws.convect(a1.coeffs(), a2.coeffs(), a1.coeffs(), a2.coeffs(), sd.coeffs(), o1, o2, os);
    return ScalarField(g, Parity::OddInX2, std::move(os));
}

/// du/dt = P(-(u.grad)u + theta e2) + nu Lap u,
/// dtheta/dt = kappa Lap theta - (u.grad)theta + u2.
inline Tendency reference_rhs(const FlowState& st, const PhysParams& p, TermSwitches sw = {}) {
    detail::ConvectionWorkspace ws(st.grid());
    const FlowState band{VelocityField::adopt(dealiased(st.vel.u1()), dealiased(st.vel.u2())), dealiased(st.temp),
                         st.time};
    Tendency t = detail::explicit_tendency(ws, band, sw);
    t.dvel.reproject();
    t.dtemp.reproject();
    detail::add_diffusion(t, st, p);
    return t;
}

/// Reference tendency plus the velocity feedback -mu P((I_h v1 - I_h u1) e1).
/// The temperature tendency receives no feedback.
inline Tendency assimilated_rhs(const FlowState& st, const ObservedSignal& obs, double mu, const PhysParams& p) {
    if (!(mu >= 0.0)) throw ConfigError("assimilated_rhs: mu must be nonnegative");
    require_same_grid(obs.grid, st.grid(), "assimilated_rhs");
    obs.spec.check_grid(st.grid());
    Tendency t = reference_rhs(st, p);
    if (mu > 0.0) t.dvel += detail::nudging_term(st.vel.u1(), obs, mu);
    return t;
}

}  // namespace bsyn
