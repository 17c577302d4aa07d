#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bsyn/dynamics.hpp"
#include "bsyn/integrator.hpp"
#include "bsyn/interpolants.hpp"
#include "bsyn/random_fields.hpp"

namespace bsyn {

struct CheckOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace verify {

inline std::string fmt(double v) {
    std::ostringstream o;
    o.precision(3);
    o << std::scientific << v;
    return o.str();
}

inline Grid default_check_grid() { return Grid(2.8284271247461903, 32, 32); }

/// to_spectral(to_physical(f)) == f.
inline CheckOutcome transform_roundtrip(const Grid& g, Rng& rng, int n = 10) {
    double worst = 0.0;
    for (int s = 0; s < n; ++s)
        for (Parity p : {Parity::EvenInX2, Parity::OddInX2}) {
            const ScalarField f = random_scalar(g, p, rng);
            const ScalarField back = to_spectral(to_physical(f), p, g);
            worst = std::max(worst, norm(back - f, NormKind::L2) / norm(f, NormKind::L2));
        }
    return {"transform_roundtrip", worst <= 1e-13, "max relative error " + fmt(worst)};
}

/// Spectral L2 norm equals the physical-space quadrature.
inline CheckOutcome parseval(const Grid& g, Rng& rng, int n = 10) {
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
        const ScalarField f = random_scalar(g, Parity::OddInX2, rng);
        double q = 0.0;
        for (double v : to_physical(f)) q += v * v;
        q *= g.dx1() * g.dx2();
        worst = std::max(worst, std::abs(q - norm_sq(f, NormKind::L2)) / q);
    }
    return {"parseval", worst <= 1e-12, "max relative mismatch " + fmt(worst)};
}

/// Data of the wrong symmetry class is rejected.
inline CheckOutcome parity_rejection(const Grid& g, Rng& rng) {
    const ScalarField even = random_scalar(g, Parity::EvenInX2, rng);
    try {
        (void)to_spectral(to_physical(even), Parity::OddInX2, g);
    } catch (const ParityError&) {
        return {"parity_rejection", true, "even data rejected as odd"};
    }
    return {"parity_rejection", false, "even data accepted as odd"};
}

/// ||phi||^2 <= ||grad phi||^2 / lambda1 on the odd class.
inline CheckOutcome poincare(const Grid& g, Rng& rng, int n = 50) {
    const double l1 = g.lambda1();
    double worst = -INFINITY;
    for (int s = 0; s < n; ++s) {
        const ScalarField f = random_scalar(g, Parity::OddInX2, rng, {.decay = 0.5});
        worst = std::max(worst, norm_sq(f, NormKind::L2) * l1 / norm_sq(f, NormKind::H1Semi));
    }
    return {"poincare", worst <= 1.0 + 1e-12, "max ||phi||^2 lambda1 / ||grad phi||^2 = " + fmt(worst)};
}

/// sum_jk ||d_j d_k phi||^2 == ||Lap phi||^2 for periodic fields.
inline CheckOutcome second_derivative_identity(const Grid& g, Rng& rng, int n = 10) {
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
        const ScalarField f = random_scalar(g, Parity::EvenInX2, rng);
        const ScalarField f1 = derivative(f, Axis::X1), f2 = derivative(f, Axis::X2);
        const double hess = norm_sq(derivative(f1, Axis::X1), NormKind::L2) +
                            2.0 * norm_sq(derivative(f1, Axis::X2), NormKind::L2) +
                            norm_sq(derivative(f2, Axis::X2), NormKind::L2);
        const double lap = laplacian_sq(f);
        worst = std::max(worst, std::abs(hess - lap) / lap);
    }
    return {"second_derivative_identity", worst <= 1e-12, "max relative gap " + fmt(worst)};
}

/// ||grad u1||^2 - ||u2||^2 >= 0 for streamfunction-generated fields.
inline CheckOutcome div_lemma(const Grid& g, Rng& rng, int n = 100) {
    double worst = INFINITY;
    for (int s = 0; s < n; ++s) {
        const VelocityField u = random_solenoidal(g, rng, {.decay = 1.0 + 0.05 * (s % 40)});
        const double scale = norm_sq(u.u1(), NormKind::H1Semi) + norm_sq(u.u2(), NormKind::L2);
        worst = std::min(worst, div_lemma_gap(u) / scale);
    }
    return {"div_lemma", worst >= -1e-10, "min relative gap " + fmt(worst)};
}

struct TrilinearReport {
    double b_uuu = 0.0;    // max |(B(u,u),u)| / (||B(u,u)|| ||u||)
    double b_utt = 0.0;    // max |(B(u,theta),theta)| / (||B(u,theta)|| ||theta||)
    double b_uuAu = 0.0;   // max |(B(u,u),A u)| / (||B(u,u)|| ||A u||)
};

inline TrilinearReport trilinear_identities(const Grid& g, Rng& rng, int n = 20) {
    TrilinearReport r;
    for (int s = 0; s < n; ++s) {
        const VelocityField u = random_solenoidal(g, rng);
        const ScalarField th = random_scalar(g, Parity::OddInX2, rng);
        const VectorField b = advect_velocity(u, u);
        const double bn = std::sqrt(norm_sq(b.c1, NormKind::L2) + norm_sq(b.c2, NormKind::L2));
        r.b_uuu = std::max(r.b_uuu, std::abs(inner(b, u)) / (bn * norm(u, NormKind::L2)));
        const ScalarField bt = advect_scalar(u, th);
        r.b_utt = std::max(r.b_utt, std::abs(inner(bt, th)) / (norm(bt, NormKind::L2) * norm(th, NormKind::L2)));
        const VelocityField au = VelocityField::adopt(-laplacian(u.u1()), -laplacian(u.u2()));
        r.b_uuAu = std::max(r.b_uuAu, std::abs(inner(b, au)) / (bn * std::sqrt(laplacian_sq(u))));
    }
    return r;
}

inline std::vector<CheckOutcome> trilinear_checks(const Grid& g, Rng& rng, int n = 20, double tol = 1e-9) {
    const TrilinearReport r = trilinear_identities(g, rng, n);
    return {{"trilinear_B_u_u_u", r.b_uuu <= tol, "max relative " + fmt(r.b_uuu)},
            {"trilinear_B_u_theta_theta", r.b_utt <= tol, "max relative " + fmt(r.b_utt)},
            {"enstrophy_B_u_u_Au", r.b_uuAu <= tol, "max relative " + fmt(r.b_uuAu)}};
}

/// The Leray projector is idempotent and returns solenoidal fields.
inline CheckOutcome leray(const Grid& g, Rng& rng, int n = 10) {
    double idem = 0.0, div = 0.0;
    for (int s = 0; s < n; ++s) {
        const VectorField f{random_scalar(g, Parity::EvenInX2, rng), random_scalar(g, Parity::OddInX2, rng)};
        const VelocityField p = leray_project(f);
        const VelocityField pp = leray_project(VectorField{p.u1(), p.u2()});
        idem = std::max(idem, norm(pp - p, NormKind::L2) / norm(p, NormKind::L2));
        div = std::max(div, p.max_divergence() / p.component_scale());
    }
    return {"leray_projection", idem <= 1e-14 && div <= 1e-14,
            "idempotency " + fmt(idem) + ", divergence " + fmt(div)};
}

/// (u, du/dt) == -nu ||grad u||^2 + (theta, u2).
inline CheckOutcome energy_law(const Grid& g, Rng& rng, int n = 5) {
    const PhysParams p{};
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
        const FlowState st = random_state(g, rng);
        const Tendency t = reference_rhs(st, p);
        const double lhs = inner(st.vel, t.dvel);
        const double diss = p.nu * norm_sq(st.vel, NormKind::H1Semi);
        const double buoy = inner(st.temp, st.vel.u2());
        worst = std::max(worst, std::abs(lhs - (buoy - diss)) / (diss + std::abs(buoy)));
    }
    return {"energy_law", worst <= 1e-10, "max relative mismatch " + fmt(worst)};
}

inline CheckOutcome fourier_interpolant_idempotent(const Grid& g, Rng& rng) {
    const InterpolantSpec spec(InterpolantKind::FourierModes, 0.25, g.L());
    const ScalarField f = random_scalar(g, Parity::EvenInX2, rng);
    const ScalarField once = interpolate(f, spec);
    const ScalarField twice = interpolate(once, spec);
    const double e = norm(twice - once, NormKind::L2) / norm(once, NormKind::L2);
    return {"fourier_interpolant_idempotent", e <= 1e-15, "relative change " + fmt(e)};
}

inline CheckOutcome interpolant_c0(const Grid& g, InterpolantKind kind, std::uint64_t seed) {
    const C0Estimate est = estimate_c0(kind, g, 20, {0.5, 0.25}, seed);
    const bool ok = std::isfinite(est.c0) && est.c0 > 0.0 &&
                    (kind != InterpolantKind::FourierModes || est.c0 <= 1.0 + 1e-12);
    return {std::string("interpolant_c0_") + to_string(kind), ok, "c0 = " + fmt(est.c0)};
}

/// The conduction state (zero perturbation) is a fixed point.
inline CheckOutcome zero_state_fixed(const Grid& g, int steps = 100) {
    ReferenceStepper st(g, PhysParams{}, StepperConfig{});
    FlowState s = FlowState::zero(g);
    for (int i = 0; i < steps; ++i) s = st.step(s);
    const double m = std::sqrt(norm_sq(s.vel, NormKind::L2) + norm_sq(s.temp, NormKind::L2));
    return {"zero_state_fixed", m <= 1e-14, "norm after " + std::to_string(steps) + " steps " + fmt(m)};
}

/// With couplings off, a single mode decays by the Crank-Nicolson factor
/// per step, which matches exp(-nu |k|^2 dt) to second order.
inline CheckOutcome diffusion_single_mode(const Grid& g) {
    const PhysParams p{};
    StepperConfig cfg{};
    ReferenceStepper st(g, p, cfg, TermSwitches{false, false, false});
    std::vector<double> a(g.size());
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2)
            a[g.index(i1, i2)] = std::sin(M_PI * g.x2(i2)) * std::cos(2.0 * M_PI * g.x1(i1) / g.L());
    FlowState s{VelocityField(g), to_spectral(a, Parity::OddInX2, g), 0.0};
    const double n0 = norm(s.temp, NormKind::L2);
    const int steps = 100;
    for (int i = 0; i < steps; ++i) s = st.step(s);
    const double ksq = std::pow(2.0 * M_PI / g.L(), 2) + M_PI * M_PI;
    const double expected = std::exp(-p.kappa * ksq * cfg.dt * steps);
    const double rel = std::abs(norm(s.temp, NormKind::L2) / n0 - expected) / expected;
    return {"diffusion_single_mode", rel <= 1e-10, "relative deviation " + fmt(rel)};
}

/// Full invariant suite on a small grid.
inline std::vector<CheckOutcome> run_all(std::uint64_t seed = 7) {
    const Grid g = default_check_grid();
    Rng rng(seed);
    std::vector<CheckOutcome> out;
    out.push_back(transform_roundtrip(g, rng));
    out.push_back(parseval(g, rng));
    out.push_back(parity_rejection(g, rng));
    out.push_back(poincare(g, rng));
    out.push_back(second_derivative_identity(g, rng));
    out.push_back(div_lemma(g, rng));
    for (auto& c : trilinear_checks(g, rng)) out.push_back(std::move(c));
    out.push_back(leray(g, rng));
    out.push_back(energy_law(g, rng));
    out.push_back(fourier_interpolant_idempotent(g, rng));
    for (auto k : {InterpolantKind::FourierModes, InterpolantKind::VolumeElements, InterpolantKind::NodalValues})
        out.push_back(interpolant_c0(g, k, seed));
    out.push_back(zero_state_fixed(g));
    out.push_back(diffusion_single_mode(g));
    return out;
}

}  // namespace verify
}  // namespace bsyn
