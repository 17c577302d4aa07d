#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsyn/dynamics.hpp"

namespace bsyn {

enum class Scheme { ImexEuler, CNAB2 };

inline const char* to_string(Scheme s) { return s == Scheme::CNAB2 ? "CNAB2" : "ImexEuler"; }
inline Scheme scheme_from_string(const std::string& s) {
    if (s == "CNAB2") return Scheme::CNAB2;
    if (s == "ImexEuler") return Scheme::ImexEuler;
    throw ConfigError("unknown scheme '" + s + "'");
}

struct StepperConfig {
    double dt = 5e-4;
    Scheme scheme = Scheme::CNAB2;
    double cfl_safety = 0.5;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
        if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("cfl_safety must lie in (0, 1]");
    }

    /// Explicit nudging is stable only for mu dt below the safety factor.
    void check_nudging(double mu) const {
        if (mu * dt > cfl_safety)
            throw ConfigError("mu * dt = " + std::to_string(mu * dt) + " exceeds cfl_safety = " +
                              std::to_string(cfl_safety) + " (explicit nudging guard)");
    }

    double max_stable_mu() const { return cfl_safety / dt; }
};

namespace detail {

/// Implicit diffusion + explicit everything else for one state. Diffusion
/// uses per-mode Crank-Nicolson factors; the explicit part is Adams-Bashforth 2
/// once a previous tendency exists and forward Euler before that. ImexEuler
/// uses backward Euler for diffusion and never keeps history.
class ImexAdvance {
public:
    ImexAdvance(const Grid& g, const PhysParams& p, const StepperConfig& cfg)
        : g_(g), cfg_(cfg), vel_factors_(factors(g, p.nu, cfg)), temp_factors_(factors(g, p.kappa, cfg)) {}

    void reset() { prev_.reset(); }

    FlowState advance(const FlowState& st, Tendency explicit_now) {
        const bool ab2 = cfg_.scheme == Scheme::CNAB2 && prev_.has_value();
        auto v1 = step_component(st.vel.u1().coeffs(), explicit_now.dvel.u1().coeffs(),
                                 ab2 ? prev_->dvel.u1().coeffs() : std::span<const cplx>{}, vel_factors_);
        auto v2 = step_component(st.vel.u2().coeffs(), explicit_now.dvel.u2().coeffs(),
                                 ab2 ? prev_->dvel.u2().coeffs() : std::span<const cplx>{}, vel_factors_);
        auto th = step_component(st.temp.coeffs(), explicit_now.dtemp.coeffs(),
                                 ab2 ? prev_->dtemp.coeffs() : std::span<const cplx>{}, temp_factors_);
        if (cfg_.scheme == Scheme::CNAB2) prev_ = std::move(explicit_now);

        return FlowState{VelocityField::adopt(ScalarField::adopt(g_, Parity::EvenInX2, std::move(v1)),
                                              ScalarField::adopt(g_, Parity::OddInX2, std::move(v2))),
                         ScalarField::adopt(g_, Parity::OddInX2, std::move(th)), st.time + cfg_.dt};
    }

private:
    /// Per-mode update c' = keep * c + push * explicit, zero outside the band.
    struct Factors {
        std::vector<double> keep, push;
    };

    static Factors factors(const Grid& g, double diffusivity, const StepperConfig& cfg) {
        Factors f{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
        const double dt = cfg.dt;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g.retained(i)) continue;
            const double a = diffusivity * g.ksq(i) * dt;
            if (cfg.scheme == Scheme::CNAB2) {
                f.keep[i] = (1.0 - 0.5 * a) / (1.0 + 0.5 * a);
                f.push[i] = dt / (1.0 + 0.5 * a);
            } else {
                f.keep[i] = 1.0 / (1.0 + a);
                f.push[i] = dt / (1.0 + a);
            }
        }
        return f;
    }

    static std::vector<cplx> step_component(std::span<const cplx> c, std::span<const cplx> e,
                                            std::span<const cplx> eprev, const Factors& f) {
        const std::size_t n = c.size();
        std::vector<cplx> out(n);
        const double* keep = f.keep.data();
        const double* push = f.push.data();
        if (eprev.empty()) {
            for (std::size_t i = 0; i < n; ++i) out[i] = keep[i] * c[i] + push[i] * e[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) out[i] = keep[i] * c[i] + push[i] * (1.5 * e[i] - 0.5 * eprev[i]);
        }
        return out;
    }

    Grid g_;
    StepperConfig cfg_;
    Factors vel_factors_;
    Factors temp_factors_;
    std::optional<Tendency> prev_;
};

inline FlowState band_limited(const FlowState& st) {
    return FlowState{VelocityField::adopt(dealiased(st.vel.u1()), dealiased(st.vel.u2())), dealiased(st.temp),
                     st.time};
}

/// Re-project onto the symmetry classes, check for blow-up, and report the
/// largest relative defect found before re-projection.
inline double reenforce(FlowState& st, long step) {
    const auto v = st.vel.reproject();
    const auto t = st.temp.reproject();
    const double total = v.sum_sq + t.sum_sq;
    if (!std::isfinite(total) || total > 1e200)
        throw BlowupError("numerical blow-up: non-finite or runaway coefficients", step, st.time);
    return std::max(v.relative_defect(), t.relative_defect());
}

}  // namespace detail

/// Advances the reference system.
class ReferenceStepper {
public:
    ReferenceStepper(const Grid& g, const PhysParams& p, const StepperConfig& cfg, TermSwitches sw = {})
        : g_(g), cfg_(cfg), sw_(sw), ws_(g), core_(g, p, cfg) {
        p.validate();
        cfg.validate();
    }

    FlowState step(const FlowState& st) {
        require_same_grid(g_, st.grid(), "ReferenceStepper");
        if (steps_ == 0) return step_banded(detail::band_limited(st));
        return step_banded(st);
    }

    /// Restart the multistep history (the next step is a startup step).
    void reset() { core_.reset(); }

    long steps_taken() const { return steps_; }
    double last_symmetry_drift() const { return drift_; }
    double last_max_speed() const { return ws_.last_max_speed(); }
    const StepperConfig& config() const { return cfg_; }

private:
    FlowState step_banded(const FlowState& st) {
        Tendency e = detail::explicit_tendency(ws_, st, sw_);
        check_cfl(st);
        FlowState next = core_.advance(st, std::move(e));
        finish(next);
        return next;
    }

    void check_cfl(const FlowState& st) const {
        const double v = ws_.last_max_speed();
        const double dxmin = std::min(g_.dx1(), g_.dx2());
        if (v > 0.0 && cfg_.dt > cfg_.cfl_safety * dxmin / v)
            throw BlowupError("CFL guard violated: max|u| = " + std::to_string(v), steps_, st.time);
    }
    void finish(FlowState& next) {
        ++steps_;
        drift_ = detail::reenforce(next, steps_);
    }

    Grid g_;
    StepperConfig cfg_;
    TermSwitches sw_;
    detail::ConvectionWorkspace ws_;
    detail::ImexAdvance core_;
    long steps_ = 0;
    double drift_ = 0.0;
};

/// Advances a reference state and its nudged twin with the same scheme. The
/// twin's velocity is relaxed toward I_h of the reference horizontal
/// velocity observed at the start of each step.
class TwinStepper {
public:
    TwinStepper(const Grid& g, const InterpolantSpec& spec, double mu, const PhysParams& p, const StepperConfig& cfg)
        : g_(g), spec_(spec), mu_(mu), cfg_(cfg), ws_(g), ref_core_(g, p, cfg), assim_core_(g, p, cfg) {
        p.validate();
        cfg.validate();
        if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be nonnegative");
        cfg.check_nudging(mu);
        spec.check_grid(g);
    }

    std::pair<FlowState, FlowState> step(const FlowState& ref, const FlowState& assim) {
        require_same_grid(g_, ref.grid(), "TwinStepper");
        require_same_grid(g_, assim.grid(), "TwinStepper");
        if (steps_ == 0) return step_banded(detail::band_limited(ref), detail::band_limited(assim));
        return step_banded(ref, assim);
    }

    void reset() {
        ref_core_.reset();
        assim_core_.reset();
    }

    double mu() const { return mu_; }
    const InterpolantSpec& spec() const { return spec_; }
    long steps_taken() const { return steps_; }
    double last_symmetry_drift() const { return drift_; }

private:
    std::pair<FlowState, FlowState> step_banded(const FlowState& ref, const FlowState& assim) {
        Tendency eref = detail::explicit_tendency(ws_, ref, {});
        double vmax = ws_.last_max_speed();
        Tendency eas = detail::explicit_tendency(ws_, assim, {});
        vmax = std::max(vmax, ws_.last_max_speed());
        if (mu_ > 0.0) {
            const ObservedSignal obs = observe(ref.vel.u1(), spec_, ref.time);
            eas.dvel += detail::nudging_term(assim.vel.u1(), obs, mu_);
        }
        const double dxmin = std::min(g_.dx1(), g_.dx2());
        if (vmax > 0.0 && cfg_.dt > cfg_.cfl_safety * dxmin / vmax)
            throw BlowupError("CFL guard violated: max|u| = " + std::to_string(vmax), steps_, ref.time);
        FlowState r = ref_core_.advance(ref, std::move(eref));
        FlowState a = assim_core_.advance(assim, std::move(eas));
        ++steps_;
        drift_ = std::max(detail::reenforce(r, steps_), detail::reenforce(a, steps_));
        return {std::move(r), std::move(a)};
    }

    Grid g_;
    InterpolantSpec spec_;
    double mu_;
    StepperConfig cfg_;
    detail::ConvectionWorkspace ws_;
    detail::ImexAdvance ref_core_;
    detail::ImexAdvance assim_core_;
    long steps_ = 0;
    double drift_ = 0.0;
};

}  // namespace bsyn
