#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bsyn/dynamics.hpp"
#include "bsyn/integrator.hpp"
#include "bsyn/interpolants.hpp"
#include "bsyn/random_fields.hpp"

namespace bsyn {

/// How the assimilated twin starts.
enum class AssimInit { Zero, Match, Perturbed };

inline const char* to_string(AssimInit a) {
    switch (a) {
        case AssimInit::Zero: return "zero";
        case AssimInit::Match: return "match";
        case AssimInit::Perturbed: return "perturbed";
    }
    return "?";
}

inline AssimInit assim_init_from_string(const std::string& s) {
    if (s == "zero") return AssimInit::Zero;
    if (s == "match") return AssimInit::Match;
    if (s == "perturbed") return AssimInit::Perturbed;
    throw ConfigError("unknown assimilated initial condition '" + s + "' (zero, match, perturbed)");
}

inline constexpr double default_box_length() { return 2.8284271247461903; }  // 2 sqrt(2)

struct DAConfig {
    PhysParams phys{};
    Grid grid{default_box_length(), 128, 128};
    InterpolantSpec spec{InterpolantKind::FourierModes, 0.05, default_box_length()};
    double mu = 100.0;
    StepperConfig stepper{};
    double spinup_T = 100.0;
    double run_T = 50.0;
    std::uint64_t seed = 1;
    double init_amplitude = 0.1;      // spin-up temperature perturbation
    double sample_interval = 0.1;     // SyncRecord cadence
    double checkpoint_interval = 0.0;  // 0 disables checkpoints
    AssimInit assim_init = AssimInit::Zero;
    double perturb_amplitude = 1e-3;  // for AssimInit::Perturbed

    void validate() const {
        phys.validate();
        stepper.validate();
        if (!(spinup_T > 0.0) || !std::isfinite(spinup_T)) throw ConfigError("spinup_T must be positive");
        if (!(run_T > 0.0) || !std::isfinite(run_T)) throw ConfigError("run_T must be positive");
        if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be nonnegative");
        if (!(init_amplitude >= 0.0) || !std::isfinite(init_amplitude))
            throw ConfigError("init_amplitude must be nonnegative");
        if (!(sample_interval > 0.0) || !std::isfinite(sample_interval))
            throw ConfigError("sample_interval must be positive");
        if (!(checkpoint_interval >= 0.0) || !std::isfinite(checkpoint_interval))
            throw ConfigError("checkpoint_interval must be nonnegative");
        if (!(perturb_amplitude >= 0.0) || !std::isfinite(perturb_amplitude))
            throw ConfigError("perturb_amplitude must be nonnegative");
        if (std::abs(spec.L() - grid.L()) > 1e-12 * grid.L())
            throw ConfigError("interpolant box length differs from grid box length");
        spec.check_grid(grid);
        stepper.check_nudging(mu);
    }
};

/// Number of steps of size dt covering a duration (at least one).
inline long steps_for(double duration, double dt) {
    return std::max(1L, static_cast<long>(std::llround(duration / dt)));
}

// ---------------------------------------------------------------------------
// Synchronization records

struct SyncSample {
    double time = 0.0;        // since the start of the twin run
    double w_L2 = 0.0;        // ||u - v||
    double grad_w_L2 = 0.0;   // ||grad(u - v)||
    double w_V0 = 0.0;        // (||w||^2 + ||grad w||^2)^(1/2)
    double xi_L2 = 0.0;       // ||theta - eta||
    double grad_xi_L2 = 0.0;  // ||grad(theta - eta)||
    double u_V0 = 0.0;        // reference velocity
    double theta_V1 = 0.0;    // ||grad theta|| of the reference
    double alpha_monitor = 0.0;
};

struct SyncRecord {
    std::vector<SyncSample> rows;

    static const std::vector<std::string>& columns() {
        static const std::vector<std::string> c{"time",    "w_L2", "grad_w_L2", "w_V0",         "xi_L2",
                                                "grad_xi_L2", "u_V0", "theta_V1",  "alpha_monitor"};
        return c;
    }

    static std::vector<double> values(const SyncSample& s) {
        return {s.time, s.w_L2, s.grad_w_L2, s.w_V0, s.xi_L2, s.grad_xi_L2, s.u_V0, s.theta_V1, s.alpha_monitor};
    }

    /// Times strictly increasing, norms finite and nonnegative.
    bool well_formed() const {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0 && !(rows[i].time > rows[i - 1].time)) return false;
            const auto v = values(rows[i]);
            for (std::size_t j = 1; j < v.size(); ++j)
                if (!(v[j] >= 0.0) || !std::isfinite(v[j])) return false;
        }
        return true;
    }
};

/// Scalar extracted from a SyncSample for fitting and thresholds.
enum class SyncQuantity {
    WeakError,    // ||w||_V0^2 + ||xi||^2
    StrongError,  // ||w||_V0^2 + ||grad xi||^2
    W_V0,
    Xi_L2,
    GradXi_L2,
};

inline double quantity(const SyncSample& s, SyncQuantity q) {
    switch (q) {
        case SyncQuantity::WeakError: return s.w_V0 * s.w_V0 + s.xi_L2 * s.xi_L2;
        case SyncQuantity::StrongError: return s.w_V0 * s.w_V0 + s.grad_xi_L2 * s.grad_xi_L2;
        case SyncQuantity::W_V0: return s.w_V0;
        case SyncQuantity::Xi_L2: return s.xi_L2;
        case SyncQuantity::GradXi_L2: return s.grad_xi_L2;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Feasibility, alpha(t), and gain suggestions

struct FeasibilityReport {
    bool feasible = false;
    double lhs = 0.0;    // 4 mu c0^2 h^2 (type 1) or 2 mu c0^2 h^2 (type 2)
    double bound = 0.0;  // nu (type 1) or nu / 16 (type 2)
    double slack = 0.0;  // bound / lhs; >= 1 exactly when feasible
};

/// Hypotheses on (mu, h): type 1 needs 4 mu c0^2 h^2 <= nu, type 2 needs
/// 2 mu c0^2 h^2 <= nu / 16.
inline FeasibilityReport feasibility(double mu, double h, double c0, double nu, ApproximationType type) {
    FeasibilityReport r;
    if (type == ApproximationType::Type1) {
        r.lhs = 4.0 * mu * c0 * c0 * h * h;
        r.bound = nu;
    } else {
        r.lhs = 2.0 * mu * c0 * c0 * h * h;
        r.bound = nu / 16.0;
    }
    r.feasible = r.lhs <= r.bound;
    r.slack = r.lhs > 0.0 ? r.bound / r.lhs : std::numeric_limits<double>::infinity();
    return r;
}

/// alpha(t) with every generic constant set to 1:
///   1/(kappa lambda1) + 1/(nu kappa^2) + |theta|_inf^2 / kappa
///   + |grad u| (1 + |grad u| / nu) + |A u| (1 + |A u|^(1/3) / nu^(1/3) + |A u| / nu)
inline double alpha_monitor(const FlowState& st, const PhysParams& p) {
    const double lambda1 = st.grid().lambda1();
    const double th_inf = sup_norm(st.temp);
    const double gu = std::sqrt(norm_sq(st.vel, NormKind::H1Semi));
    const double au = std::sqrt(laplacian_sq(st.vel));
    return 1.0 / (p.kappa * lambda1) + 1.0 / (p.nu * p.kappa * p.kappa) + th_inf * th_inf / p.kappa +
           gu * (1.0 + gu / p.nu) + au * (1.0 + std::cbrt(au) / std::cbrt(p.nu) + au / p.nu);
}

/// Extra temperature term in the strong-norm estimate:
///   (1/kappa) |grad theta| |lap theta| (1 + |grad theta| |lap theta|).
inline double alpha_extra_theta(const FlowState& st, const PhysParams& p) {
    const double g = std::sqrt(norm_sq(st.temp, NormKind::H1Semi));
    const double l = std::sqrt(laplacian_sq(st.temp));
    return g * l * (1.0 + g * l) / p.kappa;
}

enum class MuMode { Weak, Strong };

/// weak: 2 (K1 + nu); strong: 2 (K1 + nu) + 2 K2.
inline double suggest_mu(double K1_hat, double nu, MuMode mode, double K2_hat = 0.0) {
    const double weak = 2.0 * (K1_hat + nu);
    return mode == MuMode::Weak ? weak : weak + 2.0 * K2_hat;
}

// ---------------------------------------------------------------------------
// Decay-rate fitting

struct DecayFit {
    bool decayed = false;  // false: fewer than 10 samples in the window
    double gamma = 0.0;    // -slope of log(quantity)
    double r2 = 0.0;
    int n_used = 0;
    double t_begin = 0.0;
    double t_end = 0.0;
};

inline constexpr double fit_window_hi = 1e-2;
inline constexpr double fit_window_lo = 1e-10;

/// Least-squares fit of log(q(t) / q(0)) on the samples whose normalized
/// value lies in [1e-10, 1e-2].
inline DecayFit fit_decay_rate(const SyncRecord& rec, SyncQuantity q) {
    DecayFit fit;
    if (rec.rows.empty()) return fit;
    const double q0 = quantity(rec.rows.front(), q);
    if (!(q0 > 0.0) || !std::isfinite(q0)) return fit;
    std::vector<double> t, y;
    for (const auto& s : rec.rows) {
        const double v = quantity(s, q) / q0;
        if (v >= fit_window_lo && v <= fit_window_hi) {
            t.push_back(s.time);
            y.push_back(std::log(v));
        }
    }
    fit.n_used = static_cast<int>(t.size());
    if (t.size() < 10) return fit;
    const double n = static_cast<double>(t.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(stt > 0.0)) return fit;
    const double slope = sty / stt;
    fit.decayed = slope < 0.0;
    fit.gamma = -slope;
    fit.r2 = syy > 0.0 ? sty * sty / (stt * syy) : 1.0;
    fit.t_begin = t.front();
    fit.t_end = t.back();
    return fit;
}

/// Mean of the normalized quantity over each decade of the fit window,
/// from [1e-3, 1e-2] downward; empty decades are skipped.
inline std::vector<double> decade_means(const SyncRecord& rec, SyncQuantity q) {
    std::vector<double> means;
    if (rec.rows.empty()) return means;
    const double q0 = quantity(rec.rows.front(), q);
    if (!(q0 > 0.0)) return means;
    for (int d = 0; d < 8; ++d) {
        const double hi = fit_window_hi * std::pow(10.0, -d);
        const double lo = hi / 10.0;
        double s = 0.0;
        int n = 0;
        for (const auto& r : rec.rows) {
            const double v = quantity(r, q) / q0;
            if (v >= lo && v <= hi) {
                s += v;
                ++n;
            }
        }
        if (n > 0) means.push_back(s / n);
    }
    return means;
}

// ---------------------------------------------------------------------------
// Spin-up and twin experiments

struct SpinUp {
    FlowState state;
    double K1_hat = 0.0;       // sup of alpha over the monitored tail
    double K2_hat = 0.0;       // sup of the extra temperature term
    double u_V0_max = 0.0;     // boundedness monitor over the tail
    double theta_V1_max = 0.0;
    long steps = 0;
};

/// Low-mode odd temperature perturbation of the conduction state.
inline FlowState spinup_initial_state(const DAConfig& cfg) {
    Rng rng(cfg.seed);
    const Grid& g = cfg.grid;
    const double kcut = std::sqrt(std::pow(2.0 * M_PI * 3.0 / g.L(), 2) + std::pow(M_PI * 2.0, 2));
    ScalarField th = random_scalar(g, Parity::OddInX2, rng, RandomSpectrum{.decay = 0.0, .kcut = kcut});
    const double n = norm(th, NormKind::L2);
    if (n > 0.0) th *= cfg.init_amplitude / n;
    return FlowState{VelocityField(g), std::move(th), 0.0};
}

/// Integrates the reference for spinup_T; alpha and the boundedness monitor
/// are sampled over the last half (at most 50 time units).
inline SpinUp spin_up(const DAConfig& cfg) {
    cfg.validate();
    SpinUp out;
    out.state = spinup_initial_state(cfg);
    ReferenceStepper stepper(cfg.grid, cfg.phys, cfg.stepper);
    const long n = steps_for(cfg.spinup_T, cfg.stepper.dt);
    const long tail = std::min(n / 2, steps_for(50.0, cfg.stepper.dt));
    const long every = steps_for(cfg.sample_interval, cfg.stepper.dt);
    for (long s = 1; s <= n; ++s) {
        out.state = stepper.step(out.state);
        if (s > n - tail && (n - s) % every == 0) {
            out.K1_hat = std::max(out.K1_hat, alpha_monitor(out.state, cfg.phys));
            out.K2_hat = std::max(out.K2_hat, alpha_extra_theta(out.state, cfg.phys));
            out.u_V0_max = std::max(out.u_V0_max, norm(out.state.vel, NormKind::V0));
            out.theta_V1_max = std::max(out.theta_V1_max, norm(out.state.temp, NormKind::V1));
        }
    }
    out.steps = n;
    return out;
}

inline FlowState assimilated_initial_state(const DAConfig& cfg, const FlowState& ref) {
    switch (cfg.assim_init) {
        case AssimInit::Zero: return FlowState::zero(cfg.grid, ref.time);
        case AssimInit::Match: return ref;
        case AssimInit::Perturbed: {
            Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
            FlowState d = random_state(cfg.grid, rng, 1.0);
            const double n = std::sqrt(norm_sq(d.vel, NormKind::L2) + norm_sq(d.temp, NormKind::L2));
            const double s = n > 0.0 ? cfg.perturb_amplitude / n : 0.0;
            FlowState a = ref;
            a.vel += s * d.vel;
            a.temp += s * d.temp;
            return a;
        }
    }
    return ref;
}

inline SyncSample sync_sample(const FlowState& ref, const FlowState& assim, double t, const PhysParams& p) {
    const VelocityField w = ref.vel - assim.vel;
    const ScalarField xi = ref.temp - assim.temp;
    SyncSample s;
    s.time = t;
    s.w_L2 = norm(w, NormKind::L2);
    s.grad_w_L2 = norm(w, NormKind::H1Semi);
    s.w_V0 = norm(w, NormKind::V0);
    s.xi_L2 = norm(xi, NormKind::L2);
    s.grad_xi_L2 = norm(xi, NormKind::H1Semi);
    s.u_V0 = norm(ref.vel, NormKind::V0);
    s.theta_V1 = norm(ref.temp, NormKind::V1);
    s.alpha_monitor = alpha_monitor(ref, p);
    return s;
}

struct TwinResult {
    SyncRecord record;
    FeasibilityReport feasibility;
    double c0 = 0.0;            // measured approximation constant at h
    double K1_hat = 0.0;        // from the spin-up
    double K2_hat = 0.0;
    double mu_weak = 0.0;       // suggest_mu(K1_hat, nu, weak)
    double u_V0_max = 0.0;      // boundedness monitor over spin-up tail and run
    double theta_V1_max = 0.0;
    FlowState final_ref;
    FlowState final_assim;
};

/// Called at the checkpoint cadence with (reference, twin, step).
using CheckpointSink = std::function<void(const FlowState&, const FlowState&, long)>;

/// Safety factor applied to measured c0 before testing feasibility.
inline constexpr double c0_safety = 1.25;

/// Spins up (unless a spun-up reference is supplied), starts the twin and
/// co-evolves both for run_T, sampling every sample_interval.
inline TwinResult run_twin_experiment(const DAConfig& cfg, const SpinUp* spun = nullptr,
                                      const CheckpointSink& checkpoint = {}) {
    cfg.validate();
    std::optional<SpinUp> own;
    if (spun == nullptr) {
        own = spin_up(cfg);
        spun = &*own;
    }
    require_same_grid(cfg.grid, spun->state.grid(), "run_twin_experiment");

    TwinResult res;
    res.K1_hat = spun->K1_hat;
    res.K2_hat = spun->K2_hat;
    res.mu_weak = suggest_mu(spun->K1_hat, cfg.phys.nu, MuMode::Weak);
    res.c0 = estimate_c0(cfg.spec.kind(), cfg.grid, 20, {cfg.spec.h()}, cfg.seed).c0;
    res.feasibility =
        feasibility(cfg.mu, cfg.spec.effective_h(), c0_safety * res.c0, cfg.phys.nu, cfg.spec.approximation_type());
    res.u_V0_max = spun->u_V0_max;
    res.theta_V1_max = spun->theta_V1_max;

    FlowState ref = spun->state;
    FlowState assim = assimilated_initial_state(cfg, ref);
    const double t0 = ref.time;
    TwinStepper stepper(cfg.grid, cfg.spec, cfg.mu, cfg.phys, cfg.stepper);

    const long n = steps_for(cfg.run_T, cfg.stepper.dt);
    const long every = steps_for(cfg.sample_interval, cfg.stepper.dt);
    const long ck_every = cfg.checkpoint_interval > 0.0 ? steps_for(cfg.checkpoint_interval, cfg.stepper.dt) : 0;
    auto sample = [&](long s) {
        res.record.rows.push_back(sync_sample(ref, assim, static_cast<double>(s) * cfg.stepper.dt, cfg.phys));
        res.u_V0_max = std::max(res.u_V0_max, res.record.rows.back().u_V0);
        res.theta_V1_max = std::max(res.theta_V1_max, res.record.rows.back().theta_V1);
    };
    sample(0);
    if (checkpoint) checkpoint(ref, assim, 0);
    for (long s = 1; s <= n; ++s) {
        try {
            auto [r, a] = stepper.step(ref, assim);
            ref = std::move(r);
            assim = std::move(a);
        } catch (const BlowupError& e) {
            throw BlowupError(std::string("twin run: ") + e.what(), s, t0 + static_cast<double>(s) * cfg.stepper.dt);
        }
        if (s % every == 0 || s == n) sample(s);
        if (checkpoint && ck_every > 0 && s % ck_every == 0) checkpoint(ref, assim, s);
    }
    res.final_ref = std::move(ref);
    res.final_assim = std::move(assim);
    return res;
}

// ---------------------------------------------------------------------------
// (mu, h) sweeps

struct SweepRow {
    double mu = 0.0;
    double h = 0.0;
    bool feasible = false;
    double slack = 0.0;
    bool decayed = false;
    double gamma = 0.0;  // of the weak error; 0 when no decay was fitted
    double r2 = 0.0;
    double final_error = std::numeric_limits<double>::quiet_NaN();  // weak error at run end / initial
    std::string error;  // nonempty when the cell failed
};

/// One twin run per (mu, h). The reference is spun up once; every cell
/// re-integrates it deterministically from the same spun-up state, so cells
/// are independent and the table does not depend on scheduling.
inline std::vector<SweepRow> sweep(const DAConfig& base, const std::vector<double>& mu_list,
                                   const std::vector<double>& h_list, int parallelism,
                                   const SpinUp* spun = nullptr) {
    if (mu_list.empty() || h_list.empty()) throw ConfigError("sweep: mu and h lists must be non-empty");
    std::optional<SpinUp> own;
    if (spun == nullptr) {
        own = spin_up(base);
        spun = &*own;
    }
    std::vector<SweepRow> rows(mu_list.size() * h_list.size());
    for (std::size_t i = 0; i < mu_list.size(); ++i)
        for (std::size_t j = 0; j < h_list.size(); ++j) {
            rows[i * h_list.size() + j].mu = mu_list[i];
            rows[i * h_list.size() + j].h = h_list[j];
        }

    auto run_cell = [&](SweepRow& row) {
        try {
            DAConfig cfg = base;
            cfg.mu = row.mu;
            cfg.spec = InterpolantSpec(base.spec.kind(), row.h, base.grid.L());
            const TwinResult r = run_twin_experiment(cfg, spun);
            row.feasible = r.feasibility.feasible;
            row.slack = r.feasibility.slack;
            const DecayFit f = fit_decay_rate(r.record, SyncQuantity::WeakError);
            row.decayed = f.decayed;
            row.gamma = f.decayed ? f.gamma : 0.0;
            row.r2 = f.r2;
            const double q0 = quantity(r.record.rows.front(), SyncQuantity::WeakError);
            const double q1 = quantity(r.record.rows.back(), SyncQuantity::WeakError);
            row.final_error = q0 > 0.0 ? q1 / q0 : q1;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };

    const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(rows.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < rows.size(); k = next++) run_cell(rows[k]);
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return rows;
}

}  // namespace bsyn
