#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "bsyn/field.hpp"

namespace bsyn {

using Rng = std::mt19937_64;

/// Spectral envelope for random fields: Gaussian coefficients scaled by
/// (1 + |k|^2)^(-decay/2), restricted to |k| <= kcut and the dealiased band.
struct RandomSpectrum {
    double decay = 2.0;
    double kcut = 1e300;
};

namespace detail {

template <class Envelope>
ScalarField random_scalar_with(const Grid& g, Parity parity, Rng& rng, Envelope&& envelope) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<cplx> c(g.size(), cplx(0.0, 0.0));
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2) {
            const double re = normal(rng);
            const double im = normal(rng);
            if (!g.retained(i1, i2)) continue;
            const double w = envelope(std::sqrt(g.ksq(i1, i2)));
            c[g.index(i1, i2)] = w * cplx(re, im);
        }
    return ScalarField(g, parity, std::move(c));
}

}  // namespace detail

inline ScalarField random_scalar(const Grid& g, Parity parity, Rng& rng, RandomSpectrum spec = {}) {
    return detail::random_scalar_with(g, parity, rng, [&](double k) {
        return k <= spec.kcut ? std::pow(1.0 + k * k, -0.5 * spec.decay) : 0.0;
    });
}

/// Random field with energy concentrated in a shell around |k| = kcenter.
inline ScalarField random_band_scalar(const Grid& g, Parity parity, Rng& rng, double kcenter, double rel_width) {
    return detail::random_scalar_with(g, parity, rng, [&](double k) {
        const double r = (k / kcenter - 1.0) / rel_width;
        return std::exp(-0.5 * r * r);
    });
}

/// Divergence-free (even, odd) velocity from a random odd streamfunction.
inline VelocityField random_solenoidal(const Grid& g, Rng& rng, RandomSpectrum spec = {.decay = 3.0}) {
    return from_streamfunction(random_scalar(g, Parity::OddInX2, rng, spec));
}

inline FlowState random_state(const Grid& g, Rng& rng, double amplitude = 1.0, RandomSpectrum spec = {.decay = 3.0}) {
    VelocityField u = random_solenoidal(g, rng, spec);
    ScalarField th = random_scalar(g, Parity::OddInX2, rng, spec);
    u *= amplitude;
    th *= amplitude;
    return FlowState{std::move(u), std::move(th), 0.0};
}

}  // namespace bsyn
