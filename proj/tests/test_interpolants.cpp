#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace bsyn;
using namespace bsyn::testing;

namespace {

const InterpolantKind all_kinds[] = {InterpolantKind::FourierModes, InterpolantKind::VolumeElements,
                                     InterpolantKind::NodalValues};

ScalarField constant(const Grid& g, double c) {
    return field(g, Parity::EvenInX2, [=](double, double) { return c; });
}

}  // namespace

TEST(InterpolantSpec, Validation) {
    const double L = default_box_length();
    EXPECT_THROW(InterpolantSpec(InterpolantKind::FourierModes, 0.0, L), ConfigError);
    EXPECT_THROW(InterpolantSpec(InterpolantKind::FourierModes, -0.1, L), ConfigError);
    EXPECT_THROW(InterpolantSpec(InterpolantKind::VolumeElements, 1.01, L), ConfigError);
    EXPECT_NO_THROW(InterpolantSpec(InterpolantKind::VolumeElements, 1.0, L));
    EXPECT_THROW(interpolant_kind_from_string("Splines"), ConfigError);
    for (auto k : all_kinds) EXPECT_EQ(interpolant_kind_from_string(to_string(k)), k);
}

TEST(InterpolantSpec, CellLayoutIsMirrorSymmetric) {
    const double L = default_box_length();
    const InterpolantSpec s(InterpolantKind::VolumeElements, 0.3, L);
    EXPECT_EQ(s.m(), static_cast<int>(std::ceil(L / 0.3)));
    EXPECT_EQ(s.n(), 2 * static_cast<int>(std::ceil(1.0 / 0.3)));
    EXPECT_EQ(s.n() % 2, 0);
    EXPECT_LE(s.effective_h(), 0.3);
    EXPECT_DOUBLE_EQ(s.effective_h(), std::max(L / s.m(), 2.0 / s.n()));
    EXPECT_EQ(s.approximation_type(), ApproximationType::Type1);
    EXPECT_EQ(InterpolantSpec(InterpolantKind::NodalValues, 0.3, L).approximation_type(), ApproximationType::Type2);
}

TEST(InterpolantSpec, ElementsMustNotBeFinerThanGrid) {
    const Grid g = small_grid(16);
    EXPECT_THROW(InterpolantSpec(InterpolantKind::VolumeElements, 0.05, g.L()).check_grid(g), ConfigError);
    EXPECT_NO_THROW(InterpolantSpec(InterpolantKind::VolumeElements, 0.25, g.L()).check_grid(g));
    EXPECT_NO_THROW(InterpolantSpec(InterpolantKind::FourierModes, 0.01, g.L()).check_grid(g));
    EXPECT_THROW(InterpolantSpec(InterpolantKind::FourierModes, 0.25, 2.0).check_grid(g), ConfigError);
}

TEST(Observe, FourierKeepsLowModeExactly) {
    const Grid g = small_grid();
    const double k = 2 * pi / g.L();
    const ScalarField f =
        field(g, Parity::EvenInX2, [&](double x, double y) { return std::cos(k * x) * std::cos(pi * y); });
    const InterpolantSpec spec(InterpolantKind::FourierModes, 0.25, g.L());  // |k| ~ 3.7 <= 4
    EXPECT_LT(rel_l2(interpolate(f, spec), f), 1e-15);
}

TEST(Observe, FourierDropsHighMode) {
    const Grid g = small_grid();
    const ScalarField f = field(g, Parity::EvenInX2, [&](double, double y) { return std::cos(3 * pi * y); });
    const InterpolantSpec spec(InterpolantKind::FourierModes, 0.25, g.L());  // 3 pi > 4
    const ObservedSignal obs = observe(f, spec);
    for (double v : obs.data) EXPECT_NEAR(v, 0.0, 1e-15);
    EXPECT_LT(norm(lift(obs, g), NormKind::L2), 1e-15);
}

TEST(Observe, VolumeAveragesOfConstant) {
    const Grid g = small_grid();
    const InterpolantSpec spec(InterpolantKind::VolumeElements, 0.25, g.L());
    const ObservedSignal obs = observe(constant(g, 1.0), spec);
    ASSERT_EQ(obs.data.size(), static_cast<std::size_t>(spec.m() * spec.n()));
    for (double v : obs.data) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Observe, NodalValuesAreNearestGridSamples) {
    const Grid g = small_grid();
    Rng rng(1);
    const ScalarField f = random_scalar(g, Parity::EvenInX2, rng);
    const auto phys = to_physical(f);
    const InterpolantSpec spec(InterpolantKind::NodalValues, 0.25, g.L());
    const ObservedSignal obs = observe(f, spec);
    ASSERT_EQ(obs.data.size(), static_cast<std::size_t>(spec.m() * spec.n()));
    for (int i = 0; i < spec.m(); ++i)
        for (int j = 0; j < spec.n(); ++j) {
            const double x = i * g.L() / spec.m(), y = -1.0 + 2.0 * j / spec.n();
            // nearest grid point, with y measured from the mirror-symmetric lattice
            const int i1 = static_cast<int>(std::lround(x / g.dx1())) % g.nx();
            const int i2 = static_cast<int>(std::lround((y + 1.0) / g.dx2())) % g.ny();
            EXPECT_NEAR(obs.data[i * spec.n() + j], phys[g.index(i1, i2)], 1e-14) << i << "," << j;
        }
}

TEST(Lift, ConstantsAreReproducedByAllKinds) {
    const Grid g = small_grid();
    const ScalarField c = constant(g, 2.5);
    for (auto k : all_kinds) {
        const InterpolantSpec spec(k, 0.25, g.L());
        EXPECT_LT(rel_l2(interpolate(c, spec), c), 1e-14) << to_string(k);
    }
}

TEST(Lift, FourierRoundTripIsLowpass) {
    const Grid g = small_grid();
    Rng rng(2);
    const ScalarField f = random_scalar(g, Parity::EvenInX2, rng);
    const InterpolantSpec spec(InterpolantKind::FourierModes, 0.2, g.L());
    EXPECT_LT(rel_l2(lift(observe(f, spec), g), fourier_lowpass(f, spec)), 1e-15);
}

TEST(Interpolant, Linearity) {
    const Grid g = small_grid();
    Rng rng(3);
    const ScalarField f = random_scalar(g, Parity::EvenInX2, rng), h = random_scalar(g, Parity::EvenInX2, rng);
    const double a = 0.7, b = -1.9;
    for (auto k : all_kinds) {
        const InterpolantSpec spec(k, 0.25, g.L());
        const auto lhs = observe(a * f + b * h, spec).data;
        const auto of = observe(f, spec).data, oh = observe(h, spec).data;
        double scale = 0.0, err = 0.0;
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            scale = std::max(scale, std::abs(lhs[i]));
            err = std::max(err, std::abs(lhs[i] - (a * of[i] + b * oh[i])));
        }
        EXPECT_LE(err, 1e-12 * scale) << to_string(k);
    }
}

TEST(Interpolant, PreservesEvenSymmetry) {
    const Grid g = small_grid();
    Rng rng(4);
    const ScalarField f = random_scalar(g, Parity::EvenInX2, rng);
    for (auto k : all_kinds) {
        const InterpolantSpec spec(k, 0.25, g.L());
        const ObservedSignal obs = observe(f, spec);
        if (k != InterpolantKind::FourierModes) {
            // data is mirror symmetric about x2 = 0: cell j pairs with n-1-j
            // for averages and node j pairs with n-j for samples
            for (int i = 0; i < spec.m(); ++i)
                for (int j = 0; j < spec.n(); ++j) {
                    const int jm = k == InterpolantKind::VolumeElements ? spec.n() - 1 - j : (spec.n() - j) % spec.n();
                    EXPECT_NEAR(obs.data[i * spec.n() + j], obs.data[i * spec.n() + jm], 1e-13);
                }
        }
        // the raw lifted field is already even before the final projection
        const ScalarField lifted = lift(obs, g);
        EXPECT_EQ(lifted.parity(), Parity::EvenInX2);
        const auto phys = to_physical(lifted);
        for (int i1 = 0; i1 < g.nx(); ++i1)
            for (int i2 = 0; i2 < g.ny(); ++i2)
                EXPECT_NEAR(phys[g.index(i1, i2)], phys[g.index(i1, g.mirror2(i2))], 1e-13);
    }
}

TEST(Interpolant, FourierIsOrthogonalProjection) {
    const Grid g = small_grid();
    Rng rng(5);
    const InterpolantSpec spec(InterpolantKind::FourierModes, 0.15, g.L());
    for (int s = 0; s < 5; ++s) {
        const ScalarField f = random_scalar(g, Parity::EvenInX2, rng), h = random_scalar(g, Parity::EvenInX2, rng);
        const ScalarField If = interpolate(f, spec), Ih = interpolate(h, spec);
        EXPECT_LE(std::abs(inner(f - If, Ih)), 1e-12 * norm(f, NormKind::L2) * norm(h, NormKind::L2));
        EXPECT_LT(rel_l2(interpolate(If, spec), If), 1e-15);  // idempotent
    }
}

TEST(ApproximationConstant, FourierIsAtMostOne) {
    const Grid g = small_grid(64);
    const C0Estimate e = estimate_c0(InterpolantKind::FourierModes, g, 20, {0.5, 0.25, 0.125});
    EXPECT_GT(e.c0, 0.0);
    EXPECT_LE(e.c0, 1.0);
    // Parseval bound: each discarded mode has |k| h > 1
    Rng rng(6);
    const InterpolantSpec spec(InterpolantKind::FourierModes, 0.25, g.L());
    for (int s = 0; s < 20; ++s) {
        const ScalarField f = random_scalar(g, Parity::EvenInX2, rng);
        EXPECT_LE(norm(f - interpolate(f, spec), NormKind::L2), 0.25 * norm(f, NormKind::H1Semi));
    }
}

TEST(ApproximationConstant, ConstantFieldsGiveZeroRatio) {
    const Grid g = small_grid();
    const ScalarField c = constant(g, 1.0);
    for (auto k : all_kinds) {
        const InterpolantSpec spec(k, 0.25, g.L());
        const double err = norm(c - interpolate(c, spec), NormKind::L2);
        EXPECT_LT(err, 1e-13);
        EXPECT_EQ(approximation_ratio(0.0, 0.25, 1.0, 1.0, spec.approximation_type()), 0.0);
    }
}

TEST(ApproximationConstant, TwoTermRatioSolvesQuadratic) {
    const double err = 0.3, h = 0.2, h1 = 2.0, h2 = 5.0;
    const double c = approximation_ratio(err, h, h1, h2, ApproximationType::Type2);
    EXPECT_NEAR(c * h * h1 + c * c * h * h * h2, err, 1e-15);
    EXPECT_NEAR(approximation_ratio(err, h, h1, h2, ApproximationType::Type1), err / (h * h1), 1e-15);
}

TEST(ApproximationConstant, VolumeElementBoundHoldsOnRandomFields) {
    const Grid g = small_grid(64);
    const double h = 0.25;
    const InterpolantSpec spec(InterpolantKind::VolumeElements, h, g.L());
    const double c0 = estimate_c0(InterpolantKind::VolumeElements, g, 50, {h}).c0;
    ASSERT_TRUE(std::isfinite(c0));
    Rng rng(7);
    for (int s = 0; s < 50; ++s) {
        const ScalarField f = random_scalar(g, Parity::EvenInX2, rng, {.decay = 1.0 + 0.05 * s});
        EXPECT_LE(norm(f - interpolate(f, spec), NormKind::L2), 1.25 * c0 * spec.effective_h() * std::sqrt(h1_sq(f)));
    }
}

TEST(ApproximationConstant, RequiresEnoughSamples) {
    EXPECT_THROW(estimate_c0(InterpolantKind::FourierModes, small_grid(), 10, {0.25}), ConfigError);
    EXPECT_THROW(estimate_c0(InterpolantKind::FourierModes, small_grid(), 20, {}), ConfigError);
}

TEST(ApproximationConstant, DeterministicPerSeed) {
    const Grid g = small_grid();
    const auto a = estimate_c0(InterpolantKind::NodalValues, g, 20, {0.5, 0.25}, 99);
    const auto b = estimate_c0(InterpolantKind::NodalValues, g, 20, {0.5, 0.25}, 99);
    EXPECT_EQ(a.c0, b.c0);
    EXPECT_EQ(a.per_h, b.per_h);
}
