#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "bsyn/errors.hpp"
#include "bsyn/fft.hpp"
#include "bsyn/grid.hpp"

namespace bsyn {

enum class NormKind { L2, H1Semi, V0, V1 };

namespace detail {

struct SymmetryReport {
    double max_defect_sq = 0.0;  // largest |c - projected c|^2
    double max_coeff_sq = 0.0;   // largest |c|^2 before projection
    double sum_sq = 0.0;         // sum |c|^2 after projection

    double relative_defect() const { return max_coeff_sq > 0.0 ? std::sqrt(max_defect_sq / max_coeff_sq) : 0.0; }
};

/// Average each coefficient over its orbit under x2-reflection and complex
/// conjugation, in place: the result is Hermitian and carries the requested
/// parity.
inline SymmetryReport enforce_symmetry(const Grid& g, Parity parity, std::span<cplx> c) {
    const double s = parity_sign(parity);
    const int nx = g.nx(), ny = g.ny();
    SymmetryReport rep;
    auto visit = [&](cplx& z, const cplx& v) {
        rep.max_defect_sq = std::max(rep.max_defect_sq, std::norm(z - v));
        rep.max_coeff_sq = std::max(rep.max_coeff_sq, std::norm(z));
        z = v;
        rep.sum_sq += std::norm(v);
    };
    for (int i1 = 0; i1 <= nx / 2; ++i1) {
        const int n1 = g.mirror1(i1);
        cplx* row = &c[g.index(i1, 0)];
        cplx* neg = &c[g.index(n1, 0)];
        for (int i2 = 0; i2 <= ny / 2; ++i2) {
            const int n2 = i2 == 0 ? 0 : ny - i2;
            // orbit: a = c(k1,k2), b = c(k1,-k2), cc = c(-k1,-k2), d = c(-k1,k2)
            const cplx a = row[i2], b = row[n2], cc = neg[n2], d = neg[i2];
            // pairwise halving is exact on symmetric input, so re-projection is idempotent bit for bit
            const cplx va = 0.5 * (0.5 * (a + s * b) + 0.5 * (std::conj(cc) + s * std::conj(d)));
            const cplx vb = s * va;
            visit(row[i2], va);
            if (n2 != i2) visit(row[n2], vb);
            if (n1 != i1) {
                visit(neg[n2], std::conj(va));
                if (n2 != i2) visit(neg[i2], std::conj(vb));
            }
        }
    }
    if (parity == Parity::OddInX2) c[0] = 0.0;
    return rep;
}

inline void apply_dealias(const Grid& g, std::span<cplx> c) {
    for (std::size_t i = 0; i < c.size(); ++i)
        if (!g.retained(i)) c[i] = 0.0;
}

inline double sum_sq(std::span<const cplx> c) {
    double s = 0.0;
    for (const cplx& z : c) s += std::norm(z);
    return s;
}

}  // namespace detail

/// Real scalar on the extended box stored as FFT coefficients with a fixed
/// x2-parity. Every constructor that accepts raw coefficients re-projects
/// them onto the symmetry class, so a ScalarField always satisfies its
/// invariants.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(const Grid& g, Parity p) : grid_(g), parity_(p), c_(g.size(), cplx(0.0, 0.0)) {}
    ScalarField(const Grid& g, Parity p, std::vector<cplx> coeffs) : grid_(g), parity_(p), c_(std::move(coeffs)) {
        if (c_.size() != g.size()) throw ConfigError("ScalarField: coefficient array does not match grid");
        detail::enforce_symmetry(grid_, parity_, c_);
    }

    const Grid& grid() const { return grid_; }
    Parity parity() const { return parity_; }
    std::span<const cplx> coeffs() const { return c_; }
    const cplx& operator()(int i1, int i2) const { return c_[grid_.index(i1, i2)]; }

    /// Largest violation of the Hermitian/parity symmetry relative to the
    /// largest coefficient. Zero for a freshly constructed field.
    double symmetry_defect() const {
        ScalarField copy = *this;
        return copy.reproject().relative_defect();
    }

    /// Project back onto the symmetry class in place.
    detail::SymmetryReport reproject() { return detail::enforce_symmetry(grid_, parity_, c_); }

    ScalarField& operator+=(const ScalarField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    ScalarField& operator*=(double a) {
        for (auto& z : c_) z *= a;
        return *this;
    }
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
    friend ScalarField operator-(ScalarField a) { return a *= -1.0; }

    /// Coefficients handed over without re-projection. Only for callers that
    /// construct symmetric data by design (spectral multipliers, the FFT pair).
    static ScalarField adopt(const Grid& g, Parity p, std::vector<cplx> coeffs) {
        ScalarField f;
        f.grid_ = g;
        f.parity_ = p;
        f.c_ = std::move(coeffs);
        return f;
    }
    std::vector<cplx> release() && { return std::move(c_); }

private:
    void check_compatible(const ScalarField& o) const {
        require_same_grid(grid_, o.grid_, "ScalarField");
        if (parity_ != o.parity_) throw InvariantError("ScalarField: parity mismatch in arithmetic");
    }

    Grid grid_{};
    Parity parity_ = Parity::EvenInX2;
    std::vector<cplx> c_;
};

/// Parity-paired vector field with no divergence constraint (forcing terms,
/// advection output).
struct VectorField {
    ScalarField c1;  // even
    ScalarField c2;  // odd
};

/// Solenoidal velocity: u1 even in x2, u2 odd in x2.
class VelocityField {
public:
    VelocityField() = default;
    explicit VelocityField(const Grid& g) : u1_(g, Parity::EvenInX2), u2_(g, Parity::OddInX2) {}
    VelocityField(ScalarField u1, ScalarField u2) : u1_(std::move(u1)), u2_(std::move(u2)) {
        if (u1_.parity() != Parity::EvenInX2 || u2_.parity() != Parity::OddInX2)
            throw InvariantError("VelocityField: components must be (even, odd) in x2");
        require_same_grid(u1_.grid(), u2_.grid(), "VelocityField");
        const double div = max_divergence();
        const double scale = component_scale();
        if (div > 1e-12 * std::max(scale, 1e-300) && div > 1e-300)
            throw InvariantError("VelocityField: field is not divergence-free");
    }

    const ScalarField& u1() const { return u1_; }
    const ScalarField& u2() const { return u2_; }
    const Grid& grid() const { return u1_.grid(); }

    /// max_k |k1 u1_k + k2 u2_k|.
    double max_divergence() const {
        const Grid& g = u1_.grid();
        double m = 0.0;
        for (int i1 = 0; i1 < g.nx(); ++i1)
            for (int i2 = 0; i2 < g.ny(); ++i2)
                m = std::max(m, std::abs(g.k1(i1) * u1_(i1, i2) + g.k2(i2) * u2_(i1, i2)));
        return m;
    }

    /// max_k |k| (|u1_k| + |u2_k|), the natural scale for max_divergence.
    double component_scale() const {
        const Grid& g = u1_.grid();
        double m = 0.0;
        for (int i1 = 0; i1 < g.nx(); ++i1)
            for (int i2 = 0; i2 < g.ny(); ++i2)
                m = std::max(m, std::sqrt(g.ksq(i1, i2)) * (std::abs(u1_(i1, i2)) + std::abs(u2_(i1, i2))));
        return m;
    }

    /// Re-projects both components; returns the combined report.
    detail::SymmetryReport reproject() {
        auto a = u1_.reproject();
        auto b = u2_.reproject();
        return {std::max(a.max_defect_sq, b.max_defect_sq), std::max(a.max_coeff_sq, b.max_coeff_sq),
                a.sum_sq + b.sum_sq};
    }

    VelocityField& operator+=(const VelocityField& o) {
        u1_ += o.u1_;
        u2_ += o.u2_;
        return *this;
    }
    VelocityField& operator-=(const VelocityField& o) {
        u1_ -= o.u1_;
        u2_ -= o.u2_;
        return *this;
    }
    VelocityField& operator*=(double a) {
        u1_ *= a;
        u2_ *= a;
        return *this;
    }
    friend VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
    friend VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
    friend VelocityField operator*(double s, VelocityField a) { return a *= s; }

    /// Skips the divergence check; callers guarantee solenoidal data.
    static VelocityField adopt(ScalarField u1, ScalarField u2) {
        VelocityField v;
        v.u1_ = std::move(u1);
        v.u2_ = std::move(u2);
        return v;
    }

private:
    ScalarField u1_;
    ScalarField u2_;
};

struct FlowState {
    VelocityField vel;
    ScalarField temp;  // odd
    double time = 0.0;

    const Grid& grid() const { return temp.grid(); }

    static FlowState zero(const Grid& g, double t = 0.0) {
        return FlowState{VelocityField(g), ScalarField(g, Parity::OddInX2), t};
    }
};

// ---------------------------------------------------------------------------
// Transforms

inline std::vector<double> to_physical(const ScalarField& f) {
    std::vector<double> out(f.grid().size());
    fft_for(f.grid()).inverse(f.coeffs(), out);
    return out;
}

/// Forward transform followed by projection onto `parity`. Rejects data whose
/// energy is mostly removed by the projection, which means the caller passed
/// a field of the other symmetry class.
inline ScalarField to_spectral(std::span<const double> a, Parity parity, const Grid& g) {
    if (a.size() != g.size()) throw ConfigError("to_spectral: array shape does not match grid");
    std::vector<cplx> c(g.size());
    fft_for(g).forward(a, c);
    const double before = detail::sum_sq(c);
    const double after = detail::enforce_symmetry(g, parity, c).sum_sq;
    if (before > 0.0 && after < 0.5 * before)
        throw ParityError(std::string("to_spectral: data is not ") + to_string(parity) +
                          " in x2 (projection removed more than half the energy)");
    return ScalarField::adopt(g, parity, std::move(c));
}

inline ScalarField derivative(const ScalarField& f, Axis axis) {
    const Grid& g = f.grid();
    std::vector<cplx> c(g.size());
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2) {
            const double k = axis == Axis::X1 ? g.k1(i1) : g.k2(i2);
            c[g.index(i1, i2)] = cplx(0.0, k) * f(i1, i2);
        }
    const Parity p = axis == Axis::X1 ? f.parity() : flip(f.parity());
    return ScalarField::adopt(g, p, std::move(c));
}

inline ScalarField laplacian(const ScalarField& f) {
    const Grid& g = f.grid();
    std::vector<cplx> c(g.size());
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2) c[g.index(i1, i2)] = -g.ksq(i1, i2) * f(i1, i2);
    return ScalarField::adopt(g, f.parity(), std::move(c));
}

inline ScalarField dealiased(const ScalarField& f) {
    std::vector<cplx> c(f.coeffs().begin(), f.coeffs().end());
    detail::apply_dealias(f.grid(), c);
    return ScalarField::adopt(f.grid(), f.parity(), std::move(c));
}

/// Dealiased pointwise product; parity follows even*even = odd*odd = even.
inline ScalarField multiply(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid(), "multiply");
    const Grid& g = a.grid();
    auto& fft = fft_for(g);
    const ScalarField da = dealiased(a), db = dealiased(b);
    std::vector<double> pa(g.size()), pb(g.size());
    fft.inverse_pair(da.coeffs(), db.coeffs(), pa, pb);
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] *= pb[i];
    std::vector<cplx> c(g.size());
    fft.forward(pa, c);
    detail::apply_dealias(g, c);
    const Parity p = a.parity() == b.parity() ? Parity::EvenInX2 : Parity::OddInX2;
    return ScalarField(g, p, std::move(c));
}

// ---------------------------------------------------------------------------
// Inner products and norms (Parseval: integral over the box = area * sum)

inline double inner(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid(), "inner");
    double s = 0.0;
    auto ca = a.coeffs(), cb = b.coeffs();
    for (std::size_t i = 0; i < ca.size(); ++i) s += (std::conj(ca[i]) * cb[i]).real();
    return a.grid().area() * s;
}

inline double inner(const VelocityField& a, const VelocityField& b) {
    return inner(a.u1(), b.u1()) + inner(a.u2(), b.u2());
}
inline double inner(const VectorField& a, const VelocityField& b) {
    return inner(a.c1, b.u1()) + inner(a.c2, b.u2());
}

namespace detail {

/// area * sum |k|^(2p) |c_k|^2
inline double weighted_sq(const ScalarField& f, int power) {
    const Grid& g = f.grid();
    double s = 0.0;
    for (int i1 = 0; i1 < g.nx(); ++i1)
        for (int i2 = 0; i2 < g.ny(); ++i2) {
            const double w = power == 0 ? 1.0 : std::pow(g.ksq(i1, i2), power);
            s += w * std::norm(f(i1, i2));
        }
    return g.area() * s;
}

}  // namespace detail

inline double norm_sq(const ScalarField& f, NormKind kind) {
    switch (kind) {
        case NormKind::L2: return detail::weighted_sq(f, 0);
        case NormKind::H1Semi:
        case NormKind::V1: return detail::weighted_sq(f, 1);
        case NormKind::V0: return detail::weighted_sq(f, 0) + detail::weighted_sq(f, 1);
    }
    return 0.0;
}

inline double norm_sq(const VelocityField& u, NormKind kind) { return norm_sq(u.u1(), kind) + norm_sq(u.u2(), kind); }

template <class F>
double norm(const F& f, NormKind kind) {
    return std::sqrt(norm_sq(f, kind));
}

/// ||Laplacian f||^2.
inline double laplacian_sq(const ScalarField& f) { return detail::weighted_sq(f, 2); }
inline double laplacian_sq(const VelocityField& u) { return laplacian_sq(u.u1()) + laplacian_sq(u.u2()); }

/// Full Sobolev norms: H1^2 = L2^2 + |grad|^2, H2^2 = H1^2 + sum_jk |d_j d_k f|^2.
inline double h1_sq(const ScalarField& f) { return norm_sq(f, NormKind::V0); }
inline double h2_sq(const ScalarField& f) { return h1_sq(f) + laplacian_sq(f); }

inline double sup_norm(const ScalarField& f) {
    double m = 0.0;
    for (double v : to_physical(f)) m = std::max(m, std::abs(v));
    return m;
}

/// ||grad u1||^2 - ||u2||^2; nonnegative for solenoidal fields of the
/// (even, odd) class.
inline double div_lemma_gap(const VelocityField& u) {
    return norm_sq(u.u1(), NormKind::H1Semi) - norm_sq(u.u2(), NormKind::L2);
}

/// u1 = d psi / dx2, u2 = -d psi / dx1 for an odd streamfunction.
inline VelocityField from_streamfunction(const ScalarField& psi) {
    if (psi.parity() != Parity::OddInX2) throw InvariantError("from_streamfunction: psi must be odd in x2");
    return VelocityField(derivative(psi, Axis::X2), -derivative(psi, Axis::X1));
}

}  // namespace bsyn
