#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bsyn/field.hpp"
#include "bsyn/interpolants.hpp"

namespace bsyn::io {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Explicit little-endian encoding, independent of the host byte order.
inline void put_u64(std::ostream& o, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    o.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_i32(std::ostream& o, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    o.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_f64(std::ostream& o, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(o, u);
}

inline void need(std::istream& in, const char* what) {
    if (!in) throw FormatError(std::string("truncated input while reading ") + what);
}
inline std::uint64_t get_u64(std::istream& in, const char* what) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    need(in, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
inline std::int32_t get_i32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    need(in, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return static_cast<std::int32_t>(v);
}
inline double get_f64(std::istream& in, const char* what) {
    const std::uint64_t u = get_u64(in, what);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (little-endian):
//   "BSYN1"                      5 bytes
//   nx, ny                       int32 each
//   L, time                      float64 each
//   u1, u2, temp                 nx*ny (re, im) float64 pairs each, k1-major

inline constexpr char checkpoint_magic[5] = {'B', 'S', 'Y', 'N', '1'};

inline void write_checkpoint(std::ostream& o, const FlowState& st) {
    const Grid& g = st.grid();
    o.write(checkpoint_magic, 5);
    detail::put_i32(o, g.nx());
    detail::put_i32(o, g.ny());
    detail::put_f64(o, g.L());
    detail::put_f64(o, st.time);
    for (const ScalarField* f : {&st.vel.u1(), &st.vel.u2(), &st.temp})
        for (const cplx& c : f->coeffs()) {
            detail::put_f64(o, c.real());
            detail::put_f64(o, c.imag());
        }
}

/// Reads a checkpoint; the dealias fraction is not stored and is taken from
/// the argument. Coefficients are re-projected onto their symmetry classes.
inline FlowState read_checkpoint(std::istream& in, double dealias_fraction = 2.0 / 3.0) {
    char magic[5];
    in.read(magic, 5);
    detail::need(in, "magic");
    if (std::memcmp(magic, checkpoint_magic, 5) != 0) throw FormatError("not a BSYN1 checkpoint");
    const int nx = detail::get_i32(in, "nx");
    const int ny = detail::get_i32(in, "ny");
    const double L = detail::get_f64(in, "L");
    const double t = detail::get_f64(in, "time");
    if (nx < 8 || ny < 8 || nx > (1 << 16) || ny > (1 << 16)) throw FormatError("checkpoint: implausible grid size");
    const Grid g(L, nx, ny, dealias_fraction);
    auto block = [&](const char* what) {
        std::vector<cplx> c(g.size());
        for (auto& z : c) {
            const double re = detail::get_f64(in, what);
            const double im = detail::get_f64(in, what);
            z = cplx(re, im);
        }
        return c;
    };
    ScalarField u1(g, Parity::EvenInX2, block("u1"));
    ScalarField u2(g, Parity::OddInX2, block("u2"));
    ScalarField th(g, Parity::OddInX2, block("temp"));
    return FlowState{VelocityField::adopt(std::move(u1), std::move(u2)), std::move(th), t};
}

inline void save_checkpoint(const std::string& path, const FlowState& st) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write checkpoint '" + path + "'");
    write_checkpoint(f, st);
    if (!f) throw FormatError("write failed for '" + path + "'");
}

inline FlowState load_checkpoint(const std::string& path, double dealias_fraction = 2.0 / 3.0) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(f, dealias_fraction);
}

// ---------------------------------------------------------------------------
// Observed signals
//
// Text header, one "key value" pair per line, terminated by "end":
//   bsyn-signal 1
//   kind <FourierModes|VolumeElements|NodalValues>
//   h <%.17g>
//   L <%.17g>
//   nx <int>
//   ny <int>
//   time <%.17g>
//   count <number of float64 values>
//   end
// followed by count little-endian float64 values in the ordering documented
// on ObservedSignal.

inline void write_signal(std::ostream& o, const ObservedSignal& s) {
    char buf[64];
    o << "bsyn-signal 1\n";
    o << "kind " << to_string(s.spec.kind()) << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", s.spec.h());
    o << "h " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", s.spec.L());
    o << "L " << buf << "\n";
    o << "nx " << s.grid.nx() << "\nny " << s.grid.ny() << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", s.time);
    o << "time " << buf << "\n";
    o << "count " << s.data.size() << "\nend\n";
    for (double v : s.data) detail::put_f64(o, v);
}

inline ObservedSignal read_signal(std::istream& in, double dealias_fraction = 2.0 / 3.0) {
    std::string line;
    std::getline(in, line);
    if (line != "bsyn-signal 1") throw FormatError("not a bsyn signal file");
    std::string kind;
    double h = 0, L = 0, t = 0;
    int nx = 0, ny = 0;
    std::size_t count = 0;
    while (std::getline(in, line) && line != "end") {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "kind") ls >> kind;
        else if (key == "h") ls >> h;
        else if (key == "L") ls >> L;
        else if (key == "nx") ls >> nx;
        else if (key == "ny") ls >> ny;
        else if (key == "time") ls >> t;
        else if (key == "count") ls >> count;
        else throw FormatError("signal header: unknown key '" + key + "'");
        if (!ls) throw FormatError("signal header: malformed line '" + line + "'");
    }
    if (line != "end") throw FormatError("signal header: missing 'end'");
    ObservedSignal s;
    s.spec = InterpolantSpec(interpolant_kind_from_string(kind), h, L);
    s.grid = Grid(L, nx, ny, dealias_fraction);
    s.time = t;
    if (count > (std::size_t{1} << 32)) throw FormatError("signal: implausible payload size");
    s.data.resize(count);
    for (double& v : s.data) v = detail::get_f64(in, "signal payload");
    return s;
}

}  // namespace bsyn::io
