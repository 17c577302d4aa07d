#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "bsyn/assimilation.hpp"
#include "bsyn/io/config.hpp"

namespace bsyn::io {

/// SyncRecord as CSV: header row with the column names, then one row per
/// sample with 17 significant digits.
inline void write_sync_csv(std::ostream& o, const SyncRecord& rec) {
    const auto& cols = SyncRecord::columns();
    for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
    o << "\n";
    for (const auto& s : rec.rows) {
        const auto v = SyncRecord::values(s);
        for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << format_double(v[i]);
        o << "\n";
    }
}

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> c{"mu", "h", "feasible", "slack", "decayed", "gamma_hat", "r2",
                                            "final_error", "error"};
    return c;
}

/// Sweep table. The error column is quoted, with embedded quotes doubled.
inline void write_sweep_csv(std::ostream& o, const std::vector<SweepRow>& rows) {
    const auto& cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
    o << "\n";
    for (const auto& r : rows) {
        std::string err;
        for (char c : r.error) err += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
        o << format_double(r.mu) << "," << format_double(r.h) << "," << (r.feasible ? 1 : 0) << ","
          << format_double(r.slack) << "," << (r.decayed ? 1 : 0) << "," << format_double(r.gamma) << ","
          << format_double(r.r2) << "," << format_double(r.final_error) << ",\"" << err << "\"\n";
    }
}

/// gnuplot script for a semilog error-vs-time plot of a SyncRecord CSV.
inline std::string gnuplot_script(const std::string& csv_name, const std::string& png_name) {
    return "set datafile separator ','\n"
           "set terminal pngcairo size 900,600\n"
           "set output '" + png_name + "'\n"
           "set logscale y\n"
           "set format y '10^{%L}'\n"
           "set xlabel 'time'\n"
           "set ylabel 'error'\n"
           "set key top right\n"
           "plot '" + csv_name + "' using 1:4 skip 1 with lines title '|w|_{V0}', \\\n"
           "     '" + csv_name + "' using 1:5 skip 1 with lines title '|xi|_{L2}', \\\n"
           "     '" + csv_name + "' using 1:6 skip 1 with lines title '|grad xi|_{L2}'\n";
}

}  // namespace bsyn::io
