// bsyn: identical-twin data assimilation experiments for 2D Boussinesq
// convection.
//
//   bsyn run    [--config F] [--seed N] [--out DIR] [--mu X] [--h X] [--gnuplot]
//   bsyn sweep  [--config F] [--seed N] [--out DIR] [--parallelism N]
//   bsyn verify [--seed N] [--out DIR]
//
// Exit codes: 0 success, 1 check failure, 2 configuration error, 3 numerical
// blow-up.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bsyn/bsyn.hpp"

namespace fs = std::filesystem;
using namespace bsyn;

namespace {

enum Exit { Ok = 0, CheckFailed = 1, BadConfig = 2, Blowup = 3 };

/// Line-oriented log: "bsyn|<utc>|<level>|<message>", mirrored to stderr.
class Log {
public:
    explicit Log(const fs::path& path) : f_(path, std::ios::app) {}
    void operator()(const std::string& level, const std::string& msg) {
        const std::string line = "bsyn|" + io::utc_timestamp() + "|" + level + "|" + msg;
        std::cerr << line << "\n";
        if (f_) f_ << line << "\n" << std::flush;
    }

private:
    std::ofstream f_;
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "bsyn_out";
};

io::RunConfig load(const Common& c) {
    io::RunConfig rc = c.config.empty() ? io::parse_config_text("") : io::parse_config(c.config);
    if (c.seed) rc.da.seed = *c.seed;
    return rc;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    f << s;
}

std::string fmt(double v) { return io::format_double(v); }

int cmd_run(const Common& c, std::optional<double> mu, std::optional<double> h, bool gnuplot) {
    io::RunConfig rc;
    try {
        rc = load(c);
        if (mu) rc.da.mu = *mu;
        if (h) rc.da.spec = InterpolantSpec(rc.da.spec.kind(), *h, rc.da.grid.L());
        rc.da.validate();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return BadConfig;
    }

    const fs::path dir = c.out;
    fs::create_directories(dir);
    Log log(dir / "run.log");
    io::RunManifest man;
    man.started = io::utc_timestamp();
    man.seed = rc.da.seed;
    man.config_snapshot = io::serialize(rc);
    write_text(dir / "config.ini", man.config_snapshot);
    man.outputs.push_back("config.ini");
    man.outputs.push_back("run.log");

    const long ck_every = rc.da.checkpoint_interval > 0.0 ? 1 : 0;
    if (ck_every) fs::create_directories(dir / "checkpoints");
    auto sink = [&](const FlowState& ref, const FlowState& assim, long step) {
        char name[64];
        std::snprintf(name, sizeof name, "checkpoints/ref_%09ld.bsyn", step);
        io::save_checkpoint((dir / name).string(), ref);
        man.outputs.push_back(name);
        std::snprintf(name, sizeof name, "checkpoints/assim_%09ld.bsyn", step);
        io::save_checkpoint((dir / name).string(), assim);
        man.outputs.push_back(name);
    };

    log("info", "event=spinup_start spinup_T=" + fmt(rc.da.spinup_T) + " dt=" + fmt(rc.da.stepper.dt));
    TwinResult res;
    try {
        const SpinUp spun = spin_up(rc.da);
        log("info", "event=spinup_done K1_hat=" + fmt(spun.K1_hat) + " K2_hat=" + fmt(spun.K2_hat));
        res = run_twin_experiment(rc.da, &spun, ck_every ? CheckpointSink(sink) : CheckpointSink{});
    } catch (const BlowupError& e) {
        log("error", std::string("event=blowup step=") + std::to_string(e.step()) + " time=" + fmt(e.time()) +
                         " what=\"" + e.what() + "\"");
        return Blowup;
    }

    {
        std::ofstream f(dir / "sync.csv", std::ios::binary);
        io::write_sync_csv(f, res.record);
    }
    man.outputs.push_back("sync.csv");
    if (gnuplot) {
        write_text(dir / "sync.gp", io::gnuplot_script("sync.csv", "sync.png"));
        man.outputs.push_back("sync.gp");
    }

    const DecayFit fit = fit_decay_rate(res.record, SyncQuantity::WeakError);
    log("info", "event=run_done feasible=" + std::to_string(res.feasibility.feasible) +
                    " slack=" + fmt(res.feasibility.slack) + " c0=" + fmt(res.c0) + " mu_weak=" + fmt(res.mu_weak) +
                    " decayed=" + std::to_string(fit.decayed) + " gamma_hat=" + fmt(fit.gamma) + " r2=" + fmt(fit.r2));

    man.checks.push_back({"sync_record_well_formed", res.record.well_formed(), ""});
    man.checks.push_back({"reference_bounded", std::isfinite(res.u_V0_max) && std::isfinite(res.theta_V1_max),
                          "u_V0_max=" + fmt(res.u_V0_max) + " theta_V1_max=" + fmt(res.theta_V1_max)});
    man.extra = {{"feasible", res.feasibility.feasible},
                 {"feasibility_slack", res.feasibility.slack},
                 {"c0", res.c0},
                 {"K1_hat", res.K1_hat},
                 {"K2_hat", res.K2_hat},
                 {"mu_weak", res.mu_weak},
                 {"decayed", fit.decayed},
                 {"gamma_hat", fit.gamma},
                 {"fit_r2", fit.r2}};
    man.finished = io::utc_timestamp();
    io::write_manifest(dir, man);

    for (const auto& ch : man.checks)
        if (!ch.passed) return CheckFailed;
    return Ok;
}

int cmd_sweep(const Common& c, std::optional<int> parallelism) {
    io::RunConfig rc;
    try {
        rc = load(c);
        if (parallelism) {
            if (*parallelism < 1) throw ConfigError("--parallelism must be at least 1");
            rc.sweep.parallelism = *parallelism;
        }
        rc.da.validate();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return BadConfig;
    }
    const fs::path dir = c.out;
    fs::create_directories(dir);
    Log log(dir / "run.log");
    io::RunManifest man;
    man.started = io::utc_timestamp();
    man.seed = rc.da.seed;
    man.config_snapshot = io::serialize(rc);
    write_text(dir / "config.ini", man.config_snapshot);
    man.outputs = {"config.ini", "run.log"};

    std::vector<SweepRow> rows;
    try {
        log("info", "event=spinup_start spinup_T=" + fmt(rc.da.spinup_T));
        const SpinUp spun = spin_up(rc.da);
        log("info", "event=sweep_start cells=" + std::to_string(rc.sweep.mu_list.size() * rc.sweep.h_list.size()) +
                        " parallelism=" + std::to_string(rc.sweep.parallelism));
        rows = sweep(rc.da, rc.sweep.mu_list, rc.sweep.h_list, rc.sweep.parallelism, &spun);
    } catch (const BlowupError& e) {
        log("error", std::string("event=blowup what=\"") + e.what() + "\"");
        return Blowup;
    }
    {
        std::ofstream f(dir / "sweep.csv", std::ios::binary);
        io::write_sweep_csv(f, rows);
    }
    man.outputs.push_back("sweep.csv");
    std::size_t failed = 0;
    for (const auto& r : rows) {
        log(r.error.empty() ? "info" : "warn", "event=cell mu=" + fmt(r.mu) + " h=" + fmt(r.h) +
                                                  " gamma_hat=" + fmt(r.gamma) +
                                                  (r.error.empty() ? "" : " error=\"" + r.error + "\""));
        failed += !r.error.empty();
    }
    man.checks.push_back({"all_cells_completed", failed == 0, std::to_string(failed) + " failed cells"});
    man.finished = io::utc_timestamp();
    io::write_manifest(dir, man);
    return failed == 0 ? Ok : CheckFailed;
}

int cmd_verify(const Common& c) {
    const std::uint64_t seed = c.seed.value_or(7);
    io::RunManifest man;
    man.started = io::utc_timestamp();
    man.seed = seed;
    man.checks = verify::run_all(seed);
    bool ok = true;
    for (const auto& ch : man.checks) {
        std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << "\n";
        ok = ok && ch.passed;
    }
    if (!c.out.empty() && c.out != "-") {
        fs::create_directories(c.out);
        man.finished = io::utc_timestamp();
        io::write_manifest(c.out, man);
    }
    return ok ? Ok : CheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous data assimilation for 2D Boussinesq convection"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);

    Common run_c, sweep_c, verify_c;
    std::optional<double> mu, h;
    std::optional<int> parallelism;
    bool gnuplot = false;

    auto add_common = [](CLI::App* sc, Common& c) {
        sc->add_option("--config", c.config, "configuration file")->check(CLI::ExistingFile);
        sc->add_option("--seed", c.seed, "random seed override");
        sc->add_option("--out", c.out, "output directory")->capture_default_str();
    };
    auto* run = app.add_subcommand("run", "one identical-twin experiment");
    add_common(run, run_c);
    run->add_option("--mu", mu, "nudging gain override");
    run->add_option("--h", h, "observation resolution override");
    run->add_flag("--gnuplot", gnuplot, "also write a gnuplot script");

    auto* sw = app.add_subcommand("sweep", "(mu, h) sweep over the [sweep] lists");
    add_common(sw, sweep_c);
    sw->add_option("--parallelism", parallelism, "concurrent cells");

    auto* ver = app.add_subcommand("verify", "invariant suite");
    ver->add_option("--seed", verify_c.seed, "random seed");
    ver->add_option("--out", verify_c.out, "directory for manifest.json ('-' for none)");
    verify_c.out = "-";

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Ok : BadConfig;
    }

    try {
        if (*run) return cmd_run(run_c, mu, h, gnuplot);
        if (*sw) return cmd_sweep(sweep_c, parallelism);
        if (*ver) return cmd_verify(verify_c);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return BadConfig;
    } catch (const BlowupError& e) {
        std::cerr << "blow-up: " << e.what() << "\n";
        return Blowup;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return CheckFailed;
    }
    return Ok;
}
