#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "test_util.hpp"

using namespace bsyn;
using namespace bsyn::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bsyn_io_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f << s;
}

std::string config_error(const std::string& text) {
    try {
        io::parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BSYN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* small_run_config = R"(# short run on a coarse grid
[grid]
nx = 32
ny = 32
[interpolant]
kind = FourierModes
h = 0.25
[stepper]
dt = 0.005
[assimilation]
mu = 50
spinup_T = 1
run_T = 1
sample_interval = 0.1
[sweep]
mu_list = 0, 50
h_list = 0.25, 0.5
)";

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, EmptyTextGivesDefaults) {
    const io::RunConfig rc = io::parse_config_text("");
    const DAConfig d;
    EXPECT_EQ(rc.da.phys.nu, d.phys.nu);
    EXPECT_EQ(rc.da.grid.nx(), 128);
    EXPECT_EQ(rc.da.grid.L(), default_box_length());
    EXPECT_EQ(rc.da.spec.kind(), InterpolantKind::FourierModes);
    EXPECT_EQ(rc.da.spec.h(), 0.05);
    EXPECT_EQ(rc.da.mu, d.mu);
    EXPECT_EQ(rc.sweep.parallelism, 1);
}

TEST(Config, ParsesAllSections) {
    const io::RunConfig rc = io::parse_config_text(R"(
[physics]
nu = 0.03   ; inline comment
kappa = 0.04
[grid]
L = 2
nx = 64
ny = 32
dealias_fraction = 0.5
[interpolant]
kind = NodalValues
h = 0.25
[stepper]
dt = 1e-3
scheme = ImexEuler
cfl_safety = 0.4
[assimilation]
mu = 20
spinup_T = 3
run_T = 4
seed = 42
init_amplitude = 0.2
sample_interval = 0.05
checkpoint_interval = 1
assim_init = perturbed
perturb_amplitude = 0.01
[sweep]
mu_list = 1, 2,3
h_list = 0.5
parallelism = 3
)");
    EXPECT_EQ(rc.da.phys.nu, 0.03);
    EXPECT_EQ(rc.da.phys.kappa, 0.04);
    EXPECT_EQ(rc.da.grid.L(), 2.0);
    EXPECT_EQ(rc.da.grid.nx(), 64);
    EXPECT_EQ(rc.da.grid.ny(), 32);
    EXPECT_EQ(rc.da.grid.dealias_fraction(), 0.5);
    EXPECT_EQ(rc.da.spec.kind(), InterpolantKind::NodalValues);
    EXPECT_EQ(rc.da.spec.L(), 2.0);
    EXPECT_EQ(rc.da.stepper.scheme, Scheme::ImexEuler);
    EXPECT_EQ(rc.da.stepper.cfl_safety, 0.4);
    EXPECT_EQ(rc.da.seed, 42u);
    EXPECT_EQ(rc.da.assim_init, AssimInit::Perturbed);
    EXPECT_EQ(rc.da.checkpoint_interval, 1.0);
    EXPECT_EQ(rc.sweep.mu_list, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(rc.sweep.parallelism, 3);
}

TEST(Config, ErrorsNameKeyAndLine) {
    const std::string e = config_error("[physics]\n\nnu = -1\n");
    EXPECT_NE(e.find("line 3"), std::string::npos) << e;
    EXPECT_NE(e.find("nu"), std::string::npos) << e;

    EXPECT_NE(config_error("[physics]\nviscosity = 1\n").find("line 2: unknown key 'viscosity'"), std::string::npos);
    EXPECT_NE(config_error("[numerics]\n").find("unknown section"), std::string::npos);
    EXPECT_NE(config_error("[grid]\nnx = 12.5\n").find("line 2: nx: malformed integer"), std::string::npos);
    EXPECT_NE(config_error("[physics]\nkappa = abc\n").find("malformed number"), std::string::npos);
    EXPECT_NE(config_error("[physics]\nnu = 0.1\nnu = 0.2\n").find("line 3: duplicate key"), std::string::npos);
    EXPECT_NE(config_error("nu = 0.1\n").find("outside of any section"), std::string::npos);
    EXPECT_NE(config_error("[physics]\nnu\n").find("expected key = value"), std::string::npos);
    EXPECT_NE(config_error("[physics\n").find("malformed section"), std::string::npos);
    EXPECT_NE(config_error("[stepper]\nscheme = RK4\n").find("unknown scheme"), std::string::npos);
    EXPECT_NE(config_error("[interpolant]\nkind = Wavelets\n").find("line 2: kind"), std::string::npos);
    EXPECT_NE(config_error("[sweep]\nparallelism = 0\n").find("parallelism"), std::string::npos);
}

TEST(Config, NudgingGuardIsAttributed) {
    const std::string at_mu = config_error("[stepper]\ndt = 0.01\n[assimilation]\nmu = 100\n");
    EXPECT_NE(at_mu.find("line 4: mu"), std::string::npos) << at_mu;
    EXPECT_NE(at_mu.find("cfl_safety"), std::string::npos) << at_mu;
    const std::string at_dt = config_error("[stepper]\ndt = 0.01\n");  // default mu = 100
    EXPECT_NE(at_dt.find("line 2: dt"), std::string::npos) << at_dt;
    EXPECT_NE(config_error("[sweep]\nmu_list = 0, 1e5\n").find("mu_list"), std::string::npos);
}

TEST(Config, FileErrorsIncludePath) {
    const fs::path dir = scratch("cfg");
    spit(dir / "bad.ini", "[physics]\nnu = 0\n");
    try {
        io::parse_config((dir / "bad.ini").string());
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.ini: line 2: nu"), std::string::npos) << e.what();
    }
    EXPECT_THROW(io::parse_config((dir / "missing.ini").string()), ConfigError);
}

TEST(Config, SerializeRoundTripsRandomConfigs) {
    Rng rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int sizes[] = {16, 32, 64};
    const InterpolantKind kinds[] = {InterpolantKind::FourierModes, InterpolantKind::VolumeElements,
                                     InterpolantKind::NodalValues};
    for (int trial = 0; trial < 200; ++trial) {
        io::RunConfig rc;
        DAConfig& d = rc.da;
        d.phys = {1e-3 + u(rng), 1e-3 + u(rng)};
        const double L = 1.0 + 3.0 * u(rng);
        d.grid = Grid(L, sizes[trial % 3], sizes[(trial / 3) % 3], 0.5 + 0.2 * u(rng));
        const InterpolantKind k = kinds[trial % 3];
        // coarsest admissible h is min(L, 2) / 2; elements must not be finer than the grid
        const double hmax = 0.999 * std::min(L, 2.0) / 2;
        const double hmin = k == InterpolantKind::FourierModes ? 0.01 : std::max(L / d.grid.nx(), 2.0 / d.grid.ny());
        d.spec = InterpolantSpec(k, hmin + (hmax - hmin) * u(rng), L);
        d.stepper = {1e-4 + 1e-2 * u(rng), trial % 2 ? Scheme::CNAB2 : Scheme::ImexEuler, 0.1 + 0.9 * u(rng)};
        d.mu = 0.9 * d.stepper.max_stable_mu() * u(rng);
        d.spinup_T = 1 + 100 * u(rng);
        d.run_T = 1 + 100 * u(rng);
        d.seed = rng();
        d.init_amplitude = u(rng);
        d.sample_interval = 0.01 + u(rng);
        d.checkpoint_interval = trial % 4 ? 0.0 : u(rng);
        d.assim_init = static_cast<AssimInit>(trial % 3);
        d.perturb_amplitude = u(rng);
        rc.sweep.mu_list = {0.0, d.mu * u(rng)};
        rc.sweep.h_list = {d.spec.h()};
        rc.sweep.parallelism = 1 + trial % 4;

        const std::string text = io::serialize(rc);
        io::RunConfig back;
        ASSERT_NO_THROW(back = io::parse_config_text(text)) << text;
        EXPECT_EQ(io::serialize(back), text);
        EXPECT_EQ(back.da.phys.nu, d.phys.nu);
        EXPECT_EQ(back.da.grid.L(), L);
        EXPECT_EQ(back.da.spec.h(), d.spec.h());
        EXPECT_EQ(back.da.stepper.dt, d.stepper.dt);
        EXPECT_EQ(back.da.mu, d.mu);
        EXPECT_EQ(back.da.seed, d.seed);
        EXPECT_EQ(back.sweep.mu_list, rc.sweep.mu_list);
    }
}

TEST(Config, CommentsAndSpacingNormalize) {
    const std::string messy = "# header\n\n[physics]   \n  nu=0.05 # trailing\n;full comment\n\tkappa =   0.01\n";
    const std::string clean = "[physics]\nnu = 0.05\nkappa = 0.01\n";
    EXPECT_EQ(io::serialize(io::parse_config_text(messy)), io::serialize(io::parse_config_text(clean)));
}

// ---------------------------------------------------------------------------
// Checkpoints and signals

TEST(Checkpoint, ByteLayout) {
    const Grid g = small_grid(16);
    Rng rng(1);
    FlowState s = random_state(g, rng);
    s.time = 1.25;
    std::stringstream ss;
    io::write_checkpoint(ss, s);
    const std::string b = ss.str();
    ASSERT_EQ(b.size(), 5 + 4 + 4 + 8 + 8 + 3 * g.size() * 16);
    EXPECT_EQ(b.substr(0, 5), "BSYN1");
    EXPECT_EQ(static_cast<unsigned char>(b[5]), 16);  // nx, little-endian
    EXPECT_EQ(b[6], 0);
    double L, t, re;
    std::memcpy(&L, b.data() + 13, 8);
    std::memcpy(&t, b.data() + 21, 8);
    std::memcpy(&re, b.data() + 29 + 16, 8);  // u1 coefficient index 1
    EXPECT_EQ(L, g.L());
    EXPECT_EQ(t, 1.25);
    EXPECT_EQ(re, s.vel.u1().coeffs()[1].real());
}

TEST(Checkpoint, RoundTripIsExact) {
    const Grid g = small_grid();
    Rng rng(2);
    FlowState s = random_state(g, rng);
    s.time = 17.5;
    const fs::path p = scratch("ck") / "state.bsyn";
    io::save_checkpoint(p.string(), s);
    // equal values; re-projection may flip the sign of zero coefficients
    const FlowState b = io::load_checkpoint(p.string());
    EXPECT_EQ(b.time, s.time);
    auto same = [](std::span<const cplx> x, std::span<const cplx> y) { return std::equal(x.begin(), x.end(), y.begin()); };
    EXPECT_TRUE(same(b.vel.u1().coeffs(), s.vel.u1().coeffs()));
    EXPECT_TRUE(same(b.vel.u2().coeffs(), s.vel.u2().coeffs()));
    EXPECT_TRUE(same(b.temp.coeffs(), s.temp.coeffs()));
}

TEST(Checkpoint, RejectsCorruptInput) {
    const Grid g = small_grid(16);
    std::stringstream ss;
    io::write_checkpoint(ss, FlowState::zero(g));
    std::string b = ss.str();
    std::string bad = b;
    bad[0] = 'X';
    std::stringstream s1(bad);
    EXPECT_THROW(io::read_checkpoint(s1), io::FormatError);
    std::stringstream s2(b.substr(0, b.size() - 3));
    EXPECT_THROW(io::read_checkpoint(s2), io::FormatError);
    std::stringstream s3(b.substr(0, 10));
    EXPECT_THROW(io::read_checkpoint(s3), io::FormatError);
    std::string tiny = b;
    tiny[5] = 2;  // nx = 2
    std::stringstream s4(tiny);
    EXPECT_THROW(io::read_checkpoint(s4), io::FormatError);
    EXPECT_THROW(io::load_checkpoint("/nonexistent/x.bsyn"), io::FormatError);
}

TEST(Signal, RoundTripForAllKinds) {
    const Grid g = small_grid();
    Rng rng(3);
    const ScalarField u1 = random_scalar(g, Parity::EvenInX2, rng);
    for (auto k : {InterpolantKind::FourierModes, InterpolantKind::VolumeElements, InterpolantKind::NodalValues}) {
        const ObservedSignal obs = observe(u1, InterpolantSpec(k, 0.25, g.L()), 3.5);
        std::stringstream ss;
        io::write_signal(ss, obs);
        const ObservedSignal back = io::read_signal(ss);
        EXPECT_EQ(back.spec, obs.spec) << to_string(k);
        EXPECT_EQ(back.time, 3.5);
        EXPECT_EQ(back.data, obs.data);
        EXPECT_EQ(back.grid.nx(), g.nx());
        EXPECT_LT(rel_l2(lift(back, g), lift(obs, g)), 1e-15);
    }
}

TEST(Signal, RejectsBadHeaders) {
    std::stringstream a("not a signal\n");
    EXPECT_THROW(io::read_signal(a), io::FormatError);
    std::stringstream b("bsyn-signal 1\nkind FourierModes\ncolour blue\nend\n");
    EXPECT_THROW(io::read_signal(b), io::FormatError);
    std::stringstream c("bsyn-signal 1\nkind FourierModes\n");
    EXPECT_THROW(io::read_signal(c), io::FormatError);
    std::stringstream d("bsyn-signal 1\nkind FourierModes\nh 0.25\nL 2\nnx 16\nny 16\ntime 0\ncount 4\nend\n");
    EXPECT_THROW(io::read_signal(d), io::FormatError);  // payload missing
}

// ---------------------------------------------------------------------------
// CSV and manifest

TEST(Csv, SyncRecordHeaderAndExactValues) {
    SyncRecord rec;
    SyncSample s;
    s.time = 0.1;
    s.w_V0 = 1.0 / 3.0;
    s.alpha_monitor = 12345.678901234567;
    rec.rows.push_back(s);
    std::stringstream ss;
    io::write_sync_csv(ss, rec);
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    EXPECT_EQ(header, "time,w_L2,grad_w_L2,w_V0,xi_L2,grad_xi_L2,u_V0,theta_V1,alpha_monitor");
    std::vector<double> vals;
    std::stringstream rs(row);
    for (std::string cell; std::getline(rs, cell, ',');) vals.push_back(std::stod(cell));
    EXPECT_EQ(vals, SyncRecord::values(s));
}

TEST(Csv, SweepTableQuotesErrors) {
    SweepRow ok{50.0, 0.25, true, 2.0, true, 1.5, 0.99, 1e-20, ""};
    SweepRow bad;
    bad.mu = 1e4;
    bad.h = 0.25;
    bad.error = "mu * dt = \"5\"\nexceeds";
    std::stringstream ss;
    io::write_sweep_csv(ss, {ok, bad});
    std::string header, r1, r2, extra;
    std::getline(ss, header);
    std::getline(ss, r1);
    std::getline(ss, r2);
    EXPECT_FALSE(std::getline(ss, extra));
    EXPECT_EQ(header, "mu,h,feasible,slack,decayed,gamma_hat,r2,final_error,error");
    EXPECT_EQ(r1, "50,0.25,1,2,1,1.5,0.98999999999999999,9.9999999999999995e-21,\"\"");
    EXPECT_NE(r2.find("\"mu * dt = \"\"5\"\" exceeds\""), std::string::npos) << r2;
    EXPECT_NE(r2.find("nan"), std::string::npos);
}

TEST(Csv, GnuplotScriptNamesFiles) {
    const std::string s = io::gnuplot_script("sync.csv", "sync.png");
    EXPECT_NE(s.find("set output 'sync.png'"), std::string::npos);
    EXPECT_NE(s.find("'sync.csv' using 1:4"), std::string::npos);
    EXPECT_NE(s.find("logscale y"), std::string::npos);
}

TEST(Manifest, WritesJsonAndChecksOutputs) {
    const fs::path dir = scratch("manifest");
    spit(dir / "a.csv", "x\n");
    io::RunManifest m;
    m.config_snapshot = io::serialize(io::parse_config_text(""));
    m.seed = 9;
    m.started = io::utc_timestamp();
    m.finished = m.started;
    m.outputs = {"a.csv"};
    m.checks = {{"one", true, "ok"}, {"two", false, "bad"}};
    io::write_manifest(dir, m);
    EXPECT_FALSE(fs::exists(dir / "manifest.json.tmp"));
    const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(j["seed"], 9);
    EXPECT_EQ(j["version"], io::code_version);
    EXPECT_EQ(j["outputs"][0], "a.csv");
    EXPECT_EQ(j["checks"].size(), 2u);
    EXPECT_EQ(j["all_checks_passed"], false);
    EXPECT_EQ(io::serialize(io::parse_config_text(j["config"].get<std::string>())), m.config_snapshot);
    EXPECT_EQ(m.started.size(), 20u);
    EXPECT_EQ(m.started.back(), 'Z');

    m.outputs.push_back("missing.csv");
    EXPECT_THROW(io::write_manifest(dir, m), std::runtime_error);
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, VerifyPasses) {
    const fs::path dir = scratch("verify");
    EXPECT_EQ(run_cli("verify --out " + dir.string()), 0);
    const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(j["all_checks_passed"], true);
    EXPECT_GE(j["checks"].size(), 15u);
}

TEST(Cli, ConfigurationErrorsExitTwo) {
    const fs::path dir = scratch("cli_cfg");
    spit(dir / "run.ini", small_run_config);
    EXPECT_EQ(run_cli("run --config " + (dir / "run.ini").string() + " --mu 5000 --out " + (dir / "o").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "o" / "manifest.json"));
    spit(dir / "bad.ini", "[physics]\nnu = -1\n");
    EXPECT_EQ(run_cli("run --config " + (dir / "bad.ini").string() + " --out " + (dir / "o").string()), 2);
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.ini").string()), 2);
    EXPECT_EQ(run_cli("run --bogus-flag"), 2);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("sweep --config " + (dir / "run.ini").string() + " --parallelism 0"), 2);
}

TEST(Cli, RunWritesReproducibleOutputs) {
    const fs::path dir = scratch("cli_run");
    spit(dir / "run.ini", std::string(small_run_config) + "[physics]\nnu = 0.02\n");
    std::string cfg = slurp(dir / "run.ini");
    cfg.replace(cfg.find("sample_interval"), 0, "checkpoint_interval = 0.5\n");
    spit(dir / "run.ini", cfg);
    const std::string base = "run --config " + (dir / "run.ini").string() + " --gnuplot --out ";
    ASSERT_EQ(run_cli(base + (dir / "a").string()), 0);
    ASSERT_EQ(run_cli(base + (dir / "b").string()), 0);
    for (const char* f : {"config.ini", "run.log", "sync.csv", "sync.gp", "manifest.json"})
        EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / "sync.csv"), slurp(dir / "b" / "sync.csv"));
    EXPECT_EQ(slurp(dir / "a" / "config.ini"), slurp(dir / "b" / "config.ini"));
    EXPECT_TRUE(fs::exists(dir / "a" / "checkpoints" / "ref_000000200.bsyn"));
    EXPECT_TRUE(fs::exists(dir / "a" / "checkpoints" / "assim_000000000.bsyn"));
    EXPECT_EQ(slurp(dir / "a" / "checkpoints" / "ref_000000200.bsyn"),
              slurp(dir / "b" / "checkpoints" / "ref_000000200.bsyn"));

    const auto j = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
    EXPECT_EQ(j["all_checks_passed"], true);
    EXPECT_EQ(j["seed"], 1);
    for (const auto& o : j["outputs"]) EXPECT_TRUE(fs::exists(dir / "a" / o.get<std::string>())) << o;
    const io::RunConfig snap = io::parse_config_text(j["config"].get<std::string>());
    EXPECT_EQ(snap.da.grid.nx(), 32);
    EXPECT_EQ(snap.da.mu, 50.0);

    const std::string log = slurp(dir / "a" / "run.log");
    EXPECT_EQ(log.rfind("bsyn|", 0), 0u);
    EXPECT_NE(log.find("event=run_done"), std::string::npos);

    // a seed override changes the run and is recorded
    ASSERT_EQ(run_cli(base + (dir / "c").string() + " --seed 5"), 0);
    EXPECT_NE(slurp(dir / "a" / "sync.csv"), slurp(dir / "c" / "sync.csv"));
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "c" / "manifest.json"))["seed"], 5);
}

TEST(Cli, SweepWritesTable) {
    const fs::path dir = scratch("cli_sweep");
    spit(dir / "run.ini", small_run_config);
    ASSERT_EQ(run_cli("sweep --config " + (dir / "run.ini").string() + " --parallelism 2 --out " +
                      (dir / "s").string()),
              0);
    std::ifstream f(dir / "s" / "sweep.csv");
    std::string line;
    int rows = -1;
    while (std::getline(f, line)) ++rows;
    EXPECT_EQ(rows, 4);
    EXPECT_TRUE(fs::exists(dir / "s" / "manifest.json"));
}
