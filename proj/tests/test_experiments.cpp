#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aoisim/experiments.hpp"
#include "aoisim/figures.hpp"

using namespace aoisim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RawConfig small_raw() {
    RawConfig raw;
    raw.area_km2 = 1.0;
    raw.slots = 2000;
    raw.warmup_slots = 400;
    raw.realizations = 6;
    raw.seed = 99;
    return raw;
}

fs::path fresh_dir(const char* name) {
    fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

} // namespace

TEST_CASE("csv number formatting") {
    CHECK(csv_num(1.0) == "1");
    CHECK(csv_num(0.25) == "0.25");
    CHECK(csv_num(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(csv_num(std::nan("")) == "nan");
    CHECK(csv_num(std::int64_t{-7}) == "-7");
    // shortest round-trip
    CHECK(std::stod(csv_num(0.1)) == 0.1);
    CHECK(std::stod(csv_num(5.877e-7)) == 5.877e-7);
}

TEST_CASE("value range parsing") {
    auto v = parse_value_range("0.05:0.60:0.05");
    CHECK(v.size() == 12);
    CHECK(v.front() == doctest::Approx(0.05));
    CHECK(v.back() == doctest::Approx(0.60));
    CHECK_THROWS_AS(parse_value_range("1:2"), ConfigError);
    CHECK_THROWS_AS(parse_value_range("2:1:0.5"), ConfigError);
    CHECK_THROWS_AS(parse_value_range("1:2:0"), ConfigError);
}

TEST_CASE("apply_param covers the sweepable parameters") {
    RawConfig raw;
    CHECK(apply_param(raw, "xi", 0.4).xi == 0.4);
    CHECK(apply_param(raw, "access_p", 0.9).access_p == 0.9);
    CHECK(apply_param(raw, "lambda", 2e-3).lambda_per_m2 == 2e-3);
    CHECK(apply_param(raw, "link_distance_m", 25.0).link_distance_m == 25.0);
    CHECK(apply_param(raw, "theta_db", 3.0).theta_db == 3.0);
    CHECK_THROWS_AS(apply_param(raw, "bogus", 1.0), ConfigError);
}

TEST_CASE("simulate outputs are byte-identical across worker counts"
          * doctest::timeout(300)) {
    auto raw = small_raw();
    const auto d1 = fresh_dir("aoisim_w1");
    const auto d8 = fresh_dir("aoisim_w8");
    RunOptions o1;
    o1.out_dir = d1.string();
    o1.workers = 1;
    RunOptions o8;
    o8.out_dir = d8.string();
    o8.workers = 8;
    cmd_simulate(raw, o1);
    cmd_simulate(raw, o8);
    CHECK(slurp(d1 / "sim_links.csv") == slurp(d8 / "sim_links.csv"));
    CHECK(slurp(d1 / "sim_summary.csv") == slurp(d8 / "sim_summary.csv"));

    // and the header row is exactly the pinned schema
    const std::string links = slurp(d1 / "sim_links.csv");
    CHECK(links.rfind("realization,link_id,avg_aoi,peak_aoi,mu_hat,activity,"
                      "attempts,resets,queue_slope\n", 0) == 0);
}

TEST_CASE("sweep is resumable and reruns byte-identically" * doctest::timeout(600)) {
    auto raw = small_raw();
    const auto dir = fresh_dir("aoisim_sweep");
    RunOptions opt;
    opt.out_dir = dir.string();
    opt.workers = 2;

    SweepSpec spec;
    spec.param = "xi";
    spec.values = {0.1, 0.2, 0.3};
    spec.methods = {"mean", "sim"};
    spec.realizations_override = 4;
    spec.slots_override = 1500;

    cmd_sweep(raw, spec, opt);
    const std::string first = slurp(dir / "sweep.csv");
    // 3 values x 2 methods, plus header
    CHECK(std::count(first.begin(), first.end(), '\n') == 7);

    // drop one point from the manifest: only that point is recomputed, and
    // the regenerated CSV matches byte for byte
    {
        Manifest m = Manifest::open(dir.string(), raw);
        m.doc["points"].erase("xi=0.2:sim");
        m.save();
    }
    cmd_sweep(raw, spec, opt);
    CHECK(slurp(dir / "sweep.csv") == first);

    // a partial-failure point is marked but the run continues
    SweepSpec bad = spec;
    bad.methods = {"nope", "mean"};
    cmd_sweep(raw, bad, opt);
    Manifest m = Manifest::open(dir.string(), raw);
    REQUIRE(m.find_point("xi=0.1:nope") != nullptr);
    CHECK((*m.find_point("xi=0.1:nope"))["status"] == "failed");
    CHECK(m.find_point("xi=0.1:mean") != nullptr);
}

TEST_CASE("analytic csv carries the pinned schema and inf literals") {
    auto raw = small_raw();
    raw.lambda_per_m2 = 1e-3; // xi = 0.3 is unstable here: FCFS fields go inf
    const auto dir = fresh_dir("aoisim_analytic");
    RunOptions opt;
    opt.out_dir = dir.string();
    opt.methods = {"mean"};
    cmd_analyze(raw, opt);
    const std::string text = slurp(dir / "analytic.csv");
    CHECK(text.rfind("lambda,r,xi,p,theta_db,method,p_s,xi_c,c1,c2,beta_a,beta_b,"
                     "avg_fcfs,peak_fcfs,avg_lcfs,peak_lcfs,iterations,residual\n",
                     0) == 0);
    CHECK(text.find(",inf,") != std::string::npos);
    CHECK(text.find(",nan,") != std::string::npos); // c1 not defined for mean
}

TEST_CASE("unstable traffic flags the summary row and makes AoI cells inf"
          * doctest::timeout(300)) {
    RawConfig raw = small_raw();
    raw.xi = 0.7; // well above xi_c = p * ps_dominant ~ 0.56
    raw.slots = 6000;
    raw.warmup_slots = 1000;
    raw.realizations = 2;
    const auto dir = fresh_dir("aoisim_unstable");
    RunOptions opt;
    opt.out_dir = dir.string();
    auto s = cmd_simulate(raw, opt);
    CHECK(s.unstable);
    const std::string text = slurp(dir / "sim_summary.csv");
    CHECK(text.find(",inf,") != std::string::npos);
    CHECK(text.find(",true,") != std::string::npos);
}

TEST_CASE("stability figure emits the (r, xi_c) table" * doctest::timeout(600)) {
    auto raw = small_raw();
    const auto dir = fresh_dir("aoisim_fig");
    RunOptions opt;
    opt.out_dir = dir.string();
    figure_stability(raw, opt);
    const std::string text = slurp(dir / "fig_stability.csv");
    CHECK(text.rfind("r_m,xi_c\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 21); // header + 20 radii
    CHECK_THROWS_WITH_AS(cmd_figure("nope", raw, opt, FigureOptions{}),
                         doctest::Contains("valid names"), ConfigError);
}

TEST_CASE("cli binary: exit codes and determinism" * doctest::timeout(300)) {
    const std::string bin = AOISIM_BIN;
    const auto dir = fresh_dir("aoisim_cli_t");
    auto run = [&](const std::string& args) {
        const std::string cmd = bin + " " + args + " >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        return WEXITSTATUS(rc);
    };
    CHECK(run("analyze --method mean --out " + (dir / "a").string()) == 0);
    CHECK(run("figure nope --out " + dir.string()) == 2);
    CHECK(run("analyze --method bogus --out " + dir.string()) == 2);
    CHECK(run("simulate --config /nonexistent.cfg --out " + dir.string()) == 4);

    const std::string cfg = std::string(AOISIM_CONFIG_DIR) + "/default.cfg";
    const std::string common =
        " --config " + cfg + " --realizations 3 --slots 1200 --seed 5 --out ";
    CHECK(run("simulate" + common + (dir / "s1").string() + " --workers 1") == 0);
    CHECK(run("simulate" + common + (dir / "s2").string() + " --workers 8") == 0);
    CHECK(slurp(dir / "s1" / "sim_links.csv") == slurp(dir / "s2" / "sim_links.csv"));
    CHECK(slurp(dir / "s1" / "sim_summary.csv") == slurp(dir / "s2" / "sim_summary.csv"));
}
