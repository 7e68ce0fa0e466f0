// Command-line front end: simulate / analyze / sweep / figure.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aoisim/experiments.hpp"
#include "aoisim/figures.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::int64_t realizations = -1;
    std::int64_t slots = -1;
    int workers = 0;
    std::string method = "beta";
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "config file (key = value lines)");
    cmd->add_option("--out", a.out_dir, "output directory");
    cmd->add_option("--seed", a.seed, "master seed")->each([&](const std::string&) {
        a.seed_set = true;
    });
    cmd->add_option("--realizations", a.realizations, "Monte Carlo realizations");
    cmd->add_option("--slots", a.slots, "slots per realization");
    cmd->add_option("--workers", a.workers, "worker threads (or AOI_WORKERS)");
    cmd->add_option("--method", a.method,
                    "analytic method(s), comma separated: mean, beta, exact, sim");
}

aoisim::RawConfig load_raw(const CommonArgs& a) {
    aoisim::RawConfig raw;
    if (!a.config_path.empty()) raw = aoisim::parse_config_file(a.config_path);
    if (a.seed_set) raw.seed = a.seed;
    if (a.realizations > 0) raw.realizations = a.realizations;
    if (a.slots > 0) {
        raw.slots = a.slots;
        if (raw.warmup_slots >= a.slots) raw.warmup_slots = -1; // rederive
    }
    return raw;
}

std::vector<std::string> split_methods(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string tok =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!tok.empty()) out.push_back(tok);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age-of-information simulator and solver for Poisson bipolar networks"};
    app.require_subcommand(1);

    CommonArgs sim_args, ana_args, sweep_args, fig_args;
    std::string sweep_param, sweep_values, figure_name;

    auto* simulate = app.add_subcommand("simulate", "run the network Monte Carlo");
    add_common(simulate, sim_args);

    auto* analyze = app.add_subcommand("analyze", "evaluate the analytic solvers");
    add_common(analyze, ana_args);

    auto* sweep = app.add_subcommand("sweep", "sweep one parameter");
    add_common(sweep, sweep_args);
    sweep->add_option("--param", sweep_param, "xi | access_p | lambda | link_distance_m | theta_db")
        ->required();
    sweep->add_option("--values", sweep_values, "START:STOP:STEP")->required();

    auto* figure = app.add_subcommand("figure", "emit figure-ready data");
    add_common(figure, fig_args);
    figure->add_option("name", figure_name, "cdf | stability | aoi_vs_xi | aoi_vs_p | aoi_vs_lambda")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            aoisim::RunOptions opt;
            opt.out_dir = sim_args.out_dir;
            opt.workers = sim_args.workers;
            const auto raw = load_raw(sim_args);
            const auto summary = aoisim::cmd_simulate(raw, opt);
            std::printf("links=%lld avg_aoi=%s peak_aoi=%s mean_mu=%s unstable=%s\n",
                        static_cast<long long>(summary.links),
                        aoisim::csv_num(summary.avg_aoi).c_str(),
                        aoisim::csv_num(summary.peak_aoi).c_str(),
                        aoisim::csv_num(summary.mean_mu).c_str(),
                        summary.unstable ? "true" : "false");
        } else if (analyze->parsed()) {
            aoisim::RunOptions opt;
            opt.out_dir = ana_args.out_dir;
            opt.workers = ana_args.workers;
            opt.methods = split_methods(ana_args.method);
            const auto raw = load_raw(ana_args);
            const auto rows = aoisim::cmd_analyze(raw, opt);
            for (const auto& r : rows)
                std::printf("method=%s p_s=%s xi_c=%s avg_fcfs=%s avg_lcfs=%s\n",
                            r.method.c_str(), aoisim::csv_num(r.p_s).c_str(),
                            aoisim::csv_num(r.xi_c).c_str(),
                            aoisim::csv_num(r.pred.avg_fcfs).c_str(),
                            aoisim::csv_num(r.pred.avg_lcfs).c_str());
        } else if (sweep->parsed()) {
            aoisim::RunOptions opt;
            opt.out_dir = sweep_args.out_dir;
            opt.workers = sweep_args.workers;
            const auto raw = load_raw(sweep_args);
            aoisim::SweepSpec spec;
            spec.param = sweep_param;
            spec.values = aoisim::parse_value_range(sweep_values);
            spec.methods = split_methods(sweep_args.method);
            spec.realizations_override = sweep_args.realizations;
            spec.slots_override = sweep_args.slots;
            aoisim::cmd_sweep(raw, spec, opt);
            std::printf("sweep complete: %zu values x %zu methods -> %s/sweep.csv\n",
                        spec.values.size(), spec.methods.size(), opt.out_dir.c_str());
        } else if (figure->parsed()) {
            aoisim::RunOptions opt;
            opt.out_dir = fig_args.out_dir;
            opt.workers = fig_args.workers;
            const auto raw = load_raw(fig_args);
            aoisim::FigureOptions fopt;
            const auto methods = split_methods(fig_args.method);
            for (const auto& m : methods) {
                if (m == "exact") fopt.with_exact = true;
                if (m == "none") fopt.with_sim = false;
            }
            aoisim::cmd_figure(figure_name, raw, opt, fopt);
            std::printf("figure %s written to %s\n", figure_name.c_str(),
                        fig_args.out_dir.c_str());
        }
    } catch (const aoisim::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const aoisim::NumericsError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const aoisim::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
