#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "aoisim/experiments.hpp"

namespace aoisim {

// Figure-ready data sets. Each emits one CSV with simulation and analytic
// columns side by side; cells that a preset does not compute hold "nan".

struct FigureOptions {
    bool with_sim = true;
    bool with_exact = false; // add the exact fixed-point CDF where applicable
};

inline const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names = {"cdf", "stability", "aoi_vs_xi",
                                                   "aoi_vs_p", "aoi_vs_lambda"};
    return names;
}

/// Empirical + analytic CDF of the conditional success probability,
/// r = 25 m, xi in {0.1, 0.3, 0.5}.
inline void figure_cdf(const RawConfig& base, const RunOptions& opt,
                       const FigureOptions& fig) {
    ensure_dir(opt.out_dir);
    CsvWriter w((std::filesystem::path(opt.out_dir) / "fig_cdf.csv").string());
    w.header({"u", "xi", "F_sim", "F_beta", "F_exact"});
    for (double xi : {0.1, 0.3, 0.5}) {
        RawConfig raw = base;
        raw.link_distance_m = 25.0;
        raw.xi = xi;
        const auto v = validate(raw);
        MuCdf sim;
        if (fig.with_sim) {
            auto runs = run_batch(v.net, v.sim, opt.workers);
            sim = pool_mu_cdf(runs);
        }
        auto beta = beta_meta(v.net);
        MetaDistribution exact;
        bool have_exact = false;
        if (fig.with_exact) {
            std::vector<double> grid;
            for (int i = 0; i <= 100; ++i) grid.push_back(i * 0.01);
            ExactMetaOptions eo;
            eo.gp.tolerate_slow_tail = true;
            try {
                exact = exact_meta_cdf(v.net, grid, eo);
                have_exact = true;
            } catch (const NumericsError&) {
                have_exact = false; // reported as nan column
            }
        }
        for (int i = 0; i <= 100; ++i) {
            const double u = i * 0.01;
            w.row(u, xi,
                  fig.with_sim ? sim.grid_F[static_cast<std::size_t>(i)] : std::nan(""),
                  beta.cdf(u),
                  have_exact ? exact.grid_F[static_cast<std::size_t>(i)] : std::nan(""));
        }
    }
}

/// Critical update frequency across transmitter-receiver distances.
inline void figure_stability(const RawConfig& base, const RunOptions& opt) {
    ensure_dir(opt.out_dir);
    CsvWriter w((std::filesystem::path(opt.out_dir) / "fig_stability.csv").string());
    w.header({"r_m", "xi_c"});
    for (double r = 5.0; r <= 100.0 + 1e-9; r += 5.0) {
        RawConfig raw = base;
        raw.link_distance_m = r;
        const auto v = validate(raw);
        w.row(r, critical_xi(v.net));
    }
}

namespace detail_fig {

struct SimPoint {
    double avg_fcfs, peak_fcfs, avg_lcfs, peak_lcfs;
    bool fcfs_unstable;
};

inline SimPoint simulate_both(RawConfig raw, const RunOptions& opt) {
    raw.seed = raw.seed ^ config_hash(raw);
    SimPoint out{};
    for (const char* disc : {"fcfs", "lcfs_pr"}) {
        RawConfig r2 = raw;
        r2.discipline = disc;
        auto v = validate(r2);
        auto s = summarize(run_batch(v.net, v.sim, opt.workers));
        const double inf = std::numeric_limits<double>::infinity();
        if (std::string(disc) == "fcfs") {
            out.avg_fcfs = s.unstable ? inf : s.avg_aoi;
            out.peak_fcfs = s.unstable ? inf : s.peak_aoi;
            out.fcfs_unstable = s.unstable;
        } else {
            out.avg_lcfs = s.avg_aoi;
            out.peak_lcfs = s.peak_aoi;
        }
    }
    return out;
}

inline void aoi_row(CsvWriter& w, const std::vector<double>& lead, const RawConfig& raw,
                    bool with_sim, const RunOptions& opt) {
    AnalyticRow beta = analyze_point(raw, "beta");
    AnalyticRow mean = analyze_point(raw, "mean");
    SimPoint sim{std::nan(""), std::nan(""), std::nan(""), std::nan(""), false};
    if (with_sim) sim = simulate_both(raw, opt);
    std::vector<std::string> cells;
    for (double v : lead) cells.push_back(csv_num(v));
    for (double v : {sim.avg_fcfs, sim.peak_fcfs, sim.avg_lcfs, sim.peak_lcfs,
                     beta.pred.avg_fcfs, beta.pred.peak_fcfs, beta.pred.avg_lcfs,
                     beta.pred.peak_lcfs, mean.pred.avg_fcfs, mean.pred.peak_fcfs,
                     mean.pred.avg_lcfs, mean.pred.peak_lcfs, beta.p_s, beta.xi_c})
        cells.push_back(csv_num(v));
    w.write_row_strings(cells);
}

} // namespace detail_fig

/// Average/peak AoI across the update frequency, both disciplines.
inline void figure_aoi_vs_xi(const RawConfig& base, const RunOptions& opt,
                             const FigureOptions& fig) {
    ensure_dir(opt.out_dir);
    CsvWriter w((std::filesystem::path(opt.out_dir) / "fig_aoi_vs_xi.csv").string());
    w.header({"xi", "sim_avg_fcfs", "sim_peak_fcfs", "sim_avg_lcfs", "sim_peak_lcfs",
              "beta_avg_fcfs", "beta_peak_fcfs", "beta_avg_lcfs", "beta_peak_lcfs",
              "mean_avg_fcfs", "mean_peak_fcfs", "mean_avg_lcfs", "mean_peak_lcfs",
              "p_s", "xi_c"});
    for (double xi = 0.05; xi <= 0.50 + 1e-9; xi += 0.05) {
        RawConfig raw = base;
        raw.xi = xi;
        detail_fig::aoi_row(w, {xi}, raw, fig.with_sim, opt);
    }
}

/// AoI across the channel access probability at sparse and dense densities.
/// Simulation spot-checks run at three access probabilities per density; the
/// dense preset shrinks the region so the interferer tables stay tractable.
inline void figure_aoi_vs_p(const RawConfig& base, const RunOptions& opt,
                            const FigureOptions& fig) {
    ensure_dir(opt.out_dir);
    CsvWriter w((std::filesystem::path(opt.out_dir) / "fig_aoi_vs_p.csv").string());
    w.header({"lambda", "p", "sim_avg_fcfs", "sim_peak_fcfs", "sim_avg_lcfs",
              "sim_peak_lcfs", "beta_avg_fcfs", "beta_peak_fcfs", "beta_avg_lcfs",
              "beta_peak_lcfs", "mean_avg_fcfs", "mean_peak_fcfs", "mean_avg_lcfs",
              "mean_peak_lcfs", "p_s", "xi_c"});
    for (double lambda : {1e-4, 2e-3}) {
        for (int i = 1; i <= 10; ++i) {
            const double p = 0.1 * i;
            RawConfig raw = base;
            raw.lambda_per_m2 = lambda;
            raw.access_p = p;
            if (lambda > 1e-3) raw.area_km2 = std::min(raw.area_km2, 0.5);
            const bool spot = fig.with_sim && (i == 4 || i == 6 || i == 9);
            detail_fig::aoi_row(w, {lambda, p}, raw, spot, opt);
        }
    }
}

/// AoI across deployment density.
inline void figure_aoi_vs_lambda(const RawConfig& base, const RunOptions& opt,
                                 const FigureOptions& fig) {
    ensure_dir(opt.out_dir);
    CsvWriter w((std::filesystem::path(opt.out_dir) / "fig_aoi_vs_lambda.csv").string());
    w.header({"lambda", "sim_avg_fcfs", "sim_peak_fcfs", "sim_avg_lcfs", "sim_peak_lcfs",
              "beta_avg_fcfs", "beta_peak_fcfs", "beta_avg_lcfs", "beta_peak_lcfs",
              "mean_avg_fcfs", "mean_peak_fcfs", "mean_avg_lcfs", "mean_peak_lcfs",
              "p_s", "xi_c"});
    const double lambdas[] = {1e-5, 2e-5, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3};
    int idx = 0;
    for (double lambda : lambdas) {
        RawConfig raw = base;
        raw.lambda_per_m2 = lambda;
        if (lambda > 3e-4) raw.area_km2 = std::min(raw.area_km2, 1.0);
        const bool spot = fig.with_sim && (idx == 0 || idx == 3 || idx == 5);
        detail_fig::aoi_row(w, {lambda}, raw, spot, opt);
        ++idx;
    }
}

inline void cmd_figure(const std::string& which, const RawConfig& base,
                       const RunOptions& opt, const FigureOptions& fig) {
    if (which == "cdf")
        figure_cdf(base, opt, fig);
    else if (which == "stability")
        figure_stability(base, opt);
    else if (which == "aoi_vs_xi")
        figure_aoi_vs_xi(base, opt, fig);
    else if (which == "aoi_vs_p")
        figure_aoi_vs_p(base, opt, fig);
    else if (which == "aoi_vs_lambda")
        figure_aoi_vs_lambda(base, opt, fig);
    else {
        std::string names;
        for (const auto& n : figure_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown figure \"" + which + "\"; valid names: " + names);
    }
}

} // namespace aoisim
