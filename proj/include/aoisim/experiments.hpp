#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoisim/csv.hpp"
#include "aoisim/meta.hpp"
#include "aoisim/network_aoi.hpp"
#include "aoisim/simulator.hpp"
#include "aoisim/stability.hpp"
#include "aoisim/workers.hpp"

namespace aoisim {

inline constexpr const char* kCodeVersion = "aoisim 0.1.0";

struct RunOptions {
    std::string out_dir = ".";
    int workers = 0; // 0: AOI_WORKERS or hardware concurrency
    std::vector<std::string> methods = {"beta"};
    bool quiet = false;
};

// ---------------------------------------------------------------------------
// Parallel Monte Carlo driver: realizations are independent tasks, results
// land in per-index slots, aggregation is sequential, so output bytes do not
// depend on the worker count.

inline std::vector<SimResults> run_batch(const NetworkConfig& net, const SimSettings& st,
                                         int workers) {
    std::vector<SimResults> out(static_cast<std::size_t>(st.realizations));
    const CounterRng master(st.seed);
    run_indexed(st.realizations, resolve_workers(workers), [&](std::int64_t i) {
        out[static_cast<std::size_t>(i)] = run_realization(net, st, master, i);
    });
    return out;
}

struct NetworkSummary {
    double avg_aoi = 0.0, avg_aoi_ci = 0.0;
    double peak_aoi = 0.0, peak_aoi_ci = 0.0;
    double mean_mu = 0.0, mean_activity = 0.0;
    double median_queue_slope = 0.0;
    std::int64_t links = 0, excluded_peak = 0, excluded_mu = 0;
    std::uint64_t resample_events = 0;
    bool unstable = false;
};

inline NetworkSummary summarize(const std::vector<SimResults>& runs,
                                double slope_threshold = 1e-3) {
    NetworkSummary s;
    const auto n = static_cast<double>(runs.size());
    if (runs.empty()) return s;
    double a1 = 0, a2 = 0, p1 = 0, p2 = 0;
    std::vector<double> slopes;
    for (const auto& r : runs) {
        a1 += r.network_avg_aoi;
        a2 += r.network_avg_aoi * r.network_avg_aoi;
        p1 += r.network_peak_aoi;
        p2 += r.network_peak_aoi * r.network_peak_aoi;
        s.mean_mu += r.mean_mu;
        s.mean_activity += r.mean_activity;
        s.links += r.links_total;
        s.excluded_peak += r.links_excluded_peak;
        s.excluded_mu += r.links_excluded_mu;
        s.resample_events += r.resample_events;
        s.unstable = s.unstable || r.unstable_abort;
        for (const auto& L : r.links) slopes.push_back(L.queue_slope);
    }
    s.avg_aoi = a1 / n;
    s.peak_aoi = p1 / n;
    s.mean_mu /= n;
    s.mean_activity /= n;
    if (runs.size() > 1) {
        const double va = std::max(0.0, a2 / n - s.avg_aoi * s.avg_aoi);
        const double vp = std::max(0.0, p2 / n - s.peak_aoi * s.peak_aoi);
        s.avg_aoi_ci = 1.96 * std::sqrt(va / (n - 1.0));
        s.peak_aoi_ci = 1.96 * std::sqrt(vp / (n - 1.0));
    }
    if (!slopes.empty()) {
        std::nth_element(slopes.begin(), slopes.begin() + slopes.size() / 2, slopes.end());
        s.median_queue_slope = slopes[slopes.size() / 2];
    }
    s.unstable = s.unstable || std::fabs(s.median_queue_slope) > slope_threshold;
    return s;
}

// ---------------------------------------------------------------------------
// CSV emitters with the pinned schemas.

inline void write_sim_links_csv(const std::string& path, const std::vector<SimResults>& runs) {
    CsvWriter w(path);
    w.header({"realization", "link_id", "avg_aoi", "peak_aoi", "mu_hat", "activity",
              "attempts", "resets", "queue_slope"});
    for (const auto& r : runs) {
        for (std::size_t i = 0; i < r.links.size(); ++i) {
            const auto& L = r.links[i];
            w.row(r.realization, static_cast<std::int64_t>(i), L.avg_aoi,
                  L.peak_valid ? L.peak_aoi : std::nan(""),
                  L.mu_valid ? L.mu_hat : std::nan(""), L.activity, L.attempts,
                  L.resets, L.queue_slope);
        }
    }
}

inline void write_sim_summary_csv(const std::string& path, const RawConfig& raw,
                                  const NetworkSummary& s) {
    CsvWriter w(path);
    w.header({"config_hash", "lambda", "r_m", "alpha", "theta_db", "p", "xi",
              "discipline", "realizations", "slots", "warmup_slots", "links",
              "avg_aoi", "avg_aoi_ci", "peak_aoi", "peak_aoi_ci", "mean_mu",
              "mean_activity", "median_queue_slope", "unstable", "excluded_peak",
              "excluded_mu", "resample_events"});
    const double inf = std::numeric_limits<double>::infinity();
    w.row(csv_num(config_hash(raw)), raw.lambda_per_m2, raw.link_distance_m, raw.alpha,
          raw.theta_db, raw.access_p, raw.xi, raw.discipline, raw.realizations,
          raw.slots, raw.warmup_slots, s.links, s.unstable ? inf : s.avg_aoi,
          s.avg_aoi_ci, s.unstable ? inf : s.peak_aoi, s.peak_aoi_ci, s.mean_mu,
          s.mean_activity, s.median_queue_slope, s.unstable, s.excluded_peak,
          s.excluded_mu, s.resample_events);
}

struct AnalyticRow {
    RawConfig raw;
    std::string method;
    double p_s = std::nan("");
    double xi_c = std::nan("");
    double c1 = std::nan(""), c2 = std::nan("");
    double beta_a = std::nan(""), beta_b = std::nan("");
    AoiPrediction pred;
    std::int64_t iterations = 0;
    double residual = 0.0;
};

inline AnalyticRow analyze_point(const RawConfig& raw, const std::string& method) {
    const auto v = validate(raw);
    AnalyticRow row;
    row.raw = raw;
    row.method = method;
    row.p_s = solve_ps(v.net, v.net.xi);
    row.xi_c = critical_xi(v.net);
    if (method == "mean") {
        row.pred = aoi_predict(v.net, MetaDistribution{}, AoiMethod::MeanApprox);
        row.iterations = 1;
    } else if (method == "beta") {
        auto meta = beta_meta(v.net);
        row.c1 = meta.c1;
        row.c2 = meta.c2;
        if (meta.kind == MetaKind::Beta) {
            row.beta_a = meta.shape_a;
            row.beta_b = meta.shape_b;
        }
        row.iterations = meta.iterations_used;
        row.residual = meta.converged_residual;
        row.pred = aoi_predict(v.net, meta, AoiMethod::BetaMeta);
    } else if (method == "exact") {
        std::vector<double> grid;
        for (int i = 0; i <= 200; ++i) grid.push_back(i * 0.005);
        ExactMetaOptions opt;
        opt.gp.tolerate_slow_tail = true; // residual is reported, not fatal
        auto meta = exact_meta_cdf(v.net, grid, opt);
        row.c1 = meta.c1;
        row.c2 = meta.c2;
        row.iterations = meta.iterations_used;
        row.residual = meta.inversion_residual;
        row.pred = aoi_predict(v.net, meta, AoiMethod::ExactMeta);
    } else {
        throw ConfigError("unknown analytic method: \"" + method +
                          "\" (expected mean, beta, or exact)");
    }
    return row;
}

inline const std::vector<std::string>& analytic_columns() {
    static const std::vector<std::string> cols = {
        "lambda", "r", "xi", "p", "theta_db", "method", "p_s", "xi_c", "c1", "c2",
        "beta_a", "beta_b", "avg_fcfs", "peak_fcfs", "avg_lcfs", "peak_lcfs",
        "iterations", "residual"};
    return cols;
}

inline void append_analytic_row(CsvWriter& w, const AnalyticRow& r) {
    w.row(r.raw.lambda_per_m2, r.raw.link_distance_m, r.raw.xi, r.raw.access_p,
          r.raw.theta_db, r.method, r.p_s, r.xi_c, r.c1, r.c2, r.beta_a, r.beta_b,
          r.pred.avg_fcfs, r.pred.peak_fcfs, r.pred.avg_lcfs, r.pred.peak_lcfs,
          r.iterations, r.residual);
}

// ---------------------------------------------------------------------------
// Manifest: reviewable record of a run; re-running reproduces the data files
// byte for byte because every output is a pure function of (config, seed).

struct Manifest {
    nlohmann::json doc;
    std::string path;

    static Manifest open(const std::string& dir, const RawConfig& raw) {
        Manifest m;
        m.path = (std::filesystem::path(dir) / "manifest.json").string();
        if (std::filesystem::exists(m.path)) {
            std::ifstream in(m.path);
            try {
                in >> m.doc;
            } catch (const std::exception&) {
                m.doc = nlohmann::json::object();
            }
        }
        if (!m.doc.is_object()) m.doc = nlohmann::json::object();
        const std::string hash = csv_num(config_hash(raw));
        if (m.doc.value("config_hash", "") != hash) {
            m.doc = nlohmann::json::object();
            m.doc["config_hash"] = hash;
            m.doc["code_version"] = kCodeVersion;
            m.doc["seed"] = raw.seed;
            m.doc["points"] = nlohmann::json::object();
        }
        return m;
    }

    nlohmann::json* find_point(const std::string& key) {
        auto& pts = doc["points"];
        auto it = pts.find(key);
        return it == pts.end() ? nullptr : &*it;
    }

    void record_point(const std::string& key, nlohmann::json point) {
        doc["points"][key] = std::move(point);
        save();
    }

    void save() const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write manifest: " + path);
        out << doc.dump(2) << '\n';
    }
};

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

// ---------------------------------------------------------------------------
// Subcommand drivers.

inline NetworkSummary cmd_simulate(const RawConfig& raw_in, const RunOptions& opt) {
    const auto v = validate(raw_in);
    RawConfig raw = raw_in;
    raw.warmup_slots = v.sim.warmup_slots; // record the effective value
    ensure_dir(opt.out_dir);
    auto runs = run_batch(v.net, v.sim, opt.workers);
    const auto dir = std::filesystem::path(opt.out_dir);
    write_sim_links_csv((dir / "sim_links.csv").string(), runs);
    auto summary = summarize(runs);
    write_sim_summary_csv((dir / "sim_summary.csv").string(), raw, summary);
    Manifest m = Manifest::open(opt.out_dir, raw);
    nlohmann::json point;
    point["status"] = "done";
    point["files"] = {"sim_links.csv", "sim_summary.csv"};
    point["links"] = summary.links;
    m.record_point("simulate", std::move(point));
    return summary;
}

inline std::vector<AnalyticRow> cmd_analyze(const RawConfig& raw, const RunOptions& opt) {
    ensure_dir(opt.out_dir);
    std::vector<AnalyticRow> rows;
    for (const auto& method : opt.methods) rows.push_back(analyze_point(raw, method));
    CsvWriter w((std::filesystem::path(opt.out_dir) / "analytic.csv").string());
    w.header(analytic_columns());
    for (const auto& r : rows) append_analytic_row(w, r);
    return rows;
}

// --------------------------- parameter sweeps ------------------------------

struct SweepSpec {
    std::string param;          // xi | access_p | lambda | link_distance_m | theta_db
    std::vector<double> values;
    std::vector<std::string> methods = {"beta"};
    std::int64_t realizations_override = -1;
    std::int64_t slots_override = -1;
};

inline std::vector<double> parse_value_range(const std::string& text) {
    // START:STOP:STEP, inclusive of STOP up to a half-step tolerance
    std::vector<double> out;
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw ConfigError("--values expects START:STOP:STEP, got \"" + text + "\"");
    const double start = std::stod(text.substr(0, c1));
    const double stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(text.substr(c2 + 1));
    if (!(step > 0.0) || stop < start)
        throw ConfigError("--values range must have positive step and stop >= start");
    for (double v = start; v <= stop + 0.5 * step; v += step)
        out.push_back(std::min(v, stop));
    return out;
}

inline RawConfig apply_param(RawConfig raw, const std::string& param, double value) {
    if (param == "xi")
        raw.xi = value;
    else if (param == "access_p")
        raw.access_p = value;
    else if (param == "lambda")
        raw.lambda_per_m2 = value;
    else if (param == "link_distance_m")
        raw.link_distance_m = value;
    else if (param == "theta_db")
        raw.theta_db = value;
    else
        throw ConfigError("unknown sweep parameter \"" + param +
                          "\" (expected xi, access_p, lambda, link_distance_m, theta_db)");
    return raw;
}

/// One sweep point evaluated for one method; "sim" runs both disciplines.
struct SweepRow {
    std::string param;
    double value = 0.0;
    AnalyticRow analytic;                // for analytic methods
    double sim_avg_fcfs = std::nan(""), sim_peak_fcfs = std::nan("");
    double sim_avg_lcfs = std::nan(""), sim_peak_lcfs = std::nan("");
    double sim_mean_mu = std::nan("");
    bool sim_unstable = false;
};

inline nlohmann::json sweep_row_to_json(const SweepRow& r, const std::string& method) {
    nlohmann::json j;
    j["param"] = r.param;
    j["value"] = r.value;
    j["method"] = method;
    auto put = [&](const char* k, double v) {
        if (std::isnan(v))
            j[k] = "nan";
        else if (std::isinf(v))
            j[k] = v > 0 ? "inf" : "-inf";
        else
            j[k] = v;
    };
    put("p_s", r.analytic.p_s);
    put("xi_c", r.analytic.xi_c);
    put("c1", r.analytic.c1);
    put("c2", r.analytic.c2);
    put("beta_a", r.analytic.beta_a);
    put("beta_b", r.analytic.beta_b);
    put("avg_fcfs", r.analytic.pred.avg_fcfs);
    put("peak_fcfs", r.analytic.pred.peak_fcfs);
    put("avg_lcfs", r.analytic.pred.avg_lcfs);
    put("peak_lcfs", r.analytic.pred.peak_lcfs);
    j["iterations"] = r.analytic.iterations;
    put("residual", r.analytic.residual);
    put("sim_avg_fcfs", r.sim_avg_fcfs);
    put("sim_peak_fcfs", r.sim_peak_fcfs);
    put("sim_avg_lcfs", r.sim_avg_lcfs);
    put("sim_peak_lcfs", r.sim_peak_lcfs);
    put("sim_mean_mu", r.sim_mean_mu);
    j["sim_unstable"] = r.sim_unstable;
    return j;
}

inline double json_cell(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return std::nan("");
    if (j[key].is_string()) {
        const std::string s = j[key].get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        return std::nan("");
    }
    return j[key].get<double>();
}

inline void write_sweep_csv(const std::string& path, const nlohmann::json& points,
                            const std::vector<std::string>& keys) {
    CsvWriter w(path);
    std::vector<std::string> cols = {"param", "value", "method"};
    static const std::vector<std::string> numeric = {
        "p_s", "xi_c", "c1", "c2", "beta_a", "beta_b", "avg_fcfs", "peak_fcfs",
        "avg_lcfs", "peak_lcfs", "iterations", "residual", "sim_avg_fcfs",
        "sim_peak_fcfs", "sim_avg_lcfs", "sim_peak_lcfs", "sim_mean_mu",
        "sim_unstable"};
    for (const auto& c : numeric) cols.push_back(c);
    w.header(cols);
    for (const auto& key : keys) {
        if (!points.contains(key)) continue;
        const auto& j = points[key];
        if (j.value("status", "") != "done") continue;
        const auto& row = j["row"];
        std::vector<std::string> cells = {row["param"].get<std::string>(),
                                          csv_num(row["value"].get<double>()),
                                          row["method"].get<std::string>()};
        for (const auto& c : numeric) {
            if (c == "iterations") {
                cells.push_back(csv_num(row.value("iterations", std::int64_t{0})));
            } else if (c == "sim_unstable") {
                cells.push_back(row.value("sim_unstable", false) ? "true" : "false");
            } else {
                cells.push_back(csv_num(json_cell(row, c.c_str())));
            }
        }
        w.write_row_strings(cells);
    }
}

/// Cartesian sweep with per-point manifest entries; completed points are
/// skipped on re-runs, failed points are marked and the run continues.
inline void cmd_sweep(const RawConfig& base, const SweepSpec& spec, const RunOptions& opt) {
    if (spec.values.empty()) throw ConfigError("sweep has no values");
    if (spec.methods.empty()) throw ConfigError("sweep has no methods");
    ensure_dir(opt.out_dir);
    Manifest manifest = Manifest::open(opt.out_dir, base);

    std::vector<std::string> keys;
    for (double value : spec.values) {
        for (const auto& method : spec.methods) {
            RawConfig raw = apply_param(base, spec.param, value);
            if (spec.realizations_override > 0) raw.realizations = spec.realizations_override;
            if (spec.slots_override > 0) raw.slots = spec.slots_override;
            const std::string key = spec.param + "=" + csv_num(value) + ":" + method;
            keys.push_back(key);
            const std::string point_hash = csv_num(config_hash(raw) ^ fnv1a64(method));
            if (auto* existing = manifest.find_point(key)) {
                if (existing->value("status", "") == "done" &&
                    existing->value("point_hash", "") == point_hash)
                    continue; // resumable: already computed with identical inputs
            }
            nlohmann::json point;
            point["point_hash"] = point_hash;
            try {
                SweepRow row;
                row.param = spec.param;
                row.value = value;
                if (method == "sim") {
                    auto vf = validate(raw);
                    // seed the point by its parameter value, not its position,
                    // so interrupted and resumed runs agree byte for byte
                    vf.sim.seed = raw.seed ^ config_hash(raw);
                    RawConfig raw_l = raw;
                    raw_l.discipline = "lcfs_pr";
                    RawConfig raw_f = raw;
                    raw_f.discipline = "fcfs";
                    auto vF = validate(raw_f);
                    vF.sim.seed = vf.sim.seed;
                    auto vL = validate(raw_l);
                    vL.sim.seed = vf.sim.seed;
                    auto sf = summarize(run_batch(vF.net, vF.sim, opt.workers));
                    auto sl = summarize(run_batch(vL.net, vL.sim, opt.workers));
                    row.sim_avg_fcfs = sf.unstable ? std::numeric_limits<double>::infinity()
                                                   : sf.avg_aoi;
                    row.sim_peak_fcfs = sf.unstable ? std::numeric_limits<double>::infinity()
                                                    : sf.peak_aoi;
                    row.sim_avg_lcfs = sl.avg_aoi;
                    row.sim_peak_lcfs = sl.peak_aoi;
                    row.sim_mean_mu = sf.mean_mu;
                    row.sim_unstable = sf.unstable;
                } else {
                    row.analytic = analyze_point(raw, method);
                }
                point["status"] = "done";
                point["row"] = sweep_row_to_json(row, method);
            } catch (const std::exception& e) {
                point["status"] = "failed";
                point["error"] = e.what();
            }
            manifest.record_point(key, std::move(point));
        }
    }
    write_sweep_csv((std::filesystem::path(opt.out_dir) / "sweep.csv").string(),
                    manifest.doc["points"], keys);
}

} // namespace aoisim
