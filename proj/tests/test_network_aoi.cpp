#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aoisim/network_aoi.hpp"

using namespace aoisim;

static NetworkConfig cfg_with(double lambda, double r, double xi, double p = 0.6,
                              double theta_db = 0.0) {
    RawConfig raw;
    raw.lambda_per_m2 = lambda > 0 ? lambda : 1e-12;
    raw.link_distance_m = r;
    raw.xi = xi;
    raw.access_p = p;
    raw.theta_db = theta_db;
    auto v = validate(raw);
    if (lambda == 0.0) v.net.lambda = 0.0;
    return v.net;
}

TEST_CASE("degenerate meta collapses to the conditional closed forms") {
    auto cfg = cfg_with(1e-4, 15.0, 0.3);
    MetaDistribution meta;
    meta.kind = MetaKind::Degenerate;
    meta.point = 1.0;
    meta.c1 = 1.0;
    meta.c2 = 1.0;
    auto pred = aoi_predict(cfg, meta, AoiMethod::BetaMeta);
    CHECK(pred.avg_fcfs == doctest::Approx(cond_aoi_fcfs(0.3, 0.6).avg).epsilon(1e-9));
    CHECK(pred.peak_fcfs == doctest::Approx(cond_aoi_fcfs(0.3, 0.6).peak).epsilon(1e-9));
    CHECK(pred.avg_lcfs == doctest::Approx(cond_aoi_lcfs(0.3, 0.6).avg).epsilon(1e-9));
    CHECK(pred.peak_lcfs == doctest::Approx(cond_aoi_lcfs(0.3, 0.6).peak).epsilon(1e-9));
    CHECK(pred.fcfs_stable);
}

TEST_CASE("beta method with near-degenerate meta matches mean approximation") {
    auto cfg = cfg_with(1e-7, 15.0, 0.3);
    auto meta = beta_meta(cfg);
    auto pb = aoi_predict(cfg, meta, AoiMethod::BetaMeta);
    auto pm = aoi_predict(cfg, meta, AoiMethod::MeanApprox);
    CHECK(pb.avg_fcfs == doctest::Approx(pm.avg_fcfs).epsilon(1e-3));
    CHECK(pb.peak_fcfs == doctest::Approx(pm.peak_fcfs).epsilon(1e-3));
    CHECK(pb.avg_lcfs == doctest::Approx(pm.avg_lcfs).epsilon(1e-3));
    CHECK(pb.peak_lcfs == doctest::Approx(pm.peak_lcfs).epsilon(1e-3));
}

TEST_CASE("sparse limit: closed forms and protocol convergence") {
    auto cfg = cfg_with(0.0, 15.0, 0.3);
    auto sc = special_cases(cfg);
    const double service = 0.6 * std::exp(-cfg.noise_exponent());
    CHECK(sc.sparse_avg_fcfs == doctest::Approx(cond_aoi_fcfs(0.3, service).avg).epsilon(1e-12));
    CHECK(sc.sparse_peak_lcfs == doctest::Approx(cond_aoi_lcfs(0.3, service).peak).epsilon(1e-12));

    // p = 1 and theta -> 0: FCFS and LCFS-PR averages coincide
    auto low = cfg_with(1e-6, 15.0, 0.3, 1.0, -60.0);
    auto meta = beta_meta(low);
    auto pred = aoi_predict(low, meta, AoiMethod::BetaMeta);
    CHECK(pred.avg_fcfs == doctest::Approx(pred.avg_lcfs).epsilon(2e-3));
}

TEST_CASE("LCFS support options agree deep inside the stable region") {
    auto cfg = cfg_with(1e-4, 15.0, 0.2);
    auto meta = beta_meta(cfg);
    AoiPredictOptions full;
    AoiPredictOptions tail;
    tail.lcfs_support = LcfsSupport::TailOnly;
    auto a = aoi_predict(cfg, meta, AoiMethod::BetaMeta, full);
    auto b = aoi_predict(cfg, meta, AoiMethod::BetaMeta, tail);
    // TailOnly drops the Beta fit's small artifact mass below xi/p, so the
    // two differ by that tail's 1/(pt) contribution only.
    CHECK(a.avg_lcfs == doctest::Approx(b.avg_lcfs).epsilon(0.02));
    CHECK(a.peak_lcfs == doctest::Approx(b.peak_lcfs).epsilon(0.02));
    CHECK(a.avg_lcfs >= b.avg_lcfs);
}

TEST_CASE("orderings across the stable region") {
    for (double xi : {0.1, 0.25, 0.4}) {
        auto cfg = cfg_with(1e-4, 15.0, xi);
        auto meta = beta_meta(cfg);
        auto p = aoi_predict(cfg, meta, AoiMethod::BetaMeta);
        REQUIRE(p.fcfs_stable);
        CHECK(p.avg_lcfs <= p.avg_fcfs + 1e-9);
        CHECK(p.peak_lcfs <= p.peak_fcfs + 1e-9);
        CHECK(p.peak_fcfs >= p.avg_fcfs - 1.0);
        CHECK(p.avg_fcfs >= 1.0 / xi - 2.0);
        auto m = aoi_predict(cfg, meta, AoiMethod::MeanApprox);
        CHECK(m.avg_lcfs <= m.avg_fcfs + 1e-9);
    }
}

TEST_CASE("unstable mass gates the FCFS prediction to infinity") {
    auto cfg = cfg_with(1e-3, 15.0, 0.3); // xi above xi_c at this density
    auto meta = beta_meta(cfg);
    auto p = aoi_predict(cfg, meta, AoiMethod::BetaMeta);
    CHECK(!p.fcfs_stable);
    CHECK(std::isinf(p.avg_fcfs));
    CHECK(std::isinf(p.peak_fcfs));
    CHECK(std::isfinite(p.avg_lcfs)); // preemption keeps the age finite per link
    CHECK(p.avg_lcfs > 1.0 / 0.3 - 1.0);
    auto m = aoi_predict(cfg, meta, AoiMethod::MeanApprox);
    CHECK(std::isinf(m.avg_fcfs));
    CHECK(std::isfinite(m.avg_lcfs));
}

TEST_CASE("LCFS peak variant: printed xi-form differs but stays close when p ~ xi") {
    auto cfg = cfg_with(1e-4, 15.0, 0.3);
    auto meta = beta_meta(cfg);
    AoiPredictOptions service_form;
    AoiPredictOptions xi_form;
    xi_form.lcfs_peak_variant = LcfsPeakVariant::XiForm;
    auto a = aoi_predict(cfg, meta, AoiMethod::BetaMeta, service_form);
    auto b = aoi_predict(cfg, meta, AoiMethod::BetaMeta, xi_form);
    CHECK(a.peak_lcfs != b.peak_lcfs);
    CHECK(a.avg_lcfs == b.avg_lcfs); // only the peak extra term differs
    CHECK(std::fabs(a.peak_lcfs - b.peak_lcfs) < 1.0);
}

TEST_CASE("dominant-system optimal access probability") {
    // spec pin: load <= 1 clamps p* to 1
    CHECK(dominant_opt_p(cfg_with(1e-4, 15.0, 0.3)) == 1.0);
    // dense network: interior optimum, matching 1/load
    auto dense = cfg_with(2e-3, 15.0, 0.3);
    const double load = dense.lambda * M_PI * 225.0 * power_law_constant(dense.alpha);
    CHECK(dominant_opt_p(dense) == doctest::Approx(1.0 / load));
    CHECK(dominant_opt_p(dense) > 0.0);
    CHECK(dominant_opt_p(dense) < 1.0);
}

TEST_CASE("throughput derivative sign: monotone when sparse, interior max when dense"
          * doctest::timeout(300)) {
    auto sparse = cfg_with(1e-4, 15.0, 0.3);
    CHECK(throughput_derivative_sign(sparse, 0.3) >= 0);
    CHECK(throughput_derivative_sign(sparse, 0.7) >= 0);
    CHECK(throughput_derivative_sign(sparse, 0.98) >= 0);

    auto dense = cfg_with(2e-3, 15.0, 0.3);
    CHECK(throughput_derivative_sign(dense, 0.15) > 0);
    CHECK(throughput_derivative_sign(dense, 0.9) < 0);
}

TEST_CASE("xi sweep at reference parameters: FCFS dips, LCFS-PR declines"
          * doctest::timeout(600)) {
    std::vector<double> xis, af, al, pf, pl;
    for (double xi = 0.05; xi <= 0.501; xi += 0.05) {
        auto cfg = cfg_with(1e-4, 15.0, xi);
        auto meta = beta_meta(cfg);
        auto p = aoi_predict(cfg, meta, AoiMethod::BetaMeta);
        xis.push_back(xi);
        af.push_back(p.avg_fcfs);
        pf.push_back(p.peak_fcfs);
        al.push_back(p.avg_lcfs);
        pl.push_back(p.peak_lcfs);
        MESSAGE("xi=", xi, " avgF=", p.avg_fcfs, " peakF=", p.peak_fcfs,
                " avgL=", p.avg_lcfs, " peakL=", p.peak_lcfs,
                " mass=", p.unstable_mass);
    }
    auto interior_min = [](const std::vector<double>& v) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] < v[arg]) arg = i;
        return arg > 0 && arg + 1 < v.size();
    };
    CHECK(interior_min(af));
    CHECK(interior_min(pf));
    for (std::size_t i = 1; i < al.size(); ++i) {
        CHECK(al[i] < al[i - 1]);
        CHECK(pl[i] < pl[i - 1]);
    }
}

TEST_CASE("density sweep: LCFS-PR degrades gently, FCFS collapses"
          * doctest::timeout(600)) {
    const double lambdas[] = {1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
    std::vector<double> al, af;
    for (double lam : lambdas) {
        auto cfg = cfg_with(lam, 15.0, 0.3);
        auto meta = beta_meta(cfg);
        auto pb = aoi_predict(cfg, meta, AoiMethod::BetaMeta);
        auto pm = aoi_predict(cfg, meta, AoiMethod::MeanApprox);
        al.push_back(pm.avg_lcfs);
        af.push_back(pm.avg_fcfs);
        MESSAGE("lambda=", lam, " mean: avgF=", pm.avg_fcfs, " avgL=", pm.avg_lcfs,
                " | beta: avgF=", pb.avg_fcfs, " avgL=", pb.avg_lcfs);
        CHECK(pm.avg_lcfs <= pm.avg_fcfs + 1e-9);
        CHECK(pb.avg_lcfs <= pb.avg_fcfs + 1e-9);
    }
    CHECK((al.back() - al.front()) / al.front() <= 0.70);
    CHECK((std::isinf(af.back()) || af.back() >= 2.0 * af.front()));
}
