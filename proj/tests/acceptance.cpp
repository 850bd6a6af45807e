// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shockpanel/cli.hpp"
#include "shockpanel/dlm.hpp"
#include "shockpanel/lasso.hpp"
#include "shockpanel/parallel.hpp"
#include "shockpanel/regress.hpp"
#include "shockpanel/shocks.hpp"
#include "shockpanel/smoother.hpp"
#include "shockpanel/stats.hpp"
#include "shockpanel/synth.hpp"

using namespace shockpanel;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SeriesView random_series(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SeriesView s;
    s.unit = "u";
    for (int i = 0; i < n; ++i) {
        s.years.push_back(1990 + i);
        s.values.push_back(100.0 + 3.0 * i + 25.0 * normal(rng));
    }
    return s;
}

double wls_intercept_at(const SeriesView& s, double t0, double h) {
    double s0 = 0, s1 = 0, s2 = 0, sy = 0, sdy = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double d = s.years[i] - t0;
        double w = epanechnikov(d / h);
        s0 += w;
        s1 += w * d;
        s2 += w * d * d;
        sy += w * s.values[i];
        sdy += w * d * s.values[i];
    }
    return (s2 * sy - s1 * sdy) / (s0 * s2 - s1 * s1);
}

// ---------------------------------------------------------------- criterion 1
void criterion_1_smoother_oracle() {
    double worst_oracle = 0.0;
    for (unsigned seed = 0; seed < 200; ++seed) {
        SeriesView s = random_series(27, 1000 + seed);
        double h = rot_bandwidth(s);
        SmootherResult r = local_linear_fit(s, h);
        for (std::size_t i = 0; i < s.size(); ++i) {
            double oracle = wls_intercept_at(s, static_cast<double>(s.years[i]), h);
            worst_oracle = std::max(worst_oracle, std::fabs(r.fitted[i] - oracle));
        }
    }

    double worst_linear = 0.0;
    for (unsigned rep = 0; rep < 100; ++rep) {
        SeriesView s;
        s.unit = "u";
        double a = 2.0 + rep, b = 3.0 - 0.01 * rep;
        for (int i = 0; i < 27; ++i) {
            s.years.push_back(1990 + i);
            s.values.push_back(a + b * i);
        }
        SmootherResult r = local_linear_fit(s, 3.7);
        for (std::size_t i = 0; i < s.size(); ++i)
            worst_linear = std::max(
                worst_linear, std::fabs(r.fitted[i] - s.values[i]) / std::fabs(s.values[i]));
    }

    SynthConfig timing;
    timing.seed = 3;
    auto [panel, truth] = generate(timing);
    auto start = std::chrono::steady_clock::now();
    auto smoothers = smooth_panel(panel, "ipgt");
    double elapsed = seconds_since(start);

    bool pass = worst_oracle < 1e-8 && worst_linear < 1e-12 && elapsed < 1.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "smoother oracle: max |fit - WLS| %.2e (< 1e-8), linear reproduction %.2e, "
                  "163x27 smoothing %.3fs (< 1s)",
                  worst_oracle, worst_linear, elapsed);
    report(1, pass, buf);
}

// ---------------------------------------------------------------- criterion 2
void criterion_2_preciseness() {
    SynthConfig config;
    config.seed = 1;
    auto [panel, truth] = generate(config);
    auto smoothers = smooth_panel(panel, "ipgt");
    int in_band = 0;
    const int n_units = static_cast<int>(panel.units().size());
    for (int u = 0; u < n_units; ++u) {
        Preciseness p = preciseness(panel.series(u, "ipgt"), smoothers[static_cast<std::size_t>(u)],
                                    panel.series(u, "current_expenditures"),
                                    panel.series(u, "current_revenue"));
        if (p.rel_spending_pct >= -1.0 && p.rel_spending_pct <= 1.0 &&
            p.rel_revenue_pct >= -1.0 && p.rel_revenue_pct <= 1.0)
            ++in_band;
    }
    double share = 100.0 * in_band / n_units;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "smoother balance: %d/%d units with mean relative deviation in [-1%%, +1%%] "
                  "(need >= 95%%)",
                  in_band, n_units);
    report(2, share >= 95.0, buf);
}

// ---------------------------------------------------------------- criterion 3
void criterion_3_classification() {
    SynthConfig config;
    config.seed = 1;
    auto [panel, truth] = generate(config);
    auto smoothers = smooth_panel(panel, "ipgt");

    std::map<int, std::vector<FlowClass>> classes;
    for (int k : {3, 4, 5}) classes[k] = classify_panel(panel, "ipgt", smoothers, k);

    long counts[3] = {0, 0, 0}, total = 0;
    for (const auto& fc : classes[3])
        for (std::size_t i = 0; i < fc.size(); ++i)
            if (fc.classified(i)) {
                ++counts[static_cast<int>(fc.labels[i])];
                ++total;
            }
    double reg = 100.0 * counts[0] / total;
    double pos = 100.0 * counts[1] / total;
    double neg = 100.0 * counts[2] / total;
    bool shares_ok = std::fabs(reg - 65.5) <= 3.0 && std::fabs(pos - 17.8) <= 3.0 &&
                     std::fabs(neg - 16.7) <= 3.0;

    bool nested = true;
    for (std::size_t u = 0; u < classes[3].size(); ++u)
        for (std::size_t i = 0; i < classes[3][u].size(); ++i) {
            if (classes[5][u].labels[i] != FlowLabel::Regular &&
                classes[4][u].labels[i] != classes[5][u].labels[i])
                nested = false;
            if (classes[4][u].labels[i] != FlowLabel::Regular &&
                classes[3][u].labels[i] != classes[4][u].labels[i])
                nested = false;
        }

    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "classification: shares %.2f/%.2f/%.2f vs 65.5/17.8/16.7 (+-3pp), shock sets "
                  "nested across k in {3,4,5}: %s",
                  reg, pos, neg, nested ? "yes" : "NO");
    report(3, shares_ok && nested, buf);
}

// ---------------------------------------------------------------- criterion 4
struct LassoOracleResult {
    double worst_gap = 0.0;
    double worst_kkt = 0.0;
    bool found = true;
};

LassoOracleResult lasso_against_bruteforce(unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<long> pdist(2, 8);
    const long p = pdist(rng);
    const long n = 30 + static_cast<long>(rng() % 40);

    Eigen::MatrixXd X(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) X(i, j) = normal(rng);
    Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(p);
    for (long j = 0; j < p; ++j)
        if (rng() % 2 == 0) beta_true[j] = normal(rng);
    Eigen::VectorXd y = X * beta_true;
    for (long i = 0; i < n; ++i) y[i] += 0.4 * normal(rng);

    double lambda = 0.02 + 0.3 * std::generate_canonical<double, 32>(rng);
    LassoProblem prob = make_lasso_problem(X, y, lambda, Eigen::VectorXd::Ones(p));
    LassoSolution sol = lasso_fit(prob, 1e-11, 500000);

    LassoOracleResult out;
    // KKT residuals of the returned solution
    Eigen::VectorXd resid = prob.y - prob.X * sol.beta_std;
    for (long j = 0; j < p; ++j) {
        double grad = prob.X.col(j).dot(resid) / static_cast<double>(n);
        double bound = prob.lambda * prob.loadings[j];
        double viol = sol.beta_std[j] != 0.0
                          ? std::fabs(grad - bound * (sol.beta_std[j] > 0 ? 1.0 : -1.0))
                          : std::max(0.0, std::fabs(grad) - bound);
        out.worst_kkt = std::max(out.worst_kkt, viol);
    }

    // exhaustive sign-support oracle
    long total = 1;
    for (long j = 0; j < p; ++j) total *= 3;
    bool matched = false;
    for (long code = 0; code < total && !matched; ++code) {
        long c = code;
        std::vector<int> signs(static_cast<std::size_t>(p));
        for (long j = 0; j < p; ++j) {
            signs[static_cast<std::size_t>(j)] = static_cast<int>(c % 3) - 1;
            c /= 3;
        }
        std::vector<long> active;
        for (long j = 0; j < p; ++j)
            if (signs[static_cast<std::size_t>(j)] != 0) active.push_back(j);
        Eigen::MatrixXd Xa(n, static_cast<long>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k)
            Xa.col(static_cast<long>(k)) = prob.X.col(active[k]);
        Eigen::VectorXd beta_a;
        if (!active.empty()) {
            Eigen::MatrixXd gram = Xa.transpose() * Xa / static_cast<double>(n);
            Eigen::VectorXd rhs = Xa.transpose() * prob.y / static_cast<double>(n);
            for (std::size_t k = 0; k < active.size(); ++k)
                rhs[static_cast<long>(k)] -=
                    prob.lambda * signs[static_cast<std::size_t>(active[k])];
            beta_a = gram.ldlt().solve(rhs);
        }
        bool ok = true;
        for (std::size_t k = 0; k < active.size() && ok; ++k)
            if (beta_a[static_cast<long>(k)] * signs[static_cast<std::size_t>(active[k])] <= 0.0)
                ok = false;
        if (!ok) continue;
        Eigen::VectorXd r = prob.y;
        if (!active.empty()) r -= Xa * beta_a;
        for (long j = 0; j < p && ok; ++j) {
            if (signs[static_cast<std::size_t>(j)] != 0) continue;
            if (std::fabs(prob.X.col(j).dot(r) / static_cast<double>(n)) > prob.lambda + 1e-10)
                ok = false;
        }
        if (!ok) continue;
        Eigen::VectorXd oracle = Eigen::VectorXd::Zero(p);
        for (std::size_t k = 0; k < active.size(); ++k)
            oracle[active[k]] = beta_a[static_cast<long>(k)];
        out.worst_gap = (sol.beta_std - oracle).cwiseAbs().maxCoeff();
        matched = true;
    }
    out.found = matched;
    return out;
}

void criterion_4_lasso() {
    double worst_gap = 0.0, worst_kkt = 0.0;
    bool all_found = true;
    std::vector<LassoOracleResult> results(100);
    parallel_for(100, [&](std::size_t i) {
        results[i] = lasso_against_bruteforce(static_cast<unsigned>(7000 + i));
    });
    for (const auto& r : results) {
        worst_gap = std::max(worst_gap, r.worst_gap);
        worst_kkt = std::max(worst_kkt, r.worst_kkt);
        all_found = all_found && r.found;
    }

    // lambda = 0 equals OLS
    std::mt19937 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(80, 5);
    Eigen::VectorXd y(80);
    for (long i = 0; i < 80; ++i) {
        for (long j = 0; j < 5; ++j) X(i, j) = normal(rng);
        y[i] = X(i, 0) - 2.0 * X(i, 3) + 0.5 * normal(rng);
    }
    LassoSolution zero = lasso_fit(make_lasso_problem(X, y, 0.0, Eigen::VectorXd::Ones(5)),
                                   1e-12, 500000);
    Eigen::MatrixXd Xc(80, 6);
    Xc.col(0).setOnes();
    Xc.rightCols(5) = X;
    Eigen::VectorXd ols = Xc.householderQr().solve(y);
    double ols_gap = 0.0;
    for (long j = 0; j < 5; ++j) ols_gap = std::max(ols_gap, std::fabs(zero.beta[j] - ols[j + 1]));

    bool pass = all_found && worst_kkt < 1e-6 && worst_gap < 1e-6 && ols_gap < 1e-6;
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "lasso: KKT residual %.2e, brute-force gap %.2e over 100 instances (p<=8), "
                  "lambda-0 vs OLS gap %.2e (all < 1e-6)",
                  worst_kkt, worst_gap, ols_gap);
    report(4, pass, buf);
}

// ---------------------------------------------------------------- criterion 5
struct PipelineRun {
    PanelDataset panel;
    std::vector<SmootherResult> smoothers;
    std::vector<FlowClass> classes;
};

PipelineRun run_pipeline(const SynthConfig& config, double k = 3.0) {
    PipelineRun p;
    auto [panel, truth] = generate(config);
    p.panel = std::move(panel);
    p.smoothers = smooth_panel(p.panel, "ipgt");
    p.classes = classify_panel(p.panel, "ipgt", p.smoothers, k);
    return p;
}

double tau0_estimate(const DlmOutput& out, Regime regime = Regime::Regular) {
    for (const auto& r : out.rows)
        if (r.tau == 0 && r.regime == regime) return r.estimate;
    return std::nan("");
}

void criterion_5_pds_deconfounding() {
    auto start = std::chrono::steady_clock::now();
    const int n_seeds = 200;
    std::vector<double> naive(n_seeds), pds(n_seeds);

    SynthConfig base;
    base.n_units = 50;
    base.n_years = 30;
    base.level_log_sd = 0.4;
    base.noise_sd_frac = 0.12;
    base.shock_pos_log_sd = 0.2;
    base.shock_neg_log_sd = 0.2;
    base.n_confounders = 2;
    base.conf_sd_frac = 0.30;
    base.conf_on_treatment = 1.0;
    base.conf_on_outcome = 0.5;
    base.n_noise_covariates = 3;
    base.outcome_noise_frac = 0.03;
    base.outcome_drift_sd = 0.0;

    parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t i) {
        SynthConfig config = base;
        config.seed = 10000 + i;
        PipelineRun p = run_pipeline(config);

        DlmSpec spec;
        spec.outcome = "tax_receipts";
        spec.interactions = false;
        spec.unit_trends = false;
        for (const auto& name : p.panel.series_names())
            if (name.rfind("cov_", 0) == 0) spec.candidates.push_back(name);
        pds[i] = tau0_estimate(estimate(spec, p.panel, p.smoothers, p.classes));

        spec.candidates.clear();
        naive[i] = tau0_estimate(estimate(spec, p.panel, p.smoothers, p.classes));
    });

    int naive_outside = 0, pds_inside = 0;
    double naive_bias = 0.0;
    for (int i = 0; i < n_seeds; ++i) {
        naive_bias += naive[static_cast<std::size_t>(i)] - 1.0;
        if (std::fabs(naive[static_cast<std::size_t>(i)] - 1.0) > 0.10) ++naive_outside;
        if (std::fabs(pds[static_cast<std::size_t>(i)] - 1.0) <= 0.05) ++pds_inside;
    }
    naive_bias /= n_seeds;
    double elapsed = seconds_since(start);

    bool pass = naive_bias >= 0.15 && naive_outside >= 180 && pds_inside >= 180 && elapsed < 300.0;
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "PDS de-confounding: naive bias %.3f (>= 0.15), naive outside +-0.10 in %d/200, "
                  "PDS within +-0.05 in %d/200 (both >= 180), runtime %.0fs (< 300s)",
                  naive_bias, naive_outside, pds_inside, elapsed);
    report(5, pass, buf);
}

// ---------------------------------------------------------------- criterion 6
void criterion_6_mechanical() {
    const int n_seeds = 100;
    std::vector<int> ok(n_seeds, 0);

    SynthConfig base;
    base.n_units = 120;
    base.n_years = 27;
    base.level_log_sd = 0.4;
    base.noise_sd_frac = 0.15;
    base.shock_pos_log_sd = 0.2;
    base.shock_neg_log_sd = 0.2;
    base.n_confounders = 0;
    base.n_noise_covariates = 3;
    base.outcome_noise_frac = 0.03;
    base.outcome_drift_sd = 0.0;

    parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t i) {
        SynthConfig config = base;
        config.seed = 20000 + i;
        PipelineRun p = run_pipeline(config);
        DlmSpec spec;
        spec.outcome = "tax_receipts";
        spec.interactions = false;
        spec.unit_trends = false;
        for (const auto& name : p.panel.series_names())
            if (name.rfind("cov_", 0) == 0) spec.candidates.push_back(name);
        DlmOutput out = estimate(spec, p.panel, p.smoothers, p.classes);
        bool seed_ok = true;
        for (const auto& r : out.rows) {
            if (r.tau == 0)
                seed_ok = seed_ok && r.estimate >= 0.95 && r.estimate <= 1.05;
            else
                seed_ok = seed_ok && std::fabs(r.estimate) <= 0.05;
        }
        ok[i] = seed_ok;
    });
    int passes = 0;
    for (int v : ok) passes += v;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "mechanical pass-through: tau-0 in [0.95, 1.05] and leads/lags within +-0.05 in "
                  "%d/100 seeds (need >= 90)",
                  passes);
    report(6, passes >= 90, buf);
}

// ---------------------------------------------------------------- criterion 7
struct RegimeStats {
    double pos0 = 0, neg0 = 0, pos_sum = 0, neg_sum = 0;
    double worst_mean_impact = 0;  // max over rows of |mean estimate|
    int reject_pvn = 0;
};

RegimeStats run_regime(FiscalRegime regime, double rate, int n_seeds) {
    SynthConfig base;
    base.n_units = 100;
    base.n_years = 30;
    base.level_log_sd = 0.30;
    base.noise_sd_frac = 0.04;
    base.shock_edge_margin = 5;
    base.shock_prob = 0.30;
    base.shock_pos_log_sd = 0.15;
    base.shock_neg_log_sd = 0.15;
    base.n_confounders = 0;
    base.n_noise_covariates = 2;
    base.outcome_noise_frac = 0.03;
    base.outcome_drift_sd = 0.0;
    base.regime = regime;
    base.response_rate = rate;
    base.response_path = {1.0};

    std::vector<RegimeStats> per_seed(static_cast<std::size_t>(n_seeds));
    std::map<std::pair<int, int>, double> row_sums;
    std::mutex row_sums_mutex;
    parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t i) {
        SynthConfig config = base;
        config.seed = 30000 + 1000 * static_cast<unsigned>(regime) + i;
        PipelineRun p = run_pipeline(config);
        DlmSpec spec;
        spec.unit_trends = false;
        for (const auto& name : p.panel.series_names())
            if (name.rfind("cov_", 0) == 0) spec.candidates.push_back(name);
        DlmOutput out = estimate(spec, p.panel, p.smoothers, p.classes);

        RegimeStats& s = per_seed[i];
        for (const auto& r : out.rows) {
            if (r.tau == 0 && r.regime == Regime::Positive) s.pos0 = r.estimate;
            if (r.tau == 0 && r.regime == Regime::Negative) s.neg0 = r.estimate;
            if (r.tau >= 0 && r.regime == Regime::Positive) s.pos_sum += r.estimate;
            if (r.tau >= 0 && r.regime == Regime::Negative) s.neg_sum += r.estimate;
        }
        for (const auto& pw : out.pairwise)
            if (pw.tau == 0 && pw.pairing == Pairing::PosVsNeg && pw.p < 0.05) s.reject_pvn = 1;
        row_sums_mutex.lock();
        for (const auto& r : out.rows) row_sums[{r.tau, static_cast<int>(r.regime)}] += r.estimate;
        row_sums_mutex.unlock();
    });

    RegimeStats mean;
    for (const auto& s : per_seed) {
        mean.pos0 += s.pos0;
        mean.neg0 += s.neg0;
        mean.pos_sum += s.pos_sum;
        mean.neg_sum += s.neg_sum;
        mean.reject_pvn += s.reject_pvn;
    }
    mean.pos0 /= n_seeds;
    mean.neg0 /= n_seeds;
    mean.pos_sum /= n_seeds;
    mean.neg_sum /= n_seeds;
    for (const auto& [key, total] : row_sums)
        mean.worst_mean_impact = std::max(mean.worst_mean_impact, std::fabs(total / n_seeds));
    return mean;
}

void criterion_7_regimes() {
    const int n_seeds = 100;
    RegimeStats smooth = run_regime(FiscalRegime::Smoothing, 0.0, n_seeds);
    RegimeStats h2m = run_regime(FiscalRegime::HandToMouth, 0.5, n_seeds);
    RegimeStats pol = run_regime(FiscalRegime::PoliticoEconomic, 0.4, n_seeds);
    RegimeStats fc = run_regime(FiscalRegime::FiscalConservatism, 0.4, n_seeds);

    // Point conditions on the Monte Carlo mean across seeds; rejection-rate
    // conditions per seed (the criterion attaches its seed rate to those).
    bool smooth_ok = smooth.worst_mean_impact < 0.05;
    bool h2m_ok = h2m.pos0 >= 0.45 && h2m.pos0 <= 0.55 && h2m.neg0 >= 0.45 && h2m.neg0 <= 0.55;
    bool pol_ok = pol.pos_sum >= 0.33 && pol.pos_sum <= 0.47 && std::fabs(pol.neg_sum) < 0.07 &&
                  pol.reject_pvn >= 80;
    bool fc_ok = fc.neg_sum >= 0.33 && fc.neg_sum <= 0.47 && std::fabs(fc.pos_sum) < 0.07 &&
                 fc.reject_pvn >= 80;

    char buf[380];
    std::snprintf(buf, sizeof(buf),
                  "regimes: smoothing worst |mean impact| %.3f (< 0.05); hand-to-mouth tau0 "
                  "%+.3f/%+.3f (in [0.45,0.55]); politico pos-sum %+.3f neg-sum %+.3f reject "
                  "%d/100; conservatism neg-sum %+.3f pos-sum %+.3f reject %d/100 (>= 80)",
                  smooth.worst_mean_impact, h2m.pos0, h2m.neg0, pol.pos_sum, pol.neg_sum,
                  pol.reject_pvn, fc.neg_sum, fc.pos_sum, fc.reject_pvn);
    report(7, smooth_ok && h2m_ok && pol_ok && fc_ok, buf);
}

// ---------------------------------------------------------------- criterion 8
void criterion_8_test_statistics() {
    // CR1 hand computation on a 2-cluster, 6-row instance
    Eigen::MatrixXd X(6, 2);
    X << 1.0, 0.5, 1.0, -1.0, 1.0, 2.0, 1.0, 0.0, 1.0, 1.5, 1.0, -0.5;
    Eigen::VectorXd y(6);
    y << 2.0, 1.0, 4.5, 1.5, 3.0, 0.5;
    DesignMatrix d;
    d.X = X;
    d.names = {"const", "x"};
    d.cluster = {0, 0, 0, 1, 1, 1};
    EstimateTable t = ols_fe(d, y);

    Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
    Eigen::VectorXd beta = xtx_inv * X.transpose() * y;
    Eigen::VectorXd e = y - X * beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
    for (int g = 0; g < 2; ++g) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
        for (int i = 0; i < 3; ++i) s += X.row(3 * g + i).transpose() * e(3 * g + i);
        meat += s * s.transpose();
    }
    Eigen::MatrixXd vcov = (2.0 / 1.0) * (5.0 / 4.0) * xtx_inv * meat * xtx_inv;
    double cr1_gap = (t.vcov - vcov).cwiseAbs().maxCoeff();

    // F = t^2 for single restrictions
    WaldResult w = wald_joint(t, {{{"x", 1.0}}});
    double ft2_gap = std::fabs(w.F - t.tstat[1] * t.tstat[1]);

    // two-way FE equals explicit-dummy OLS
    std::mt19937 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n_units = 5, n_years = 6;
    const long n = n_units * n_years;
    Eigen::MatrixXd Xf(n, 2);
    Eigen::VectorXd yf(n);
    DesignMatrix df;
    for (int u = 0; u < n_units; ++u)
        for (int yr = 0; yr < n_years; ++yr) {
            long row = u * n_years + yr;
            Xf(row, 0) = normal(rng);
            Xf(row, 1) = normal(rng);
            yf(row) = 0.7 * Xf(row, 0) - 1.2 * Xf(row, 1) + 2.0 * u - yr + normal(rng);
            df.cluster.push_back(u);
            df.unit_group.push_back(u);
            df.year_group.push_back(yr);
        }
    df.X = Xf;
    df.names = {"a", "b"};
    EstimateTable fe = ols_fe(df, yf);

    Eigen::MatrixXd Z(n, 2 + 1 + (n_units - 1) + (n_years - 1));
    Z.setZero();
    Z.col(0) = Xf.col(0);
    Z.col(1) = Xf.col(1);
    Z.col(2).setOnes();
    for (long row = 0; row < n; ++row) {
        int u = df.unit_group[static_cast<std::size_t>(row)];
        int yr = df.year_group[static_cast<std::size_t>(row)];
        if (u > 0) Z(row, 2 + u) = 1.0;
        if (yr > 0) Z(row, 2 + n_units - 1 + yr) = 1.0;
    }
    Eigen::VectorXd full = Z.householderQr().solve(yf);
    double fwl_gap = std::max(std::fabs(fe.beta[0] - full[0]), std::fabs(fe.beta[1] - full[1]));

    bool pass = cr1_gap < 1e-10 && ft2_gap < 1e-10 && fwl_gap < 1e-8;
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "test statistics: CR1 sandwich gap %.2e (< 1e-10), F - t^2 gap %.2e (< 1e-10), "
                  "FWL dummy-equivalence gap %.2e (< 1e-8)",
                  cr1_gap, ft2_gap, fwl_gap);
    report(8, pass, buf);
}

// ---------------------------------------------------------------- criterion 9
void criterion_9_size_control() {
    const int n_seeds = 500;
    std::vector<std::array<int, 3>> rejects(static_cast<std::size_t>(n_seeds), {0, 0, 0});

    SynthConfig base;
    base.n_units = 200;           // the joint covariance needs clusters to spare
    base.n_years = 27;
    base.level_log_sd = 0.1;      // heavy-tailed cluster scores starve the
    base.shock_tail_prob = 0.0;   // sandwich of effective degrees of freedom
    base.regime = FiscalRegime::Smoothing;
    base.n_confounders = 0;
    base.n_noise_covariates = 1;
    base.outcome_noise_frac = 0.05;
    base.outcome_drift_sd = 0.0;

    parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t i) {
        SynthConfig config = base;
        config.seed = 40000 + i;
        PipelineRun p = run_pipeline(config);
        DlmSpec spec;
        spec.unit_trends = false;
        DlmOutput out = estimate(spec, p.panel, p.smoothers, p.classes);
        for (const auto& [pairing, test] : out.joint_f) {
            int idx = static_cast<int>(pairing);
            if (test.p < 0.05) rejects[i][static_cast<std::size_t>(idx)] = 1;
        }
    });

    double rates[3] = {0, 0, 0};
    for (const auto& r : rejects)
        for (int j = 0; j < 3; ++j) rates[j] += r[static_cast<std::size_t>(j)];
    for (double& r : rates) r = 100.0 * r / n_seeds;
    bool pass = true;
    for (double r : rates) pass = pass && r >= 2.0 && r <= 8.0;

    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "size control: joint-F (lags 1-4) rejection rates %.1f%%/%.1f%%/%.1f%% over 500 "
                  "null seeds (each within 5%% +- 3pp)",
                  rates[0], rates[1], rates[2]);
    report(9, pass, buf);
}

// --------------------------------------------------------------- criterion 10
std::map<std::string, std::string> hash_tree(const fs::path& dir) {
    std::map<std::string, std::string> hashes;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            hashes[fs::relative(entry.path(), dir).string()] = cli::hash_file(entry.path());
    return hashes;
}

void criterion_10_determinism() {
    fs::path base = fs::temp_directory_path() / "shockpanel_acceptance_det";
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);

    auto run_full = [&](const fs::path& dir) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "cfg.json") << R"({"n_units": 100, "n_years": 27, "seed": 4242})";
        auto cli_run = [&](std::initializer_list<std::string> args) {
            std::vector<std::string> argv = {"shockpanel"};
            argv.insert(argv.end(), args);
            std::vector<const char*> ptrs;
            for (const auto& a : argv) ptrs.push_back(a.c_str());
            return cli::run(static_cast<int>(ptrs.size()), ptrs.data());
        };
        int rc = 0;
        rc |= cli_run({"simulate", "--config", (dir / "cfg.json").string(), "--out",
                       (dir / "panel.csv").string(), "--calibration", (dir / "calib.json").string()});
        rc |= cli_run({"smooth", "--in", (dir / "panel.csv").string(), "--out",
                       (dir / "smooth.csv").string()});
        rc |= cli_run({"classify", "--in", (dir / "panel.csv").string(), "--smooth",
                       (dir / "smooth.csv").string(), "--out", (dir / "classes.csv").string()});
        rc |= cli_run({"robustness", "--in", (dir / "panel.csv").string(), "--outcome",
                       "current_expenditures", "--no-unit-trends", "--out-dir",
                       (dir / "rob").string()});
        rc |= cli_run({"report", "--est", (dir / "rob" / "est_baseline.json").string(),
                       (dir / "rob" / "est_k4.json").string(),
                       (dir / "rob" / "est_lags10.json").string(), "--out-dir",
                       (dir / "figs").string()});
        return rc;
    };

    // argv embeds paths, so reruns reuse one directory per comparison arm
    fs::path arm_a = base / "a";
    int rc1 = run_full(arm_a);
    auto first = hash_tree(arm_a);
    int rc2 = run_full(arm_a);
    auto second = hash_tree(arm_a);

    setenv("SHOCKPANEL_THREADS", "1", 1);
    int rc3 = run_full(arm_a);
    auto third = hash_tree(arm_a);
    unsetenv("SHOCKPANEL_THREADS");
    unsetenv("SOURCE_DATE_EPOCH");

    bool identical = rc1 == 0 && rc2 == 0 && rc3 == 0 && first == second && second == third &&
                     !first.empty();
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "determinism: %zu pipeline files byte-identical across reruns and thread counts",
                  first.size());
    report(10, identical, buf);
}

}  // namespace

int main() {
    auto start = std::chrono::steady_clock::now();
    criterion_1_smoother_oracle();
    criterion_2_preciseness();
    criterion_3_classification();
    criterion_4_lasso();
    criterion_5_pds_deconfounding();
    criterion_6_mechanical();
    criterion_7_regimes();
    criterion_8_test_statistics();
    criterion_9_size_control();
    criterion_10_determinism();
    std::printf("%d/10 criteria passed in %.0fs\n", 10 - g_failures, seconds_since(start));
    return g_failures == 0 ? 0 : 1;
}
