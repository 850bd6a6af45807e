#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "shockpanel/panel.hpp"

namespace shockpanel {

/// The four archetypal expenditure responses to revenue shocks.
enum class FiscalRegime { Smoothing, HandToMouth, PoliticoEconomic, FiscalConservatism };
const char* fiscal_regime_name(FiscalRegime r);
FiscalRegime fiscal_regime_from_name(const std::string& name);

/// Generator configuration. Monetary scales are thousand CHF; most
/// magnitudes are expressed as fractions of a unit's own revenue level so
/// the cross-section stays heterogeneous.
struct SynthConfig {
    int n_units = 163;
    int n_years = 27;
    int start_year = 1990;

    // per-unit trend family for the volatile revenue series
    double level_log_mean = 6.95;   // log thousand CHF
    double level_log_sd = 0.85;
    double slope_sd = 0.30;         // relative drift over the window
    double curvature_sd = 0.15;
    double trend_wave_frac = 0.10;  // non-polynomial trend component
    double trend_wave_period = 9.0; // years, jittered per unit
    double noise_sd_frac = 0.06;    // regular-flow noise, fraction of level

    // shock process: one-off deviations at 2-4 year gaps with mostly
    // alternating signs, so deviations stay large while the local mean of
    // the series (and hence the kernel trend) stays anchored
    double shock_prob = 0.52;       // sets shock spacing: mean gap is 1/shock_prob
    double shock_flip_prob = 0.95;  // sign alternation between consecutive shocks
    double shock_gap_jitter = 0.5;  // sd of the gap around 1/shock_prob
    int shock_edge_margin = 2;      // years at each end kept shock-free
    double shock_pos_share = 0.53;  // sign of the first shock in a unit
    double shock_pos_scale = 0.62;  // median magnitude, fraction of level
    double shock_pos_log_sd = 0.05;
    double shock_neg_scale = 0.62;
    double shock_neg_log_sd = 0.05;
    double shock_tail_prob = 0.10;  // share of shocks drawn from the wide tail
    double shock_tail_mult = 1.7;   // tail scale relative to the body
    double ipgt_floor = -1000.0;    // receipts may go slightly negative

    // regime response applied to the shock component of the revenue
    // series; only deviations that are large for the unit trigger any
    // reaction (small residuals are budget noise nobody acts on)
    FiscalRegime regime = FiscalRegime::Smoothing;
    double response_rate = 0.0;
    std::vector<double> response_path = {0.5, 0.5};  // distribution over lags
    double response_floor_frac = 0.30;  // reaction threshold, fraction of level

    double pass_through = 1.0;      // mechanical entry into tax receipts

    // confounders: AR(1) unit-level series loading on the revenue series
    // and on both outcomes; emitted as observable cov_conf* candidates
    int n_confounders = 2;
    double conf_ar = 0.55;
    double conf_sd_frac = 0.035;    // innovation scale, fraction of level
    double conf_on_treatment = 1.0;
    double conf_on_outcome = 0.5;
    int n_noise_covariates = 3;

    // outcome construction, multiples of the unit level
    double other_tax_mult = 9.5;
    double nontax_mult = 10.0;
    double spending_mult = 17.5;
    double outcome_noise_frac = 0.08;
    double outcome_drift_sd = 0.01;

    std::uint64_t seed = 1;
};

SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json synth_config_json(const SynthConfig& config);

/// Oracle record for one generated panel.
struct GroundTruth {
    struct Cell {
        std::string unit;
        int year;
        double trend;
        int shock_sign;       // -1, 0, +1
        double shock_value;   // signed planted deviation, post floor
        double response;      // regime response added to expenditures
    };
    std::vector<Cell> cells;
    // per-lag expenditure response coefficients implied by the regime
    std::vector<double> response_pos, response_neg;
};

void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path);

/// Deterministic generator: per-unit substreams make output independent of
/// the evaluation order. Emits series ipgt, tax_receipts,
/// current_expenditures, current_revenue plus cov_conf* / cov_noise*
/// candidate covariates.
std::pair<PanelDataset, GroundTruth> generate(const SynthConfig& config);

/// Table-1-shaped calibration summary of a generated (or loaded) panel.
struct CalibrationReport {
    long n_obs = 0;
    double mean_ipgt = 0, sd_ipgt = 0, min_ipgt = 0, max_ipgt = 0;
    double mean_pct_spending = 0, sd_pct_spending = 0;
    double mean_pct_revenue = 0, sd_pct_revenue = 0;
};

CalibrationReport calibration_report(const PanelDataset& panel, const std::string& ipgt = "ipgt",
                                     const std::string& spending = "current_expenditures",
                                     const std::string& revenue = "current_revenue");

nlohmann::json calibration_report_json(const CalibrationReport& report);

}  // namespace shockpanel
