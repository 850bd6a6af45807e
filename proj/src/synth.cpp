#include "shockpanel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

#include "shockpanel/errors.hpp"
#include "shockpanel/parallel.hpp"

namespace shockpanel {

const char* fiscal_regime_name(FiscalRegime r) {
    switch (r) {
        case FiscalRegime::Smoothing: return "smoothing";
        case FiscalRegime::HandToMouth: return "hand_to_mouth";
        case FiscalRegime::PoliticoEconomic: return "politico_economic";
        case FiscalRegime::FiscalConservatism: return "fiscal_conservatism";
    }
    return "smoothing";
}

FiscalRegime fiscal_regime_from_name(const std::string& name) {
    if (name == "smoothing") return FiscalRegime::Smoothing;
    if (name == "hand_to_mouth") return FiscalRegime::HandToMouth;
    if (name == "politico_economic") return FiscalRegime::PoliticoEconomic;
    if (name == "fiscal_conservatism") return FiscalRegime::FiscalConservatism;
    throw Error(Errc::BadConfig, "unknown regime '" + name + "'");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::string unit_name(int index, int n_units) {
    std::size_t width = 1;
    for (int v = n_units; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(index + 1);
    std::string out = "u";
    out.append(width > digits.size() ? width - digits.size() : 0, '0');
    return out + digits;
}

/// AR(1) path with stationary start.
std::vector<double> ar1_path(std::mt19937_64& rng, int n, double phi, double innovation_sd) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(static_cast<std::size_t>(n));
    double stationary = innovation_sd / std::sqrt(std::max(1e-12, 1.0 - phi * phi));
    z[0] = stationary * normal(rng);
    for (int t = 1; t < n; ++t)
        z[static_cast<std::size_t>(t)] = phi * z[static_cast<std::size_t>(t - 1)] +
                                         innovation_sd * normal(rng);
    return z;
}

struct UnitData {
    std::vector<std::vector<double>> series;  // aligned with series name layout
    std::vector<GroundTruth::Cell> truth;
};

}  // namespace

std::pair<PanelDataset, GroundTruth> generate(const SynthConfig& config) {
    if (config.n_units < 1 || config.n_years < 1)
        throw Error(Errc::BadConfig, "n_units and n_years must be positive");
    if (config.shock_prob < 0 || config.shock_prob > 1 || config.shock_pos_share < 0 ||
        config.shock_pos_share > 1)
        throw Error(Errc::BadConfig, "probabilities must lie in [0, 1]");
    if (config.response_rate < 0 || config.response_rate > 1)
        throw Error(Errc::BadConfig, "response rate must lie in [0, 1]");
    if (config.response_path.empty())
        throw Error(Errc::BadConfig, "response path must not be empty");

    std::vector<std::string> series_names = {"ipgt", "tax_receipts", "current_expenditures",
                                             "current_revenue"};
    for (int c = 0; c < config.n_confounders; ++c)
        series_names.push_back("cov_conf" + std::to_string(c));
    for (int c = 0; c < config.n_noise_covariates; ++c)
        series_names.push_back("cov_noise" + std::to_string(c));
    const std::size_t n_series = series_names.size();
    const int n_years = config.n_years;

    auto rate_for = [&](double shock) {
        if (shock == 0.0) return 0.0;
        switch (config.regime) {
            case FiscalRegime::Smoothing: return 0.0;
            case FiscalRegime::HandToMouth: return config.response_rate;
            case FiscalRegime::PoliticoEconomic: return shock > 0 ? config.response_rate : 0.0;
            case FiscalRegime::FiscalConservatism: return shock < 0 ? config.response_rate : 0.0;
        }
        return 0.0;
    };

    std::vector<UnitData> units(static_cast<std::size_t>(config.n_units));
    parallel_for(static_cast<std::size_t>(config.n_units), [&](std::size_t u) {
        std::mt19937_64 rng(splitmix64(config.seed + 0x9E3779B97F4A7C15ULL *
                                                         (static_cast<std::uint64_t>(u) + 1)));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        const std::string name = unit_name(static_cast<int>(u), config.n_units);
        const double level = std::exp(config.level_log_mean + config.level_log_sd * normal(rng));
        const double slope = config.slope_sd * normal(rng);
        const double curve = config.curvature_sd * normal(rng);
        const double wave_amp = config.trend_wave_frac * level;
        const double wave_period = config.trend_wave_period * (0.8 + 0.45 * unif(rng));
        const double wave_phase = 2.0 * 3.14159265358979323846 * unif(rng);
        const double tax_slope = config.outcome_drift_sd * normal(rng);
        const double exp_slope = config.outcome_drift_sd * normal(rng);
        const double rev_slope = config.outcome_drift_sd * normal(rng);

        std::vector<std::vector<double>> conf, noise_cov;
        for (int c = 0; c < config.n_confounders; ++c)
            conf.push_back(ar1_path(rng, n_years, config.conf_ar, config.conf_sd_frac * level));
        for (int c = 0; c < config.n_noise_covariates; ++c)
            noise_cov.push_back(ar1_path(rng, n_years, 0.5, 0.1 * level));

        std::vector<double> trend(n_years), eps(n_years), shock(n_years, 0.0);
        for (int t = 0; t < n_years; ++t) {
            double x = (static_cast<double>(t) - (n_years - 1) / 2.0) / n_years;
            double wave = wave_amp * std::sin(2.0 * 3.14159265358979323846 *
                                                  static_cast<double>(t) / wave_period +
                                              wave_phase);
            trend[t] = std::max(0.05 * level,
                                level * (1.0 + slope * x + curve * (x * x - 1.0 / 12.0)) + wave);
            eps[t] = config.noise_sd_frac * level * normal(rng);
        }

        // One-off deviations at jittered gaps, signs mostly alternating and
        // magnitudes drawn independently. Alternation keeps the local mean
        // of the series near the trend so the smoother band stays tight;
        // placement avoids the first/last two years where the boundary fit
        // is too loose to separate anything.
        int edge = std::max(0, config.shock_edge_margin);
        if (config.shock_prob > 0.0 && n_years >= 2 * edge + 3) {
            double mean_gap = std::clamp(1.0 / config.shock_prob, 2.0, 8.0);
            bool positive = unif(rng) < config.shock_pos_share;
            int t = edge + static_cast<int>(unif(rng) * 2.0);
            while (t <= n_years - 1 - edge) {
                double scale = positive ? config.shock_pos_scale : config.shock_neg_scale;
                double log_sd = positive ? config.shock_pos_log_sd : config.shock_neg_log_sd;
                double magnitude = level * std::exp(std::log(scale) + log_sd * normal(rng));
                if (unif(rng) < config.shock_tail_prob)
                    magnitude *= config.shock_tail_mult * std::exp(0.25 * normal(rng));
                shock[t] = positive ? magnitude : -magnitude;
                int gap = static_cast<int>(std::lround(mean_gap + config.shock_gap_jitter * normal(rng)));
                t += std::max(2, gap);
                if (unif(rng) < config.shock_flip_prob) positive = !positive;
            }
        }

        UnitData data;
        data.series.assign(n_series, std::vector<double>(static_cast<std::size_t>(n_years)));
        data.truth.resize(static_cast<std::size_t>(n_years));
        std::vector<double> shock_eff(n_years, 0.0), ipgt_series(n_years, 0.0),
            conf_sums(n_years, 0.0);
        for (int t = 0; t < n_years; ++t) {
            double conf_sum = 0;
            for (const auto& z : conf) conf_sum += z[static_cast<std::size_t>(t)];
            conf_sums[t] = conf_sum;

            // Negative deviations are capped at a fixed fraction of the
            // unit's level (within-unit constant, so capped cells carry no
            // spurious slope); the absolute floor is a backstop.
            shock[t] = std::max(shock[t], -0.85 * level);
            double raw = trend[t] + eps[t] + shock[t] + config.conf_on_treatment * conf_sum;
            ipgt_series[t] = std::max(raw, config.ipgt_floor);
            shock_eff[t] = shock[t] + (ipgt_series[t] - raw);  // clipping trims the draw
        }
        for (int t = 0; t < n_years; ++t) {
            double conf_sum = conf_sums[t];
            double ipgt = ipgt_series[t];

            // Shock-year spending moves with the receipt itself (the CHF
            // margin the interaction coefficients measure); only deviations
            // that are large for the unit trigger a reaction.
            double response = 0.0;
            for (std::size_t d = 0; d < config.response_path.size(); ++d) {
                int src = t - static_cast<int>(d);
                if (src < 0) continue;
                if (std::fabs(shock_eff[src]) < config.response_floor_frac * level) continue;
                response += rate_for(shock_eff[src]) * config.response_path[d] * ipgt_series[src];
            }

            double x = (static_cast<double>(t) - (n_years - 1) / 2.0) / n_years;
            double tax = config.pass_through * ipgt +
                         config.other_tax_mult * level * (1.0 + tax_slope * x) +
                         config.conf_on_outcome * conf_sum +
                         config.outcome_noise_frac * level * normal(rng);
            double spending = config.spending_mult * level * (1.0 + exp_slope * x) + response +
                              config.conf_on_outcome * conf_sum +
                              config.outcome_noise_frac * level * normal(rng);
            double revenue = tax + config.nontax_mult * level * (1.0 + rev_slope * x) +
                             config.outcome_noise_frac * level * normal(rng);

            data.series[0][static_cast<std::size_t>(t)] = ipgt;
            data.series[1][static_cast<std::size_t>(t)] = tax;
            data.series[2][static_cast<std::size_t>(t)] = spending;
            data.series[3][static_cast<std::size_t>(t)] = revenue;
            std::size_t s = 4;
            for (int c = 0; c < config.n_confounders; ++c)
                data.series[s++][static_cast<std::size_t>(t)] = conf[static_cast<std::size_t>(c)]
                                                                    [static_cast<std::size_t>(t)];
            for (int c = 0; c < config.n_noise_covariates; ++c)
                data.series[s++][static_cast<std::size_t>(t)] =
                    noise_cov[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];

            auto& cell = data.truth[static_cast<std::size_t>(t)];
            cell.unit = name;
            cell.year = config.start_year + t;
            cell.trend = trend[t];
            cell.shock_sign = shock_eff[t] > 0 ? 1 : (shock_eff[t] < 0 ? -1 : 0);
            cell.shock_value = shock_eff[t];
            cell.response = response;
        }
        units[u] = std::move(data);
    });

    std::vector<std::string> row_units;
    std::vector<int> row_years;
    std::vector<std::vector<double>> row_values;
    GroundTruth truth;
    for (int u = 0; u < config.n_units; ++u) {
        const auto& data = units[static_cast<std::size_t>(u)];
        const std::string name = unit_name(u, config.n_units);
        for (int t = 0; t < n_years; ++t) {
            row_units.push_back(name);
            row_years.push_back(config.start_year + t);
            std::vector<double> vals(n_series);
            for (std::size_t s = 0; s < n_series; ++s)
                vals[s] = data.series[s][static_cast<std::size_t>(t)];
            row_values.push_back(std::move(vals));
            truth.cells.push_back(data.truth[static_cast<std::size_t>(t)]);
        }
    }
    for (std::size_t d = 0; d < config.response_path.size(); ++d) {
        bool pos_responds = config.regime == FiscalRegime::HandToMouth ||
                            config.regime == FiscalRegime::PoliticoEconomic;
        bool neg_responds = config.regime == FiscalRegime::HandToMouth ||
                            config.regime == FiscalRegime::FiscalConservatism;
        truth.response_pos.push_back(pos_responds ? config.response_rate * config.response_path[d]
                                                  : 0.0);
        truth.response_neg.push_back(neg_responds ? config.response_rate * config.response_path[d]
                                                  : 0.0);
    }

    return {PanelDataset::build(series_names, row_units, row_years, row_values), std::move(truth)};
}

void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path.string());
    out << "unit,year,trend,shock_sign,shock_value,response\n";
    char buf[40];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& c : truth.cells)
        out << c.unit << ',' << c.year << ',' << num(c.trend) << ',' << c.shock_sign << ','
            << num(c.shock_value) << ',' << num(c.response) << '\n';
}

CalibrationReport calibration_report(const PanelDataset& panel, const std::string& ipgt,
                                     const std::string& spending, const std::string& revenue) {
    std::vector<double> values, pct_spend, pct_rev;
    for (std::size_t u = 0; u < panel.units().size(); ++u) {
        int ui = static_cast<int>(u);
        for (int y = panel.first_year(ui); y <= panel.last_year(ui); ++y) {
            double v = panel.value(ui, y, ipgt);
            if (std::isnan(v)) continue;
            values.push_back(v);
            double sp = panel.value(ui, y, spending);
            double rv = panel.value(ui, y, revenue);
            if (!std::isnan(sp) && sp != 0.0) pct_spend.push_back(v / sp * 100.0);
            if (!std::isnan(rv) && rv != 0.0) pct_rev.push_back(v / rv * 100.0);
        }
    }
    if (values.empty()) throw Error(Errc::TooFewObservations, "no observations for " + ipgt);

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto sd_of = [&](const std::vector<double>& v, double m) {
        if (v.size() < 2) return 0.0;
        double ss = 0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };

    CalibrationReport r;
    r.n_obs = static_cast<long>(values.size());
    r.mean_ipgt = mean_of(values);
    r.sd_ipgt = sd_of(values, r.mean_ipgt);
    r.min_ipgt = *std::min_element(values.begin(), values.end());
    r.max_ipgt = *std::max_element(values.begin(), values.end());
    r.mean_pct_spending = mean_of(pct_spend);
    r.sd_pct_spending = sd_of(pct_spend, r.mean_pct_spending);
    r.mean_pct_revenue = mean_of(pct_rev);
    r.sd_pct_revenue = sd_of(pct_rev, r.mean_pct_revenue);
    return r;
}

nlohmann::json calibration_report_json(const CalibrationReport& r) {
    return {{"n_obs", r.n_obs},
            {"ipgt", {{"mean", r.mean_ipgt}, {"sd", r.sd_ipgt}, {"min", r.min_ipgt}, {"max", r.max_ipgt}}},
            {"pct_spending", {{"mean", r.mean_pct_spending}, {"sd", r.sd_pct_spending}}},
            {"pct_revenue", {{"mean", r.mean_pct_revenue}, {"sd", r.sd_pct_revenue}}}};
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
        read_if(j, "n_units", c.n_units);
        read_if(j, "n_years", c.n_years);
        read_if(j, "start_year", c.start_year);
        read_if(j, "level_log_mean", c.level_log_mean);
        read_if(j, "level_log_sd", c.level_log_sd);
        read_if(j, "slope_sd", c.slope_sd);
        read_if(j, "curvature_sd", c.curvature_sd);
        read_if(j, "trend_wave_frac", c.trend_wave_frac);
        read_if(j, "trend_wave_period", c.trend_wave_period);
        read_if(j, "noise_sd_frac", c.noise_sd_frac);
        read_if(j, "shock_prob", c.shock_prob);
        read_if(j, "shock_flip_prob", c.shock_flip_prob);
        read_if(j, "shock_gap_jitter", c.shock_gap_jitter);
        read_if(j, "shock_edge_margin", c.shock_edge_margin);
        read_if(j, "shock_pos_share", c.shock_pos_share);
        read_if(j, "shock_pos_scale", c.shock_pos_scale);
        read_if(j, "shock_pos_log_sd", c.shock_pos_log_sd);
        read_if(j, "shock_neg_scale", c.shock_neg_scale);
        read_if(j, "shock_neg_log_sd", c.shock_neg_log_sd);
        read_if(j, "shock_tail_prob", c.shock_tail_prob);
        read_if(j, "shock_tail_mult", c.shock_tail_mult);
        read_if(j, "ipgt_floor", c.ipgt_floor);
        if (j.contains("regime")) c.regime = fiscal_regime_from_name(j.at("regime").get<std::string>());
        read_if(j, "response_rate", c.response_rate);
        read_if(j, "response_path", c.response_path);
        read_if(j, "response_floor_frac", c.response_floor_frac);
        read_if(j, "pass_through", c.pass_through);
        read_if(j, "n_confounders", c.n_confounders);
        read_if(j, "conf_ar", c.conf_ar);
        read_if(j, "conf_sd_frac", c.conf_sd_frac);
        read_if(j, "conf_on_treatment", c.conf_on_treatment);
        read_if(j, "conf_on_outcome", c.conf_on_outcome);
        read_if(j, "n_noise_covariates", c.n_noise_covariates);
        read_if(j, "other_tax_mult", c.other_tax_mult);
        read_if(j, "nontax_mult", c.nontax_mult);
        read_if(j, "spending_mult", c.spending_mult);
        read_if(j, "outcome_noise_frac", c.outcome_noise_frac);
        read_if(j, "outcome_drift_sd", c.outcome_drift_sd);
        read_if(j, "seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::BadConfig, e.what());
    }
    return c;
}

nlohmann::json synth_config_json(const SynthConfig& c) {
    return {{"n_units", c.n_units},
            {"n_years", c.n_years},
            {"start_year", c.start_year},
            {"level_log_mean", c.level_log_mean},
            {"level_log_sd", c.level_log_sd},
            {"slope_sd", c.slope_sd},
            {"curvature_sd", c.curvature_sd},
            {"trend_wave_frac", c.trend_wave_frac},
            {"trend_wave_period", c.trend_wave_period},
            {"noise_sd_frac", c.noise_sd_frac},
            {"shock_prob", c.shock_prob},
            {"shock_flip_prob", c.shock_flip_prob},
            {"shock_gap_jitter", c.shock_gap_jitter},
            {"shock_edge_margin", c.shock_edge_margin},
            {"shock_pos_share", c.shock_pos_share},
            {"shock_pos_scale", c.shock_pos_scale},
            {"shock_pos_log_sd", c.shock_pos_log_sd},
            {"shock_neg_scale", c.shock_neg_scale},
            {"shock_neg_log_sd", c.shock_neg_log_sd},
            {"shock_tail_prob", c.shock_tail_prob},
            {"shock_tail_mult", c.shock_tail_mult},
            {"ipgt_floor", c.ipgt_floor},
            {"regime", fiscal_regime_name(c.regime)},
            {"response_rate", c.response_rate},
            {"response_path", c.response_path},
            {"response_floor_frac", c.response_floor_frac},
            {"pass_through", c.pass_through},
            {"n_confounders", c.n_confounders},
            {"conf_ar", c.conf_ar},
            {"conf_sd_frac", c.conf_sd_frac},
            {"conf_on_treatment", c.conf_on_treatment},
            {"conf_on_outcome", c.conf_on_outcome},
            {"n_noise_covariates", c.n_noise_covariates},
            {"other_tax_mult", c.other_tax_mult},
            {"nontax_mult", c.nontax_mult},
            {"spending_mult", c.spending_mult},
            {"outcome_noise_frac", c.outcome_noise_frac},
            {"outcome_drift_sd", c.outcome_drift_sd},
            {"seed", c.seed}};
}

}  // namespace shockpanel
