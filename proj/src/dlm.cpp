#include "shockpanel/dlm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "shockpanel/errors.hpp"
#include "shockpanel/parallel.hpp"
#include "shockpanel/stats.hpp"

namespace shockpanel {

namespace {
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Regular: return "regular";
        case Regime::Positive: return "positive";
        case Regime::Negative: return "negative";
    }
    return "regular";
}

const char* pairing_name(Pairing p) {
    switch (p) {
        case Pairing::PosVsReg: return "positive_vs_regular";
        case Pairing::NegVsReg: return "negative_vs_regular";
        case Pairing::PosVsNeg: return "positive_vs_negative";
    }
    return "positive_vs_regular";
}

std::string tau_name(const std::string& block, int tau) {
    if (tau < 0) return block + "_tm" + std::to_string(-tau);
    if (tau > 0) return block + "_tp" + std::to_string(tau);
    return block + "_t0";
}

namespace {

struct UnitSeries {
    SeriesView base, smoother, shock_pos, shock_neg, ipgt_pos, ipgt_neg;
    std::vector<SeriesView> candidates;
};

UnitSeries derive_unit_series(const PanelDataset& panel, int u, const SmootherResult& sm,
                              const FlowClass& fc, const DlmSpec& spec) {
    UnitSeries s;
    s.base = panel.series(u, spec.base);
    if (s.base.years != sm.years || s.base.years != fc.years)
        throw Error(Errc::AlignmentError, "smoother/classes not aligned with panel for unit " + s.base.unit);

    auto blank = s.base;
    blank.values.assign(blank.size(), kMissing);
    s.smoother = blank;
    s.shock_pos = blank;
    s.shock_neg = blank;
    s.ipgt_pos = blank;
    s.ipgt_neg = blank;
    for (std::size_t i = 0; i < s.base.size(); ++i) {
        s.smoother.values[i] = sm.fitted[i];
        if (!fc.classified(i)) continue;
        double pos = fc.labels[i] == FlowLabel::PositiveShock ? 1.0 : 0.0;
        double neg = fc.labels[i] == FlowLabel::NegativeShock ? 1.0 : 0.0;
        s.shock_pos.values[i] = pos;
        s.shock_neg.values[i] = neg;
        s.ipgt_pos.values[i] = s.base.values[i] * pos;
        s.ipgt_neg.values[i] = s.base.values[i] * neg;
    }
    for (const auto& name : spec.candidates) s.candidates.push_back(panel.series(u, name));
    return s;
}

}  // namespace

DesignBundle build_design(const PanelDataset& panel, std::span<const SmootherResult> smoothers,
                          std::span<const FlowClass> classes, const DlmSpec& spec) {
    if (spec.leads < 0 || spec.lags < 0)
        throw Error(Errc::BadConfig, "leads and lags must be nonnegative");
    if (spec.outcome == spec.base)
        throw Error(Errc::BadConfig, "outcome must differ from the base series");
    if (!panel.has_series(spec.outcome)) throw Error(Errc::UnknownSeries, spec.outcome);
    if (!panel.has_series(spec.base)) throw Error(Errc::UnknownSeries, spec.base);
    if (smoothers.size() != panel.units().size() || classes.size() != panel.units().size())
        throw Error(Errc::AlignmentError, "one smoother and classification per unit expected");

    std::set<std::string> excluded(spec.excluded_units.begin(), spec.excluded_units.end());

    std::vector<int> taus;
    for (int tau = -spec.leads; tau <= spec.lags; ++tau) taus.push_back(tau);

    // Smoother shifts whose kernel mass lies inside the base-series tau
    // span are linear combinations of the base block whenever all units
    // share one bandwidth: the fitted value is a fixed kernel average of
    // the base series. Those coefficients are not identified (or only
    // through negligible edge weights), so the trend block keeps the
    // shifts whose window reaches outside the span with material weight.
    std::vector<int> smoother_taus;
    {
        double shared_h = smoothers.empty() ? 0.0 : smoothers.front().bandwidth;
        bool uniform = true;
        for (const auto& sm : smoothers) {
            if (sm.bandwidth != shared_h) uniform = false;
            for (double hu : sm.bandwidth_used)
                if (!std::isnan(hu) && hu != shared_h) uniform = false;
        }
        // largest offset whose kernel weight is at least 10% of the peak
        int radius = uniform ? static_cast<int>(std::floor(shared_h * std::sqrt(0.90))) : 0;
        for (int tau : taus) {
            bool redundant = uniform && tau >= radius - spec.leads && tau <= spec.lags - radius;
            if (!redundant) smoother_taus.push_back(tau);
        }
    }

    // Column layout: treatment blocks, candidate expansions, smoother block.
    std::vector<std::string> treat_blocks = {"ipgt"};
    if (spec.interactions) {
        treat_blocks.push_back("shock_pos");
        treat_blocks.push_back("shock_neg");
        treat_blocks.push_back("ipgt_pos");
        treat_blocks.push_back("ipgt_neg");
    }

    DesignBundle bundle;
    auto& plan = bundle.plan;
    plan.outcome = spec.outcome;
    plan.lambda_rule = spec.lambda_rule;
    std::map<std::string, std::vector<std::string>> blocks;
    for (const auto& block : treat_blocks) {
        blocks[block].push_back(tau_name(block, 0));  // block target first
        for (int tau : taus) {
            plan.treatments.push_back(tau_name(block, tau));
            if (tau != 0) blocks[block].push_back(tau_name(block, tau));
        }
    }
    if (spec.per_block_selection) plan.treatment_blocks = blocks;
    for (const auto& cand : spec.candidates)
        for (int tau : taus) plan.candidates.push_back(tau_name(cand, tau));
    std::vector<std::string> trend_units;
    if (spec.unit_trends) {
        for (const auto& unit : panel.units()) {
            if (excluded.count(unit)) continue;
            trend_units.push_back(unit);
            plan.candidates.push_back("trend_" + unit);
            plan.candidates.push_back("trend2_" + unit);
        }
    }
    if (spec.smoother_block)
        for (int tau : smoother_taus) plan.always_include.push_back(tau_name("smoother", tau));

    auto& design = bundle.design;
    design.names = plan.treatments;
    design.names.insert(design.names.end(), plan.candidates.begin(), plan.candidates.end());
    design.names.insert(design.names.end(), plan.always_include.begin(), plan.always_include.end());
    const long p = static_cast<long>(design.names.size());

    int min_year = std::numeric_limits<int>::max();
    for (std::size_t u = 0; u < panel.units().size(); ++u)
        min_year = std::min(min_year, panel.first_year(static_cast<int>(u)));

    std::vector<Eigen::RowVectorXd> rows_x;
    std::vector<double> rows_y;
    for (std::size_t u = 0; u < panel.units().size(); ++u) {
        const std::string& unit = panel.units()[u];
        if (excluded.count(unit)) continue;
        UnitSeries s = derive_unit_series(panel, static_cast<int>(u), smoothers[u], classes[u], spec);
        SeriesView outcome = panel.series(static_cast<int>(u), spec.outcome);

        // Shift every block over the tau grid once.
        std::vector<std::vector<SeriesView>> shifted;  // per block, per tau
        auto add_block = [&](const SeriesView& sv, const std::vector<int>& block_taus) {
            std::vector<SeriesView> cols;
            cols.reserve(block_taus.size());
            for (int tau : block_taus) cols.push_back(shift(sv, tau));
            shifted.push_back(std::move(cols));
        };
        add_block(s.base, taus);
        if (spec.interactions) {
            add_block(s.shock_pos, taus);
            add_block(s.shock_neg, taus);
            add_block(s.ipgt_pos, taus);
            add_block(s.ipgt_neg, taus);
        }
        for (const auto& cand : s.candidates) add_block(cand, taus);
        if (spec.smoother_block) add_block(s.smoother, smoother_taus);

        const int trend_col = [&] {
            auto it = std::find(trend_units.begin(), trend_units.end(), unit);
            return it == trend_units.end() ? -1 : static_cast<int>(it - trend_units.begin());
        }();

        for (std::size_t i = 0; i < s.base.size(); ++i) {
            bool complete = !outcome.is_missing(i);
            for (const auto& block : shifted) {
                for (const auto& col : block)
                    if (col.is_missing(i)) {
                        complete = false;
                        break;
                    }
                if (!complete) break;
            }
            if (!complete) continue;

            Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p);
            long j = 0;
            std::size_t shifted_idx = 0;
            auto emit_block = [&](std::size_t block_idx) {
                for (const auto& col : shifted[block_idx]) row[j++] = col.values[i];
            };
            // treatments
            std::size_t n_treat_blocks = treat_blocks.size();
            for (std::size_t b = 0; b < n_treat_blocks; ++b) emit_block(shifted_idx++);
            // candidate expansions
            for (std::size_t c = 0; c < s.candidates.size(); ++c) emit_block(shifted_idx++);
            // unit trend candidates
            if (spec.unit_trends) {
                double t_lin = static_cast<double>(s.base.years[i] - min_year);
                for (std::size_t tu = 0; tu < trend_units.size(); ++tu) {
                    bool own = static_cast<int>(tu) == trend_col;
                    row[j++] = own ? t_lin : 0.0;
                    row[j++] = own ? t_lin * t_lin : 0.0;
                }
            }
            // smoother block
            if (spec.smoother_block) emit_block(shifted_idx++);

            rows_x.push_back(std::move(row));
            rows_y.push_back(outcome.values[i]);
            design.rows.push_back({static_cast<int>(u), s.base.years[i]});
            design.cluster.push_back(static_cast<int>(u));
            design.unit_group.push_back(static_cast<int>(u));
            design.year_group.push_back(s.base.years[i]);
        }
    }

    const long n = static_cast<long>(rows_x.size());
    design.X.resize(n, p);
    bundle.y.resize(n);
    for (long i = 0; i < n; ++i) {
        design.X.row(i) = rows_x[static_cast<std::size_t>(i)];
        bundle.y[i] = rows_y[static_cast<std::size_t>(i)];
    }
    return bundle;
}

DlmOutput estimate(const DlmSpec& spec, const PanelDataset& panel,
                   std::span<const SmootherResult> smoothers, std::span<const FlowClass> classes) {
    DesignBundle bundle = build_design(panel, smoothers, classes, spec);
    PdsResult pds = pds_estimate(bundle.plan, bundle.design, bundle.y, spec.ols);
    const EstimateTable& table = pds.table;

    DlmOutput out;
    out.outcome = spec.outcome;
    out.k = spec.k;
    out.leads = spec.leads;
    out.lags = spec.lags;
    out.n = table.n;
    out.clusters = table.n_clusters;

    const double t_crit = stats::student_t_quantile(0.975, table.t_df());
    auto impact = [&](int tau, Regime regime) {
        std::vector<std::pair<std::string, double>> w = {{tau_name("ipgt", tau), 1.0}};
        if (regime == Regime::Positive) w.push_back({tau_name("ipgt_pos", tau), 1.0});
        if (regime == Regime::Negative) w.push_back({tau_name("ipgt_neg", tau), 1.0});
        LincomResult lc = lincom(table, w);
        out.rows.push_back({tau, regime, lc.estimate, lc.se, lc.estimate - t_crit * lc.se,
                            lc.estimate + t_crit * lc.se, lc.p});
    };
    auto pairwise = [&](int tau, Pairing pairing) {
        std::vector<std::pair<std::string, double>> w;
        if (pairing == Pairing::PosVsReg) w = {{tau_name("ipgt_pos", tau), 1.0}};
        if (pairing == Pairing::NegVsReg) w = {{tau_name("ipgt_neg", tau), 1.0}};
        if (pairing == Pairing::PosVsNeg)
            w = {{tau_name("ipgt_pos", tau), 1.0}, {tau_name("ipgt_neg", tau), -1.0}};
        LincomResult lc = lincom(table, w);
        out.pairwise.push_back({tau, pairing, lc.estimate, lc.se, lc.t, lc.p});
    };

    for (int tau = -spec.leads; tau <= spec.lags; ++tau) {
        impact(tau, Regime::Regular);
        if (spec.interactions) {
            impact(tau, Regime::Positive);
            impact(tau, Regime::Negative);
            pairwise(tau, Pairing::PosVsReg);
            pairwise(tau, Pairing::NegVsReg);
            pairwise(tau, Pairing::PosVsNeg);
        }
    }

    if (spec.interactions && spec.lags >= 1) {
        // Shocks fade out by lag 5; joint significance is tested on lags 1-4.
        int top = std::min(4, spec.lags);
        auto joint = [&](Pairing pairing) {
            std::vector<std::vector<std::pair<std::string, double>>> restrictions;
            for (int tau = 1; tau <= top; ++tau) {
                if (pairing == Pairing::PosVsReg)
                    restrictions.push_back({{tau_name("ipgt_pos", tau), 1.0}});
                if (pairing == Pairing::NegVsReg)
                    restrictions.push_back({{tau_name("ipgt_neg", tau), 1.0}});
                if (pairing == Pairing::PosVsNeg)
                    restrictions.push_back(
                        {{tau_name("ipgt_pos", tau), 1.0}, {tau_name("ipgt_neg", tau), -1.0}});
            }
            WaldResult wr = wald_joint(table, restrictions);
            out.joint_f.push_back({pairing, {wr.F, wr.p, wr.q, wr.df2}});
        };
        joint(Pairing::PosVsReg);
        joint(Pairing::NegVsReg);
        joint(Pairing::PosVsNeg);
    }

    out.pds = std::move(pds);
    return out;
}

std::map<std::string, DlmOutput> robustness_suite(const PanelDataset& panel,
                                                  std::span<const SmootherResult> smoothers,
                                                  const DlmSpec& base) {
    struct Variant {
        std::string label;
        DlmSpec spec;
    };
    std::vector<Variant> variants;
    {
        Variant v{"exclude_outliers", base};
        v.spec.excluded_units = exclusion_mask(panel, smoothers, ExclusionRule::Union);
        variants.push_back(std::move(v));
    }
    for (double k : {4.0, 5.0}) {
        Variant v{"k" + std::to_string(static_cast<int>(k)), base};
        v.spec.k = k;
        variants.push_back(std::move(v));
    }
    {
        Variant v{"lags10", base};
        v.spec.lags = 10;
        variants.push_back(std::move(v));
    }

    std::vector<DlmOutput> outputs(variants.size());
    std::vector<std::string> errors(variants.size());
    parallel_for(variants.size(), [&](std::size_t i) {
        try {
            auto classes = classify_panel(panel, variants[i].spec.base, smoothers, variants[i].spec.k);
            outputs[i] = estimate(variants[i].spec, panel, smoothers, classes);
            outputs[i].variant = variants[i].label;
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    for (const auto& msg : errors)
        if (!msg.empty()) throw Error(Errc::BadConfig, msg);

    std::map<std::string, DlmOutput> out;
    for (std::size_t i = 0; i < variants.size(); ++i)
        out.emplace(variants[i].label, std::move(outputs[i]));
    return out;
}

nlohmann::json dlm_output_json(const DlmOutput& out) {
    nlohmann::json j;
    j["variant"] = out.variant;
    j["outcome"] = out.outcome;
    j["k"] = out.k;
    j["leads"] = out.leads;
    j["lags"] = out.lags;
    j["n"] = out.n;
    j["clusters"] = out.clusters;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : out.rows)
        j["rows"].push_back({{"tau", r.tau},
                             {"regime", regime_name(r.regime)},
                             {"estimate", r.estimate},
                             {"se", r.se},
                             {"ci_lo", r.ci_lo},
                             {"ci_hi", r.ci_hi},
                             {"p_zero", r.p_zero}});
    j["pairwise"] = nlohmann::json::array();
    for (const auto& r : out.pairwise)
        j["pairwise"].push_back({{"tau", r.tau},
                                 {"pair", pairing_name(r.pairing)},
                                 {"estimate", r.estimate},
                                 {"se", r.se},
                                 {"t", r.t},
                                 {"p", r.p}});
    j["jointF"] = nlohmann::json::object();
    for (const auto& [pairing, test] : out.joint_f)
        j["jointF"][pairing_name(pairing)] = {
            {"F", test.F}, {"p", test.p}, {"df1", test.df1}, {"df2", test.df2}};
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& step : out.pds.steps)
        steps.push_back({{"target", step.target},
                         {"lambda", step.lambda},
                         {"sigma_hat", step.sigma_hat},
                         {"selected", step.selected}});
    j["selection_report"] = {{"steps", steps}, {"union", out.pds.union_selected}};
    return j;
}

namespace {

Regime regime_from_name(const std::string& name) {
    if (name == "regular") return Regime::Regular;
    if (name == "positive") return Regime::Positive;
    if (name == "negative") return Regime::Negative;
    throw Error(Errc::ReportSchemaError, "unknown regime '" + name + "'");
}

Pairing pairing_from_name(const std::string& name) {
    if (name == "positive_vs_regular") return Pairing::PosVsReg;
    if (name == "negative_vs_regular") return Pairing::NegVsReg;
    if (name == "positive_vs_negative") return Pairing::PosVsNeg;
    throw Error(Errc::ReportSchemaError, "unknown pairing '" + name + "'");
}

}  // namespace

DlmOutput dlm_output_from_json(const nlohmann::json& j) {
    DlmOutput out;
    try {
        out.variant = j.at("variant").get<std::string>();
        out.outcome = j.at("outcome").get<std::string>();
        out.k = j.at("k").get<double>();
        out.leads = j.at("leads").get<int>();
        out.lags = j.at("lags").get<int>();
        out.n = j.at("n").get<long>();
        out.clusters = j.at("clusters").get<int>();
        for (const auto& r : j.at("rows"))
            out.rows.push_back({r.at("tau").get<int>(), regime_from_name(r.at("regime")),
                                r.at("estimate").get<double>(), r.at("se").get<double>(),
                                r.at("ci_lo").get<double>(), r.at("ci_hi").get<double>(),
                                r.at("p_zero").get<double>()});
        for (const auto& r : j.at("pairwise"))
            out.pairwise.push_back({r.at("tau").get<int>(), pairing_from_name(r.at("pair")),
                                    r.at("estimate").get<double>(), r.at("se").get<double>(),
                                    r.at("t").get<double>(), r.at("p").get<double>()});
        for (const auto& [name, test] : j.at("jointF").items())
            out.joint_f.push_back({pairing_from_name(name),
                                   {test.at("F").get<double>(), test.at("p").get<double>(),
                                    test.at("df1").get<int>(), test.at("df2").get<double>()}});
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ReportSchemaError, e.what());
    }
    return out;
}

}  // namespace shockpanel
