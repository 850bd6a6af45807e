#include "shockpanel/shocks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "shockpanel/errors.hpp"

namespace shockpanel {

namespace {
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
}

const char* flow_label_name(FlowLabel label) {
    switch (label) {
        case FlowLabel::Regular: return "regular";
        case FlowLabel::PositiveShock: return "positive";
        case FlowLabel::NegativeShock: return "negative";
    }
    return "regular";
}

FlowLabel flow_label_from_name(const std::string& name) {
    if (name == "positive") return FlowLabel::PositiveShock;
    if (name == "negative") return FlowLabel::NegativeShock;
    if (name == "regular") return FlowLabel::Regular;
    throw Error(Errc::ParseError, "unknown flow label '" + name + "'");
}

FlowClass classify(const SeriesView& s, const SmootherResult& smoother, double k) {
    if (k <= 0.0) throw Error(Errc::AlignmentError, "k must be positive");
    if (s.years != smoother.years || s.unit != smoother.unit)
        throw Error(Errc::AlignmentError, "series and smoother are not aligned for unit " + s.unit);

    FlowClass fc;
    fc.unit = s.unit;
    fc.years = s.years;
    fc.k = k;
    fc.delta.assign(s.size(), kMissing);
    fc.labels.assign(s.size(), FlowLabel::Regular);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.is_missing(i) || std::isnan(smoother.fitted[i])) continue;
        double delta = s.values[i] - smoother.fitted[i];
        // ties classify as Regular; the guard keeps floating-point noise on
        // exact-fit data from masquerading as an exceedance
        double band = k * smoother.se[i] +
                      1e-9 * (std::fabs(s.values[i]) + std::fabs(smoother.fitted[i]));
        fc.delta[i] = delta;
        if (delta > band)
            fc.labels[i] = FlowLabel::PositiveShock;
        else if (delta < -band)
            fc.labels[i] = FlowLabel::NegativeShock;
        else
            fc.labels[i] = FlowLabel::Regular;
    }
    return fc;
}

std::vector<FlowClass> classify_panel(const PanelDataset& panel, const std::string& series,
                                      std::span<const SmootherResult> smoothers, double k) {
    if (smoothers.size() != panel.units().size())
        throw Error(Errc::AlignmentError, "one smoother result per unit expected");
    std::vector<FlowClass> out;
    out.reserve(smoothers.size());
    for (std::size_t u = 0; u < smoothers.size(); ++u)
        out.push_back(classify(panel.series(static_cast<int>(u), series), smoothers[u], k));
    return out;
}

namespace {

struct Accum {
    std::vector<double> values;
    void add(double v) { values.push_back(v); }
    Moments moments() const {
        Moments m;
        m.count = static_cast<long>(values.size());
        if (values.empty()) {
            m.mean = m.sd = m.min = m.max = kMissing;
            return m;
        }
        double s = 0;
        m.min = values[0];
        m.max = values[0];
        for (double v : values) {
            s += v;
            m.min = std::min(m.min, v);
            m.max = std::max(m.max, v);
        }
        m.mean = s / static_cast<double>(values.size());
        if (values.size() < 2) {
            m.sd = kMissing;
            return m;
        }
        double ss = 0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        return m;
    }
};

}  // namespace

DescriptiveTable descriptives(const PanelDataset& panel, std::span<const FlowClass> classes,
                              const std::string& spending, const std::string& revenue) {
    if (!panel.has_series(spending)) throw Error(Errc::UnknownSeries, spending);
    if (!panel.has_series(revenue)) throw Error(Errc::UnknownSeries, revenue);

    Accum d[3], ps[3], pr[3];
    long total = 0;
    for (const auto& fc : classes) {
        int u = panel.unit_index(fc.unit);
        if (u < 0) throw Error(Errc::AlignmentError, "unknown unit " + fc.unit);
        for (std::size_t i = 0; i < fc.size(); ++i) {
            if (!fc.classified(i)) continue;
            ++total;
            int cls = static_cast<int>(fc.labels[i]);
            // Panel D orientation: negative shocks reported as smoother - value.
            double delta = fc.labels[i] == FlowLabel::NegativeShock ? -fc.delta[i] : fc.delta[i];
            d[cls].add(delta);
            double sp = panel.value(u, fc.years[i], spending);
            double rv = panel.value(u, fc.years[i], revenue);
            if (!std::isnan(sp) && sp != 0.0) ps[cls].add(delta / sp * 100.0);
            if (!std::isnan(rv) && rv != 0.0) pr[cls].add(delta / rv * 100.0);
        }
    }

    DescriptiveTable table;
    table.total = total;
    DescriptiveTable::ClassRow* rows[3] = {&table.regular, &table.positive, &table.negative};
    for (int c = 0; c < 3; ++c) {
        rows[c]->delta = d[c].moments();
        rows[c]->pct_spending = ps[c].moments();
        rows[c]->pct_revenue = pr[c].moments();
    }
    return table;
}

std::vector<std::string> exclusion_mask(const PanelDataset& panel,
                                        std::span<const SmootherResult> smoothers,
                                        ExclusionRule rule, const std::string& spending) {
    if (smoothers.size() != panel.units().size())
        throw Error(Errc::AlignmentError, "one smoother result per unit expected");

    auto unit_mean = [](const std::vector<double>& v) {
        double s = 0;
        std::size_t n = 0;
        for (double x : v)
            if (!std::isnan(x)) {
                s += x;
                ++n;
            }
        return n ? s / static_cast<double>(n) : kMissing;
    };

    const std::size_t n_units = panel.units().size();
    std::vector<double> lower_bound(n_units), share(n_units);
    for (std::size_t u = 0; u < n_units; ++u) {
        const auto& sm = smoothers[u];
        std::vector<double> lb(sm.fitted.size(), kMissing), fit(sm.fitted.size(), kMissing);
        for (std::size_t i = 0; i < sm.fitted.size(); ++i) {
            if (std::isnan(sm.fitted[i])) continue;
            lb[i] = sm.fitted[i] - 3.0 * sm.se[i];
            fit[i] = sm.fitted[i];
        }
        lower_bound[u] = unit_mean(lb);
        SeriesView sp = panel.series(static_cast<int>(u), spending);
        double mean_spend = unit_mean(sp.values);
        double mean_fit = unit_mean(fit);
        share[u] = (std::isnan(mean_spend) || mean_spend == 0.0) ? kMissing : mean_fit / mean_spend;
    }

    auto lowest_decile = [&](const std::vector<double>& metric) {
        std::vector<std::size_t> order(n_units);
        for (std::size_t u = 0; u < n_units; ++u) order[u] = u;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (metric[a] != metric[b]) return metric[a] < metric[b];
            return panel.units()[a] < panel.units()[b];
        });
        std::size_t count = n_units / 10;
        std::set<std::string> s;
        for (std::size_t i = 0; i < count; ++i) s.insert(panel.units()[order[i]]);
        return s;
    };

    std::set<std::string> excluded;
    if (rule == ExclusionRule::LowerBound || rule == ExclusionRule::Union) {
        auto s = lowest_decile(lower_bound);
        excluded.insert(s.begin(), s.end());
    }
    if (rule == ExclusionRule::SmootherShare || rule == ExclusionRule::Union) {
        auto s = lowest_decile(share);
        excluded.insert(s.begin(), s.end());
    }
    return {excluded.begin(), excluded.end()};
}

}  // namespace shockpanel
