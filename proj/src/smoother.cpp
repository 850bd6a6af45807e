#include "shockpanel/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shockpanel/errors.hpp"
#include "shockpanel/parallel.hpp"
#include "shockpanel/stats.hpp"

namespace shockpanel {

namespace {
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
}

double epanechnikov(double u) {
    double a = std::fabs(u);
    return a < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

double rot_bandwidth(const SeriesView& s, double min_bandwidth) {
    std::vector<double> t;
    t.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!s.is_missing(i)) t.push_back(static_cast<double>(s.years[i]));
    if (t.size() < 5)
        throw Error(Errc::TooFewObservations,
                    "unit " + s.unit + ": " + std::to_string(t.size()) + " non-missing observations, need 5");

    double spread_sd = stats::sd(t);
    double iqr = stats::quantile_type6(t, 0.75) - stats::quantile_type6(t, 0.25);
    double spread = std::min(spread_sd, iqr / 1.349);
    double h = 0.9 * spread * std::pow(static_cast<double>(t.size()), -0.2);
    return std::max(h, min_bandwidth);
}

namespace {

/// Equivalent-kernel weights of the local linear fit at t0: the linear
/// functional mapping observations to the fitted value.
struct LocalWeights {
    std::vector<double> l;  // over index positions into obs arrays
    double h_used;
};

LocalWeights equivalent_weights(std::span<const double> t, double t0, double h) {
    LocalWeights w;
    w.h_used = h;
    for (;;) {
        int support = 0;
        for (double tj : t)
            if (epanechnikov((tj - t0) / w.h_used) > 0.0) ++support;
        if (support >= 2) break;
        w.h_used *= 1.5;
    }
    double s0 = 0, s1 = 0, s2 = 0;
    std::vector<double> kw(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
        double d = t[j] - t0;
        kw[j] = epanechnikov(d / w.h_used);
        s0 += kw[j];
        s1 += kw[j] * d;
        s2 += kw[j] * d * d;
    }
    double denom = s0 * s2 - s1 * s1;
    if (denom <= 1e-12 * std::max(1.0, s0 * s2))
        throw Error(Errc::SingularLocalFit, "all weighted years identical at t0 = " + std::to_string(t0));
    w.l.resize(t.size());
    for (std::size_t j = 0; j < t.size(); ++j)
        w.l[j] = kw[j] * (s2 - (t[j] - t0) * s1) / denom;
    return w;
}

}  // namespace

SmootherResult local_linear_fit(const SeriesView& s, double h) {
    if (h <= 0.0) throw Error(Errc::TooFewObservations, "bandwidth must be positive");
    std::vector<double> t, y;
    std::vector<std::size_t> pos;  // index back into the view
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.is_missing(i)) continue;
        t.push_back(static_cast<double>(s.years[i]));
        y.push_back(s.values[i]);
        pos.push_back(i);
    }
    if (t.size() < 5)
        throw Error(Errc::TooFewObservations,
                    "unit " + s.unit + ": " + std::to_string(t.size()) + " non-missing observations, need 5");

    SmootherResult res;
    res.unit = s.unit;
    res.years = s.years;
    res.fitted.assign(s.size(), kMissing);
    res.se.assign(s.size(), kMissing);
    res.bandwidth_used.assign(s.size(), kMissing);
    res.bandwidth = h;

    const std::size_t n = t.size();
    std::vector<double> sum_l2(n);
    std::vector<double> fit(n);
    std::vector<double> h_used(n);
    for (std::size_t i = 0; i < n; ++i) {
        LocalWeights w = equivalent_weights(t, t[i], h);
        double f = 0, l2 = 0;
        for (std::size_t j = 0; j < n; ++j) {
            f += w.l[j] * y[j];
            l2 += w.l[j] * w.l[j];
        }
        fit[i] = f;
        sum_l2[i] = l2;
        h_used[i] = w.h_used;
    }

    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - fit[i];
        rss += r * r;
    }
    double sigma2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        res.fitted[pos[i]] = fit[i];
        res.se[pos[i]] = std::sqrt(std::max(0.0, sigma2 * sum_l2[i]));
        res.bandwidth_used[pos[i]] = h_used[i];
    }
    return res;
}

SmootherResult smooth_unit(const SeriesView& s, std::optional<double> h_override,
                           double min_bandwidth) {
    double h = h_override ? *h_override : rot_bandwidth(s, min_bandwidth);
    return local_linear_fit(s, h);
}

std::vector<SmootherResult> smooth_panel(const PanelDataset& panel, const std::string& series,
                                         std::optional<double> h_override, double min_bandwidth) {
    std::vector<SmootherResult> results(panel.units().size());
    std::vector<std::string> errors(panel.units().size());
    parallel_for(panel.units().size(), [&](std::size_t u) {
        try {
            results[u] = smooth_unit(panel.series(static_cast<int>(u), series), h_override,
                                     min_bandwidth);
        } catch (const Error& e) {
            errors[u] = e.what();
        }
    });
    for (const auto& msg : errors)
        if (!msg.empty()) throw Error(Errc::TooFewObservations, msg);
    return results;
}

Preciseness preciseness(const SeriesView& s, const SmootherResult& result,
                        const SeriesView& spending, const SeriesView& revenue) {
    if (s.years != result.years || s.years != spending.years || s.years != revenue.years)
        throw Error(Errc::AlignmentError, "series, smoother, spending, revenue must share years");

    double resid_sum = 0, spend_sum = 0, rev_sum = 0;
    std::size_t n = 0, n_spend = 0, n_rev = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.is_missing(i) && !std::isnan(result.fitted[i])) {
            resid_sum += s.values[i] - result.fitted[i];
            ++n;
        }
        if (!spending.is_missing(i)) {
            spend_sum += spending.values[i];
            ++n_spend;
        }
        if (!revenue.is_missing(i)) {
            rev_sum += revenue.values[i];
            ++n_rev;
        }
    }
    if (n == 0 || n_spend == 0 || n_rev == 0 || spend_sum == 0.0 || rev_sum == 0.0)
        throw Error(Errc::DegenerateDenominator, "unit " + s.unit);
    double mean_resid = resid_sum / static_cast<double>(n);
    return {mean_resid / (spend_sum / static_cast<double>(n_spend)) * 100.0,
            mean_resid / (rev_sum / static_cast<double>(n_rev)) * 100.0};
}

}  // namespace shockpanel
