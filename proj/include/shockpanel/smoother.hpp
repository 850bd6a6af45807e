#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shockpanel/panel.hpp"

namespace shockpanel {

/// Per-unit kernel-weighted local linear trend with pointwise standard
/// errors. Arrays align with the unit's observed years; cells where the
/// input was missing stay NaN.
struct SmootherResult {
    std::string unit;
    std::vector<int> years;
    std::vector<double> fitted;
    std::vector<double> se;
    std::vector<double> bandwidth_used;  // h after any local widening
    double bandwidth = 0.0;              // base h
    static constexpr const char* kernel = "epanechnikov";
};

/// Epanechnikov kernel: 0.75 (1 - u^2) on |u| < 1, else 0.
double epanechnikov(double u);

/// Silverman rule-of-thumb bandwidth over the running variable (years of
/// the non-missing observations): 0.9 min(sd, IQR/1.349) n^(-1/5), floored
/// at min_bandwidth. Requires at least 5 non-missing observations.
double rot_bandwidth(const SeriesView& s, double min_bandwidth = 1.0);

/// Local linear fit of value on year at every observed year. The fitted
/// value is the local WLS intercept; the standard error uses the
/// equivalent-kernel weights with a global residual variance on n - 2
/// degrees of freedom. Windows covering fewer than 2 points are widened
/// by factors of 1.5 and the widened bandwidth recorded.
SmootherResult local_linear_fit(const SeriesView& s, double h);

/// rot_bandwidth (or the override) followed by local_linear_fit.
SmootherResult smooth_unit(const SeriesView& s, std::optional<double> h_override = std::nullopt,
                           double min_bandwidth = 1.0);

/// Smooths the named series for every unit of the panel, in parallel.
std::vector<SmootherResult> smooth_panel(const PanelDataset& panel, const std::string& series,
                                         std::optional<double> h_override = std::nullopt,
                                         double min_bandwidth = 1.0);

/// Mean residual relative to mean spending and mean revenue, in percent.
struct Preciseness {
    double rel_spending_pct;
    double rel_revenue_pct;
};

Preciseness preciseness(const SeriesView& s, const SmootherResult& result,
                        const SeriesView& spending, const SeriesView& revenue);

}  // namespace shockpanel
