#pragma once

#include <span>
#include <string>
#include <vector>

#include "shockpanel/panel.hpp"
#include "shockpanel/smoother.hpp"

namespace shockpanel {

enum class FlowLabel { Regular, PositiveShock, NegativeShock };

const char* flow_label_name(FlowLabel label);
FlowLabel flow_label_from_name(const std::string& name);

/// Three-way classification of one unit's revenue flows against the
/// smoother band. delta = value - fitted; labels partition the classified
/// (non-missing) years. Band boundaries count as Regular.
struct FlowClass {
    std::string unit;
    std::vector<int> years;
    std::vector<double> delta;        // NaN where unclassified
    std::vector<FlowLabel> labels;    // valid where delta is not NaN
    double k = 3.0;

    std::size_t size() const { return years.size(); }
    bool classified(std::size_t i) const { return !std::isnan(delta[i]); }
};

FlowClass classify(const SeriesView& s, const SmootherResult& smoother, double k);

std::vector<FlowClass> classify_panel(const PanelDataset& panel, const std::string& series,
                                      std::span<const SmootherResult> smoothers, double k);

/// Count / mean / sd / min / max of a delta measure within one flow class.
struct Moments {
    long count = 0;
    double mean = 0, sd = 0, min = 0, max = 0;
};

/// Table-1-shaped descriptives: per class, moments of delta and of delta
/// relative to current spending and revenue (percent). The negative-shock
/// panel is reported with flipped orientation (smoother - value).
struct DescriptiveTable {
    struct ClassRow {
        Moments delta;
        Moments pct_spending;
        Moments pct_revenue;
    };
    ClassRow regular, positive, negative;
    long total = 0;
};

DescriptiveTable descriptives(const PanelDataset& panel, std::span<const FlowClass> classes,
                              const std::string& spending = "current_expenditures",
                              const std::string& revenue = "current_revenue");

/// Lowest-decile outlier rules of the robustness protocol.
enum class ExclusionRule {
    LowerBound,      // mean(fitted - 3 se) in the lowest decile
    SmootherShare,   // mean(fitted) / mean(spending) in the lowest decile
    Union,           // either rule
};

/// Units excluded under the rule; ties broken by unit id, decile count is
/// floor(n/10) per rule.
std::vector<std::string> exclusion_mask(const PanelDataset& panel,
                                        std::span<const SmootherResult> smoothers,
                                        ExclusionRule rule,
                                        const std::string& spending = "current_expenditures");

}  // namespace shockpanel
