#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "shockpanel/pds.hpp"
#include "shockpanel/shocks.hpp"

namespace shockpanel {

/// Declarative description of one distributed-lag run. tau indexes event
/// time: tau = 2 is the effect two years after the flow entered the books,
/// negative tau are anticipation terms; the regressor at tau is the base
/// series lagged by tau years.
struct DlmSpec {
    std::string outcome = "current_expenditures";
    std::string base = "ipgt";
    int leads = 2;
    int lags = 5;
    double k = 3.0;
    bool interactions = true;     // off reproduces the pooled specification
    bool smoother_block = true;   // trend block always included, unpenalized
    std::vector<std::string> candidates;  // series expanded over the tau range
    bool unit_trends = true;      // per-unit linear/quadratic trend candidates
    std::vector<std::string> excluded_units;
    LambdaRule lambda_rule = PluginLambda{};
    bool per_block_selection = false;
    OlsOptions ols;
};

enum class Regime { Regular, Positive, Negative };
enum class Pairing { PosVsReg, NegVsReg, PosVsNeg };
const char* regime_name(Regime r);
const char* pairing_name(Pairing p);

/// Column name for a block at event time tau, e.g. ipgt_tm2 .. ipgt_tp5.
std::string tau_name(const std::string& block, int tau);

struct ImpactRow {
    int tau;
    Regime regime;
    double estimate, se, ci_lo, ci_hi, p_zero;
};

struct PairwiseRow {
    int tau;
    Pairing pairing;
    double estimate, se, t, p;
};

struct JointTest {
    double F = 0, p = 1;
    int df1 = 0;
    double df2 = 0;
};

struct DlmOutput {
    std::string variant = "baseline";
    std::string outcome;
    double k = 3.0;
    int leads = 2, lags = 5;
    long n = 0;
    int clusters = 0;
    std::vector<ImpactRow> rows;
    std::vector<PairwiseRow> pairwise;           // empty for pooled runs
    std::vector<std::pair<Pairing, JointTest>> joint_f;
    PdsResult pds;
};

struct DesignBundle {
    DesignMatrix design;
    Eigen::VectorXd y;
    PdsPlan plan;
};

/// Materializes the distributed-lag regressor blocks (base, shock dummies,
/// interactions, smoother trend) over the tau range, expands candidate
/// series with the same temporal structure, and keeps listwise-complete
/// rows with unit/year absorption labels attached.
DesignBundle build_design(const PanelDataset& panel, std::span<const SmootherResult> smoothers,
                          std::span<const FlowClass> classes, const DlmSpec& spec);

/// PDS estimation plus the derived outputs: per-tau total impacts by
/// regime, pairwise shock tests, and joint F over lags 1-4.
DlmOutput estimate(const DlmSpec& spec, const PanelDataset& panel,
                   std::span<const SmootherResult> smoothers, std::span<const FlowClass> classes);

/// The robustness protocol: outlier exclusion, k in {4, 5}, and 10 lags.
/// Keys: exclude_outliers, k4, k5, lags10.
std::map<std::string, DlmOutput> robustness_suite(const PanelDataset& panel,
                                                  std::span<const SmootherResult> smoothers,
                                                  const DlmSpec& base);

nlohmann::json dlm_output_json(const DlmOutput& out);
DlmOutput dlm_output_from_json(const nlohmann::json& j);

}  // namespace shockpanel
