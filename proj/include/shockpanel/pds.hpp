#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shockpanel/regress.hpp"

namespace shockpanel {

/// How the selection steps pick their penalty level.
struct PluginLambda {
    double c = 1.1;
    double gamma = -1.0;  // <= 0: 0.1 / log(max(n, p))
};
struct FixedLambda {
    double lambda;
};
struct CvLambda {
    int folds = 10;
};
using LambdaRule = std::variant<PluginLambda, FixedLambda, CvLambda>;

std::string lambda_rule_label(const LambdaRule& rule);

/// Post-double-selection plan over a DesignMatrix whose columns hold the
/// outcome's regressors: treatments (never selected over), candidate
/// controls, and always-include columns (kept unpenalized everywhere).
struct PdsPlan {
    std::string outcome;                    // label only; y passed separately
    std::vector<std::string> treatments;
    std::vector<std::string> candidates;
    std::vector<std::string> always_include;
    LambdaRule lambda_rule = PluginLambda{};
    // Per-block mode: one selection per treatment block keyed by the label,
    // targeting the block's first column. Default is one step per column.
    std::optional<std::map<std::string, std::vector<std::string>>> treatment_blocks;
};

struct SelectionStep {
    std::string target;
    double lambda = 0.0;
    double sigma_hat = 0.0;
    std::vector<std::string> selected;
};

struct PdsResult {
    std::vector<SelectionStep> steps;       // outcome first, then treatments
    std::vector<std::string> union_selected;
    EstimateTable table;
};

/// One LASSO selection: target on candidates with always-include columns
/// entering unpenalized. The plugin sigma is iterated twice through
/// post-LASSO residuals.
SelectionStep select_controls(const Eigen::MatrixXd& candidates,
                              const std::vector<std::string>& candidate_names,
                              const Eigen::VectorXd& target, const std::string& target_label,
                              const Eigen::MatrixXd& always, const LambdaRule& rule);

/// Full post-double-selection: selection for the outcome, selection per
/// treatment (or per block), final cluster-robust OLS on treatments,
/// union, and always-include with fixed effects absorbed.
PdsResult pds_estimate(const PdsPlan& plan, const DesignMatrix& design, const Eigen::VectorXd& y,
                       const OlsOptions& options = {});

}  // namespace shockpanel
