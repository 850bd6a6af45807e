#include "shockpanel/pds.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "shockpanel/lasso.hpp"

namespace shockpanel {

std::string lambda_rule_label(const LambdaRule& rule) {
    if (std::holds_alternative<PluginLambda>(rule)) return "plugin";
    if (std::holds_alternative<FixedLambda>(rule)) return "fixed";
    return "cv" + std::to_string(std::get<CvLambda>(rule).folds);
}

namespace {

/// sigma of the residual from OLS of target on [ones, columns].
double residual_scale(const Eigen::MatrixXd& columns, const Eigen::VectorXd& target) {
    const long n = target.size();
    Eigen::MatrixXd X(n, columns.cols() + 1);
    X.col(0).setOnes();
    if (columns.cols() > 0) X.rightCols(columns.cols()) = columns;
    Eigen::VectorXd beta = X.householderQr().solve(target);
    double rss = (target - X * beta).squaredNorm();
    long df = std::max<long>(1, n - X.cols());
    return std::sqrt(rss / static_cast<double>(df));
}

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& M, const std::vector<long>& idx) {
    Eigen::MatrixXd out(M.rows(), static_cast<long>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<long>(j)) = M.col(idx[j]);
    return out;
}

}  // namespace

SelectionStep select_controls(const Eigen::MatrixXd& candidates,
                              const std::vector<std::string>& candidate_names,
                              const Eigen::VectorXd& target, const std::string& target_label,
                              const Eigen::MatrixXd& always, const LambdaRule& rule) {
    SelectionStep step;
    step.target = target_label;
    const long pc = candidates.cols();
    if (pc == 0) return step;
    const long n = target.size();
    const long pa = always.cols();

    Eigen::MatrixXd X(n, pa + pc);
    if (pa > 0) X.leftCols(pa) = always;
    X.rightCols(pc) = candidates;
    Eigen::VectorXd loadings = Eigen::VectorXd::Ones(pa + pc);
    loadings.head(pa).setZero();

    auto fit_at = [&](double lambda) {
        LassoProblem prob = make_lasso_problem(X, target, lambda, loadings);
        return lasso_fit(prob, 1e-7, 50000);
    };

    LassoSolution sol;
    if (const auto* fixed = std::get_if<FixedLambda>(&rule)) {
        step.lambda = fixed->lambda;
        sol = fit_at(step.lambda);
    } else if (const auto* cv = std::get_if<CvLambda>(&rule)) {
        step.lambda = cv_lambda(X, target, loadings, cv->folds);
        sol = fit_at(step.lambda);
    } else {
        const auto& plugin = std::get<PluginLambda>(rule);
        // Initial scale from the always-include fit, then one refinement
        // through post-LASSO residuals.
        step.sigma_hat = residual_scale(always, target);
        for (int round = 0; round < 2; ++round) {
            step.lambda = plugin_lambda(n, pc, step.sigma_hat, plugin.c, plugin.gamma);
            sol = fit_at(step.lambda);
            if (round == 1) break;
            std::vector<long> keep;
            for (long j = 0; j < pa; ++j) keep.push_back(j);
            for (int a : sol.active) keep.push_back(a);
            step.sigma_hat = residual_scale(take_columns(X, keep), target);
        }
    }

    for (int a : sol.active)
        step.selected.push_back(candidate_names[static_cast<std::size_t>(a - pa)]);
    return step;
}

PdsResult pds_estimate(const PdsPlan& plan, const DesignMatrix& design, const Eigen::VectorXd& y,
                       const OlsOptions& options) {
    // Disjointness of the three roles.
    std::set<std::string> seen;
    for (const auto* group : {&plan.treatments, &plan.candidates, &plan.always_include})
        for (const auto& name : *group)
            if (!seen.insert(name).second)
                throw Error(Errc::AlignmentError, "column '" + name + "' appears in two plan roles");

    auto indices_of = [&](const std::vector<std::string>& names) {
        std::vector<long> idx;
        idx.reserve(names.size());
        for (const auto& name : names) {
            int j = design.column(name);
            if (j < 0) throw Error(Errc::UnknownSeries, "plan column '" + name + "' not in design");
            idx.push_back(j);
        }
        return idx;
    };
    const std::vector<long> treat_idx = indices_of(plan.treatments);
    const std::vector<long> cand_idx = indices_of(plan.candidates);
    const std::vector<long> always_idx = indices_of(plan.always_include);

    // Fixed effects are never penalized: partial unit/year means out of every
    // column before the selection regressions.
    Eigen::MatrixXd treat = take_columns(design.X, treat_idx);
    Eigen::MatrixXd cand = take_columns(design.X, cand_idx);
    Eigen::MatrixXd always = take_columns(design.X, always_idx);
    Eigen::VectorXd yt = y;
    {
        Eigen::MatrixXd all(design.n(), treat.cols() + cand.cols() + always.cols());
        all << treat, cand, always;
        within_transform(all, yt, design.unit_group, design.year_group, options.demean_tol,
                         options.max_demean_iter);
        treat = all.leftCols(treat.cols());
        cand = all.middleCols(treat.cols(), cand.cols());
        always = all.rightCols(always.cols());
    }

    PdsResult result;
    result.steps.push_back(
        select_controls(cand, plan.candidates, yt, plan.outcome, always, plan.lambda_rule));

    if (plan.treatment_blocks) {
        for (const auto& [label, block] : *plan.treatment_blocks) {
            if (block.empty()) continue;
            int j = design.column(block.front());
            if (j < 0) throw Error(Errc::UnknownSeries, block.front());
            auto pos = std::find(treat_idx.begin(), treat_idx.end(), static_cast<long>(j));
            if (pos == treat_idx.end())
                throw Error(Errc::AlignmentError, "block column '" + block.front() + "' is not a treatment");
            Eigen::VectorXd target = treat.col(pos - treat_idx.begin());
            result.steps.push_back(
                select_controls(cand, plan.candidates, target, label, always, plan.lambda_rule));
        }
    } else {
        for (std::size_t t = 0; t < plan.treatments.size(); ++t) {
            Eigen::VectorXd target = treat.col(static_cast<long>(t));
            result.steps.push_back(select_controls(cand, plan.candidates, target,
                                                   plan.treatments[t], always, plan.lambda_rule));
        }
    }

    std::set<std::string> in_union;
    for (const auto& step : result.steps)
        for (const auto& name : step.selected) in_union.insert(name);
    for (const auto& name : plan.candidates)
        if (in_union.count(name)) result.union_selected.push_back(name);

    // Final OLS on the original (untransformed) columns with absorption.
    DesignMatrix final_design;
    final_design.cluster = design.cluster;
    final_design.unit_group = design.unit_group;
    final_design.year_group = design.year_group;
    final_design.rows = design.rows;
    std::vector<long> cols;
    for (long j : treat_idx) cols.push_back(j);
    for (const auto& name : result.union_selected) cols.push_back(design.column(name));
    for (long j : always_idx) cols.push_back(j);
    final_design.X = take_columns(design.X, cols);
    for (long j : cols) final_design.names.push_back(design.names[static_cast<std::size_t>(j)]);

    result.table = ols_fe(final_design, y, options);
    return result;
}

}  // namespace shockpanel
