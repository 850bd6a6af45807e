#include "shockpanel/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "shockpanel/stats.hpp"

namespace shockpanel {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

LassoProblem make_lasso_problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                double lambda, const Eigen::VectorXd& loadings,
                                std::vector<std::string> names, bool standardize) {
    const long n = X.rows();
    const long p = X.cols();
    if (loadings.size() != p) throw Error(Errc::AlignmentError, "one loading per column expected");
    if (y.size() != n) throw Error(Errc::AlignmentError, "response length != rows");
    if (names.empty()) {
        names.reserve(static_cast<std::size_t>(p));
        for (long j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    }

    LassoProblem prob;
    prob.lambda = lambda;
    prob.loadings = loadings;
    prob.names = std::move(names);
    prob.center = Eigen::VectorXd::Zero(p);
    prob.scale = Eigen::VectorXd::Ones(p);
    prob.X = X;
    prob.y = y;
    if (!standardize) return prob;

    prob.y_center = y.mean();
    prob.y.array() -= prob.y_center;
    for (long j = 0; j < p; ++j) {
        prob.center[j] = prob.X.col(j).mean();
        prob.X.col(j).array() -= prob.center[j];
        if (loadings[j] > 0.0) {
            double var = prob.X.col(j).squaredNorm() / static_cast<double>(n);
            double sd = std::sqrt(var);
            if (sd > 0.0) {
                prob.X.col(j) /= sd;
                prob.scale[j] = sd;
            }
        }
    }
    return prob;
}

namespace {

double objective_value(const LassoProblem& prob, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& resid) {
    double fit = resid.squaredNorm() / (2.0 * static_cast<double>(prob.X.rows()));
    double pen = 0.0;
    for (long j = 0; j < beta.size(); ++j) pen += prob.loadings[j] * std::fabs(beta[j]);
    return fit + prob.lambda * pen;
}

LassoSolution finish(const LassoProblem& prob, Eigen::VectorXd beta,
                     const Eigen::VectorXd& resid, int sweeps, bool converged) {
    LassoSolution sol;
    sol.beta_std = beta;
    sol.beta = beta;
    for (long j = 0; j < beta.size(); ++j) sol.beta[j] /= prob.scale[j];
    sol.intercept = prob.y_center;
    for (long j = 0; j < beta.size(); ++j) sol.intercept -= sol.beta[j] * prob.center[j];
    for (long j = 0; j < beta.size(); ++j)
        if (prob.loadings[j] > 0.0 && beta[j] != 0.0) sol.active.push_back(static_cast<int>(j));
    sol.objective = objective_value(prob, beta, resid);
    sol.sweeps = sweeps;
    sol.converged = converged;
    return sol;
}

}  // namespace

LassoSolution lasso_fit(const LassoProblem& prob, double tol, int max_sweeps) {
    const long n = prob.X.rows();
    const long p = prob.X.cols();
    if (n < 2) throw Error(Errc::TooFewObservations, "need at least 2 rows");
    if (p < 1) throw Error(Errc::AlignmentError, "need at least one column");

    Eigen::VectorXd sqnorm_n(p);
    for (long j = 0; j < p; ++j) sqnorm_n[j] = prob.X.col(j).squaredNorm() / static_cast<double>(n);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd resid = prob.y;
    int sweeps = 0;
    for (; sweeps < max_sweeps; ++sweeps) {
        double max_change = 0.0;
        for (long j = 0; j < p; ++j) {
            if (sqnorm_n[j] <= 0.0) continue;  // constant column, coefficient pinned at 0
            double rho = beta[j] * sqnorm_n[j] +
                         prob.X.col(j).dot(resid) / static_cast<double>(n);
            double updated = soft_threshold(rho, prob.lambda * prob.loadings[j]) / sqnorm_n[j];
            double change = updated - beta[j];
            if (change != 0.0) {
                resid -= prob.X.col(j) * change;
                beta[j] = updated;
                max_change = std::max(max_change, std::fabs(change));
            }
        }
        if (max_change < tol) return finish(prob, std::move(beta), resid, sweeps + 1, true);
    }
    throw NotConvergedError("lasso did not converge in " + std::to_string(max_sweeps) + " sweeps",
                            finish(prob, std::move(beta), resid, sweeps, false));
}

double plugin_lambda(long n, long p, double sigma_hat, double c, double gamma) {
    if (gamma <= 0.0) {
        double logmax = std::log(static_cast<double>(std::max({n, p, static_cast<long>(2)})));
        gamma = 0.1 / logmax;
    }
    double quantile = stats::normal_quantile(1.0 - gamma / (2.0 * static_cast<double>(p)));
    return c * sigma_hat * quantile / std::sqrt(static_cast<double>(n));
}

double cv_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& loadings, int folds, int grid_size) {
    const long n = X.rows();
    if (folds < 2 || n < folds) throw Error(Errc::TooFewObservations, "bad fold count");

    // lambda_max over penalized columns of the standardized problem
    LassoProblem full = make_lasso_problem(X, y, 0.0, loadings);
    double lambda_max = 0.0;
    for (long j = 0; j < X.cols(); ++j)
        if (loadings[j] > 0.0)
            lambda_max = std::max(lambda_max, std::fabs(full.X.col(j).dot(full.y)) /
                                                  (static_cast<double>(n) * loadings[j]));
    if (lambda_max <= 0.0) return 0.0;

    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    for (int g = 0; g < grid_size; ++g)
        grid[static_cast<std::size_t>(g)] =
            lambda_max * std::pow(1e-3, static_cast<double>(g) / (grid_size - 1));

    std::vector<int> fold_of(static_cast<std::size_t>(n));
    std::mt19937_64 rng(20240901ULL);
    for (long i = 0; i < n; ++i) fold_of[static_cast<std::size_t>(i)] = static_cast<int>(i % folds);
    std::shuffle(fold_of.begin(), fold_of.end(), rng);

    std::vector<std::vector<double>> fold_mse(static_cast<std::size_t>(grid_size));
    for (int f = 0; f < folds; ++f) {
        std::vector<long> train, test;
        for (long i = 0; i < n; ++i)
            (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        Eigen::MatrixXd Xtr(static_cast<long>(train.size()), X.cols());
        Eigen::VectorXd ytr(static_cast<long>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            Xtr.row(static_cast<long>(i)) = X.row(train[i]);
            ytr[static_cast<long>(i)] = y[train[i]];
        }
        for (int g = 0; g < grid_size; ++g) {
            LassoProblem prob = make_lasso_problem(Xtr, ytr, grid[static_cast<std::size_t>(g)],
                                                   loadings);
            LassoSolution sol = lasso_fit(prob, 1e-7, 20000);
            double mse = 0.0;
            for (long i : test) {
                double pred = sol.intercept + X.row(i).dot(sol.beta);
                mse += (y[i] - pred) * (y[i] - pred);
            }
            fold_mse[static_cast<std::size_t>(g)].push_back(mse / static_cast<double>(test.size()));
        }
    }

    // 1-SE rule: largest lambda whose mean MSE is within one standard error
    // of the minimum.
    double best_mean = std::numeric_limits<double>::infinity();
    double best_se = 0.0;
    for (int g = 0; g < grid_size; ++g) {
        const auto& v = fold_mse[static_cast<std::size_t>(g)];
        double m = stats::mean(v);
        if (m < best_mean) {
            best_mean = m;
            best_se = stats::sd(v) / std::sqrt(static_cast<double>(v.size()));
        }
    }
    for (int g = 0; g < grid_size; ++g) {
        if (stats::mean(fold_mse[static_cast<std::size_t>(g)]) <= best_mean + best_se)
            return grid[static_cast<std::size_t>(g)];
    }
    return grid.back();
}

}  // namespace shockpanel
