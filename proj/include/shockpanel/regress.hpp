#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "shockpanel/panel.hpp"

namespace shockpanel {

/// Materialized regressor block: named columns over listwise-complete rows,
/// a cluster id per row, and optional absorbed-effect group labels.
struct DesignMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd X;              // n x p, no missing cells
    std::vector<int> cluster;       // per row
    std::vector<int> unit_group;    // empty = unit effects not absorbed
    std::vector<int> year_group;    // empty = year effects not absorbed
    std::vector<RowKey> rows;

    long n() const { return X.rows(); }
    long p() const { return X.cols(); }
    int column(const std::string& name) const;  // -1 if absent
};

/// Coefficients with a cluster-robust covariance. Reference distribution
/// for t statistics is t(G - 1).
struct EstimateTable {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::MatrixXd vcov;
    long n = 0;
    int n_clusters = 0;
    long k_params = 0;   // regressors plus absorbed effects
    long resid_df = 0;   // n - k_params
    Eigen::VectorXd se, tstat, pvalue;

    int column(const std::string& name) const;
    double t_df() const { return static_cast<double>(n_clusters - 1); }
};

struct OlsOptions {
    double demean_tol = 1e-10;
    int max_demean_iter = 10000;
    double rank_tol = 1e-10;  // relative to the largest R diagonal
};

/// Two-way fixed-effects OLS with CR1 cluster-robust covariance:
/// (G/(G-1)) ((n-1)/(n-K)) (X'X)^-1 (sum_g X_g'e_g e_g'X_g) (X'X)^-1,
/// K counting absorbed effects. Absorption is by iterated group demeaning.
EstimateTable ols_fe(const DesignMatrix& design, const Eigen::VectorXd& y,
                     const OlsOptions& options = {});

/// Iterated demeaning of M's columns and y in place over the given group
/// factors (either may be empty) until every group mean is below tol.
void within_transform(Eigen::MatrixXd& M, Eigen::VectorXd& y, std::vector<int> unit_group,
                      std::vector<int> year_group, double tol = 1e-10, int max_iter = 10000);

struct LincomResult {
    double estimate, se, t, p;
};

/// Linear combination w'beta with cluster-robust se and two-sided p at
/// t(G - 1).
LincomResult lincom(const EstimateTable& table,
                    const std::vector<std::pair<std::string, double>>& weights);

struct WaldResult {
    double F, p;
    int q;
    double df2;
};

/// Joint Wald test of R beta = r, F = (Rb - r)'(R V R')^-1 (Rb - r)/q
/// against F(q, G - 1).
WaldResult wald_joint(const EstimateTable& table, const Eigen::MatrixXd& R,
                      const Eigen::VectorXd& r);

/// Convenience: each restriction is a weighted sum of named coefficients
/// tested against zero.
WaldResult wald_joint(const EstimateTable& table,
                      const std::vector<std::vector<std::pair<std::string, double>>>& restrictions);

}  // namespace shockpanel
