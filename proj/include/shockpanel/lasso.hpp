#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "shockpanel/errors.hpp"

namespace shockpanel {

/// L1 problem min (1/2n)||y - Xb||^2 + lambda sum_j psi_j |b_j|.
/// Penalized columns (psi_j > 0) are held standardized to mean 0 and unit
/// variance; psi_j = 0 marks a never-penalized column.
struct LassoProblem {
    Eigen::MatrixXd X;          // standardized where penalized
    Eigen::VectorXd y;          // centered when standardize was requested
    double lambda = 0.0;
    Eigen::VectorXd loadings;   // psi_j >= 0
    std::vector<std::string> names;

    // scale bookkeeping for mapping coefficients back
    Eigen::VectorXd center, scale;
    double y_center = 0.0;
};

/// Builds a problem, optionally centering y and all columns and scaling
/// penalized columns to unit variance (1/n convention).
LassoProblem make_lasso_problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                double lambda, const Eigen::VectorXd& loadings,
                                std::vector<std::string> names = {}, bool standardize = true);

struct LassoSolution {
    Eigen::VectorXd beta_std;    // on the standardized scale
    Eigen::VectorXd beta;        // mapped back to the original scale
    double intercept = 0.0;
    std::vector<int> active;     // nonzero penalized columns
    double objective = 0.0;
    int sweeps = 0;
    bool converged = false;
};

class NotConvergedError : public Error {
  public:
    NotConvergedError(std::string message, LassoSolution last)
        : Error(Errc::NotConverged, std::move(message)), last_iterate(std::move(last)) {}
    LassoSolution last_iterate;
};

double soft_threshold(double z, double gamma);

/// Cyclic coordinate descent until the largest coefficient change in a
/// sweep drops below tol. Unpenalized columns take exact least-squares
/// coordinate steps. Throws NotConvergedError carrying the last iterate.
LassoSolution lasso_fit(const LassoProblem& problem, double tol = 1e-8, int max_sweeps = 100000);

/// Belloni-style plugin penalty level
/// lambda = c sigma_hat Phi^-1(1 - gamma/(2p)) / sqrt(n),
/// defaults c = 1.1 and gamma = 0.1 / log(max(n, p)).
double plugin_lambda(long n, long p, double sigma_hat, double c = 1.1, double gamma = -1.0);

/// K-fold cross-validated lambda (MSE, 1-SE rule) over a log-spaced grid
/// descending from lambda_max. Deterministic fold assignment.
double cv_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& loadings, int folds, int grid_size = 50);

}  // namespace shockpanel
