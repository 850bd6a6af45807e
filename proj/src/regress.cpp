#include "shockpanel/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "shockpanel/errors.hpp"
#include "shockpanel/stats.hpp"

namespace shockpanel {

int DesignMatrix::column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<int>(j);
    return -1;
}

int EstimateTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<int>(j);
    return -1;
}

namespace {

/// Number of distinct labels, with labels remapped to 0..k-1 in place.
int compact_labels(std::vector<int>& labels) {
    std::map<int, int> remap;
    for (int v : labels) remap.emplace(v, 0);
    int next = 0;
    for (auto& [key, idx] : remap) idx = next++;
    for (int& v : labels) v = remap[v];
    return next;
}

/// Subtracts group means of every column of M (and y) for one factor.
/// Returns the largest absolute group mean seen before subtraction.
double demean_factor(Eigen::MatrixXd& M, Eigen::VectorXd& y, const std::vector<int>& labels,
                     int n_groups) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_groups);
    for (int g : labels) counts[g] += 1.0;

    Eigen::MatrixXd col_sums = Eigen::MatrixXd::Zero(n_groups, M.cols());
    Eigen::VectorXd y_sums = Eigen::VectorXd::Zero(n_groups);
    for (long i = 0; i < M.rows(); ++i) {
        col_sums.row(labels[i]) += M.row(i);
        y_sums[labels[i]] += y[i];
    }
    double worst = 0.0;
    for (int g = 0; g < n_groups; ++g) {
        col_sums.row(g) /= counts[g];
        y_sums[g] /= counts[g];
        worst = std::max(worst, col_sums.row(g).cwiseAbs().maxCoeff());
        worst = std::max(worst, std::fabs(y_sums[g]));
    }
    for (long i = 0; i < M.rows(); ++i) {
        M.row(i) -= col_sums.row(labels[i]);
        y[i] -= y_sums[labels[i]];
    }
    return worst;
}

}  // namespace

void within_transform(Eigen::MatrixXd& M, Eigen::VectorXd& y, std::vector<int> unit_group,
                      std::vector<int> year_group, double tol, int max_iter) {
    const bool has_unit = !unit_group.empty();
    const bool has_year = !year_group.empty();
    if (!has_unit && !has_year) return;
    const int n_units = has_unit ? compact_labels(unit_group) : 0;
    const int n_years = has_year ? compact_labels(year_group) : 0;
    double worst = 0.0;
    int iter = 0;
    do {
        worst = 0.0;
        if (has_unit) worst = std::max(worst, demean_factor(M, y, unit_group, n_units));
        if (has_year) worst = std::max(worst, demean_factor(M, y, year_group, n_years));
        if (++iter > max_iter)
            throw Error(Errc::NotConverged, "fixed-effect demeaning did not converge");
    } while (worst > tol);
}

EstimateTable ols_fe(const DesignMatrix& design, const Eigen::VectorXd& y,
                     const OlsOptions& options) {
    const long n = design.n();
    const long p = design.p();
    if (y.size() != n) throw Error(Errc::AlignmentError, "response length != design rows");
    if (static_cast<long>(design.cluster.size()) != n)
        throw Error(Errc::AlignmentError, "cluster labels missing for some rows");
    if (!design.X.allFinite() || !y.allFinite())
        throw Error(Errc::AlignmentError, "design contains missing values");

    std::vector<int> cluster = design.cluster;
    const int n_clusters = compact_labels(cluster);
    if (n_clusters < 2) throw Error(Errc::TooFewClusters, "need at least 2 clusters");

    std::vector<int> unit_group = design.unit_group;
    std::vector<int> year_group = design.year_group;
    const bool absorb_unit = !unit_group.empty();
    const bool absorb_year = !year_group.empty();
    if (absorb_unit && static_cast<long>(unit_group.size()) != n)
        throw Error(Errc::AlignmentError, "unit group labels length mismatch");
    if (absorb_year && static_cast<long>(year_group.size()) != n)
        throw Error(Errc::AlignmentError, "year group labels length mismatch");
    const int n_units = absorb_unit ? compact_labels(unit_group) : 0;
    const int n_years = absorb_year ? compact_labels(year_group) : 0;

    // Absorbed parameter count matches the explicit-dummy regression with an
    // intercept: U + Y - 1 for two factors, the level count for one.
    long absorbed = 0;
    if (absorb_unit && absorb_year)
        absorbed = n_units + n_years - 1;
    else if (absorb_unit)
        absorbed = n_units;
    else if (absorb_year)
        absorbed = n_years;
    const long k_params = p + absorbed;
    if (n < k_params)
        throw Error(Errc::CollinearDesign,
                    "rows (" + std::to_string(n) + ") < parameters (" + std::to_string(k_params) + ")");

    Eigen::MatrixXd Xd = design.X;
    Eigen::VectorXd yd = y;
    within_transform(Xd, yd, unit_group, year_group, options.demean_tol, options.max_demean_iter);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xd);
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    double pivot_max = std::fabs(R(0, 0));
    for (long j = 0; j < p; ++j) {
        if (std::fabs(R(j, j)) <= options.rank_tol * pivot_max) {
            int offender = qr.colsPermutation().indices()[j];
            throw Error(Errc::CollinearDesign,
                        "column '" + design.names[offender] + "' is collinear after absorption");
        }
    }

    Eigen::VectorXd beta = qr.solve(yd);
    Eigen::VectorXd resid = yd - Xd * beta;

    // (X'X)^-1 from the pivoted QR factors.
    Eigen::MatrixXd r_inv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd xtx_inv_permuted = r_inv * r_inv.transpose();
    Eigen::MatrixXd xtx_inv =
        qr.colsPermutation() * xtx_inv_permuted * qr.colsPermutation().transpose();

    // Cluster meat in ascending cluster order.
    std::vector<std::vector<long>> members(n_clusters);
    for (long i = 0; i < n; ++i) members[cluster[i]].push_back(i);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (int g = 0; g < n_clusters; ++g) {
        Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
        for (long i : members[g]) score += Xd.row(i).transpose() * resid[i];
        meat.noalias() += score * score.transpose();
    }

    const double g_adj = static_cast<double>(n_clusters) / (n_clusters - 1.0);
    const double df_adj =
        n > k_params ? static_cast<double>(n - 1) / static_cast<double>(n - k_params) : 0.0;
    Eigen::MatrixXd vcov = g_adj * df_adj * xtx_inv * meat * xtx_inv;
    vcov = 0.5 * (vcov + vcov.transpose());  // enforce symmetry

    EstimateTable table;
    table.names = design.names;
    table.beta = beta;
    table.vcov = vcov;
    table.n = n;
    table.n_clusters = n_clusters;
    table.k_params = k_params;
    table.resid_df = n - k_params;
    table.se.resize(p);
    table.tstat.resize(p);
    table.pvalue.resize(p);
    for (long j = 0; j < p; ++j) {
        table.se[j] = std::sqrt(std::max(0.0, vcov(j, j)));
        if (table.se[j] > 0.0) {
            table.tstat[j] = beta[j] / table.se[j];
            table.pvalue[j] = stats::two_sided_t_pvalue(table.tstat[j], table.t_df());
        } else {
            table.tstat[j] = beta[j] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
            table.pvalue[j] = beta[j] == 0.0 ? 1.0 : 0.0;
        }
    }
    return table;
}

namespace {

Eigen::VectorXd weight_vector(const EstimateTable& table,
                              const std::vector<std::pair<std::string, double>>& weights) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(table.beta.size());
    for (const auto& [name, value] : weights) {
        int j = table.column(name);
        if (j < 0) throw Error(Errc::UnknownCoefficient, name);
        w[j] += value;
    }
    return w;
}

}  // namespace

LincomResult lincom(const EstimateTable& table,
                    const std::vector<std::pair<std::string, double>>& weights) {
    Eigen::VectorXd w = weight_vector(table, weights);
    double est = w.dot(table.beta);
    double var = w.dot(table.vcov * w);
    double se = std::sqrt(std::max(0.0, var));
    if (se == 0.0) return {est, 0.0, est == 0.0 ? 0.0 : std::numeric_limits<double>::infinity(),
                           est == 0.0 ? 1.0 : 0.0};
    double t = est / se;
    return {est, se, t, stats::two_sided_t_pvalue(t, table.t_df())};
}

WaldResult wald_joint(const EstimateTable& table, const Eigen::MatrixXd& R,
                      const Eigen::VectorXd& r) {
    const long q = R.rows();
    if (R.cols() != table.beta.size() || r.size() != q)
        throw Error(Errc::AlignmentError, "restriction matrix shape mismatch");
    Eigen::VectorXd diff = R * table.beta - r;
    Eigen::MatrixXd rvr = R * table.vcov * R.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(rvr);
    lu.setThreshold(1e-12);
    if (lu.rank() < q) throw Error(Errc::SingularRestriction, "R V R' is singular");
    double f = diff.dot(lu.solve(diff)) / static_cast<double>(q);
    double df2 = table.t_df();
    return {f, stats::f_tail_pvalue(f, static_cast<double>(q), df2), static_cast<int>(q), df2};
}

WaldResult wald_joint(const EstimateTable& table,
                      const std::vector<std::vector<std::pair<std::string, double>>>& restrictions) {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<long>(restrictions.size()),
                                              table.beta.size());
    for (std::size_t i = 0; i < restrictions.size(); ++i) {
        for (const auto& [name, value] : restrictions[i]) {
            int j = table.column(name);
            if (j < 0) throw Error(Errc::UnknownCoefficient, name);
            R(static_cast<long>(i), j) += value;
        }
    }
    return wald_joint(table, R, Eigen::VectorXd::Zero(static_cast<long>(restrictions.size())));
}

}  // namespace shockpanel
