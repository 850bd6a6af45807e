#include "shockpanel/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace shockpanel::stats {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
    boost::math::normal_distribution<double> dist;
    return boost::math::quantile(dist, p);
}

double student_t_cdf(double t, double df) {
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::cdf(dist, t);
}

double student_t_quantile(double p, double df) {
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::quantile(dist, p);
}

double two_sided_t_pvalue(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t_distribution<double> dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

double f_tail_pvalue(double f, double df1, double df2) {
    if (f <= 0.0) return 1.0;
    boost::math::fisher_f_distribution<double> dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sd(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double quantile_type6(std::span<const double> sorted, double p) {
    const auto n = static_cast<double>(sorted.size());
    double pos = p * (n + 1.0);
    if (pos <= 1.0) return sorted.front();
    if (pos >= n) return sorted.back();
    auto lo = static_cast<std::size_t>(std::floor(pos));
    double frac = pos - static_cast<double>(lo);
    return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

}  // namespace shockpanel::stats
