#pragma once

#include <span>

namespace shockpanel::stats {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile (inverse CDF), p in (0, 1).
double normal_quantile(double p);

/// CDF of Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

/// Quantile of Student's t, p in (0, 1).
double student_t_quantile(double p, double df);

/// Two-sided p-value of a t statistic against t(df).
double two_sided_t_pvalue(double t, double df);

/// Upper-tail p-value of an F statistic against F(df1, df2).
double f_tail_pvalue(double f, double df1, double df2);

/// Sample mean. Empty input is the caller's bug.
double mean(std::span<const double> x);

/// Sample standard deviation (n-1 denominator); 0 for n < 2.
double sd(std::span<const double> x);

/// Quantile with interpolation at position p*(n+1) (Hazen/Weibull style,
/// the convention whose IQR stays wide on short evenly spaced grids).
/// Input must be sorted ascending.
double quantile_type6(std::span<const double> sorted, double p);

}  // namespace shockpanel::stats
