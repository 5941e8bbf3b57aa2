#pragma once

#include <string>
#include <vector>

namespace fcattn::stats {

struct DistributionSummary {
    std::size_t n = 0;
    double mean = 0;
    double standard_error = 0;  // sample sd / sqrt(n)
    double q1 = 0, median = 0, q3 = 0;
    double p5 = 0, p95 = 0;
};

// Order statistics by linear interpolation between closest ranks.
DistributionSummary summarize(const std::vector<double>& values);
double quantile(std::vector<double> sorted_values, double q);

struct MeanCI {
    double mean = 0, lower = 0, upper = 0;
};

// mean +/- t_{n-1, 1-alpha/2} * SE.
MeanCI mean_ci(const std::vector<double>& values, double level = 0.95);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a Student-t statistic.
double t_sf_two_sided(double t, double df);
// Upper-tail p-value of an F statistic.
double f_sf(double f, double df1, double df2);
// Student-t quantile (inverse CDF).
double t_quantile(double p, double df);

// Average ranks for ties.
std::vector<double> rank_with_ties(const std::vector<double>& values);

struct SpearmanResult {
    double rho = 0;
    double p_value = 1;
};

// Rank correlation; p via the t-approximation with n-2 df, two-sided.
// Throws on constant input.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

struct AncovaResult {
    double f = 0;
    double p_value = 1;
    int df_between = 0;
    int df_resid = 0;
    bool saturated = false;  // RSS_full == 0: F unbounded, p reported as 0
};

// F-test of the categorical factor in a linear model with covariates:
// full model (intercept + group indicators + covariates) against the
// reduced model (intercept + covariates). Throws on rank-deficient designs,
// naming the collinear columns.
AncovaResult ancova(const std::vector<double>& response, const std::vector<std::string>& group,
                    const std::vector<std::vector<double>>& covariates);

}  // namespace fcattn::stats
