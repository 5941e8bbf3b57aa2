#include "fcattn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace fcattn::stats {

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty input");
    std::sort(v.begin(), v.end());
    if (q <= 0) return v.front();
    if (q >= 1) return v.back();
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

DistributionSummary summarize(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty input");
    DistributionSummary s;
    s.n = values.size();
    // Accumulate in sorted order so permutations of the input give
    // bit-identical results.
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
    double ss = 0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    double sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    s.standard_error = sd / std::sqrt(static_cast<double>(s.n));
    auto q_of = [&](double q) {
        double pos = q * static_cast<double>(sorted.size() - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        double frac = pos - static_cast<double>(lo);
        return lo + 1 < sorted.size() ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
                                      : sorted.back();
    };
    s.q1 = q_of(0.25);
    s.median = q_of(0.5);
    s.q3 = q_of(0.75);
    s.p5 = q_of(0.05);
    s.p95 = q_of(0.95);
    return s;
}

MeanCI mean_ci(const std::vector<double>& values, double level) {
    if (values.size() < 2) throw std::invalid_argument("mean_ci: need n >= 2");
    DistributionSummary s = summarize(values);
    double alpha = 1.0 - level;
    double t = t_quantile(1.0 - alpha / 2.0, static_cast<double>(values.size() - 1));
    return {s.mean, s.mean - t * s.standard_error, s.mean + t * s.standard_error};
}

namespace {

// Continued-fraction evaluation of the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                   b * std::log1p(-x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double t_sf_two_sided(double t, double df) {
    if (df <= 0) throw std::invalid_argument("t_sf_two_sided: df must be positive");
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double f_sf(double f, double df1, double df2) {
    if (df1 <= 0 || df2 <= 0) throw std::invalid_argument("f_sf: dfs must be positive");
    if (f <= 0) return 1.0;
    return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("t_quantile: p must be in (0,1)");
    if (p == 0.5) return 0.0;
    bool upper = p > 0.5;
    double target = upper ? 2.0 * (1.0 - p) : 2.0 * p;  // two-sided tail mass
    // Bisection on the survival function; monotone decreasing in |t|.
    double lo = 0.0, hi = 1.0;
    while (t_sf_two_sided(hi, df) > target) {
        hi *= 2.0;
        if (hi > 1e12) break;
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (t_sf_two_sided(mid, df) > target) lo = mid;
        else hi = mid;
    }
    double t = 0.5 * (lo + hi);
    return upper ? t : -t;
}

std::vector<double> rank_with_ties(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("spearman: need n >= 3");
    auto rx = rank_with_ties(x);
    auto ry = rank_with_ties(y);

    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("spearman: constant input");

    SpearmanResult r;
    r.rho = sxy / std::sqrt(sxx * syy);
    if (std::fabs(r.rho) >= 1.0) {
        r.p_value = 0.0;
        return r;
    }
    double df = static_cast<double>(n - 2);
    double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
    r.p_value = t_sf_two_sided(t, df);
    return r;
}

AncovaResult ancova(const std::vector<double>& response, const std::vector<std::string>& group,
                    const std::vector<std::vector<double>>& covariates) {
    const std::size_t n = response.size();
    if (group.size() != n) throw std::invalid_argument("ancova: group/response length mismatch");
    for (const auto& c : covariates)
        if (c.size() != n) throw std::invalid_argument("ancova: covariate length mismatch");

    std::set<std::string> labels(group.begin(), group.end());
    const std::size_t g = labels.size();
    if (g < 2) throw std::invalid_argument("ancova: need at least 2 groups");
    const std::size_t p_full = 1 + (g - 1) + covariates.size();
    if (n <= p_full) throw std::invalid_argument("ancova: not enough observations");

    // Column layout: intercept, g-1 group indicators (first label as the
    // reference level, labels in sorted order), then covariates.
    std::vector<std::string> sorted_labels(labels.begin(), labels.end());
    std::map<std::string, std::size_t> level;
    for (std::size_t i = 0; i < sorted_labels.size(); ++i) level[sorted_labels[i]] = i;

    Eigen::MatrixXd X_full(n, p_full);
    Eigen::MatrixXd X_red(n, 1 + covariates.size());
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y(static_cast<long>(i)) = response[i];
        X_full(static_cast<long>(i), 0) = 1.0;
        X_red(static_cast<long>(i), 0) = 1.0;
        for (std::size_t k = 1; k < g; ++k)
            X_full(static_cast<long>(i), static_cast<long>(k)) =
                level[group[i]] == k ? 1.0 : 0.0;
        for (std::size_t c = 0; c < covariates.size(); ++c) {
            X_full(static_cast<long>(i), static_cast<long>(g + c)) = covariates[c][i];
            X_red(static_cast<long>(i), static_cast<long>(1 + c)) = covariates[c][i];
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_full(X_full);
    qr_full.setThreshold(1e-10);
    if (qr_full.rank() < static_cast<long>(p_full)) {
        // Name the columns the pivoting pushed past the rank.
        std::ostringstream msg;
        msg << "ancova: rank-deficient design; collinear columns:";
        auto perm = qr_full.colsPermutation().indices();
        for (long i = qr_full.rank(); i < static_cast<long>(p_full); ++i) {
            long col = perm(i);
            msg << ' ';
            if (col == 0) msg << "intercept";
            else if (col < static_cast<long>(g)) msg << "group[" << sorted_labels[static_cast<std::size_t>(col)] << "]";
            else msg << "covariate[" << (col - static_cast<long>(g)) << "]";
        }
        throw std::invalid_argument(msg.str());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_red(X_red);
    qr_red.setThreshold(1e-10);
    if (qr_red.rank() < X_red.cols())
        throw std::invalid_argument("ancova: rank-deficient reduced design (collinear covariates)");

    double rss_full = (y - X_full * qr_full.solve(y)).squaredNorm();
    double rss_red = (y - X_red * qr_red.solve(y)).squaredNorm();

    AncovaResult r;
    r.df_between = static_cast<int>(g - 1);
    r.df_resid = static_cast<int>(n - p_full);
    double total_ss = (y.array() - y.mean()).square().sum();
    double tiny = 1e-14 * std::max(total_ss, 1e-300);
    double diff = std::max(rss_red - rss_full, 0.0);
    if (rss_full <= tiny) {
        if (diff <= tiny) {  // both models fit perfectly: no between-group signal
            r.f = 0.0;
            r.p_value = 1.0;
            return r;
        }
        r.saturated = true;
        r.f = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.f = (diff / r.df_between) / (rss_full / r.df_resid);
    r.p_value = f_sf(r.f, r.df_between, r.df_resid);
    return r;
}

}  // namespace fcattn::stats
