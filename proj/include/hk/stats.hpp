#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hk {

// Welford running mean/variance.
class RunningStat {
  public:
    void add(double x) {
        ++n_;
        double d = x - mean_;
        mean_ += d / double(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double std_error() const { return n_ > 0 ? std::sqrt(variance() / double(n_)) : 0.0; }

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0, m2_ = 0.0;
};

struct LineFit {
    double slope = 0.0, intercept = 0.0;
    double slope_err = 0.0;
};

// Weighted least squares y ~ a + b x; weights are inverse variances.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& w = {}) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need matching x/y with at least 2 points");
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double wi = w.empty() ? 1.0 : w[i];
        sw += wi;
        sx += wi * x[i];
        sy += wi * y[i];
        sxx += wi * x[i] * x[i];
        sxy += wi * x[i] * y[i];
    }
    double det = sw * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    f.slope_err = std::sqrt(sw / det);
    return f;
}

inline double sample_kurtosis(const std::vector<double>& x) {
    if (x.size() < 4) throw std::invalid_argument("sample_kurtosis: too few samples");
    double m = 0;
    for (double v : x) m += v;
    m /= double(x.size());
    double m2 = 0, m4 = 0;
    for (double v : x) {
        double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= double(x.size());
    m4 /= double(x.size());
    return m4 / (m2 * m2);
}

// One-sample Kolmogorov-Smirnov against a cdf given as callable.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    double n = double(sample.size()), d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        d = std::max(d, std::fabs(f - double(i) / n));
        d = std::max(d, std::fabs(double(i + 1) / n - f));
    }
    return d;
}

inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

// Asymptotic Kolmogorov tail probability Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double ks_pvalue(double d, double n_effective) {
    double lambda = (std::sqrt(n_effective) + 0.12 + 0.11 / std::sqrt(n_effective)) * d;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::fabs(term) < 1e-12) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_pvalue_two_sample(double d, std::size_t n, std::size_t m) {
    double ne = double(n) * double(m) / double(n + m);
    return ks_pvalue(d, ne);
}

// Pearson chi-square goodness of fit; expected counts must be positive.
inline double chi2_gof_pvalue(const std::vector<double>& observed,
                              const std::vector<double>& expected, int fitted_params = 0) {
    if (observed.size() != expected.size() || observed.size() < 2)
        throw std::invalid_argument("chi2_gof_pvalue: bin mismatch");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) throw std::invalid_argument("chi2_gof_pvalue: expected<=0");
        double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    double df = double(observed.size() - 1 - fitted_params);
    return boost::math::gamma_q(df / 2.0, stat / 2.0);
}

// Exact Wasserstein-1 between empirical measures (quantile-function L1).
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double u = 0.0, w = 0.0;
    double n = double(a.size()), m = double(b.size());
    while (i < a.size() && j < b.size()) {
        double nu = std::min(double(i + 1) / n, double(j + 1) / m);
        w += std::fabs(a[i] - b[j]) * (nu - u);
        u = nu;
        if (double(i + 1) / n <= nu + 1e-15) ++i;
        if (double(j + 1) / m <= nu + 1e-15) ++j;
    }
    return w;
}

}  // namespace hk
