#pragma once

// Small statistics helpers for the test suites.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace teststat {

// Regularized upper incomplete gamma Q(a, x) by series / continued fraction.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        // P(a,x) by series, Q = 1 - P
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // Q(a,x) by Lentz continued fraction
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// p-value of a chi-square statistic with k degrees of freedom
inline double chi_square_p(double stat, int dof) { return gamma_q(0.5 * dof, 0.5 * stat); }

// Pearson statistic from observed counts and expected probabilities
inline double chi_square_stat(const std::vector<long long>& obs, const std::vector<double>& probs,
                              long long total) {
    double stat = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double e = probs[i] * static_cast<double>(total);
        if (e < 1e-12) continue;
        const double d = static_cast<double>(obs[i]) - e;
        stat += d * d / e;
    }
    return stat;
}

}  // namespace teststat
