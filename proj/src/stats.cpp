#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace etsim {

double norm_inv_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("norm_inv_cdf: p must lie in (0, 1)");
    }

    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    static constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double chisq1_sf(double t) {
    if (t < 0.0) throw std::domain_error("chisq1_sf: t must be nonnegative");
    return std::erfc(std::sqrt(0.5 * t));
}

Interval binom_ci95(long successes, long n) {
    if (n < 1) throw std::domain_error("binom_ci95: n must be >= 1");
    if (successes < 0 || successes > n) {
        throw std::domain_error("binom_ci95: successes outside [0, n]");
    }
    constexpr double z = 1.959963984540054;  // Phi^-1(0.975)
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (phat + z2 / (2.0 * nn)) / denom;
    const double half =
        (z / denom) * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
    Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (successes == 0) ci.low = 0.0;
    if (successes == n) ci.high = 1.0;
    return ci;
}

}  // namespace etsim
