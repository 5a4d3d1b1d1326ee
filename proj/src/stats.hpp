#pragma once

namespace etsim {

// Inverse standard normal CDF via Acklam's rational approximation
// (relative error below 1.15e-9 on (0,1)).
double norm_inv_cdf(double p);

// Upper-tail probability of a chi-square with one degree of freedom,
// P(X > t) = erfc(sqrt(t/2)). Throws std::domain_error for t < 0.
double chisq1_sf(double t);

struct Interval {
    double low;
    double high;
};

// Wilson score interval at 95% coverage. Throws std::domain_error for
// n < 1 or successes outside [0, n].
Interval binom_ci95(long successes, long n);

}  // namespace etsim
