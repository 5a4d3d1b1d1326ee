#pragma once

#include <functional>
#include <span>
#include <vector>

namespace etsim {

struct NelderMeadResult {
    std::vector<double> x;
    double fmin = 0.0;
    bool converged = false;
    int n_evals = 0;
};

// Downhill simplex with reflection 1, expansion 2, contraction 0.5 and
// shrink 0.5. Converged when the function-value spread over the simplex
// falls below tol; the best vertex is reported either way. Throws
// std::invalid_argument when f is non-finite at the start point.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> start, double tol, int max_evals,
                             double initial_step = 0.7);

}  // namespace etsim
