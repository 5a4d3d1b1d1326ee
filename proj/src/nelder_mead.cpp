#include "nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace etsim {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> start, double tol, int max_evals,
                             double initial_step) {
    const int n = static_cast<int>(start.size());
    if (n < 1) throw std::invalid_argument("nelder_mead: empty start point");

    NelderMeadResult res;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> xs(n + 1, std::vector<double>(start.begin(), start.end()));
    std::vector<double> fs(n + 1);
    ++evals;
    fs[0] = f(xs[0]);
    if (!std::isfinite(fs[0])) {
        throw std::invalid_argument("nelder_mead: objective non-finite at start point");
    }
    for (int i = 1; i <= n; ++i) {
        xs[i][i - 1] += initial_step;
        fs[i] = eval(xs[i]);
    }

    auto order = [&] {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<std::vector<double>> xs2(n + 1);
        std::vector<double> fs2(n + 1);
        for (int i = 0; i <= n; ++i) {
            xs2[i] = std::move(xs[idx[i]]);
            fs2[i] = fs[idx[i]];
        }
        xs = std::move(xs2);
        fs = std::move(fs2);
    };

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (true) {
        order();
        if (fs[n] - fs[0] < tol) {
            res.converged = true;
            break;
        }
        if (evals >= max_evals) break;

        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += xs[i][j];
            centroid[j] = s / n;
        }
        for (int j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - xs[n][j]);
        const double fr = eval(xr);

        if (fr < fs[0]) {
            for (int j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - xs[n][j]);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            bool shrink = false;
            if (fr < fs[n]) {
                for (int j = 0; j < n; ++j) xc[j] = centroid[j] + 0.5 * (xr[j] - centroid[j]);
                const double fc = eval(xc);
                if (fc <= fr) {
                    xs[n] = xc;
                    fs[n] = fc;
                } else {
                    shrink = true;
                }
            } else {
                for (int j = 0; j < n; ++j) xc[j] = centroid[j] + 0.5 * (xs[n][j] - centroid[j]);
                const double fc = eval(xc);
                if (fc < fs[n]) {
                    xs[n] = xc;
                    fs[n] = fc;
                } else {
                    shrink = true;
                }
            }
            if (shrink) {
                for (int i = 1; i <= n; ++i) {
                    for (int j = 0; j < n; ++j) xs[i][j] = xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]);
                    fs[i] = eval(xs[i]);
                }
            }
        }
    }

    res.x = xs[0];
    res.fmin = fs[0];
    res.n_evals = evals;
    return res;
}

}  // namespace etsim
