#include "sym_matrix.hpp"

#include <cmath>

namespace etsim {

CholeskyFactor cholesky(const SymMatrix& a) {
    const int n = a.dim();
    CholeskyFactor f;
    f.n_ = n;
    f.a_.assign(static_cast<size_t>(n) * (n + 1) / 2, 0.0);
    auto l = [&f](int i, int j) -> double& {
        return f.a_[static_cast<size_t>(i) * (i + 1) / 2 + j];
    };

    for (int j = 0; j < n; ++j) {
        double d = a.at(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw FactorizationError(
                j, "cholesky: matrix not positive-definite at pivot " + std::to_string(j));
        }
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = a.at(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return f;
}

double CholeskyFactor::log_det() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

void CholeskyFactor::solve_lower(std::span<double> b) const {
    for (int i = 0; i < n_; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l(i, k) * b[k];
        b[i] = s / l(i, i);
    }
}

void CholeskyFactor::solve(std::span<double> b) const {
    solve_lower(b);
    for (int i = n_ - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n_; ++k) s -= l(k, i) * b[k];
        b[i] = s / l(i, i);
    }
}

}  // namespace etsim
