#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace etsim {

// Cholesky failure; pivot identifies the first non-positive diagonal.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(int pivot, const std::string& msg)
        : std::runtime_error(msg), pivot_(pivot) {}
    int pivot() const { return pivot_; }

private:
    int pivot_;
};

// Symmetric matrix in packed lower-triangular storage.
class SymMatrix {
public:
    explicit SymMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * (n + 1) / 2, 0.0) {
        if (n < 1) throw std::invalid_argument("SymMatrix: dimension must be >= 1");
    }

    int dim() const { return n_; }

    double& at(int i, int j) {
        if (j > i) std::swap(i, j);
        return a_[static_cast<size_t>(i) * (i + 1) / 2 + j];
    }
    double at(int i, int j) const {
        if (j > i) std::swap(i, j);
        return a_[static_cast<size_t>(i) * (i + 1) / 2 + j];
    }

private:
    int n_;
    std::vector<double> a_;
};

// Lower-triangular factor L with L L^T = A.
class CholeskyFactor {
public:
    int dim() const { return n_; }
    double l(int i, int j) const { return a_[static_cast<size_t>(i) * (i + 1) / 2 + j]; }

    double log_det() const;                       // of A, i.e. 2 sum ln L_ii
    void solve_lower(std::span<double> b) const;  // L x = b, in place
    void solve(std::span<double> b) const;        // L L^T x = b, in place

private:
    friend CholeskyFactor cholesky(const SymMatrix& a);
    int n_ = 0;
    std::vector<double> a_;  // packed lower triangle
};

// Throws FactorizationError when A is not positive-definite.
CholeskyFactor cholesky(const SymMatrix& a);

}  // namespace etsim
