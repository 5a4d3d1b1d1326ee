#include "lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "errors.hpp"
#include "nelder_mead.hpp"
#include "stats.hpp"
#include "sym_matrix.hpp"

namespace etsim {
namespace {

constexpr double kLambdaFloor = 1e-4;
constexpr double kLnLambdaCap = 40.0;
constexpr double kNmTol = 1e-9;
constexpr int kNmMaxEvals2d = 500;
constexpr int kNmMaxEvals1d = 200;
constexpr double kLlSlack = 1e-8;

double clamp_exp(double t) { return std::exp(std::clamp(t, -kLnLambdaCap, kLnLambdaCap)); }

}  // namespace

ProfiledModel::ProfiledModel(const Dataset& data, Measure response) {
    const size_t n = data.trials.size();
    if (n == 0) throw std::invalid_argument("ProfiledModel: empty dataset");
    n_subj_ = data.n_subjects;
    n_item_ = data.n_items;
    if (n_subj_ < 2 || n_item_ < 2) {
        throw std::invalid_argument("ProfiledModel: need at least two subjects and two items");
    }

    y_.resize(n);
    x1_.resize(n);
    subj_.resize(n);
    item_.resize(n);
    subj_n_.assign(n_subj_, 0);
    item_n_.assign(n_item_, 0);
    subj_sum_.assign(3 * static_cast<size_t>(n_subj_), 0.0);
    item_sum_.assign(3 * static_cast<size_t>(n_item_), 0.0);

    double sum_a = 0.0, sum_b = 0.0;
    long n_a = 0, n_b = 0;
    for (size_t r = 0; r < n; ++r) {
        const TrialRecord& t = data.trials[r];
        if (t.subject_id < 0 || t.subject_id >= n_subj_ || t.item_id < 0 ||
            t.item_id >= n_item_) {
            throw std::invalid_argument("ProfiledModel: trial index out of range");
        }
        const double v = t.measure(response);
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("ProfiledModel: responses must be positive and finite");
        }
        y_[r] = std::log(v);
        x1_[r] = t.condition == Condition::B ? 0.5 : -0.5;
        subj_[r] = t.subject_id;
        item_[r] = t.item_id;
        ++subj_n_[t.subject_id];
        ++item_n_[t.item_id];
        if (t.condition == Condition::B) {
            sum_b += v;
            ++n_b;
        } else {
            sum_a += v;
            ++n_a;
        }
    }
    effect_ms_ = (n_b > 0 && n_a > 0) ? sum_b / n_b - sum_a / n_a : 0.0;

    auto colval = [this](int c, size_t r) {
        return c == 0 ? 1.0 : (c == 1 ? x1_[r] : y_[r]);
    };
    for (size_t r = 0; r < n; ++r) {
        for (int c = 0; c < 3; ++c) {
            const double v = colval(c, r);
            subj_sum_[static_cast<size_t>(c) * n_subj_ + subj_[r]] += v;
            item_sum_[static_cast<size_t>(c) * n_item_ + item_[r]] += v;
        }
    }
    for (int a = 0; a < 3; ++a) {
        tot_[a] = 0.0;
        for (int s = 0; s < n_subj_; ++s) tot_[a] += subj_sum_[static_cast<size_t>(a) * n_subj_ + s];
        for (int b = a; b < 3; ++b) {
            double g = 0.0;
            for (size_t r = 0; r < n; ++r) g += colval(a, r) * colval(b, r);
            gram_[a][b] = gram_[b][a] = g;
            double ss = 0.0;
            for (int s = 0; s < n_subj_; ++s) {
                ss += subj_sum_[static_cast<size_t>(a) * n_subj_ + s] *
                      subj_sum_[static_cast<size_t>(b) * n_subj_ + s];
            }
            ss_subj_[a][b] = ss_subj_[b][a] = ss;
            ss = 0.0;
            for (int i = 0; i < n_item_; ++i) {
                ss += item_sum_[static_cast<size_t>(a) * n_item_ + i] *
                      item_sum_[static_cast<size_t>(b) * n_item_ + i];
            }
            ss_item_[a][b] = ss_item_[b][a] = ss;
        }
    }

    // Balanced = complete crossing, one observation per (subject, item).
    balanced_ = n == static_cast<size_t>(n_subj_) * static_cast<size_t>(n_item_);
    if (balanced_) {
        for (long c : subj_n_) balanced_ = balanced_ && c == n_item_;
        for (long c : item_n_) balanced_ = balanced_ && c == n_subj_;
    }
    if (balanced_) {
        std::vector<char> seen(n, 0);
        for (size_t r = 0; r < n && balanced_; ++r) {
            auto& cell = seen[static_cast<size_t>(subj_[r]) * n_item_ + item_[r]];
            if (cell) balanced_ = false;
            cell = 1;
        }
    }
}

// Shared GLS tail: c holds the V^{-1}-corrected cross-products of
// {intercept, condition, response}.
ProfileEval ProfiledModel::finish(bool include_condition,
                                  const std::array<std::array<double, 3>, 3>& c,
                                  double log_det_v) const {
    const double n = static_cast<double>(n_obs());
    ProfileEval out;
    double rvr = 0.0;
    if (include_condition) {
        const double det = c[0][0] * c[1][1] - c[0][1] * c[0][1];
        if (!(std::abs(det) > 1e-12 * std::max(1.0, std::abs(c[0][0] * c[1][1])))) {
            throw FitError("profiled_deviance: singular fixed-effects system");
        }
        out.beta0 = (c[1][1] * c[0][2] - c[0][1] * c[1][2]) / det;
        out.beta1 = (c[0][0] * c[1][2] - c[0][1] * c[0][2]) / det;
        rvr = c[2][2] - (out.beta0 * c[0][2] + out.beta1 * c[1][2]);
    } else {
        if (!(c[0][0] > 0.0)) throw FitError("profiled_deviance: singular intercept system");
        out.beta0 = c[0][2] / c[0][0];
        out.beta1 = std::numeric_limits<double>::quiet_NaN();
        rvr = c[2][2] - out.beta0 * c[0][2];
    }
    rvr = std::max(rvr, 1e-300);
    out.sigma2 = rvr / n;
    out.deviance = n * std::log(2.0 * std::numbers::pi * out.sigma2) + log_det_v + n;
    return out;
}

ProfileEval ProfiledModel::eval_balanced(bool include_condition, double lambda_s,
                                         double lambda_i) const {
    const double S = n_subj_, I = n_item_;
    const double a = 1.0 + lambda_s * I;  // subject block diagonal of M = I + U'U
    const double b = 1.0 + lambda_i * S;  // item block diagonal
    const double c = std::sqrt(lambda_s * lambda_i);
    const double sqrt_ls = std::sqrt(lambda_s), sqrt_li = std::sqrt(lambda_i);
    // M = D + c(pq' + qp') with p, q the block indicators, so M^{-1}
    // reduces to D^{-1} plus a rank-2 correction through the 2x2
    // capacitance K = [[1, cI/b], [cS/a, 1]].
    const double det_k = (1.0 + lambda_s * I + lambda_i * S) / (a * b);  // cancellation-free
    const double k01 = c * I / b;
    const double k10 = c * S / a;

    auto bilinear = [&](int j, int k) {
        const double direct = lambda_s * ss_subj_[j][k] / a + lambda_i * ss_item_[j][k] / b;
        const double f0 = c * sqrt_ls * tot_[j] / a;
        const double f1 = c * sqrt_li * tot_[j] / b;
        const double g0 = sqrt_li * tot_[k] / b;
        const double g1 = sqrt_ls * tot_[k] / a;
        const double q0 = (g0 - k01 * g1) / det_k;
        const double q1 = (g1 - k10 * g0) / det_k;
        return direct - (f0 * q0 + f1 * q1);
    };

    std::array<std::array<double, 3>, 3> corr{};
    for (int j = 0; j < 3; ++j) {
        for (int k = j; k < 3; ++k) {
            corr[j][k] = corr[k][j] = gram_[j][k] - bilinear(j, k);
        }
    }
    const double log_det_v = (S - 1.0) * std::log(a) + (I - 1.0) * std::log(b) +
                             std::log(1.0 + lambda_s * I + lambda_i * S);
    return finish(include_condition, corr, log_det_v);
}

ProfileEval ProfiledModel::eval_generic(bool include_condition, double lambda_s,
                                        double lambda_i) const {
    const int m = n_subj_ + n_item_;
    const size_t n = y_.size();
    const double c = std::sqrt(lambda_s * lambda_i);

    SymMatrix cap(m);  // M = I_m + U'U
    for (int i = 0; i < m; ++i) cap.at(i, i) = 1.0;
    for (int s = 0; s < n_subj_; ++s) cap.at(s, s) += lambda_s * static_cast<double>(subj_n_[s]);
    for (int i = 0; i < n_item_; ++i) {
        cap.at(n_subj_ + i, n_subj_ + i) += lambda_i * static_cast<double>(item_n_[i]);
    }
    for (size_t r = 0; r < n; ++r) cap.at(n_subj_ + item_[r], subj_[r]) += c;

    const CholeskyFactor chol = cholesky(cap);

    // W = L^{-1} U'[1 x y]; corrected cross-products are G - W'W.
    std::array<std::vector<double>, 3> w;
    for (int col = 0; col < 3; ++col) {
        w[col].assign(m, 0.0);
        const double* ssum = subj_sum_.data() + static_cast<size_t>(col) * n_subj_;
        const double* isum = item_sum_.data() + static_cast<size_t>(col) * n_item_;
        const double sqrt_ls = std::sqrt(lambda_s), sqrt_li = std::sqrt(lambda_i);
        for (int s = 0; s < n_subj_; ++s) w[col][s] = sqrt_ls * ssum[s];
        for (int i = 0; i < n_item_; ++i) w[col][n_subj_ + i] = sqrt_li * isum[i];
        chol.solve_lower(w[col]);
    }
    std::array<std::array<double, 3>, 3> corr{};
    for (int j = 0; j < 3; ++j) {
        for (int k = j; k < 3; ++k) {
            double dot = 0.0;
            for (int i = 0; i < m; ++i) dot += w[j][i] * w[k][i];
            corr[j][k] = corr[k][j] = gram_[j][k] - dot;
        }
    }
    return finish(include_condition, corr, chol.log_det());
}

ProfileEval ProfiledModel::eval(bool include_condition, double lambda_s,
                                double lambda_i) const {
    if (!(lambda_s >= 0.0) || !(lambda_i >= 0.0)) {
        throw std::invalid_argument("profiled_deviance: variance ratios must be >= 0");
    }
    return balanced_ ? eval_balanced(include_condition, lambda_s, lambda_i)
                     : eval_generic(include_condition, lambda_s, lambda_i);
}

std::array<double, 2> ProfiledModel::moment_start() const {
    const double n = static_cast<double>(n_obs());
    const double S = n_subj_, I = n_item_;
    const double ybar = tot_[2] / n;

    double ss_between_subj = 0.0;
    for (int s = 0; s < n_subj_; ++s) {
        const double m = subj_sum_[2 * static_cast<size_t>(n_subj_) + s] /
                         static_cast<double>(subj_n_[s]);
        ss_between_subj += (m - ybar) * (m - ybar);
    }
    double ss_between_item = 0.0;
    for (int i = 0; i < n_item_; ++i) {
        const double m = item_sum_[2 * static_cast<size_t>(n_item_) + i] /
                         static_cast<double>(item_n_[i]);
        ss_between_item += (m - ybar) * (m - ybar);
    }
    const double var_subj_means = ss_between_subj / std::max(1.0, S - 1.0);
    const double var_item_means = ss_between_item / std::max(1.0, I - 1.0);

    const double ss_tot = gram_[2][2] - n * ybar * ybar;
    const double mean_subj_n = n / S, mean_item_n = n / I;
    const double ss_res = std::max(
        ss_tot - mean_item_n * ss_between_subj - mean_subj_n * ss_between_item, 0.0);
    const double sigma2_w =
        std::max(ss_res / std::max(1.0, (S - 1.0) * (I - 1.0)), 1e-12);

    const double ls = std::max(kLambdaFloor, (var_subj_means - sigma2_w / mean_subj_n) / sigma2_w);
    const double li = std::max(kLambdaFloor, (var_item_means - sigma2_w / mean_item_n) / sigma2_w);
    return {ls, li};
}

ProfileEval profiled_deviance(const Dataset& data, const ModelSpec& spec, double lambda_s,
                              double lambda_i) {
    ProfiledModel model(data, spec.response);
    return model.eval(spec.include_condition, lambda_s, lambda_i);
}

FitResult fit_profiled(const ProfiledModel& model, bool include_condition) {
    const auto start = model.moment_start();
    int evals = 0;

    // Interior search over log variance ratios.
    const std::array<double, 2> th0 = {std::log(start[0]), std::log(start[1])};
    auto obj2 = [&](std::span<const double> th) {
        return model.eval(include_condition, clamp_exp(th[0]), clamp_exp(th[1])).deviance;
    };
    const NelderMeadResult interior = nelder_mead(obj2, th0, kNmTol, kNmMaxEvals2d);
    evals += interior.n_evals;

    double best_ls = clamp_exp(interior.x[0]);
    double best_li = clamp_exp(interior.x[1]);
    double best_dev = interior.fmin;
    bool best_conv = interior.converged;

    // Boundary candidates: the optimum sits at lambda = 0 with nonzero
    // probability and the log parameterization cannot reach it.
    auto boundary = [&](bool subj_side) {
        const std::array<double, 1> t0 = {std::log(subj_side ? start[1] : start[0])};
        auto obj1 = [&](std::span<const double> th) {
            const double lam = clamp_exp(th[0]);
            return subj_side ? model.eval(include_condition, 0.0, lam).deviance
                             : model.eval(include_condition, lam, 0.0).deviance;
        };
        const NelderMeadResult r = nelder_mead(obj1, t0, kNmTol, kNmMaxEvals1d);
        evals += r.n_evals;
        if (r.fmin < best_dev) {
            best_dev = r.fmin;
            best_conv = r.converged;
            best_ls = subj_side ? 0.0 : clamp_exp(r.x[0]);
            best_li = subj_side ? clamp_exp(r.x[0]) : 0.0;
        }
    };
    boundary(true);
    boundary(false);

    const ProfileEval origin = model.eval(include_condition, 0.0, 0.0);
    ++evals;
    if (origin.deviance < best_dev) {
        best_dev = origin.deviance;
        best_conv = true;
        best_ls = 0.0;
        best_li = 0.0;
    }

    const ProfileEval at_best = model.eval(include_condition, best_ls, best_li);
    ++evals;
    FitResult fr;
    fr.beta0 = at_best.beta0;
    fr.beta1 = include_condition ? at_best.beta1 : 0.0;
    fr.has_beta1 = include_condition;
    fr.sigma2 = at_best.sigma2;
    fr.var_subj = best_ls * at_best.sigma2;
    fr.var_item = best_li * at_best.sigma2;
    fr.loglik = -0.5 * at_best.deviance;
    fr.converged = best_conv;
    fr.n_evals = evals;
    return fr;
}

FitResult fit(const Dataset& data, const ModelSpec& spec) {
    ProfiledModel model(data, spec.response);
    return fit_profiled(model, spec.include_condition);
}

MeasureTest lrt(const Dataset& data, Measure measure) {
    ProfiledModel model(data, measure);
    MeasureTest t;
    t.measure = measure;
    t.full_fit = fit_profiled(model, true);
    t.null_fit = fit_profiled(model, false);

    const double diff = t.full_fit.loglik - t.null_fit.loglik;
    t.ll_order_violation = diff < -kLlSlack;
    t.lrt_stat = std::max(0.0, 2.0 * diff);
    t.p_value = chisq1_sf(t.lrt_stat);
    t.sign = t.full_fit.beta1 > 0.0 ? Sign::Positive
                                    : (t.full_fit.beta1 < 0.0 ? Sign::Negative : Sign::Zero);
    t.effect_ms = model.effect_ms();
    t.failed = false;
    t.valid = t.full_fit.converged && t.null_fit.converged && !t.ll_order_violation;
    return t;
}

}  // namespace etsim
