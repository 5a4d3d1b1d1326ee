#pragma once

#include <array>
#include <vector>

#include "datagen.hpp"

namespace etsim {

// Response is always the log of the chosen measure; condition coded
// A = -0.5, B = +0.5 when included.
struct ModelSpec {
    Measure response = Measure::FFD;
    bool include_condition = true;
};

struct FitResult {
    double beta0 = 0.0;
    double beta1 = 0.0;  // meaningful only when has_beta1
    bool has_beta1 = false;
    double sigma2 = 0.0;    // residual variance, log scale squared
    double var_subj = 0.0;  // subject-intercept variance
    double var_item = 0.0;  // item-intercept variance
    double loglik = 0.0;
    bool converged = false;
    int n_evals = 0;
};

enum class Sign : int { Negative = -1, Zero = 0, Positive = 1 };

struct MeasureTest {
    Measure measure = Measure::FFD;
    double lrt_stat = 0.0;
    double p_value = 1.0;
    Sign sign = Sign::Zero;
    double effect_ms = 0.0;  // raw condition-mean difference, B - A
    FitResult full_fit;
    FitResult null_fit;
    bool ll_order_violation = false;  // loglik_full < loglik_null beyond slack
    bool failed = false;              // fit threw; everything else unset
    bool valid = false;               // usable for aggregation
};

struct ProfileEval {
    double deviance = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;  // NaN for the null model
    double sigma2 = 0.0;
};

// Profiled ML criterion for y = X beta + Z_s u + Z_i w + eps at fixed
// variance ratios lambda = sigma_re^2 / sigma^2. Works through the
// Woodbury identity with an (S+I)-dimensional inner Cholesky; for the
// balanced crossed designs produced by the generator the inner solve
// collapses further to a closed form over sufficient statistics. The
// n x n covariance matrix is never materialized.
class ProfiledModel {
public:
    ProfiledModel(const Dataset& data, Measure response);

    int n_subjects() const { return n_subj_; }
    int n_items() const { return n_item_; }
    long n_obs() const { return static_cast<long>(y_.size()); }
    bool balanced() const { return balanced_; }
    double effect_ms() const { return effect_ms_; }

    // Fast path when balanced, generic Woodbury path otherwise.
    ProfileEval eval(bool include_condition, double lambda_s, double lambda_i) const;
    // Generic path, always available (used as the mid-level oracle).
    ProfileEval eval_generic(bool include_condition, double lambda_s, double lambda_i) const;

    // Method-of-moments starting values for (lambda_s, lambda_i),
    // floored at 1e-4.
    std::array<double, 2> moment_start() const;

private:
    ProfileEval eval_balanced(bool include_condition, double lambda_s, double lambda_i) const;
    ProfileEval finish(bool include_condition, const std::array<std::array<double, 3>, 3>& c,
                       double log_det_v) const;

    int n_subj_ = 0;
    int n_item_ = 0;
    bool balanced_ = false;
    double effect_ms_ = 0.0;
    std::vector<double> y_;    // log response
    std::vector<double> x1_;   // condition coding
    std::vector<int> subj_;
    std::vector<int> item_;
    std::vector<long> subj_n_, item_n_;  // group sizes
    // Sufficient statistics over the columns {intercept, condition, response}.
    std::vector<double> subj_sum_;  // 3 x n_subj
    std::vector<double> item_sum_;  // 3 x n_item
    std::array<std::array<double, 3>, 3> gram_{};
    std::array<std::array<double, 3>, 3> ss_subj_{};
    std::array<std::array<double, 3>, 3> ss_item_{};
    std::array<double, 3> tot_{};
};

// Single profiled-deviance evaluation (exposed for oracle checks).
ProfileEval profiled_deviance(const Dataset& data, const ModelSpec& spec, double lambda_s,
                              double lambda_i);

// ML fit: Nelder-Mead over (ln lambda_s, ln lambda_i) from moment starts,
// plus the three boundary candidates lambda_s = 0, lambda_i = 0 and both.
FitResult fit(const Dataset& data, const ModelSpec& spec);
FitResult fit_profiled(const ProfiledModel& model, bool include_condition);

// Likelihood-ratio test of the condition effect on one measure.
MeasureTest lrt(const Dataset& data, Measure measure);

}  // namespace etsim
