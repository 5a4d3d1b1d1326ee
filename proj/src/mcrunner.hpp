#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "datagen.hpp"
#include "lmm.hpp"
#include "params.hpp"

namespace etsim {

struct RunConfig {
    long iterations = 2000;       // desk default; the full-scale run uses 100000
    uint64_t master_seed = 42;
    ParamRange range = default_range();
    std::vector<double> effect_grid = effect_size_grid();
    std::vector<std::string> criteria = default_criterion_tokens();
    double alpha = 0.05;
    int k = 2;
    bool coupled_noise = true;  // one base dataset per iteration, effects injected
    int workers = 0;            // 0 = hardware concurrency
    std::string out_dir;
    bool progress = false;

    void validate() const;
    std::vector<CriterionSpec> criterion_specs() const;
};

// Flat key-value config file; keys: iterations, seed, workers,
// coupled_noise, alpha, k, effects, criteria, out_dir, progress.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config_file(const std::string& path);

struct IterationOutcome {
    long index = 0;
    ParamSet params;
    std::vector<std::array<MeasureTest, 4>> tests;      // [delta][measure]
    std::vector<std::vector<Decision>> decisions_free;  // [delta][criterion]
    std::vector<std::vector<Decision>> decisions_dir;
    int n_fits = 0;
    int fit_failures = 0;
};

// Mergeable counts; everything needed for the report tables. Sums are
// accumulated in iteration order within fixed-size blocks so merged
// results do not depend on the worker count.
struct McAggregate {
    std::vector<double> deltas;
    std::vector<std::string> criteria;
    double alpha = 0.05;
    int k = 2;
    long iterations = 0;

    std::vector<int64_t> crit_detect_free;  // [criterion][delta]
    std::vector<int64_t> crit_detect_dir;   // [criterion][delta]
    std::vector<int64_t> delta_valid;       // [delta]: all four tests valid

    std::vector<int64_t> meas_valid;        // [measure][delta]
    std::vector<int64_t> meas_sig_correct;  // p <= alpha and correct sign
    std::vector<int64_t> meas_sig_wrong;    // p <= alpha and wrong sign
    std::vector<double> meas_effect_sum;    // effect_ms summed over sig-correct

    std::vector<int64_t> bucket_valid;       // [n-bucket][delta]
    std::vector<int64_t> bucket_detect;      // any-one criterion, direction required
    std::vector<int64_t> bucket_sig_correct; // [measure][delta][n-bucket]
    std::vector<double> bucket_effect_sum;   // [measure][delta][n-bucket]

    std::vector<int64_t> pval_hist;  // [delta][direction][bin], 20 bins of 0.05

    std::vector<int64_t> strata_valid;   // [parameter][side], delta = 0
    std::vector<int64_t> strata_detect;  // any-one criterion, direction free
    std::array<int64_t, 2> joint_valid{};
    std::array<int64_t, 2> joint_detect{};

    int64_t total_fits = 0;
    int64_t fit_failures = 0;
    int64_t nonconverged = 0;
    int64_t ll_violations = 0;
    int64_t invalid_tests = 0;

    int n_criteria() const { return static_cast<int>(criteria.size()); }
    int n_deltas() const { return static_cast<int>(deltas.size()); }
    int delta_index(double delta_ms) const;  // -1 when absent

    void merge(const McAggregate& other);  // associative; counts only grow
};

McAggregate make_aggregate(const RunConfig& cfg);
void accumulate(McAggregate& agg, const IterationOutcome& outcome, const RunConfig& cfg);

// One simulation iteration: sample parameters, generate the effect-size
// datasets, run all four LRTs per dataset, evaluate every criterion under
// both direction semantics. Depends only on (master_seed, index, cfg).
IterationOutcome run_iteration(long index, const RunConfig& cfg);

struct RunResult {
    McAggregate aggregate;
    double elapsed_seconds = 0.0;
    int workers_used = 1;
};

// All iterations, distributed over workers; the merged aggregate is
// bitwise independent of the worker count.
RunResult run(const RunConfig& cfg);

// ---- derived rates ----

struct RateCI {
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int64_t count = 0;
    int64_t n = 0;
    bool defined = false;
};

RateCI make_rate(int64_t count, int64_t n);

// Detection rate for a configured criterion at one effect size.
RateCI detection_rate(const McAggregate& agg, int criterion_idx, int delta_idx,
                      bool direction_required);

// Per-measure correctly-directed detection rate at uncorrected alpha.
RateCI per_measure_power(const McAggregate& agg, Measure m, int delta_idx);

// Fraction of significant uncorrected results with the wrong sign.
RateCI type_s_rate(const McAggregate& agg, int delta_idx);

struct TypeMPoint {
    double mean_detected_ms = 0.0;
    int64_t count = 0;
    bool defined = false;
};
// bucket: -1 = all, 0 = low n, 1 = mid, 2 = high n.
TypeMPoint type_m_mean(const McAggregate& agg, Measure m, int delta_idx, int bucket);

struct StratumRates {
    RateCI low;
    RateCI high;
    double difference = 0.0;  // high - low
    bool defined = false;
};
// Median-split false-positive rates for one parameter under the
// uncorrected one-effect criterion.
StratumRates stratified_fp(const McAggregate& agg, int param_idx);
StratumRates joint_stratum_fp(const McAggregate& agg);

// n-bucket boundaries on n_subjects + n_items.
int n_bucket(const ParamSet& params);
inline constexpr int kLowNMax = 55;
inline constexpr int kHighNMin = 85;

// Joint-stratum parameters (the ones with a robust individual effect).
inline constexpr std::array<int, 3> kJointStratumParams = {5, 6, 9};  // p.regr, p.reread, mean.gopastdiff

}  // namespace etsim
