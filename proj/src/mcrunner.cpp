#include "mcrunner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "errors.hpp"
#include "stats.hpp"

namespace etsim {
namespace {

constexpr long kBlockSize = 64;     // iterations per work unit
constexpr uint64_t kStreamsPerIteration = 64;  // stream-id slots per iteration
constexpr int kHistBins = 20;

// Stream slots within an iteration.
constexpr uint64_t kStreamParams = 0;
constexpr uint64_t kStreamBase = 1;
constexpr uint64_t kStreamPerDelta = 2;

}  // namespace

void RunConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("RunConfig: iterations must be >= 1");
    range.validate();
    if (effect_grid.empty() || effect_grid.front() != 0.0) {
        throw std::invalid_argument("RunConfig: effect grid must start at 0");
    }
    if (effect_grid.size() > kStreamsPerIteration - kStreamPerDelta) {
        throw std::invalid_argument("RunConfig: effect grid too long");
    }
    for (size_t i = 0; i < effect_grid.size(); ++i) {
        if (!(effect_grid[i] >= 0.0) || !std::isfinite(effect_grid[i])) {
            throw std::invalid_argument("RunConfig: effect sizes must be finite and >= 0");
        }
        if (i > 0 && effect_grid[i] <= effect_grid[i - 1]) {
            throw std::invalid_argument("RunConfig: effect grid must be strictly increasing");
        }
    }
    if (criteria.empty()) throw std::invalid_argument("RunConfig: no criteria configured");
    for (const auto& tok : criteria) criterion_from_token(tok);
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("RunConfig: alpha must lie in (0, 1)");
    }
    if (k < 1 || k > 4) throw std::invalid_argument("RunConfig: k must lie in [1, 4]");
    if (workers < 0) throw std::invalid_argument("RunConfig: workers must be >= 0");
}

std::vector<CriterionSpec> RunConfig::criterion_specs() const {
    std::vector<CriterionSpec> specs;
    specs.reserve(criteria.size());
    for (const auto& tok : criteria) {
        CriterionSpec s;
        s.kind = criterion_from_token(tok);
        s.alpha = alpha;
        s.k = k;
        s.m = 4;
        specs.push_back(s);
    }
    return specs;
}

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    auto parse_bool = [](const std::string& v, int lineno) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ParseError("config line " + std::to_string(lineno) + ": expected boolean");
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string value;
        ls >> value;
        if (value == "=") ls >> value;
        if (value.empty()) {
            throw ParseError("config line " + std::to_string(lineno) + ": missing value");
        }
        try {
            if (key == "iterations") {
                cfg.iterations = std::stol(value);
            } else if (key == "seed") {
                cfg.master_seed = std::stoull(value);
            } else if (key == "workers") {
                cfg.workers = std::stoi(value);
            } else if (key == "coupled_noise") {
                cfg.coupled_noise = parse_bool(value, lineno);
            } else if (key == "progress") {
                cfg.progress = parse_bool(value, lineno);
            } else if (key == "alpha") {
                cfg.alpha = std::stod(value);
            } else if (key == "k") {
                cfg.k = std::stoi(value);
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else if (key == "effects") {
                cfg.effect_grid.clear();
                std::istringstream es(value);
                std::string tok;
                while (std::getline(es, tok, ',')) cfg.effect_grid.push_back(std::stod(tok));
            } else if (key == "criteria") {
                cfg.criteria.clear();
                std::istringstream cs(value);
                std::string tok;
                while (std::getline(cs, tok, ',')) cfg.criteria.push_back(tok);
            } else {
                throw ParseError("config line " + std::to_string(lineno) + ": unknown key '" +
                                 key + "'");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("config line " + std::to_string(lineno) + ": bad value for '" +
                             key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_run_config(in);
}

int McAggregate::delta_index(double delta_ms) const {
    for (size_t i = 0; i < deltas.size(); ++i) {
        if (deltas[i] == delta_ms) return static_cast<int>(i);
    }
    return -1;
}

McAggregate make_aggregate(const RunConfig& cfg) {
    McAggregate a;
    a.deltas = cfg.effect_grid;
    a.criteria = cfg.criteria;
    a.alpha = cfg.alpha;
    a.k = cfg.k;
    const size_t nc = cfg.criteria.size(), nd = cfg.effect_grid.size();
    a.crit_detect_free.assign(nc * nd, 0);
    a.crit_detect_dir.assign(nc * nd, 0);
    a.delta_valid.assign(nd, 0);
    a.meas_valid.assign(4 * nd, 0);
    a.meas_sig_correct.assign(4 * nd, 0);
    a.meas_sig_wrong.assign(4 * nd, 0);
    a.meas_effect_sum.assign(4 * nd, 0.0);
    a.bucket_valid.assign(3 * nd, 0);
    a.bucket_detect.assign(3 * nd, 0);
    a.bucket_sig_correct.assign(4 * nd * 3, 0);
    a.bucket_effect_sum.assign(4 * nd * 3, 0.0);
    a.pval_hist.assign(nd * 2 * kHistBins, 0);
    a.strata_valid.assign(kNumParams * 2, 0);
    a.strata_detect.assign(kNumParams * 2, 0);
    return a;
}

void McAggregate::merge(const McAggregate& other) {
    if (deltas != other.deltas || criteria != other.criteria || alpha != other.alpha ||
        k != other.k) {
        throw std::invalid_argument("McAggregate::merge: incompatible aggregates");
    }
    auto add = [](auto& dst, const auto& src) {
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    iterations += other.iterations;
    add(crit_detect_free, other.crit_detect_free);
    add(crit_detect_dir, other.crit_detect_dir);
    add(delta_valid, other.delta_valid);
    add(meas_valid, other.meas_valid);
    add(meas_sig_correct, other.meas_sig_correct);
    add(meas_sig_wrong, other.meas_sig_wrong);
    add(meas_effect_sum, other.meas_effect_sum);
    add(bucket_valid, other.bucket_valid);
    add(bucket_detect, other.bucket_detect);
    add(bucket_sig_correct, other.bucket_sig_correct);
    add(bucket_effect_sum, other.bucket_effect_sum);
    add(pval_hist, other.pval_hist);
    add(strata_valid, other.strata_valid);
    add(strata_detect, other.strata_detect);
    add(joint_valid, other.joint_valid);
    add(joint_detect, other.joint_detect);
    total_fits += other.total_fits;
    fit_failures += other.fit_failures;
    nonconverged += other.nonconverged;
    ll_violations += other.ll_violations;
    invalid_tests += other.invalid_tests;
}

int n_bucket(const ParamSet& params) {
    const int total = params.n_subjects + params.n_items;
    if (total <= kLowNMax) return 0;
    if (total >= kHighNMin) return 2;
    return 1;
}

IterationOutcome run_iteration(long index, const RunConfig& cfg) {
    IterationOutcome out;
    out.index = index;

    const uint64_t base_id = static_cast<uint64_t>(index) * kStreamsPerIteration;
    RngStream param_stream(cfg.master_seed, base_id + kStreamParams);
    out.params = sample_paramset(cfg.range, param_stream);

    const auto specs = cfg.criterion_specs();
    const size_t nd = cfg.effect_grid.size();
    out.tests.resize(nd);
    out.decisions_free.resize(nd);
    out.decisions_dir.resize(nd);

    Dataset base;
    if (cfg.coupled_noise) {
        RngStream gen(cfg.master_seed, base_id + kStreamBase);
        base = generate_base(out.params, gen);
    }

    for (size_t d = 0; d < nd; ++d) {
        const double delta = cfg.effect_grid[d];
        Dataset data;
        if (cfg.coupled_noise) {
            data = (delta == 0.0) ? base : apply_effect(base, calibrate_effect(out.params, delta));
        } else {
            RngStream gen(cfg.master_seed, base_id + kStreamPerDelta + d);
            Dataset fresh = generate_base(out.params, gen);
            data = (delta == 0.0) ? std::move(fresh)
                                  : apply_effect(fresh, calibrate_effect(out.params, delta));
        }

        for (int m = 0; m < 4; ++m) {
            MeasureTest& t = out.tests[d][m];
            try {
                t = lrt(data, static_cast<Measure>(m));
                out.n_fits += 2;
            } catch (const std::exception&) {
                t = MeasureTest{};
                t.measure = static_cast<Measure>(m);
                t.failed = true;
                t.valid = false;
                ++out.fit_failures;
            }
        }

        out.decisions_free[d].reserve(specs.size());
        out.decisions_dir[d].reserve(specs.size());
        for (CriterionSpec s : specs) {
            s.require_correct_direction = false;
            out.decisions_free[d].push_back(decide(out.tests[d], s));
            s.require_correct_direction = true;
            s.true_direction = Sign::Positive;
            out.decisions_dir[d].push_back(decide(out.tests[d], s));
        }
    }
    return out;
}

void accumulate(McAggregate& agg, const IterationOutcome& outcome, const RunConfig& cfg) {
    const int nd = agg.n_deltas();
    const int nc = agg.n_criteria();
    agg.iterations += 1;
    agg.total_fits += outcome.n_fits;
    agg.fit_failures += outcome.fit_failures;

    const int bucket = n_bucket(outcome.params);

    // Internal one-effect criterion for strata and n-bucket curves.
    CriterionSpec one;
    one.kind = CriterionKind::AnyUncorrected;
    one.alpha = cfg.alpha;

    for (int d = 0; d < nd; ++d) {
        bool all_valid = true;
        for (int m = 0; m < 4; ++m) {
            const MeasureTest& t = outcome.tests[d][m];
            if (t.failed || !t.valid) {
                all_valid = false;
                ++agg.invalid_tests;
            }
            if (!t.failed) {
                if (!t.full_fit.converged) ++agg.nonconverged;
                if (!t.null_fit.converged) ++agg.nonconverged;
                if (t.ll_order_violation) ++agg.ll_violations;
            }
            if (t.failed || !t.valid) continue;

            const size_t mi = static_cast<size_t>(m) * nd + d;
            ++agg.meas_valid[mi];
            const bool sig = t.p_value <= cfg.alpha;
            const bool correct = t.sign == Sign::Positive;
            if (sig && correct) {
                ++agg.meas_sig_correct[mi];
                agg.meas_effect_sum[mi] += t.effect_ms;
                const size_t bi = mi * 3 + bucket;
                ++agg.bucket_sig_correct[bi];
                agg.bucket_effect_sum[bi] += t.effect_ms;
            } else if (sig) {
                ++agg.meas_sig_wrong[mi];
            }
            int bin = static_cast<int>(t.p_value * kHistBins);
            bin = std::clamp(bin, 0, kHistBins - 1);
            const size_t hi = (static_cast<size_t>(d) * 2 + (correct ? 0 : 1)) * kHistBins + bin;
            ++agg.pval_hist[hi];
        }
        if (!all_valid) continue;

        ++agg.delta_valid[d];
        for (int c = 0; c < nc; ++c) {
            const size_t ci = static_cast<size_t>(c) * nd + d;
            if (outcome.decisions_free[d][c].detected) ++agg.crit_detect_free[ci];
            if (outcome.decisions_dir[d][c].detected) ++agg.crit_detect_dir[ci];
        }

        const size_t bvi = static_cast<size_t>(bucket) * nd + d;
        ++agg.bucket_valid[bvi];
        one.require_correct_direction = true;
        one.true_direction = Sign::Positive;
        if (decide(outcome.tests[d], one).detected) ++agg.bucket_detect[bvi];

        if (agg.deltas[d] == 0.0) {
            one.require_correct_direction = false;
            const bool fp = decide(outcome.tests[d], one).detected;
            int n_high = 0;
            for (int p = 0; p < kNumParams; ++p) {
                const double mid = 0.5 * (get_param(cfg.range.lower, p) +
                                          get_param(cfg.range.upper, p));
                const double v = get_param(outcome.params, p);
                const int side = v <= mid ? 0 : 1;
                const size_t si = static_cast<size_t>(p) * 2 + side;
                ++agg.strata_valid[si];
                if (fp) ++agg.strata_detect[si];
            }
            for (int p : kJointStratumParams) {
                const double mid = 0.5 * (get_param(cfg.range.lower, p) +
                                          get_param(cfg.range.upper, p));
                if (get_param(outcome.params, p) > mid) ++n_high;
            }
            if (n_high == 0 || n_high == static_cast<int>(kJointStratumParams.size())) {
                const int side = n_high == 0 ? 0 : 1;
                ++agg.joint_valid[side];
                if (fp) ++agg.joint_detect[side];
            }
        }
    }
}

RunResult run(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const long n_blocks = (cfg.iterations + kBlockSize - 1) / kBlockSize;
    std::vector<McAggregate> blocks(static_cast<size_t>(n_blocks));

    int workers = cfg.workers > 0 ? cfg.workers
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = static_cast<int>(std::min<long>(workers, n_blocks));

    std::atomic<long> next_block{0};
    std::atomic<long> done_blocks{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto work = [&] {
        while (true) {
            const long b = next_block.fetch_add(1);
            if (b >= n_blocks) break;
            {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (first_error) break;
            }
            try {
                McAggregate agg = make_aggregate(cfg);
                const long lo = b * kBlockSize;
                const long hi = std::min(cfg.iterations, lo + kBlockSize);
                for (long i = lo; i < hi; ++i) {
                    accumulate(agg, run_iteration(i, cfg), cfg);
                }
                blocks[static_cast<size_t>(b)] = std::move(agg);
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (!first_error) first_error = std::current_exception();
                break;
            }
            const long done = done_blocks.fetch_add(1) + 1;
            if (cfg.progress) {
                std::fprintf(stderr, "[etsim] %ld/%ld blocks (%.0f%%)\n", done, n_blocks,
                             100.0 * static_cast<double>(done) / static_cast<double>(n_blocks));
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    RunResult result;
    result.aggregate = make_aggregate(cfg);
    for (auto& b : blocks) result.aggregate.merge(b);  // fixed order: worker-count independent
    result.workers_used = workers;
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

RateCI make_rate(int64_t count, int64_t n) {
    RateCI r;
    r.count = count;
    r.n = n;
    if (n < 1) return r;
    r.defined = true;
    r.rate = static_cast<double>(count) / static_cast<double>(n);
    const Interval ci = binom_ci95(count, n);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
    return r;
}

RateCI detection_rate(const McAggregate& agg, int criterion_idx, int delta_idx,
                      bool direction_required) {
    const size_t ci = static_cast<size_t>(criterion_idx) * agg.n_deltas() + delta_idx;
    const auto& counts = direction_required ? agg.crit_detect_dir : agg.crit_detect_free;
    return make_rate(counts[ci], agg.delta_valid[static_cast<size_t>(delta_idx)]);
}

RateCI per_measure_power(const McAggregate& agg, Measure m, int delta_idx) {
    const size_t mi = static_cast<size_t>(m) * agg.n_deltas() + delta_idx;
    return make_rate(agg.meas_sig_correct[mi], agg.meas_valid[mi]);
}

RateCI type_s_rate(const McAggregate& agg, int delta_idx) {
    int64_t wrong = 0, sig = 0;
    for (int m = 0; m < 4; ++m) {
        const size_t mi = static_cast<size_t>(m) * agg.n_deltas() + delta_idx;
        wrong += agg.meas_sig_wrong[mi];
        sig += agg.meas_sig_correct[mi] + agg.meas_sig_wrong[mi];
    }
    return make_rate(wrong, sig);
}

TypeMPoint type_m_mean(const McAggregate& agg, Measure m, int delta_idx, int bucket) {
    const size_t mi = static_cast<size_t>(m) * agg.n_deltas() + delta_idx;
    TypeMPoint p;
    if (bucket < 0) {
        p.count = agg.meas_sig_correct[mi];
        if (p.count > 0) {
            p.defined = true;
            p.mean_detected_ms = agg.meas_effect_sum[mi] / static_cast<double>(p.count);
        }
    } else {
        const size_t bi = mi * 3 + static_cast<size_t>(bucket);
        p.count = agg.bucket_sig_correct[bi];
        if (p.count > 0) {
            p.defined = true;
            p.mean_detected_ms = agg.bucket_effect_sum[bi] / static_cast<double>(p.count);
        }
    }
    return p;
}

StratumRates stratified_fp(const McAggregate& agg, int param_idx) {
    StratumRates s;
    s.low = make_rate(agg.strata_detect[static_cast<size_t>(param_idx) * 2],
                      agg.strata_valid[static_cast<size_t>(param_idx) * 2]);
    s.high = make_rate(agg.strata_detect[static_cast<size_t>(param_idx) * 2 + 1],
                       agg.strata_valid[static_cast<size_t>(param_idx) * 2 + 1]);
    s.defined = s.low.defined && s.high.defined;
    if (s.defined) s.difference = s.high.rate - s.low.rate;
    return s;
}

StratumRates joint_stratum_fp(const McAggregate& agg) {
    StratumRates s;
    s.low = make_rate(agg.joint_detect[0], agg.joint_valid[0]);
    s.high = make_rate(agg.joint_detect[1], agg.joint_valid[1]);
    s.defined = s.low.defined && s.high.defined;
    if (s.defined) s.difference = s.high.rate - s.low.rate;
    return s;
}

}  // namespace etsim
