#include "etsim.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include "criteria.hpp"
#include "datagen.hpp"
#include "errors.hpp"
#include "lmm.hpp"
#include "mcrunner.hpp"
#include "params.hpp"
#include "report.hpp"

struct etsim_range {
    etsim::ParamRange v;
};
struct etsim_params {
    etsim::ParamSet v;
};
struct etsim_dataset {
    etsim::Dataset v;
};
struct etsim_test {
    etsim::MeasureTest v;
};
struct etsim_config {
    etsim::RunConfig v;
};
struct etsim_results {
    etsim::RunResult v;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename F>
etsim_status guarded(F&& f) noexcept {
    try {
        f();
        return ETSIM_OK;
    } catch (const etsim::ParseError& e) {
        set_error(e.what());
        return ETSIM_ERR_PARSE;
    } catch (const etsim::IoError& e) {
        set_error(e.what());
        return ETSIM_ERR_IO;
    } catch (const etsim::FitError& e) {
        set_error(e.what());
        return ETSIM_ERR_FIT;
    } catch (const etsim::FactorizationError& e) {
        set_error(e.what());
        return ETSIM_ERR_FIT;
    } catch (const std::exception& e) {
        set_error(e.what());
        return ETSIM_ERR_ARGUMENT;
    } catch (...) {
        set_error("unknown error");
        return ETSIM_ERR_ARGUMENT;
    }
}

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

int param_index_checked(const char* name) {
    require(name != nullptr, "parameter name is null");
    const int idx = etsim::param_index(name);
    require(idx >= 0, "unknown parameter name");
    return idx;
}

etsim::Endpoint endpoint_from_name(const char* which) {
    require(which != nullptr, "endpoint name is null");
    if (std::strcmp(which, "angele") == 0) return etsim::Endpoint::AngeleLike;
    if (std::strcmp(which, "metzner") == 0) return etsim::Endpoint::MetznerLike;
    throw std::invalid_argument("endpoint must be 'angele' or 'metzner'");
}

}  // namespace

extern "C" {

const char* etsim_version_string(void) { return "0.1.0"; }

const char* etsim_last_error(void) { return g_last_error.c_str(); }

/* ---- ranges ---- */

etsim_range* etsim_range_default(void) {
    return new (std::nothrow) etsim_range{etsim::default_range()};
}

etsim_status etsim_range_load(const char* path, etsim_range** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new etsim_range{etsim::load_range_file(path)};
    });
}

etsim_status etsim_range_save(const etsim_range* range, const char* path) {
    return guarded([&] {
        require(range && path, "null argument");
        etsim::save_range_file(range->v, path);
    });
}

etsim_status etsim_range_get(const etsim_range* range, const char* name, double* lower,
                             double* upper) {
    return guarded([&] {
        require(range && lower && upper, "null argument");
        const int idx = param_index_checked(name);
        *lower = etsim::get_param(range->v.lower, idx);
        *upper = etsim::get_param(range->v.upper, idx);
    });
}

etsim_status etsim_range_set(etsim_range* range, const char* name, double lower, double upper) {
    return guarded([&] {
        require(range != nullptr, "null argument");
        const int idx = param_index_checked(name);
        etsim::ParamRange next = range->v;
        etsim::set_param(next.lower, idx, lower);
        etsim::set_param(next.upper, idx, upper);
        next.validate();
        range->v = next;
    });
}

void etsim_range_free(etsim_range* range) { delete range; }

/* ---- parameter sets ---- */

etsim_status etsim_params_endpoint(const char* which, etsim_params** out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        *out = new etsim_params{etsim::endpoint(endpoint_from_name(which))};
    });
}

etsim_status etsim_params_sample(const etsim_range* range, uint64_t seed, uint64_t stream,
                                 etsim_params** out) {
    return guarded([&] {
        require(range && out, "null argument");
        etsim::RngStream rng(seed, stream);
        *out = new etsim_params{etsim::sample_paramset(range->v, rng)};
    });
}

etsim_status etsim_params_get(const etsim_params* params, const char* name, double* value) {
    return guarded([&] {
        require(params && value, "null argument");
        *value = etsim::get_param(params->v, param_index_checked(name));
    });
}

void etsim_params_free(etsim_params* params) { delete params; }

/* ---- data sets ---- */

etsim_status etsim_dataset_generate(const etsim_params* params, double effect_ms, uint64_t seed,
                                    uint64_t stream, etsim_dataset** out) {
    return guarded([&] {
        require(params && out, "null argument");
        etsim::RngStream rng(seed, stream);
        etsim::Dataset base = etsim::generate_base(params->v, rng);
        if (effect_ms != 0.0) {
            base = etsim::apply_effect(base, etsim::calibrate_effect(params->v, effect_ms));
        }
        *out = new etsim_dataset{std::move(base)};
    });
}

etsim_status etsim_dataset_load_csv(const char* path, etsim_dataset** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new etsim_dataset{etsim::load_csv_file(path)};
    });
}

etsim_status etsim_dataset_save_csv(const etsim_dataset* data, const char* path) {
    return guarded([&] {
        require(data && path, "null argument");
        etsim::save_csv_file(data->v, path);
    });
}

int64_t etsim_dataset_n_trials(const etsim_dataset* data) {
    return data ? static_cast<int64_t>(data->v.trials.size()) : 0;
}

void etsim_dataset_free(etsim_dataset* data) { delete data; }

/* ---- LRT ---- */

etsim_status etsim_lrt(const etsim_dataset* data, const char* measure, etsim_test** out) {
    return guarded([&] {
        require(data && measure && out, "null argument");
        const int m = etsim::measure_from_name(measure);
        require(m >= 0, "measure must be one of ffd, gzd, gpd, tvt");
        *out = new etsim_test{etsim::lrt(data->v, static_cast<etsim::Measure>(m))};
    });
}

etsim_status etsim_test_get(const etsim_test* test, const char* field, double* value) {
    return guarded([&] {
        require(test && field && value, "null argument");
        const etsim::MeasureTest& t = test->v;
        const std::string f = field;
        if (f == "beta0") *value = t.full_fit.beta0;
        else if (f == "beta1") *value = t.full_fit.beta1;
        else if (f == "sigma2") *value = t.full_fit.sigma2;
        else if (f == "var_subj") *value = t.full_fit.var_subj;
        else if (f == "var_item") *value = t.full_fit.var_item;
        else if (f == "loglik_full") *value = t.full_fit.loglik;
        else if (f == "loglik_null") *value = t.null_fit.loglik;
        else if (f == "lrt_stat") *value = t.lrt_stat;
        else if (f == "p_value") *value = t.p_value;
        else if (f == "effect_ms") *value = t.effect_ms;
        else if (f == "sign") *value = static_cast<double>(static_cast<int>(t.sign));
        else if (f == "converged") *value = t.valid ? 1.0 : 0.0;
        else if (f == "n_evals") *value = t.full_fit.n_evals + t.null_fit.n_evals;
        else throw std::invalid_argument("unknown test field: " + f);
    });
}

void etsim_test_free(etsim_test* test) { delete test; }

/* ---- Monte Carlo ---- */

etsim_config* etsim_config_default(void) {
    return new (std::nothrow) etsim_config{etsim::RunConfig{}};
}

etsim_status etsim_config_load(const char* path, etsim_config** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new etsim_config{etsim::load_run_config_file(path)};
    });
}

etsim_status etsim_config_set(etsim_config* config, const char* key, const char* value) {
    return guarded([&] {
        require(config && key && value, "null argument");
        std::istringstream in(std::string(key) + " = " + value);
        // Reuse the config-file parser for one line, then adopt the field.
        etsim::RunConfig probe = config->v;
        std::string k = key;
        etsim::RunConfig parsed = [&] {
            std::istringstream line(std::string(key) + " = " + value);
            // parse_run_config validates the full config; seed a copy first
            etsim::RunConfig base = config->v;
            etsim::RunConfig one = etsim::parse_run_config(line);
            if (k == "iterations") base.iterations = one.iterations;
            else if (k == "seed") base.master_seed = one.master_seed;
            else if (k == "workers") base.workers = one.workers;
            else if (k == "coupled_noise") base.coupled_noise = one.coupled_noise;
            else if (k == "progress") base.progress = one.progress;
            else if (k == "alpha") base.alpha = one.alpha;
            else if (k == "k") base.k = one.k;
            else if (k == "out_dir") base.out_dir = one.out_dir;
            else if (k == "effects") base.effect_grid = one.effect_grid;
            else if (k == "criteria") base.criteria = one.criteria;
            else throw std::invalid_argument("unknown config key: " + k);
            return base;
        }();
        parsed.validate();
        config->v = parsed;
        (void)probe;
    });
}

etsim_status etsim_config_set_range(etsim_config* config, const etsim_range* range) {
    return guarded([&] {
        require(config && range, "null argument");
        range->v.validate();
        config->v.range = range->v;
    });
}

void etsim_config_free(etsim_config* config) { delete config; }

etsim_status etsim_run(const etsim_config* config, etsim_results** out) {
    return guarded([&] {
        require(config && out, "null argument");
        *out = new etsim_results{etsim::run(config->v)};
    });
}

etsim_status etsim_results_write(const etsim_results* results, const char* dir,
                                 int gnuplot_stubs) {
    return guarded([&] {
        require(results && dir, "null argument");
        etsim::RunConfig cfg;
        cfg.iterations = results->v.aggregate.iterations;
        cfg.alpha = results->v.aggregate.alpha;
        cfg.k = results->v.aggregate.k;
        cfg.effect_grid = results->v.aggregate.deltas;
        cfg.criteria = results->v.aggregate.criteria;
        // seed/range echo come from the config used at run time
        cfg.master_seed = results->v.seed;
        cfg.coupled_noise = results->v.coupled_noise;
        cfg.range = results->v.range;
        etsim::write_results(results->v.aggregate, cfg, results->v.elapsed_seconds,
                             results->v.workers_used, dir, gnuplot_stubs != 0);
    });
}

etsim_status etsim_results_rate(const etsim_results* results, const char* criterion,
                                double delta_ms, int direction_required, double* rate,
                                double* ci_low, double* ci_high) {
    return guarded([&] {
        require(results && criterion && rate, "null argument");
        const etsim::McAggregate& agg = results->v.aggregate;
        int cidx = -1;
        for (size_t c = 0; c < agg.criteria.size(); ++c) {
            if (agg.criteria[c] == criterion) cidx = static_cast<int>(c);
        }
        require(cidx >= 0, "criterion not configured in this run");
        const int didx = agg.delta_index(delta_ms);
        require(didx >= 0, "effect size not in this run's grid");
        const etsim::RateCI r = etsim::detection_rate(agg, cidx, didx, direction_required != 0);
        require(r.defined, "rate undefined: no valid iterations");
        *rate = r.rate;
        if (ci_low) *ci_low = r.ci_low;
        if (ci_high) *ci_high = r.ci_high;
    });
}

void etsim_results_free(etsim_results* results) { delete results; }

/* ---- validation & re-rendering ---- */

etsim_status etsim_validate(const char* endpoint, int n_datasets, uint64_t seed, double corr[16],
                            double reference[16]) {
    return guarded([&] {
        require(corr != nullptr, "null argument");
        const etsim::Endpoint ep = endpoint_from_name(endpoint);
        const etsim::CorrMatrix got =
            etsim::mean_measure_correlations(etsim::endpoint(ep), n_datasets, seed);
        const etsim::CorrMatrix ref = etsim::endpoint_reference_correlations(ep);
        for (int i = 0; i < 16; ++i) {
            corr[i] = got.m[i];
            if (reference) reference[i] = ref.m[i];
        }
    });
}

etsim_status etsim_report_render(const char* results_dir, int gnuplot_stubs) {
    return guarded([&] {
        require(results_dir != nullptr, "null argument");
        etsim::render_from_dir(results_dir, gnuplot_stubs != 0);
    });
}

}  // extern "C"
