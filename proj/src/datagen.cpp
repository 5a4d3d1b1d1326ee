#include "datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "errors.hpp"

namespace etsim {

const char* measure_name(Measure m) {
    switch (m) {
        case Measure::FFD: return "ffd";
        case Measure::GZD: return "gzd";
        case Measure::GPD: return "gpd";
        default: return "tvt";
    }
}

int measure_from_name(std::string_view name) {
    for (Measure m : kMeasures) {
        if (name == measure_name(m)) return static_cast<int>(m);
    }
    return -1;
}

Condition latin_square_condition(int subject_id, int item_id) {
    if (subject_id < 0 || item_id < 0) {
        throw std::invalid_argument("latin_square_condition: negative index");
    }
    return ((subject_id + item_id) % 2 == 0) ? Condition::A : Condition::B;
}

Dataset generate_base(const ParamSet& p, RngStream& rng) {
    p.validate();
    Dataset ds;
    ds.params = p;
    ds.has_params = true;
    ds.true_effect_ms = 0.0;
    ds.n_subjects = p.n_subjects;
    ds.n_items = p.n_items;

    const double sd_u = std::log(p.sd_subjects);
    const double sd_w = std::log(p.sd_items);
    std::vector<double> u(p.n_subjects), w(p.n_items);
    for (auto& v : u) v = rng.normal(0.0, sd_u);
    for (auto& v : w) v = rng.normal(0.0, sd_w);

    const double ln_mean_ffd = std::log(p.mean_ffd);
    const double sd_ffd = std::log(p.sd_ffd);
    const double ln_gaze = std::log(p.mean_gazediff), sd_gaze = std::log(p.sd_gazediff);
    const double ln_gopast = std::log(p.mean_gopastdiff), sd_gopast = std::log(p.sd_gopastdiff);
    const double ln_tvt = std::log(p.mean_tvtdiff), sd_tvt = std::log(p.sd_tvtdiff);

    ds.trials.reserve(static_cast<size_t>(p.n_subjects) * p.n_items);
    for (int s = 0; s < p.n_subjects; ++s) {
        for (int i = 0; i < p.n_items; ++i) {
            TrialRecord t;
            t.subject_id = s;
            t.item_id = i;
            t.condition = latin_square_condition(s, i);
            t.ffd = std::exp(rng.normal(ln_mean_ffd + u[s] + w[i], sd_ffd));

            // One flag draw plus one duration draw per event keeps the
            // stream position independent of the flag outcomes.
            t.refixated = rng.bernoulli(p.p_refix);
            const double gazediff = rng.lognormal(ln_gaze, sd_gaze);
            t.gzd = t.refixated ? t.ffd + gazediff : t.ffd;

            t.regressed = rng.bernoulli(p.p_regr);
            const double gopastdiff = rng.lognormal(ln_gopast, sd_gopast);
            t.gpd = t.regressed ? t.gzd + gopastdiff : t.gzd;

            t.reread = rng.bernoulli(p.p_reread);
            const double tvtdiff = rng.lognormal(ln_tvt, sd_tvt);
            t.tvt = t.reread ? t.gzd + tvtdiff : t.gzd;

            ds.trials.push_back(t);
        }
    }
    return ds;
}

EffectCalibration calibrate_effect(const ParamSet& p, double delta_ms) {
    if (!(delta_ms >= 0.0)) throw std::invalid_argument("calibrate_effect: delta_ms must be >= 0");
    auto half_lnsq = [](double g) {
        const double l = std::log(g);
        return 0.5 * l * l;
    };
    EffectCalibration c;
    c.delta_ms = delta_ms;
    c.mu[0] = p.mean_ffd *
              std::exp(half_lnsq(p.sd_ffd) + half_lnsq(p.sd_subjects) + half_lnsq(p.sd_items));
    c.mu[1] = c.mu[0] + p.p_refix * p.mean_gazediff * std::exp(half_lnsq(p.sd_gazediff));
    c.mu[2] = c.mu[1] + p.p_regr * p.mean_gopastdiff * std::exp(half_lnsq(p.sd_gopastdiff));
    c.mu[3] = c.mu[1] + p.p_reread * p.mean_tvtdiff * std::exp(half_lnsq(p.sd_tvtdiff));
    for (int m = 0; m < 4; ++m) c.beta[m] = std::log1p(delta_ms / c.mu[m]);
    return c;
}

Dataset apply_effect(const Dataset& base, const EffectCalibration& cal) {
    if (base.true_effect_ms != 0.0) {
        throw std::invalid_argument("apply_effect: base dataset already carries an effect");
    }
    Dataset out = base;
    out.true_effect_ms = cal.delta_ms;
    const double f_ffd = std::exp(cal.beta[0]);
    const double f_gzd = std::exp(cal.beta[1]);
    const double f_gpd = std::exp(cal.beta[2]);
    const double f_tvt = std::exp(cal.beta[3]);
    for (auto& t : out.trials) {
        if (t.condition != Condition::B) continue;
        t.ffd *= f_ffd;
        t.gzd *= f_gzd;
        t.gpd *= f_gpd;
        t.tvt *= f_tvt;
    }
    return out;
}

std::vector<double> effect_size_grid() { return {0.0, 2.5, 5.0, 10.0, 20.0, 40.0, 80.0}; }

namespace {
constexpr const char* kCsvHeader = "subject,item,condition,ffd,gzd,gpd,tvt,refixated,regressed,reread";
}

void save_csv(const Dataset& data, std::ostream& out) {
    out << kCsvHeader << '\n';
    char buf[256];
    for (const auto& t : data.trials) {
        std::snprintf(buf, sizeof buf, "%d,%d,%c,%.17g,%.17g,%.17g,%.17g,%d,%d,%d\n",
                      t.subject_id, t.item_id, t.condition == Condition::A ? 'a' : 'b', t.ffd,
                      t.gzd, t.gpd, t.tvt, t.refixated ? 1 : 0, t.regressed ? 1 : 0,
                      t.reread ? 1 : 0);
        out << buf;
    }
}

Dataset load_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("dataset CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw ParseError(std::string("dataset CSV: expected header '") + kCsvHeader + "'");
    }

    Dataset ds;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 10) {
            throw ParseError("dataset CSV line " + std::to_string(lineno) +
                             ": expected 10 fields");
        }
        TrialRecord t;
        try {
            t.subject_id = std::stoi(fields[0]);
            t.item_id = std::stoi(fields[1]);
            if (fields[2] == "a") {
                t.condition = Condition::A;
            } else if (fields[2] == "b") {
                t.condition = Condition::B;
            } else {
                throw ParseError("condition must be 'a' or 'b'");
            }
            t.ffd = std::stod(fields[3]);
            t.gzd = std::stod(fields[4]);
            t.gpd = std::stod(fields[5]);
            t.tvt = std::stod(fields[6]);
            t.refixated = fields[7] == "1";
            t.regressed = fields[8] == "1";
            t.reread = fields[9] == "1";
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("dataset CSV line " + std::to_string(lineno) + ": bad field value");
        }
        for (double v : {t.ffd, t.gzd, t.gpd, t.tvt}) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ParseError("dataset CSV line " + std::to_string(lineno) +
                                 ": durations must be positive");
            }
        }
        ds.trials.push_back(t);
    }
    if (ds.trials.empty()) throw ParseError("dataset CSV: no data rows");

    // Remap subject/item labels onto dense 0-based indices.
    std::map<int, int> subj_map, item_map;
    for (const auto& t : ds.trials) {
        subj_map.emplace(t.subject_id, 0);
        item_map.emplace(t.item_id, 0);
    }
    int next = 0;
    for (auto& [label, idx] : subj_map) idx = next++;
    next = 0;
    for (auto& [label, idx] : item_map) idx = next++;
    for (auto& t : ds.trials) {
        t.subject_id = subj_map[t.subject_id];
        t.item_id = item_map[t.item_id];
    }
    ds.n_subjects = static_cast<int>(subj_map.size());
    ds.n_items = static_cast<int>(item_map.size());
    return ds;
}

void save_csv_file(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset CSV: " + path);
    save_csv(data, out);
    if (!out) throw IoError("write failed: " + path);
}

Dataset load_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset CSV: " + path);
    return load_csv(in);
}

CorrMatrix mean_measure_correlations(const ParamSet& params, int n_datasets, uint64_t seed) {
    if (n_datasets < 1) throw std::invalid_argument("mean_measure_correlations: n_datasets >= 1");
    CorrMatrix acc;
    for (int d = 0; d < n_datasets; ++d) {
        RngStream rng(seed, static_cast<uint64_t>(d));
        const Dataset ds = generate_base(params, rng);
        const size_t n = ds.trials.size();
        std::array<double, 4> mean{};
        for (const auto& t : ds.trials) {
            for (Measure m : kMeasures) mean[static_cast<int>(m)] += t.measure(m);
        }
        for (auto& v : mean) v /= static_cast<double>(n);
        std::array<double, 16> cov{};
        for (const auto& t : ds.trials) {
            for (int a = 0; a < 4; ++a) {
                const double da = t.measure(static_cast<Measure>(a)) - mean[a];
                for (int b = a; b < 4; ++b) {
                    cov[a * 4 + b] += da * (t.measure(static_cast<Measure>(b)) - mean[b]);
                }
            }
        }
        for (int a = 0; a < 4; ++a) {
            for (int b = a; b < 4; ++b) {
                const double r = cov[a * 4 + b] / std::sqrt(cov[a * 4 + a] * cov[b * 4 + b]);
                acc.m[a * 4 + b] += r;
                if (a != b) acc.m[b * 4 + a] += r;
            }
        }
    }
    for (auto& v : acc.m) v /= n_datasets;
    return acc;
}

CorrMatrix endpoint_reference_correlations(Endpoint which) {
    CorrMatrix r;
    auto set = [&r](Measure a, Measure b, double v) {
        r.m[static_cast<int>(a) * 4 + static_cast<int>(b)] = v;
        r.m[static_cast<int>(b) * 4 + static_cast<int>(a)] = v;
    };
    for (int i = 0; i < 4; ++i) r.m[i * 4 + i] = 1.0;
    using enum Measure;
    if (which == Endpoint::AngeleLike) {
        set(FFD, GZD, 0.65);
        set(FFD, GPD, 0.46);
        set(FFD, TVT, 0.42);
        set(GZD, GPD, 0.71);
        set(GZD, TVT, 0.64);
        set(GPD, TVT, 0.45);
    } else {
        set(FFD, GZD, 0.61);
        set(FFD, GPD, 0.20);
        set(FFD, TVT, 0.36);
        set(GZD, GPD, 0.35);
        set(GZD, TVT, 0.57);
        set(GPD, TVT, 0.19);
    }
    return r;
}

}  // namespace etsim
