#include "params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "errors.hpp"

namespace etsim {
namespace {

struct FieldDesc {
    const char* name;
    bool integer;
};

constexpr FieldDesc kFields[kNumParams] = {
    {"n.subjects", true},     {"n.items", true},        {"sd.subjects", false},
    {"sd.items", false},      {"p.refix", false},       {"p.regr", false},
    {"p.reread", false},      {"mean.ffd", false},      {"mean.gazediff", false},
    {"mean.gopastdiff", false}, {"mean.tvtdiff", false}, {"sd.ffd", false},
    {"sd.gazediff", false},   {"sd.gopastdiff", false}, {"sd.tvtdiff", false},
};

}  // namespace

void ParamSet::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("ParamSet: " + what); };
    if (n_subjects < 2) fail("n_subjects must be >= 2");
    if (n_items < 2) fail("n_items must be >= 2");
    for (double p : {p_refix, p_regr, p_reread}) {
        if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0, 1]");
    }
    for (double m : {mean_ffd, mean_gazediff, mean_gopastdiff, mean_tvtdiff}) {
        if (!(m > 0.0) || !std::isfinite(m)) fail("geometric means must be positive");
    }
    for (double s : {sd_subjects, sd_items, sd_ffd, sd_gazediff, sd_gopastdiff, sd_tvtdiff}) {
        if (!(s >= 1.0) || !std::isfinite(s)) fail("geometric SDs must be >= 1");
    }
}

void ParamRange::validate() const {
    lower.validate();
    upper.validate();
    for (int i = 0; i < kNumParams; ++i) {
        if (get_param(lower, i) > get_param(upper, i)) {
            throw std::invalid_argument(std::string("ParamRange: lower > upper for ") +
                                        param_name(i));
        }
    }
}

const char* param_name(int index) { return kFields[index].name; }

bool param_is_integer(int index) { return kFields[index].integer; }

int param_index(std::string_view name) {
    for (int i = 0; i < kNumParams; ++i) {
        if (name == kFields[i].name) return i;
    }
    return -1;
}

double get_param(const ParamSet& p, int index) {
    switch (index) {
        case 0: return p.n_subjects;
        case 1: return p.n_items;
        case 2: return p.sd_subjects;
        case 3: return p.sd_items;
        case 4: return p.p_refix;
        case 5: return p.p_regr;
        case 6: return p.p_reread;
        case 7: return p.mean_ffd;
        case 8: return p.mean_gazediff;
        case 9: return p.mean_gopastdiff;
        case 10: return p.mean_tvtdiff;
        case 11: return p.sd_ffd;
        case 12: return p.sd_gazediff;
        case 13: return p.sd_gopastdiff;
        case 14: return p.sd_tvtdiff;
    }
    throw std::out_of_range("get_param: bad index");
}

void set_param(ParamSet& p, int index, double value) {
    switch (index) {
        case 0: p.n_subjects = static_cast<int>(value); return;
        case 1: p.n_items = static_cast<int>(value); return;
        case 2: p.sd_subjects = value; return;
        case 3: p.sd_items = value; return;
        case 4: p.p_refix = value; return;
        case 5: p.p_regr = value; return;
        case 6: p.p_reread = value; return;
        case 7: p.mean_ffd = value; return;
        case 8: p.mean_gazediff = value; return;
        case 9: p.mean_gopastdiff = value; return;
        case 10: p.mean_tvtdiff = value; return;
        case 11: p.sd_ffd = value; return;
        case 12: p.sd_gazediff = value; return;
        case 13: p.sd_gopastdiff = value; return;
        case 14: p.sd_tvtdiff = value; return;
    }
    throw std::out_of_range("set_param: bad index");
}

ParamRange default_range() {
    ParamRange r;
    r.lower.n_subjects = 20;
    r.lower.n_items = 20;
    r.lower.sd_subjects = 1.10;
    r.lower.sd_items = 1.07;
    r.lower.p_refix = 0.14;
    r.lower.p_regr = 0.07;
    r.lower.p_reread = 0.19;
    r.lower.mean_ffd = 219.72;
    r.lower.mean_gazediff = 197.09;
    r.lower.mean_gopastdiff = 312.02;
    r.lower.mean_tvtdiff = 242.26;
    r.lower.sd_ffd = 1.31;
    r.lower.sd_gazediff = 1.40;
    r.lower.sd_gopastdiff = 1.69;
    r.lower.sd_tvtdiff = 1.55;

    r.upper.n_subjects = 50;
    r.upper.n_items = 50;
    r.upper.sd_subjects = 1.16;
    r.upper.sd_items = 1.08;
    r.upper.p_refix = 0.32;
    r.upper.p_regr = 0.43;
    r.upper.p_reread = 0.41;
    r.upper.mean_ffd = 232.35;
    r.upper.mean_gazediff = 204.27;
    r.upper.mean_gopastdiff = 558.27;
    r.upper.mean_tvtdiff = 291.40;
    r.upper.sd_ffd = 1.43;
    r.upper.sd_gazediff = 1.69;
    r.upper.sd_gopastdiff = 1.84;
    r.upper.sd_tvtdiff = 1.87;
    return r;
}

ParamSet endpoint(Endpoint which) {
    const ParamRange r = default_range();
    ParamSet p = (which == Endpoint::AngeleLike) ? r.lower : r.upper;
    p.n_subjects = 40;
    p.n_items = 40;
    return p;
}

ParamSet sample_paramset(const ParamRange& range, RngStream& rng) {
    range.validate();
    ParamSet p;
    for (int i = 0; i < kNumParams; ++i) {
        const double lo = get_param(range.lower, i);
        const double hi = get_param(range.upper, i);
        if (kFields[i].integer) {
            set_param(p, i, static_cast<double>(rng.uniform_int(static_cast<long>(lo),
                                                                static_cast<long>(hi))));
        } else {
            set_param(p, i, rng.uniform(lo, hi));
        }
    }
    p.validate();
    return p;
}

std::string format_range(const ParamRange& range) {
    std::string out;
    char buf[128];
    for (int i = 0; i < kNumParams; ++i) {
        std::snprintf(buf, sizeof buf, "%s = %.10g %.10g\n", kFields[i].name,
                      get_param(range.lower, i), get_param(range.upper, i));
        out += buf;
    }
    return out;
}

ParamRange parse_range(std::istream& in) {
    ParamRange range = default_range();
    std::set<int> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;  // blank line
        const int idx = param_index(key);
        if (idx < 0) {
            throw ParseError("range file line " + std::to_string(lineno) + ": unknown key '" +
                             key + "'");
        }
        if (!seen.insert(idx).second) {
            throw ParseError("range file line " + std::to_string(lineno) + ": duplicate key '" +
                             key + "'");
        }
        std::string eq;
        ls >> eq;
        double lo, hi;
        if (eq != "=") {
            // allow `key lo hi` without the equals sign
            std::istringstream vals(eq);
            if (!(vals >> lo) || !(ls >> hi)) {
                throw ParseError("range file line " + std::to_string(lineno) +
                                 ": expected two numeric bounds");
            }
        } else if (!(ls >> lo >> hi)) {
            throw ParseError("range file line " + std::to_string(lineno) +
                             ": expected two numeric bounds");
        }
        if (kFields[idx].integer &&
            (lo != std::floor(lo) || hi != std::floor(hi))) {
            throw ParseError("range file line " + std::to_string(lineno) + ": '" + key +
                             "' must have integer bounds");
        }
        set_param(range.lower, idx, lo);
        set_param(range.upper, idx, hi);
    }
    range.validate();
    return range;
}

ParamRange load_range_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open range file: " + path);
    return parse_range(in);
}

void save_range_file(const ParamRange& range, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write range file: " + path);
    out << format_range(range);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace etsim
