#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "rng.hpp"

namespace etsim {

// One point in the generative-parameter space. Geometric means are in
// milliseconds; geometric SDs are dimensionless multipliers.
struct ParamSet {
    int n_subjects = 0;
    int n_items = 0;
    double sd_subjects = 1.0;  // geometric SD of subject intercepts
    double sd_items = 1.0;     // geometric SD of item intercepts
    double p_refix = 0.0;      // first-pass refixation probability
    double p_regr = 0.0;       // first-pass regression probability
    double p_reread = 0.0;     // post-first-pass rereading probability
    double mean_ffd = 0.0;
    double mean_gazediff = 0.0;
    double mean_gopastdiff = 0.0;
    double mean_tvtdiff = 0.0;
    double sd_ffd = 1.0;
    double sd_gazediff = 1.0;
    double sd_gopastdiff = 1.0;
    double sd_tvtdiff = 1.0;

    void validate() const;  // throws std::invalid_argument
};

struct ParamRange {
    ParamSet lower;
    ParamSet upper;

    void validate() const;  // element-wise lower <= upper plus bound validity
};

inline constexpr int kNumParams = 15;

// Field table, in sampling order. Names use the dotted convention
// (n.subjects, p.refix, ...).
const char* param_name(int index);
int param_index(std::string_view name);  // -1 when unknown
bool param_is_integer(int index);
double get_param(const ParamSet& p, int index);
void set_param(ParamSet& p, int index, double value);

// Bounds of the default parameter hyperbox.
ParamRange default_range();

enum class Endpoint { AngeleLike, MetznerLike };

// Corner of the default hyperbox matching one of the two reference
// experiments; n_subjects = n_items = 40 for validation runs.
ParamSet endpoint(Endpoint which);

// Each field drawn independently and uniformly from [lower, upper];
// count fields on the inclusive integer range.
ParamSet sample_paramset(const ParamRange& range, RngStream& rng);

// Flat key-value text form: one `name = lower upper` line per parameter.
// Parsing starts from default_range(); unknown keys are rejected.
std::string format_range(const ParamRange& range);
ParamRange parse_range(std::istream& in);
ParamRange load_range_file(const std::string& path);
void save_range_file(const ParamRange& range, const std::string& path);

}  // namespace etsim
