#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "params.hpp"
#include "rng.hpp"

namespace etsim {

enum class Measure : int { FFD = 0, GZD = 1, GPD = 2, TVT = 3 };
inline constexpr std::array<Measure, 4> kMeasures = {Measure::FFD, Measure::GZD, Measure::GPD,
                                                     Measure::TVT};
const char* measure_name(Measure m);            // "ffd" ...
int measure_from_name(std::string_view name);   // -1 when unknown

enum class Condition : uint8_t { A = 0, B = 1 };  // A = baseline, B = treatment

struct TrialRecord {
    int subject_id = 0;
    int item_id = 0;
    Condition condition = Condition::A;
    double ffd = 0.0;
    double gzd = 0.0;
    double gpd = 0.0;
    double tvt = 0.0;
    bool refixated = false;
    bool regressed = false;
    bool reread = false;

    double measure(Measure m) const {
        switch (m) {
            case Measure::FFD: return ffd;
            case Measure::GZD: return gzd;
            case Measure::GPD: return gpd;
            default: return tvt;
        }
    }
};

struct Dataset {
    ParamSet params{};
    bool has_params = false;
    double true_effect_ms = 0.0;
    int n_subjects = 0;
    int n_items = 0;
    std::vector<TrialRecord> trials;  // subject-major order when generated
};

// Two-list Latin square: condition alternates with (subject + item) parity.
Condition latin_square_condition(int subject_id, int item_id);

// One complete subjects x items dataset with no condition effect.
Dataset generate_base(const ParamSet& params, RngStream& rng);

// Log-scale shifts that move each measure's arithmetic mean by delta_ms.
struct EffectCalibration {
    double delta_ms = 0.0;
    std::array<double, 4> mu{};    // analytic baseline means (ms)
    std::array<double, 4> beta{};  // log-scale shifts, ln(1 + delta/mu)
};
EffectCalibration calibrate_effect(const ParamSet& params, double delta_ms);

// Copy of base with every condition-B measure scaled by exp(beta).
// Requires base.true_effect_ms == 0.
Dataset apply_effect(const Dataset& base, const EffectCalibration& cal);

// The tested effect sizes in ms: 0, 2.5, 5, 10, 20, 40, 80.
std::vector<double> effect_size_grid();

// CSV with header subject,item,condition,ffd,gzd,gpd,tvt,refixated,regressed,reread.
void save_csv(const Dataset& data, std::ostream& out);
Dataset load_csv(std::istream& in);
void save_csv_file(const Dataset& data, const std::string& path);
Dataset load_csv_file(const std::string& path);

// Mean Pearson correlations (raw ms scale) of generated data across
// n_datasets replicates, row-major over FFD,GZD,GPD,TVT.
struct CorrMatrix {
    std::array<double, 16> m{};
    double at(Measure a, Measure b) const {
        return m[static_cast<int>(a) * 4 + static_cast<int>(b)];
    }
};
CorrMatrix mean_measure_correlations(const ParamSet& params, int n_datasets, uint64_t seed);

// Correlations the generator is expected to reproduce for each endpoint.
CorrMatrix endpoint_reference_correlations(Endpoint which);

}  // namespace etsim
