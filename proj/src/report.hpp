#pragma once

#include <string>
#include <vector>

#include "mcrunner.hpp"

namespace etsim {

struct TableRow {
    std::string label;      // criterion token, measure name, or stratum label
    double delta_ms = 0.0;
    RateCI rate;
};

// False-positive table: one row per configured criterion, delta = 0,
// direction-free decisions.
std::vector<TableRow> fp_table(const McAggregate& agg);

enum class CurveGrouping { Criterion, Strict, Measure, NBucket };

// Long-format detection-rate series; power semantics (direction required),
// including the delta = 0 endpoint.
std::vector<TableRow> power_curves(const McAggregate& agg, CurveGrouping grouping);

struct HistRow {
    double delta_ms = 0.0;
    bool wrong_direction = false;
    double bin_low = 0.0;
    double bin_high = 0.0;
    int64_t count = 0;
    bool significant = false;  // bin lies at or below alpha
};
std::vector<HistRow> pval_histogram(const McAggregate& agg, int delta_idx);

// Writes summary.json, curves.csv, per_measure.csv, type_s.csv, type_m.csv,
// strata.csv, pval_hist.csv, diagnostics.json and aggregate.json into dir;
// optionally gnuplot script stubs referencing the CSVs.
void write_results(const McAggregate& agg, const RunConfig& cfg, double elapsed_seconds,
                   int workers_used, const std::string& dir, bool gnuplot_stubs);

// Re-renders every output from dir/aggregate.json.
void render_from_dir(const std::string& dir, bool gnuplot_stubs);

}  // namespace etsim
