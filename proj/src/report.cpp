#include "report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "errors.hpp"

namespace etsim {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmtg(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

ordered_json rate_json(const RateCI& r) {
    ordered_json j;
    if (r.defined) {
        j["rate"] = r.rate;
        j["ci_low"] = r.ci_low;
        j["ci_high"] = r.ci_high;
    } else {
        j["rate"] = nullptr;
        j["ci_low"] = nullptr;
        j["ci_high"] = nullptr;
    }
    j["count"] = r.count;
    j["n"] = r.n;
    return j;
}

void write_rate_csv_row(std::ostream& out, const std::string& label, double delta,
                        const RateCI& r) {
    out << label << ',' << fmtg(delta) << ',';
    if (r.defined) {
        out << fmt6(r.rate) << ',' << fmt6(r.ci_low) << ',' << fmt6(r.ci_high);
    } else {
        out << "NA,NA,NA";
    }
    out << '\n';
}

constexpr const char* kBucketNames[3] = {"low", "mid", "high"};

}  // namespace

std::vector<TableRow> fp_table(const McAggregate& agg) {
    std::vector<TableRow> rows;
    const int d0 = agg.delta_index(0.0);
    if (d0 < 0) return rows;
    for (int c = 0; c < agg.n_criteria(); ++c) {
        TableRow row;
        row.label = agg.criteria[c];
        row.delta_ms = 0.0;
        row.rate = detection_rate(agg, c, d0, /*direction_required=*/false);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<TableRow> power_curves(const McAggregate& agg, CurveGrouping grouping) {
    std::vector<TableRow> rows;
    switch (grouping) {
        case CurveGrouping::Criterion:
        case CurveGrouping::Strict:
            for (int c = 0; c < agg.n_criteria(); ++c) {
                const CriterionKind kind = criterion_from_token(agg.criteria[c]);
                const bool strict = kind == CriterionKind::AllUncorrected ||
                                    kind == CriterionKind::AllBonferroni;
                if ((grouping == CurveGrouping::Strict) != strict) continue;
                for (int d = 0; d < agg.n_deltas(); ++d) {
                    rows.push_back({agg.criteria[c], agg.deltas[d],
                                    detection_rate(agg, c, d, /*direction_required=*/true)});
                }
            }
            break;
        case CurveGrouping::Measure:
            for (Measure m : kMeasures) {
                for (int d = 0; d < agg.n_deltas(); ++d) {
                    rows.push_back({measure_name(m), agg.deltas[d],
                                    per_measure_power(agg, m, d)});
                }
            }
            break;
        case CurveGrouping::NBucket:
            for (int b = 0; b < 3; ++b) {
                for (int d = 0; d < agg.n_deltas(); ++d) {
                    const size_t bi = static_cast<size_t>(b) * agg.n_deltas() + d;
                    rows.push_back({kBucketNames[b], agg.deltas[d],
                                    make_rate(agg.bucket_detect[bi], agg.bucket_valid[bi])});
                }
            }
            break;
    }
    return rows;
}

std::vector<HistRow> pval_histogram(const McAggregate& agg, int delta_idx) {
    std::vector<HistRow> rows;
    constexpr int kBins = 20;
    for (int dir = 0; dir < 2; ++dir) {
        for (int b = 0; b < kBins; ++b) {
            HistRow r;
            r.delta_ms = agg.deltas[static_cast<size_t>(delta_idx)];
            r.wrong_direction = dir == 1;
            r.bin_low = b / static_cast<double>(kBins);
            r.bin_high = (b + 1) / static_cast<double>(kBins);
            r.count = agg.pval_hist[(static_cast<size_t>(delta_idx) * 2 + dir) * kBins + b];
            r.significant = r.bin_high <= agg.alpha + 1e-12;
            rows.push_back(r);
        }
    }
    return rows;
}

namespace {

ordered_json aggregate_to_json(const McAggregate& agg, const RunConfig& cfg,
                               double elapsed_seconds, int workers_used) {
    ordered_json j;
    j["schema_version"] = 1;
    ordered_json c;
    c["iterations"] = cfg.iterations;
    c["seed"] = cfg.master_seed;
    c["alpha"] = cfg.alpha;
    c["k"] = cfg.k;
    c["coupled_noise"] = cfg.coupled_noise;
    c["effects_ms"] = cfg.effect_grid;
    c["criteria"] = cfg.criteria;
    ordered_json range;
    for (int i = 0; i < kNumParams; ++i) {
        range[param_name(i)] = {get_param(cfg.range.lower, i), get_param(cfg.range.upper, i)};
    }
    c["range"] = range;
    j["config"] = c;

    ordered_json k;
    k["iterations"] = agg.iterations;
    k["crit_detect_free"] = agg.crit_detect_free;
    k["crit_detect_dir"] = agg.crit_detect_dir;
    k["delta_valid"] = agg.delta_valid;
    k["meas_valid"] = agg.meas_valid;
    k["meas_sig_correct"] = agg.meas_sig_correct;
    k["meas_sig_wrong"] = agg.meas_sig_wrong;
    k["meas_effect_sum"] = agg.meas_effect_sum;
    k["bucket_valid"] = agg.bucket_valid;
    k["bucket_detect"] = agg.bucket_detect;
    k["bucket_sig_correct"] = agg.bucket_sig_correct;
    k["bucket_effect_sum"] = agg.bucket_effect_sum;
    k["pval_hist"] = agg.pval_hist;
    k["strata_valid"] = agg.strata_valid;
    k["strata_detect"] = agg.strata_detect;
    k["joint_valid"] = agg.joint_valid;
    k["joint_detect"] = agg.joint_detect;
    j["counts"] = k;

    ordered_json d;
    d["total_fits"] = agg.total_fits;
    d["fit_failures"] = agg.fit_failures;
    d["nonconverged"] = agg.nonconverged;
    d["loglik_order_violations"] = agg.ll_violations;
    d["invalid_tests"] = agg.invalid_tests;
    d["elapsed_seconds"] = elapsed_seconds;
    d["workers"] = workers_used;
    j["diagnostics"] = d;
    return j;
}

void aggregate_from_json(const ordered_json& j, McAggregate& agg, RunConfig& cfg,
                         double& elapsed_seconds, int& workers_used) {
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
        throw ParseError("aggregate.json: unsupported schema version");
    }
    const auto& c = j.at("config");
    cfg.iterations = c.at("iterations").get<long>();
    cfg.master_seed = c.at("seed").get<uint64_t>();
    cfg.alpha = c.at("alpha").get<double>();
    cfg.k = c.at("k").get<int>();
    cfg.coupled_noise = c.at("coupled_noise").get<bool>();
    cfg.effect_grid = c.at("effects_ms").get<std::vector<double>>();
    cfg.criteria = c.at("criteria").get<std::vector<std::string>>();
    for (const auto& [key, bounds] : c.at("range").items()) {
        const int idx = param_index(key);
        if (idx < 0) throw ParseError("aggregate.json: unknown range key " + key);
        set_param(cfg.range.lower, idx, bounds.at(0).get<double>());
        set_param(cfg.range.upper, idx, bounds.at(1).get<double>());
    }

    agg = make_aggregate(cfg);
    const auto& k = j.at("counts");
    agg.iterations = k.at("iterations").get<long>();
    auto load = [&k](const char* key, auto& dst) {
        auto src = k.at(key).get<std::decay_t<decltype(dst)>>();
        if (src.size() != dst.size()) {
            throw ParseError(std::string("aggregate.json: size mismatch for ") + key);
        }
        dst = std::move(src);
    };
    load("crit_detect_free", agg.crit_detect_free);
    load("crit_detect_dir", agg.crit_detect_dir);
    load("delta_valid", agg.delta_valid);
    load("meas_valid", agg.meas_valid);
    load("meas_sig_correct", agg.meas_sig_correct);
    load("meas_sig_wrong", agg.meas_sig_wrong);
    load("meas_effect_sum", agg.meas_effect_sum);
    load("bucket_valid", agg.bucket_valid);
    load("bucket_detect", agg.bucket_detect);
    load("bucket_sig_correct", agg.bucket_sig_correct);
    load("bucket_effect_sum", agg.bucket_effect_sum);
    load("pval_hist", agg.pval_hist);
    load("strata_valid", agg.strata_valid);
    load("strata_detect", agg.strata_detect);
    agg.joint_valid = k.at("joint_valid").get<std::array<int64_t, 2>>();
    agg.joint_detect = k.at("joint_detect").get<std::array<int64_t, 2>>();

    const auto& d = j.at("diagnostics");
    agg.total_fits = d.at("total_fits").get<int64_t>();
    agg.fit_failures = d.at("fit_failures").get<int64_t>();
    agg.nonconverged = d.at("nonconverged").get<int64_t>();
    agg.ll_violations = d.at("loglik_order_violations").get<int64_t>();
    agg.invalid_tests = d.at("invalid_tests").get<int64_t>();
    elapsed_seconds = d.at("elapsed_seconds").get<double>();
    workers_used = d.at("workers").get<int>();
}

void write_summary_json(const McAggregate& agg, const RunConfig& cfg, const std::string& path) {
    ordered_json j;
    j["schema_version"] = 1;
    j["iterations"] = cfg.iterations;
    j["seed"] = cfg.master_seed;
    j["alpha"] = cfg.alpha;
    j["k"] = cfg.k;
    j["coupled_noise"] = cfg.coupled_noise;
    j["effects_ms"] = cfg.effect_grid;
    j["criteria"] = cfg.criteria;

    ordered_json fps;
    for (const auto& row : fp_table(agg)) fps[row.label] = rate_json(row.rate);
    j["false_positives"] = fps;

    ordered_json det;
    const int nd = agg.n_deltas();
    for (int c = 0; c < agg.n_criteria(); ++c) {
        ordered_json series = ordered_json::array();
        for (int d = 0; d < nd; ++d) {
            ordered_json pt = rate_json(detection_rate(agg, c, d, true));
            pt["delta_ms"] = agg.deltas[d];
            series.push_back(std::move(pt));
        }
        det[agg.criteria[c]] = std::move(series);
    }
    j["detection_power"] = det;

    ordered_json per_measure;
    for (Measure m : kMeasures) {
        ordered_json series = ordered_json::array();
        for (int d = 0; d < nd; ++d) {
            ordered_json pt = rate_json(per_measure_power(agg, m, d));
            pt["delta_ms"] = agg.deltas[d];
            series.push_back(std::move(pt));
        }
        per_measure[measure_name(m)] = std::move(series);
    }
    j["per_measure_power"] = per_measure;

    ordered_json ts = ordered_json::array();
    for (int d = 0; d < nd; ++d) {
        ordered_json pt = rate_json(type_s_rate(agg, d));
        pt["delta_ms"] = agg.deltas[d];
        ts.push_back(std::move(pt));
    }
    j["type_s"] = ts;

    const StratumRates joint = joint_stratum_fp(agg);
    ordered_json js;
    js["low"] = rate_json(joint.low);
    js["high"] = rate_json(joint.high);
    j["joint_strata"] = js;

    ordered_json conv;
    conv["total_fits"] = agg.total_fits;
    conv["fit_failures"] = agg.fit_failures;
    conv["nonconverged"] = agg.nonconverged;
    conv["loglik_order_violations"] = agg.ll_violations;
    conv["invalid_tests"] = agg.invalid_tests;
    j["convergence"] = conv;

    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_curves_csv(const McAggregate& agg, const std::string& path) {
    auto out = open_out(path);
    out << "criterion,delta_ms,rate,ci_low,ci_high\n";
    for (CurveGrouping g : {CurveGrouping::Criterion, CurveGrouping::Strict}) {
        for (const auto& row : power_curves(agg, g)) {
            write_rate_csv_row(out, row.label, row.delta_ms, row.rate);
        }
    }
}

void write_per_measure_csv(const McAggregate& agg, const std::string& path) {
    auto out = open_out(path);
    out << "measure,delta_ms,rate,ci_low,ci_high\n";
    for (const auto& row : power_curves(agg, CurveGrouping::Measure)) {
        write_rate_csv_row(out, row.label, row.delta_ms, row.rate);
    }
    for (const auto& row : power_curves(agg, CurveGrouping::NBucket)) {
        write_rate_csv_row(out, std::string("n_") + row.label, row.delta_ms, row.rate);
    }
}

void write_type_s_csv(const McAggregate& agg, const std::string& path) {
    auto out = open_out(path);
    out << "delta_ms,n_significant,n_wrong_direction,rate,ci_low,ci_high\n";
    for (int d = 0; d < agg.n_deltas(); ++d) {
        const RateCI r = type_s_rate(agg, d);
        out << fmtg(agg.deltas[d]) << ',' << r.n << ',' << r.count << ',';
        if (r.defined) {
            out << fmt6(r.rate) << ',' << fmt6(r.ci_low) << ',' << fmt6(r.ci_high);
        } else {
            out << "NA,NA,NA";
        }
        out << '\n';
    }
}

void write_type_m_csv(const McAggregate& agg, const std::string& path) {
    auto out = open_out(path);
    out << "measure,delta_ms,n_bucket,n_detected,mean_detected_ms\n";
    for (Measure m : kMeasures) {
        for (int d = 0; d < agg.n_deltas(); ++d) {
            for (int b = -1; b < 3; ++b) {
                const TypeMPoint p = type_m_mean(agg, m, d, b);
                out << measure_name(m) << ',' << fmtg(agg.deltas[d]) << ','
                    << (b < 0 ? "all" : kBucketNames[b]) << ',' << p.count << ','
                    << (p.defined ? fmt6(p.mean_detected_ms) : "NA") << '\n';
            }
        }
    }
}

void write_strata_csv(const McAggregate& agg, const std::string& path) {
    auto out = open_out(path);
    out << "parameter,stratum,n,detections,rate,ci_low,ci_high\n";
    auto row = [&out](const std::string& name, const char* side, const RateCI& r) {
        out << name << ',' << side << ',' << r.n << ',' << r.count << ',';
        if (r.defined) {
            out << fmt6(r.rate) << ',' << fmt6(r.ci_low) << ',' << fmt6(r.ci_high);
        } else {
            out << "NA,NA,NA";
        }
        out << '\n';
    };
    for (int p = 0; p < kNumParams; ++p) {
        const StratumRates s = stratified_fp(agg, p);
        row(param_name(p), "low", s.low);
        row(param_name(p), "high", s.high);
    }
    const StratumRates joint = joint_stratum_fp(agg);
    row("joint", "low", joint.low);
    row("joint", "high", joint.high);
}

void write_pval_hist_csv(const McAggregate& agg, const std::string& path) {
    auto out = open_out(path);
    out << "delta_ms,direction,bin_low,bin_high,count,significant\n";
    for (int d = 0; d < agg.n_deltas(); ++d) {
        for (const auto& r : pval_histogram(agg, d)) {
            out << fmtg(r.delta_ms) << ',' << (r.wrong_direction ? "wrong" : "correct") << ','
                << fmt6(r.bin_low) << ',' << fmt6(r.bin_high) << ',' << r.count << ','
                << (r.significant ? 1 : 0) << '\n';
        }
    }
}

void write_diagnostics_json(const McAggregate& agg, double elapsed_seconds, int workers_used,
                            const std::string& path) {
    ordered_json j;
    j["total_fits"] = agg.total_fits;
    j["fit_failures"] = agg.fit_failures;
    j["nonconverged"] = agg.nonconverged;
    j["loglik_order_violations"] = agg.ll_violations;
    j["invalid_tests"] = agg.invalid_tests;
    j["iterations"] = agg.iterations;
    j["elapsed_seconds"] = elapsed_seconds;
    j["workers"] = workers_used;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_gnuplot_stubs(const std::string& dir) {
    auto out = open_out(dir + "/plots.gp");
    out << "# gnuplot stubs for the result CSVs in this directory\n"
           "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set xlabel 'true effect size (ms)'\n"
           "set ylabel 'detection rate'\n"
           "set yrange [0:1]\n"
           "\n"
           "set title 'power by criterion'\n"
           "plot for [c in 'one two bonferroni holm'] \\\n"
           "  '< grep -E \"^'.c.',|^criterion\" curves.csv' using 2:3 with linespoints title c\n"
           "pause -1\n"
           "\n"
           "set title 'power by measure'\n"
           "plot for [m in 'ffd gzd gpd tvt'] \\\n"
           "  '< grep -E \"^'.m.',|^measure\" per_measure.csv' using 2:3 with linespoints title m\n"
           "pause -1\n";
}

}  // namespace

void write_results(const McAggregate& agg, const RunConfig& cfg, double elapsed_seconds,
                   int workers_used, const std::string& dir, bool gnuplot_stubs) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create results directory " + dir + ": " + ec.message());

    write_summary_json(agg, cfg, dir + "/summary.json");
    write_curves_csv(agg, dir + "/curves.csv");
    write_per_measure_csv(agg, dir + "/per_measure.csv");
    write_type_s_csv(agg, dir + "/type_s.csv");
    write_type_m_csv(agg, dir + "/type_m.csv");
    write_strata_csv(agg, dir + "/strata.csv");
    write_pval_hist_csv(agg, dir + "/pval_hist.csv");
    write_diagnostics_json(agg, elapsed_seconds, workers_used, dir + "/diagnostics.json");
    {
        auto out = open_out(dir + "/aggregate.json");
        out << aggregate_to_json(agg, cfg, elapsed_seconds, workers_used).dump(2) << '\n';
    }
    if (gnuplot_stubs) write_gnuplot_stubs(dir);
}

void render_from_dir(const std::string& dir, bool gnuplot_stubs) {
    std::ifstream in(dir + "/aggregate.json");
    if (!in) throw IoError("cannot open " + dir + "/aggregate.json");
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(std::string("aggregate.json: ") + e.what());
    }
    McAggregate agg;
    RunConfig cfg;
    double elapsed = 0.0;
    int workers = 1;
    aggregate_from_json(j, agg, cfg, elapsed, workers);
    write_results(agg, cfg, elapsed, workers, dir, gnuplot_stubs);
}

}  // namespace etsim
