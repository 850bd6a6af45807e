#include "shockpanel/cli.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include <json.hpp>

#include "shockpanel/dlm.hpp"
#include "shockpanel/errors.hpp"
#include "shockpanel/panel.hpp"
#include "shockpanel/shocks.hpp"
#include "shockpanel/smoother.hpp"
#include "shockpanel/synth.hpp"

namespace shockpanel::cli {

namespace {

std::string format_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        long long fixed = std::strtoll(env, &end, 10);
        if (end != env) now = static_cast<std::time_t>(fixed);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Collects inputs/outputs of one subcommand run and writes the manifest.
class RunContext {
  public:
    RunContext(std::string command, std::vector<std::string> argv)
        : command_(std::move(command)), argv_(std::move(argv)) {}

    void note_input(const std::filesystem::path& path) { inputs_.push_back(path); }
    void note_output(const std::filesystem::path& path) { outputs_.push_back(path); }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    void set_config_hash(const std::string& hash) { config_hash_ = hash; }

    void write_manifest(const std::filesystem::path& path) {
        nlohmann::json j;
        j["command"] = command_;
        j["argv"] = argv_;
        j["tool_version"] = kToolVersion;
        j["timestamp"] = utc_timestamp();
        if (seed_) j["seed"] = *seed_;
        if (!config_hash_.empty()) j["config_hash"] = config_hash_;
        j["inputs"] = nlohmann::json::object();
        for (const auto& p : inputs_) j["inputs"][p.string()] = hash_file(p);
        j["outputs"] = nlohmann::json::array();
        for (const auto& p : outputs_)
            j["outputs"].push_back({{"path", p.string()}, {"hash", hash_file(p)}});
        std::ofstream out(path);
        if (!out) throw Error(Errc::ParseError, "cannot write " + path.string());
        out << j.dump(2) << '\n';
    }

  private:
    std::string command_;
    std::vector<std::string> argv_;
    std::vector<std::filesystem::path> inputs_, outputs_;
    std::optional<std::uint64_t> seed_;
    std::string config_hash_;
};

struct SmootherCsv {
    std::vector<SmootherResult> results;  // ordered like panel units
};

void write_smoother_csv(const PanelDataset& panel, const std::string& series,
                        const std::vector<SmootherResult>& results,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path.string());
    out << "unit,year,value,fitted,se,bandwidth\n";
    for (std::size_t u = 0; u < results.size(); ++u) {
        SeriesView sv = panel.series(static_cast<int>(u), series);
        const auto& r = results[u];
        for (std::size_t i = 0; i < r.years.size(); ++i) {
            out << r.unit << ',' << r.years[i] << ',';
            if (!sv.is_missing(i)) out << format_num(sv.values[i]);
            out << ',';
            if (!std::isnan(r.fitted[i])) out << format_num(r.fitted[i]);
            out << ',';
            if (!std::isnan(r.se[i])) out << format_num(r.se[i]);
            out << ',';
            if (!std::isnan(r.bandwidth_used[i])) out << format_num(r.bandwidth_used[i]);
            out << '\n';
        }
    }
}

std::vector<SmootherResult> load_smoother_csv(const PanelDataset& panel,
                                              const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("unit,year,value,fitted,se,bandwidth", 0) != 0)
        throw Error(Errc::ParseError, path.string() + ": not a smoother CSV");

    std::map<std::string, std::map<int, std::array<double, 3>>> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string unit, year_s, value_s, fitted_s, se_s, bw_s;
        std::getline(ss, unit, ',');
        std::getline(ss, year_s, ',');
        std::getline(ss, value_s, ',');
        std::getline(ss, fitted_s, ',');
        std::getline(ss, se_s, ',');
        std::getline(ss, bw_s, ',');
        auto parse = [&](const std::string& f) {
            if (f.empty()) return std::numeric_limits<double>::quiet_NaN();
            char* end = nullptr;
            double v = std::strtod(f.c_str(), &end);
            if (end != f.c_str() + f.size())
                throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno));
            return v;
        };
        cells[unit][std::stoi(year_s)] = {parse(fitted_s), parse(se_s), parse(bw_s)};
    }

    std::vector<SmootherResult> results;
    for (std::size_t u = 0; u < panel.units().size(); ++u) {
        const std::string& unit = panel.units()[u];
        auto it = cells.find(unit);
        if (it == cells.end())
            throw Error(Errc::AlignmentError, "no smoother rows for unit " + unit);
        SmootherResult r;
        r.unit = unit;
        int ui = static_cast<int>(u);
        for (int y = panel.first_year(ui); y <= panel.last_year(ui); ++y) {
            auto cell = it->second.find(y);
            if (cell == it->second.end())
                throw Error(Errc::AlignmentError,
                            "unit " + unit + " year " + std::to_string(y) + " missing from smoother CSV");
            r.years.push_back(y);
            r.fitted.push_back(cell->second[0]);
            r.se.push_back(cell->second[1]);
            r.bandwidth_used.push_back(cell->second[2]);
            if (!std::isnan(cell->second[2])) r.bandwidth = cell->second[2];
        }
        results.push_back(std::move(r));
    }
    return results;
}

std::vector<std::string> resolve_candidates(const PanelDataset& panel, const std::string& arg) {
    if (arg == "auto") {
        std::vector<std::string> out;
        for (const auto& name : panel.series_names())
            if (name.rfind("cov_", 0) == 0) out.push_back(name);
        return out;
    }
    std::vector<std::string> out;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

/// Options shared by estimate and robustness.
struct EstimateArgs {
    std::string in;
    std::string outcome = "current_expenditures";
    std::string base = "ipgt";
    double k = 3.0;
    int lags = 5;
    int leads = 2;
    bool no_interactions = false;
    bool no_smoother_block = false;
    bool no_unit_trends = false;
    bool per_block = false;
    bool exclude_outliers = false;
    std::string candidates = "auto";
    double bandwidth = 0.0;       // 0: rule of thumb
    double min_bandwidth = 1.0;
    double fixed_lambda = -1.0;   // < 0: plugin rule
    int cv_folds = 0;             // > 0: cross-validated lambda
};

void add_estimate_options(CLI::App* cmd, EstimateArgs& args) {
    cmd->add_option("--in", args.in, "panel CSV")->required();
    cmd->add_option("--outcome", args.outcome, "outcome series");
    cmd->add_option("--series", args.base, "base revenue series");
    cmd->add_option("--k", args.k, "shock threshold multiplier");
    cmd->add_option("--lags", args.lags, "post-treatment periods");
    cmd->add_option("--leads", args.leads, "anticipation periods");
    cmd->add_flag("--no-interactions", args.no_interactions, "pooled specification");
    cmd->add_flag("--no-smoother-block", args.no_smoother_block, "drop the trend block");
    cmd->add_flag("--no-unit-trends", args.no_unit_trends, "no per-unit trend candidates");
    cmd->add_flag("--per-block", args.per_block, "one selection per treatment block");
    cmd->add_flag("--exclude-outliers", args.exclude_outliers, "apply the lowest-decile mask");
    cmd->add_option("--candidates", args.candidates, "comma list of candidate series, or 'auto'");
    cmd->add_option("--bandwidth", args.bandwidth, "fixed smoother bandwidth (0 = rule of thumb)");
    cmd->add_option("--min-bandwidth", args.min_bandwidth, "bandwidth floor");
    cmd->add_option("--lambda", args.fixed_lambda, "fixed LASSO penalty level");
    cmd->add_option("--cv", args.cv_folds, "cross-validate lambda with this many folds");
}

DlmSpec make_spec(const EstimateArgs& args, const PanelDataset& panel) {
    DlmSpec spec;
    spec.outcome = args.outcome;
    spec.base = args.base;
    spec.k = args.k;
    spec.lags = args.lags;
    spec.leads = args.leads;
    spec.interactions = !args.no_interactions;
    spec.smoother_block = !args.no_smoother_block;
    spec.unit_trends = !args.no_unit_trends;
    spec.per_block_selection = args.per_block;
    spec.candidates = resolve_candidates(panel, args.candidates);
    if (args.fixed_lambda >= 0.0)
        spec.lambda_rule = FixedLambda{args.fixed_lambda};
    else if (args.cv_folds > 0)
        spec.lambda_rule = CvLambda{args.cv_folds};
    return spec;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
}

std::string tau_header(int tau) {
    if (tau < 0) return "t-" + std::to_string(-tau);
    if (tau > 0) return "t+" + std::to_string(tau);
    return "t";
}

void report_one(const std::filesystem::path& est_path, const std::filesystem::path& out_dir,
                RunContext& ctx) {
    ctx.note_input(est_path);
    nlohmann::json j = load_json(est_path);
    DlmOutput out = dlm_output_from_json(j);

    std::string stem = out.outcome + "_" + out.variant;
    std::filesystem::path fig_path = out_dir / ("fig_" + stem + ".csv");
    {
        std::ofstream fig(fig_path);
        if (!fig) throw Error(Errc::ParseError, "cannot write " + fig_path.string());
        fig << "tau,regime,estimate,ci_lo,ci_hi\n";
        for (const auto& r : out.rows)
            fig << r.tau << ',' << regime_name(r.regime) << ',' << format_num(r.estimate) << ','
                << format_num(r.ci_lo) << ',' << format_num(r.ci_hi) << '\n';
    }
    ctx.note_output(fig_path);

    if (out.pairwise.empty()) return;
    std::filesystem::path p_path = out_dir / ("pvalues_" + stem + ".csv");
    std::ofstream pv(p_path);
    if (!pv) throw Error(Errc::ParseError, "cannot write " + p_path.string());
    pv << "test";
    for (int tau = -out.leads; tau <= out.lags; ++tau) pv << ',' << tau_header(tau);
    pv << ",jointF_lags1_4\n";
    for (Pairing pairing : {Pairing::PosVsReg, Pairing::NegVsReg, Pairing::PosVsNeg}) {
        pv << pairing_name(pairing);
        for (int tau = -out.leads; tau <= out.lags; ++tau) {
            auto row = std::find_if(out.pairwise.begin(), out.pairwise.end(), [&](const auto& r) {
                return r.tau == tau && r.pairing == pairing;
            });
            pv << ',';
            if (row != out.pairwise.end()) pv << format_num(row->p);
        }
        auto jt = std::find_if(out.joint_f.begin(), out.joint_f.end(),
                               [&](const auto& kv) { return kv.first == pairing; });
        pv << ',';
        if (jt != out.joint_f.end()) pv << format_num(jt->second.p);
        pv << '\n';
    }
    pv.close();
    ctx.note_output(p_path);
}

struct PipelineData {
    PanelDataset panel;
    std::vector<SmootherResult> smoothers;
    std::vector<FlowClass> classes;
};

PipelineData prepare_pipeline(const EstimateArgs& args, RunContext& ctx) {
    PipelineData data;
    ctx.note_input(args.in);
    data.panel = load_csv(args.in, {args.base, args.outcome});
    std::optional<double> bw;
    if (args.bandwidth > 0.0) bw = args.bandwidth;
    data.smoothers = smooth_panel(data.panel, args.base, bw, args.min_bandwidth);
    data.classes = classify_panel(data.panel, args.base, data.smoothers, args.k);
    return data;
}

int with_data_errors(const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::ParseError, "cannot hash " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

int run(int argc, const char* const* argv) {
    CLI::App app{"shockpanel: revenue-shock detection and fiscal-response estimation"};
    app.require_subcommand(1);
    std::vector<std::string> argv_copy(argv, argv + argc);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "generate a synthetic panel with known truth");
    std::string sim_config, sim_out, sim_truth, sim_calibration;
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    sim->add_option("--config", sim_config, "generator config JSON");
    sim->add_option("--seed", sim_seed, "seed override")->each([&](const std::string&) {
        sim_seed_set = true;
    });
    sim->add_option("--out", sim_out, "panel CSV output")->required();
    sim->add_option("--truth", sim_truth, "ground-truth CSV output");
    sim->add_option("--calibration", sim_calibration, "calibration summary JSON output");

    // ---- smooth ----
    auto* smo = app.add_subcommand("smooth", "kernel local-linear trend per unit");
    std::string smo_in, smo_series = "ipgt", smo_out;
    double smo_bandwidth = 0.0, smo_min_bandwidth = 1.0;
    smo->add_option("--in", smo_in, "panel CSV")->required();
    smo->add_option("--series", smo_series, "series to smooth");
    smo->add_option("--bandwidth", smo_bandwidth, "fixed bandwidth (0 = rule of thumb)");
    smo->add_option("--min-bandwidth", smo_min_bandwidth, "bandwidth floor");
    smo->add_option("--out", smo_out, "smoother CSV output")->required();

    // ---- classify ----
    auto* cls = app.add_subcommand("classify", "label flows as regular or shocks");
    std::string cls_in, cls_smooth, cls_series = "ipgt", cls_out, cls_descriptives;
    double cls_k = 3.0;
    cls->add_option("--in", cls_in, "panel CSV")->required();
    cls->add_option("--smooth", cls_smooth, "smoother CSV from the smooth subcommand")->required();
    cls->add_option("--series", cls_series, "classified series");
    cls->add_option("--k", cls_k, "threshold multiplier");
    cls->add_option("--out", cls_out, "classification CSV output")->required();
    cls->add_option("--descriptives", cls_descriptives, "descriptive table JSON output");

    // ---- estimate ----
    auto* est = app.add_subcommand("estimate", "distributed-lag PDS estimation");
    EstimateArgs est_args;
    std::string est_out;
    add_estimate_options(est, est_args);
    est->add_option("--out", est_out, "estimate JSON output")->required();

    // ---- robustness ----
    auto* rob = app.add_subcommand("robustness", "baseline plus the robustness variants");
    EstimateArgs rob_args;
    std::string rob_out_dir;
    add_estimate_options(rob, rob_args);
    rob->add_option("--out-dir", rob_out_dir, "output directory")->required();

    // ---- report ----
    auto* rep = app.add_subcommand("report", "figure and p-value CSVs from estimate JSON");
    std::vector<std::string> rep_inputs;
    std::string rep_out_dir;
    rep->add_option("--est", rep_inputs, "estimate JSON files")->required()->expected(-1);
    rep->add_option("--out-dir", rep_out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (sim->parsed()) {
        return with_data_errors([&] {
            RunContext ctx("simulate", argv_copy);
            SynthConfig config;
            if (!sim_config.empty()) {
                ctx.note_input(sim_config);
                config = synth_config_from_json(load_json(sim_config));
            }
            if (sim_seed_set) config.seed = sim_seed;
            ctx.set_seed(config.seed);
            ctx.set_config_hash(fnv1a_hex(synth_config_json(config).dump()));

            auto [panel, truth] = generate(config);
            write_csv(panel, sim_out);
            ctx.note_output(sim_out);
            std::string truth_path = sim_truth.empty() ? sim_out + ".truth.csv" : sim_truth;
            write_truth_csv(truth, truth_path);
            ctx.note_output(truth_path);
            if (!sim_calibration.empty()) {
                write_json(calibration_report_json(calibration_report(panel)), sim_calibration);
                ctx.note_output(sim_calibration);
            }
            ctx.write_manifest(sim_out + ".manifest.json");
            return 0;
        });
    }

    if (smo->parsed()) {
        return with_data_errors([&] {
            RunContext ctx("smooth", argv_copy);
            ctx.note_input(smo_in);
            PanelDataset panel = load_csv(smo_in, {smo_series});
            std::optional<double> bw;
            if (smo_bandwidth > 0.0) bw = smo_bandwidth;
            auto results = smooth_panel(panel, smo_series, bw, smo_min_bandwidth);
            write_smoother_csv(panel, smo_series, results, smo_out);
            ctx.note_output(smo_out);
            ctx.write_manifest(smo_out + ".manifest.json");
            return 0;
        });
    }

    if (cls->parsed()) {
        return with_data_errors([&] {
            RunContext ctx("classify", argv_copy);
            ctx.note_input(cls_in);
            ctx.note_input(cls_smooth);
            PanelDataset panel = load_csv(cls_in, {cls_series});
            auto smoothers = load_smoother_csv(panel, cls_smooth);
            auto classes = classify_panel(panel, cls_series, smoothers, cls_k);
            std::ofstream out(cls_out);
            if (!out) throw Error(Errc::ParseError, "cannot write " + cls_out);
            out << "unit,year,delta,label,k\n";
            for (const auto& fc : classes)
                for (std::size_t i = 0; i < fc.size(); ++i) {
                    if (!fc.classified(i)) continue;
                    out << fc.unit << ',' << fc.years[i] << ',' << format_num(fc.delta[i]) << ','
                        << flow_label_name(fc.labels[i]) << ',' << format_num(fc.k) << '\n';
                }
            out.close();
            ctx.note_output(cls_out);
            if (!cls_descriptives.empty()) {
                DescriptiveTable table = descriptives(panel, classes);
                auto row_json = [](const DescriptiveTable::ClassRow& row) {
                    auto m = [](const Moments& m) {
                        return nlohmann::json{{"count", m.count},
                                              {"mean", m.mean},
                                              {"sd", m.sd},
                                              {"min", m.min},
                                              {"max", m.max}};
                    };
                    return nlohmann::json{{"delta", m(row.delta)},
                                          {"pct_spending", m(row.pct_spending)},
                                          {"pct_revenue", m(row.pct_revenue)}};
                };
                write_json({{"total", table.total},
                            {"regular", row_json(table.regular)},
                            {"positive", row_json(table.positive)},
                            {"negative", row_json(table.negative)}},
                           cls_descriptives);
                ctx.note_output(cls_descriptives);
            }
            ctx.write_manifest(cls_out + ".manifest.json");
            return 0;
        });
    }

    if (est->parsed()) {
        return with_data_errors([&] {
            RunContext ctx("estimate", argv_copy);
            PipelineData data = prepare_pipeline(est_args, ctx);
            DlmSpec spec = make_spec(est_args, data.panel);
            if (est_args.exclude_outliers)
                spec.excluded_units = exclusion_mask(data.panel, data.smoothers, ExclusionRule::Union);
            DlmOutput out = estimate(spec, data.panel, data.smoothers, data.classes);
            write_json(dlm_output_json(out), est_out);
            ctx.note_output(est_out);
            ctx.write_manifest(est_out + ".manifest.json");
            return 0;
        });
    }

    if (rob->parsed()) {
        return with_data_errors([&] {
            RunContext ctx("robustness", argv_copy);
            std::filesystem::create_directories(rob_out_dir);
            PipelineData data = prepare_pipeline(rob_args, ctx);
            DlmSpec spec = make_spec(rob_args, data.panel);
            DlmOutput baseline = estimate(spec, data.panel, data.smoothers, data.classes);
            std::filesystem::path dir(rob_out_dir);
            write_json(dlm_output_json(baseline), dir / "est_baseline.json");
            ctx.note_output(dir / "est_baseline.json");
            for (auto& [label, out] : robustness_suite(data.panel, data.smoothers, spec)) {
                std::filesystem::path p = dir / ("est_" + label + ".json");
                write_json(dlm_output_json(out), p);
                ctx.note_output(p);
            }
            ctx.write_manifest(dir / "manifest.json");
            return 0;
        });
    }

    if (rep->parsed()) {
        return with_data_errors([&] {
            RunContext ctx("report", argv_copy);
            std::filesystem::create_directories(rep_out_dir);
            for (const auto& est_path : rep_inputs) report_one(est_path, rep_out_dir, ctx);
            ctx.write_manifest(std::filesystem::path(rep_out_dir) / "manifest.json");
            return 0;
        });
    }

    return 2;
}

}  // namespace shockpanel::cli
