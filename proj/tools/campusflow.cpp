// campusflow command-line front end: ingest / run / compare / optimize / report.
//
// Exit status: 0 success, 1 usage error, 2 input validation failure,
// 3 runtime fault.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "campusflow/demand.hpp"
#include "campusflow/errors.hpp"
#include "campusflow/json_io.hpp"
#include "campusflow/log.hpp"
#include "campusflow/metrics.hpp"
#include "campusflow/netgraph.hpp"
#include "campusflow/optimizer.hpp"
#include "campusflow/osm_ingest.hpp"
#include "campusflow/scenarios.hpp"
#include "campusflow/signals.hpp"
#include "campusflow/simcore.hpp"

namespace fs = std::filesystem;
using namespace campusflow;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw InternalError("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

// All-or-nothing result set: contents are fully materialized before any
// file is touched, then written through temp names, MANIFEST last.
void write_result_set(const fs::path& dir, const std::map<std::string, std::string>& files) {
    fs::create_directories(dir);
    std::string manifest;
    for (const auto& [name, content] : files) {
        const fs::path tmp = dir / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw InputError("cannot write file: " + tmp.string());
            out << content;
        }
        fs::rename(tmp, dir / name);
        manifest += sha256_hex(content) + "  " + name + "\n";
    }
    const fs::path tmp = dir / "MANIFEST.tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw InputError("cannot write file: " + tmp.string());
        out << manifest;
    }
    fs::rename(tmp, dir / "MANIFEST");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Rows of a campusflow CSV (comment line, header, data) keyed by header.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (header.empty()) {
            header = fields;
            continue;
        }
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i)
            row[header[i]] = fields[i];
        rows.push_back(std::move(row));
    }
    if (header.empty()) throw InputError("no header row in " + path.string());
    return rows;
}

osm::BoundingBox parse_bbox(const std::string& text) {
    const auto parts = split_csv_line(text);
    if (parts.size() != 4)
        throw InputError("--bbox expects min_lon,min_lat,max_lon,max_lat");
    try {
        return osm::BoundingBox{std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]),
                                std::stod(parts[3])};
    } catch (const std::exception&) {
        throw InputError("--bbox has a non-numeric component: " + text);
    }
}

// --- subcommand payloads ---------------------------------------------------

struct IngestArgs {
    std::string osm_file, bbox, out_file;
    bool no_simplify = false;
    bool allow_uturns = false;
};

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw InputError("cannot write file: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

int cmd_ingest(const IngestArgs& a) {
    const auto bbox = parse_bbox(a.bbox);
    auto raw = osm::parse_osm(read_file(a.osm_file));
    for (const auto& w : raw.warnings) log::warn(w);
    raw = osm::filter_bbox(raw, bbox);
    auto net = osm::build_graph(raw, osm::shipped_class_defaults(), a.allow_uturns);
    if (!a.no_simplify) net = osm::simplify_chains(net);
    const auto report = netgraph::validate_network(net);
    if (!report.empty()) {
        for (const auto& v : report) log::error(v);
        throw InputError("ingested network fails validation (" +
                         std::to_string(report.size()) + " violation(s))");
    }
    write_file_atomic(a.out_file, json_io::save_network(net));
    log::info("wrote " + a.out_file + ": " + std::to_string(net.nodes().size()) + " nodes, " +
              std::to_string(net.links().size()) + " links, " +
              std::to_string(net.movements().size()) + " movements");
    return 0;
}

struct RunArgs {
    std::string net_file, demand_file, signals_file, aliases_file, out_dir;
    std::vector<std::string> scenario_files;
    double horizon_s = 0.0;
    double gap_s = 0.0;
    std::optional<std::uint64_t> seed;
    bool event_log = false;
};

struct LoadedRun {
    netgraph::NetworkGraph net;
    std::vector<demand::ODPair> demand;
    json_io::SignalFile signals;
    std::optional<scenarios::ScenarioSpec> scenario;
};

LoadedRun load_run_inputs(const std::string& net_file, const std::string& demand_file,
                          const std::string& signals_file, const std::string& aliases_file,
                          const std::vector<std::string>& scenario_files, double gap_s) {
    LoadedRun r;
    r.net = json_io::load_network(read_file(net_file));
    if (const auto report = netgraph::validate_network(r.net); !report.empty())
        throw InputError("network fails validation: " + report.front());
    r.demand = json_io::load_demand(read_file(demand_file));
    r.signals = json_io::load_signals(read_file(signals_file));
    for (const auto& p : r.signals.plans) {
        const auto report = signals::validate_plan(p, r.net);
        if (!report.ok()) throw InputError(report.violations.front());
        for (const auto& w : report.warnings) log::warn(w);
    }
    scenarios::AliasTable aliases;
    if (!aliases_file.empty()) aliases = json_io::load_alias_table(read_file(aliases_file));
    if (!scenario_files.empty()) {
        scenarios::CompositionSpec comp;
        comp.gap_s = gap_s;
        for (const auto& f : scenario_files)
            comp.scenarios.push_back(scenarios::load_scenario(read_file(f), r.net, aliases));
        r.scenario = scenarios::compose_sequential(comp);
    }
    return r;
}

std::string seed_comment(const std::optional<std::uint64_t>& seed) {
    return seed ? "# seed=" + std::to_string(*seed) + " mode=poisson"
                : "# seed=none mode=deterministic";
}

int cmd_run(const RunArgs& a) {
    const auto loaded = load_run_inputs(a.net_file, a.demand_file, a.signals_file,
                                        a.aliases_file, a.scenario_files, a.gap_s);
    const auto* scenario = loaded.scenario ? &*loaded.scenario : nullptr;
    const auto effective =
        scenario ? scenarios::apply_overlays(loaded.demand, *scenario) : loaded.demand;
    const auto trips = demand::build_trips(loaded.net, effective, a.seed);
    const auto inputs =
        scenarios::assemble_inputs(loaded.signals.plans, loaded.signals.crossings, scenario);

    simcore::KernelOptions opts;
    opts.record_event_log = a.event_log;
    const auto result = simcore::run_simulation(loaded.net, trips, inputs, a.horizon_s, opts);
    const auto summary = metrics::summarize(result, loaded.net);

    std::vector<metrics::TripRecord> records;
    records.reserve(result.trips.size());
    for (const auto& o : result.trips) records.push_back(metrics::make_trip_record(o));
    std::vector<metrics::LinkSeries> series;
    for (const auto& [id, log] : result.link_logs)
        series.push_back(metrics::build_link_series(log, loaded.net.link(id)));

    const std::string comment = seed_comment(a.seed);
    std::map<std::string, std::string> files;
    {
        std::ostringstream s;
        metrics::export_summary_csv(s, summary, comment);
        files["summary.csv"] = s.str();
    }
    {
        std::ostringstream s;
        metrics::export_trips_csv(s, records, comment);
        files["trips.csv"] = s.str();
    }
    {
        std::ostringstream s;
        metrics::export_links_csv(s, series, comment);
        files["links.csv"] = s.str();
    }
    {
        std::ostringstream s;
        metrics::export_state_csv(s, series, comment);
        files["state.csv"] = s.str();
    }
    if (a.event_log) {
        std::string log_text;
        for (const auto& line : result.event_log) log_text += line + "\n";
        files["events.tsv"] = log_text;
    }
    write_result_set(a.out_dir, files);
    std::cout << "completed=" << summary.completed_trips
              << " incomplete=" << summary.incomplete_trips
              << " total_delay_s=" << metrics::csv_double(summary.total_delay_s) << "\n";
    return 0;
}

metrics::NetworkSummary summary_from_dir(const fs::path& dir) {
    const auto rows = read_csv(dir / "summary.csv");
    if (rows.empty()) throw InputError("empty summary.csv in " + dir.string());
    const auto& row = rows.front();
    metrics::NetworkSummary s;
    s.total_travel_time_s = std::stod(row.at("total_travel_time_s"));
    s.total_delay_s = std::stod(row.at("total_delay_s"));
    s.completed_trips = std::stoll(row.at("completed_trips"));
    s.incomplete_trips = std::stoll(row.at("incomplete_trips"));
    s.mean_delay_s = std::stod(row.at("mean_delay_s"));
    return s;
}

struct CompareArgs {
    std::string baseline_dir, variant_dir, out_file;
};

int cmd_compare(const CompareArgs& a) {
    const auto baseline = summary_from_dir(a.baseline_dir);
    const auto variant = summary_from_dir(a.variant_dir);
    const auto report = scenarios::compare_runs(baseline, variant);
    std::string out = "# baseline=" + a.baseline_dir + " variant=" + a.variant_dir + "\n";
    out += "metric,baseline,variant,delta_abs,delta_rel\n";
    for (const auto& d : report.deltas) {
        out += d.metric + "," + metrics::csv_double(d.baseline) + "," +
               metrics::csv_double(d.variant) + "," + metrics::csv_double(d.absolute) + ",";
        out += d.relative ? metrics::csv_double(*d.relative) : std::string("undefined");
        out += "\n";
    }
    write_file_atomic(a.out_file, out);
    std::cout << out;
    return 0;
}

struct OptimizeArgs {
    std::string net_file, demand_file, signals_file, aliases_file, out_dir, config_file;
    std::vector<std::string> scenario_files;
    double horizon_s = 0.0;
    double gap_s = 0.0;
    std::int64_t budget = 200;
};

int cmd_optimize(const OptimizeArgs& a) {
    const auto loaded = load_run_inputs(a.net_file, a.demand_file, a.signals_file,
                                        a.aliases_file, a.scenario_files, a.gap_s);
    if (loaded.signals.plans.empty())
        throw InputError("optimize needs at least one signal plan");

    optimizer::OptimizerConfig config;
    if (!a.config_file.empty()) {
        const auto doc = nlohmann::json::parse(read_file(a.config_file), nullptr, false);
        if (doc.is_discarded()) throw InputError("optimizer config: malformed JSON");
        config.budget = doc.value("budget", config.budget);
        config.min_green_s = doc.value("min_green_s", config.min_green_s);
        config.incomplete_trip_penalty_s =
            doc.value("incomplete_trip_penalty_s", config.incomplete_trip_penalty_s);
        if (doc.contains("step_schedule_s"))
            config.step_schedule_s = doc.at("step_schedule_s").get<std::vector<double>>();
    }
    if (a.budget > 0) config.budget = a.budget;

    const auto* scenario = loaded.scenario ? &*loaded.scenario : nullptr;
    const auto objective = optimizer::make_objective(
        loaded.net, loaded.demand, loaded.signals.crossings, scenario, a.horizon_s, config);
    const auto trace = optimizer::hill_climb(objective, loaded.signals.plans, config);

    const auto& best_entry = trace.entries[trace.best_index];
    optimizer::PlanVector best_vec =
        optimizer::encode_plans(loaded.signals.plans, config.min_green_s);
    best_vec.values = best_entry.values;
    const auto best_plans = optimizer::decode_plans(best_vec, loaded.signals.plans);

    std::map<std::string, std::string> files;
    files["trace.csv"] =
        optimizer::trace_to_csv(trace, best_vec, "# seed=none mode=deterministic");
    nlohmann::json best;
    best["plans"] = nlohmann::json::array();
    for (const auto& p : best_plans)
        best["plans"].push_back(
            nlohmann::json::parse(json_io::plan_to_json_text(p)));
    best["objective_s"] = best_entry.objective_s;
    files["best_plan.json"] = best.dump(2) + "\n";
    write_result_set(a.out_dir, files);
    std::cout << "evaluations=" << trace.entries.size()
              << " best_objective_s=" << metrics::csv_double(best_entry.objective_s) << "\n";
    return 0;
}

struct ReportArgs {
    std::string run_dir;
    std::int64_t top_k = 5;
};

int cmd_report(const ReportArgs& a) {
    if (a.top_k < 1) throw InputError("--top must be >= 1");
    const auto rows = read_csv(fs::path(a.run_dir) / "links.csv");
    metrics::NetworkSummary s;
    for (const auto& row : rows)
        s.link_delay_s[std::stoll(row.at("link_id"))] = std::stod(row.at("total_delay_s"));
    const auto ranking =
        metrics::hotspot_ranking(s, static_cast<std::size_t>(a.top_k));
    std::cout << "rank,link_id,total_delay_s\n";
    for (std::size_t i = 0; i < ranking.size(); ++i)
        std::cout << i + 1 << "," << ranking[i] << ","
                  << metrics::csv_double(s.link_delay_s.at(ranking[i])) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"campusflow: event-driven mesoscopic traffic simulation"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Build a network file from OSM XML");
    ingest->add_option("--osm", ingest_args.osm_file, "OSM XML input")->required();
    ingest->add_option("--bbox", ingest_args.bbox, "min_lon,min_lat,max_lon,max_lat")->required();
    ingest->add_option("--out", ingest_args.out_file, "network JSON output")->required();
    ingest->add_flag("--no-simplify", ingest_args.no_simplify, "keep pass-through nodes");
    ingest->add_flag("--allow-uturns", ingest_args.allow_uturns, "generate U-turn movements");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Simulate and export metrics CSVs");
    run->add_option("--net", run_args.net_file, "network JSON")->required();
    run->add_option("--demand", run_args.demand_file, "demand JSON")->required();
    run->add_option("--signals", run_args.signals_file, "signal JSON")->required();
    run->add_option("--scenario", run_args.scenario_files,
                    "scenario JSON (repeat to compose sequentially)");
    run->add_option("--aliases", run_args.aliases_file, "alias table JSON");
    run->add_option("--horizon", run_args.horizon_s, "simulation horizon in seconds")->required();
    run->add_option("--gap", run_args.gap_s, "gap between composed scenarios (s)");
    run->add_option("--out", run_args.out_dir, "output directory")->required();
    std::int64_t seed_raw = -1;
    run->add_option("--seed", seed_raw, "Poisson demand seed (omit for deterministic mode)")
        ->check(CLI::NonNegativeNumber);
    run->add_flag("--event-log", run_args.event_log, "also write events.tsv");

    CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "Compare two run directories");
    compare->add_option("--baseline", compare_args.baseline_dir, "baseline run dir")->required();
    compare->add_option("--variant", compare_args.variant_dir, "variant run dir")->required();
    compare->add_option("--out", compare_args.out_file, "comparison CSV output")->required();

    OptimizeArgs opt_args;
    auto* optimize = app.add_subcommand("optimize", "Search signal timings for minimum delay");
    optimize->add_option("--net", opt_args.net_file, "network JSON")->required();
    optimize->add_option("--demand", opt_args.demand_file, "demand JSON")->required();
    optimize->add_option("--signals", opt_args.signals_file, "signal JSON")->required();
    optimize->add_option("--scenario", opt_args.scenario_files, "scenario JSON");
    optimize->add_option("--aliases", opt_args.aliases_file, "alias table JSON");
    optimize->add_option("--horizon", opt_args.horizon_s, "simulation horizon (s)")->required();
    optimize->add_option("--gap", opt_args.gap_s, "gap between composed scenarios (s)");
    optimize->add_option("--budget", opt_args.budget, "evaluation budget");
    optimize->add_option("--config", opt_args.config_file, "optimizer config JSON");
    optimize->add_option("--out", opt_args.out_dir, "output directory")->required();

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Print the hotspot ranking of a run");
    report->add_option("--run", report_args.run_dir, "run directory")->required();
    report->add_option("--top", report_args.top_k, "number of links to list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_args);
        if (*run) {
            if (seed_raw >= 0) run_args.seed = static_cast<std::uint64_t>(seed_raw);
            return cmd_run(run_args);
        }
        if (*compare) return cmd_compare(compare_args);
        if (*optimize) return cmd_optimize(opt_args);
        if (*report) return cmd_report(report_args);
    } catch (const InputError& e) {
        log::error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log::error(std::string("runtime fault: ") + e.what());
        return 3;
    }
    return 1;
}
