#include "campusflow/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "campusflow/errors.hpp"
#include "campusflow/json_io.hpp"
#include "campusflow/metrics.hpp"

namespace campusflow::scenarios {

using nlohmann::json;

namespace {

NodeId resolve_node(const json& value, const netgraph::NetworkGraph& net,
                    const AliasTable& aliases, const char* ctx) {
    NodeId id = 0;
    if (value.is_string()) {
        const std::string alias = value.get<std::string>();
        const auto it = aliases.find(alias);
        if (it == aliases.end())
            throw InputError(std::string(ctx) + ": unknown alias '" + alias + "'");
        id = it->second;
    } else if (value.is_number_integer()) {
        id = value.get<std::int64_t>();
    } else {
        throw InputError(std::string(ctx) + ": node must be an id or an alias string");
    }
    if (!net.has_node(id))
        throw InputError(std::string(ctx) + ": node " + std::to_string(id) +
                         " is not in the network");
    return id;
}

TimeWindow window_from_json(const json& jw, const char* ctx) {
    TimeWindow w;
    if (!jw.contains("start_s") || !jw.contains("end_s"))
        throw InputError(std::string(ctx) + ": window needs start_s and end_s");
    w.start_s = jw.at("start_s").get<double>();
    w.end_s = jw.at("end_s").get<double>();
    if (!(w.end_s > w.start_s))
        throw InputError(std::string(ctx) + ": window end must be after start");
    if (w.start_s < 0.0) throw InputError(std::string(ctx) + ": window starts before t=0");
    return w;
}

bool windows_overlap(const TimeWindow& a, const TimeWindow& b) {
    return a.start_s < b.end_s && b.start_s < a.end_s;
}

}  // namespace

ScenarioSpec load_scenario(const std::string& json_text, const netgraph::NetworkGraph& net,
                           const AliasTable& aliases) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw InputError("scenario file: malformed JSON");
    ScenarioSpec s;
    s.name = doc.value("name", std::string{"unnamed"});
    const std::string ctx = "scenario '" + s.name + "'";
    if (!doc.contains("window")) throw InputError(ctx + ": missing window");
    s.window = window_from_json(doc.at("window"), ctx.c_str());

    for (const auto& jod : doc.value("demand_overlays", json::array())) {
        demand::ODPair od;
        od.origin = resolve_node(jod.at("origin"), net, aliases, ctx.c_str());
        od.destination = resolve_node(jod.at("destination"), net, aliases, ctx.c_str());
        if (od.origin == od.destination)
            throw InputError(ctx + ": overlay origin equals destination");
        for (const auto& jseg : jod.value("profile", json::array())) {
            demand::RateSegment seg;
            seg.start_s = jseg.at("start_s").get<double>();
            seg.end_s = jseg.at("end_s").get<double>();
            seg.rate_vps = jseg.at("rate_vph").get<double>() / 3600.0;
            od.profile.segments.push_back(seg);
        }
        demand::validate_profile(od.profile);
        s.demand_overlays.push_back(std::move(od));
    }
    for (const auto& jo : doc.value("plan_overrides", json::array())) {
        PlanOverride po;
        po.plan = json_io::plan_from_json_text(jo.dump());
        po.window = jo.contains("window") ? window_from_json(jo.at("window"), ctx.c_str())
                                          : s.window;
        const auto report = signals::validate_plan(po.plan, net);
        if (!report.ok()) throw InputError(ctx + ": " + report.violations.front());
        s.plan_overrides.push_back(std::move(po));
    }
    for (const auto& jc : doc.value("capacity_overrides", json::array())) {
        CapacityOverride co;
        co.movement = jc.at("movement").get<std::int64_t>();
        if (!net.has_movement(co.movement))
            throw InputError(ctx + ": capacity override for absent movement " +
                             std::to_string(co.movement));
        co.factor = jc.at("factor").get<double>();
        if (!(co.factor > 0.0 && co.factor <= 1.0))
            throw InputError(ctx + ": capacity factor outside (0, 1]");
        co.window = jc.contains("window") ? window_from_json(jc.at("window"), ctx.c_str())
                                          : s.window;
        s.capacity_overrides.push_back(co);
    }
    return s;
}

std::vector<ODPair> apply_overlays(const std::vector<ODPair>& base, const ScenarioSpec& s) {
    std::vector<ODPair> out = base;
    for (const auto& overlay : s.demand_overlays) {
        ODPair shifted = overlay;
        for (auto& seg : shifted.profile.segments) {
            seg.start_s += s.window.start_s;
            seg.end_s += s.window.start_s;
        }
        out.push_back(std::move(shifted));
    }
    return out;
}

ScenarioSpec compose_sequential(const CompositionSpec& c) {
    if (c.scenarios.empty()) throw InputError("composition needs at least one scenario");
    if (c.gap_s < 0.0) throw InputError("composition gap must be >= 0");
    if (c.scenarios.size() == 1) return c.scenarios.front();

    ScenarioSpec merged;
    double cursor = c.scenarios.front().window.start_s;
    merged.window.start_s = cursor;
    for (std::size_t i = 0; i < c.scenarios.size(); ++i) {
        const ScenarioSpec& s = c.scenarios[i];
        const double len = s.window.end_s - s.window.start_s;
        const double delta = cursor - s.window.start_s;
        if (!merged.name.empty()) merged.name += "+";
        merged.name += s.name;
        for (const auto& od : s.demand_overlays) {
            demand::ODPair shifted = od;
            // overlay profiles are window-relative; re-base them so the
            // merged window start restores scenario i's translated times
            for (auto& seg : shifted.profile.segments) {
                seg.start_s += cursor - merged.window.start_s;
                seg.end_s += cursor - merged.window.start_s;
            }
            merged.demand_overlays.push_back(std::move(shifted));
        }
        for (const auto& po : s.plan_overrides) {
            PlanOverride moved = po;
            moved.window.start_s += delta;
            moved.window.end_s += delta;
            merged.plan_overrides.push_back(std::move(moved));
        }
        for (const auto& co : s.capacity_overrides) {
            CapacityOverride moved = co;
            moved.window.start_s += delta;
            moved.window.end_s += delta;
            merged.capacity_overrides.push_back(moved);
        }
        cursor += len;
        if (i + 1 < c.scenarios.size()) cursor += c.gap_s;
    }
    merged.window.end_s = cursor;

    for (std::size_t i = 0; i < merged.plan_overrides.size(); ++i)
        for (std::size_t j = i + 1; j < merged.plan_overrides.size(); ++j) {
            const auto& a = merged.plan_overrides[i];
            const auto& b = merged.plan_overrides[j];
            if (a.plan.signal_id == b.plan.signal_id && windows_overlap(a.window, b.window))
                throw InputError("conflicting plan overrides for signal " +
                                 std::to_string(a.plan.signal_id) +
                                 " with overlapping windows");
        }
    return merged;
}

ComparisonReport compare_runs(const metrics::NetworkSummary& baseline,
                              const metrics::NetworkSummary& variant) {
    ComparisonReport r;
    const auto add = [&r](const char* name, double b, double v) {
        MetricDelta d;
        d.metric = name;
        d.baseline = b;
        d.variant = v;
        d.absolute = v - b;
        if (b != 0.0) d.relative = (v - b) / b;
        r.deltas.push_back(std::move(d));
    };
    add("total_travel_time_s", baseline.total_travel_time_s, variant.total_travel_time_s);
    add("total_delay_s", baseline.total_delay_s, variant.total_delay_s);
    add("mean_delay_s", baseline.mean_delay_s, variant.mean_delay_s);
    add("completed_trips", static_cast<double>(baseline.completed_trips),
        static_cast<double>(variant.completed_trips));
    add("incomplete_trips", static_cast<double>(baseline.incomplete_trips),
        static_cast<double>(variant.incomplete_trips));
    return r;
}

simcore::KernelInputs assemble_inputs(const std::vector<signals::SignalPlan>& base_plans,
                                      const std::vector<signals::CrossingWindow>& crossings,
                                      const ScenarioSpec* scenario) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    simcore::KernelInputs in;
    in.crossings = crossings;

    for (const auto& base : base_plans) {
        simcore::SignalTimetable tt;
        tt.signal_id = base.signal_id;
        tt.node = base.node;

        std::vector<const PlanOverride*> overrides;
        if (scenario) {
            for (const auto& po : scenario->plan_overrides)
                if (po.plan.signal_id == base.signal_id) overrides.push_back(&po);
            std::sort(overrides.begin(), overrides.end(),
                      [](const PlanOverride* a, const PlanOverride* b) {
                          return a->window.start_s < b->window.start_s;
                      });
            for (std::size_t i = 0; i + 1 < overrides.size(); ++i)
                if (windows_overlap(overrides[i]->window, overrides[i + 1]->window))
                    throw InputError("conflicting plan overrides for signal " +
                                     std::to_string(base.signal_id));
        }
        double cursor = 0.0;
        for (const auto* po : overrides) {
            if (po->plan.node != base.node)
                throw InputError("plan override for signal " + std::to_string(base.signal_id) +
                                 " is at a different node");
            if (po->window.start_s > cursor)
                tt.segments.push_back({cursor, po->window.start_s, base});
            tt.segments.push_back({po->window.start_s, po->window.end_s, po->plan});
            cursor = po->window.end_s;
        }
        tt.segments.push_back({cursor, kInf, base});
        in.signals.push_back(std::move(tt));
    }

    if (scenario) {
        for (const auto& po : scenario->plan_overrides) {
            const bool known = std::any_of(
                base_plans.begin(), base_plans.end(),
                [&](const signals::SignalPlan& p) { return p.signal_id == po.plan.signal_id; });
            if (!known)
                throw InputError("plan override for unknown signal " +
                                 std::to_string(po.plan.signal_id));
        }
        for (const auto& co : scenario->capacity_overrides)
            in.capacity_windows.push_back(simcore::CapacityWindow{
                co.movement, co.factor, co.window.start_s, co.window.end_s});
    }
    return in;
}

}  // namespace campusflow::scenarios
