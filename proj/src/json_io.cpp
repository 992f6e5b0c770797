#include "campusflow/json_io.hpp"

#include <cmath>

#include <json.hpp>

#include "campusflow/errors.hpp"
#include "campusflow/log.hpp"

namespace campusflow::json_io {

using nlohmann::json;

namespace {

constexpr double kDefaultSatFlow = 0.5;     // veh/s/lane
constexpr double kDefaultJamDensity = 0.15; // veh/m/lane

json parse(const std::string& text, const char* what) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw InputError(std::string(what) + ": malformed JSON");
    return doc;
}

template <typename T>
T require(const json& obj, const char* key, const char* ctx) {
    if (!obj.contains(key))
        throw InputError(std::string(ctx) + ": missing field '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(std::string(ctx) + ": field '" + key + "' has the wrong type");
    }
}

signals::SignalPlan plan_from_json(const json& jp) {
    signals::SignalPlan p;
    p.signal_id = require<std::int64_t>(jp, "signal_id", "signal plan");
    const std::string ctx = "signal plan " + std::to_string(p.signal_id);
    p.node = require<std::int64_t>(jp, "node", ctx.c_str());
    p.cycle_s = require<double>(jp, "cycle_s", ctx.c_str());
    p.offset_s = require<double>(jp, "offset_s", ctx.c_str());
    p.lost_time_s = jp.value("lost_time_s", 0.0);
    if (p.cycle_s > 0.0 && (p.offset_s < 0.0 || p.offset_s >= p.cycle_s)) {
        double normalized = std::fmod(p.offset_s, p.cycle_s);
        if (normalized < 0.0) normalized += p.cycle_s;
        log::warn(ctx + ": offset " + std::to_string(p.offset_s) + " normalized to " +
                  std::to_string(normalized));
        p.offset_s = normalized;
    }
    if (!jp.contains("phases") || !jp.at("phases").is_array())
        throw InputError(ctx + ": missing phases array");
    for (const auto& jphase : jp.at("phases")) {
        signals::Phase ph;
        ph.green_s = require<double>(jphase, "green_s", ctx.c_str());
        for (const auto& m : jphase.value("movements", json::array()))
            ph.movements.push_back(m.get<std::int64_t>());
        p.phases.push_back(std::move(ph));
    }
    return p;
}

json plan_to_json(const signals::SignalPlan& p) {
    json jp;
    jp["signal_id"] = p.signal_id;
    jp["node"] = p.node;
    jp["cycle_s"] = p.cycle_s;
    jp["offset_s"] = p.offset_s;
    jp["lost_time_s"] = p.lost_time_s;
    jp["phases"] = json::array();
    for (const auto& ph : p.phases) {
        json jphase;
        jphase["green_s"] = ph.green_s;
        jphase["movements"] = ph.movements;
        jp["phases"].push_back(std::move(jphase));
    }
    return jp;
}

}  // namespace

netgraph::NetworkGraph load_network(const std::string& json_text) {
    const json doc = parse(json_text, "network file");
    netgraph::NetworkGraph net;
    for (const auto& jn : doc.value("nodes", json::array())) {
        netgraph::NodeRecord n;
        n.id = require<std::int64_t>(jn, "id", "node");
        n.lon = require<double>(jn, "lon", "node");
        n.lat = require<double>(jn, "lat", "node");
        n.signalized = jn.value("signalized", false);
        n.name = jn.value("name", std::string{});
        net.add_node(std::move(n));
    }
    for (const auto& jl : doc.value("links", json::array())) {
        netgraph::LinkRecord l;
        l.id = require<std::int64_t>(jl, "id", "link");
        const std::string ctx = "link " + std::to_string(l.id);
        l.from_node = require<std::int64_t>(jl, "from_node", ctx.c_str());
        l.to_node = require<std::int64_t>(jl, "to_node", ctx.c_str());
        l.length_m = require<double>(jl, "length_m", ctx.c_str());
        l.free_flow_speed_mps = require<double>(jl, "speed_kmh", ctx.c_str()) / 3.6;
        l.lanes = jl.value("lanes", 1);
        l.sat_flow_per_lane_vps = jl.value("sat_flow_per_lane_vps", kDefaultSatFlow);
        l.jam_density_per_lane_vpm = jl.value("jam_density_per_lane_vpm", kDefaultJamDensity);
        l.backward_wave_speed_mps = jl.value("backward_wave_speed_mps", 0.0);  // 0 => derive
        l.road_class = jl.value("road_class", std::string{"residential"});
        net.add_link(std::move(l));
    }
    for (const auto& jm : doc.value("movements", json::array())) {
        netgraph::TurnMovement m;
        m.id = require<std::int64_t>(jm, "id", "movement");
        const std::string ctx = "movement " + std::to_string(m.id);
        m.in_link = require<std::int64_t>(jm, "in_link", ctx.c_str());
        m.out_link = require<std::int64_t>(jm, "out_link", ctx.c_str());
        m.capacity_factor = jm.value("capacity_factor", 1.0);
        net.add_movement(m);
    }
    return net;
}

std::string save_network(const netgraph::NetworkGraph& net) {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : net.nodes()) {
        json jn;
        jn["id"] = n.id;
        jn["lon"] = n.lon;
        jn["lat"] = n.lat;
        jn["signalized"] = n.signalized;
        if (!n.name.empty()) jn["name"] = n.name;
        doc["nodes"].push_back(std::move(jn));
    }
    doc["links"] = json::array();
    for (const auto& l : net.links()) {
        json jl;
        jl["id"] = l.id;
        jl["from_node"] = l.from_node;
        jl["to_node"] = l.to_node;
        jl["length_m"] = l.length_m;
        jl["speed_kmh"] = l.free_flow_speed_mps * 3.6;
        jl["lanes"] = l.lanes;
        jl["sat_flow_per_lane_vps"] = l.sat_flow_per_lane_vps;
        jl["jam_density_per_lane_vpm"] = l.jam_density_per_lane_vpm;
        jl["backward_wave_speed_mps"] = l.backward_wave_speed_mps;
        jl["road_class"] = l.road_class;
        doc["links"].push_back(std::move(jl));
    }
    doc["movements"] = json::array();
    for (const auto& m : net.movements()) {
        json jm;
        jm["id"] = m.id;
        jm["in_link"] = m.in_link;
        jm["out_link"] = m.out_link;
        jm["capacity_factor"] = m.capacity_factor;
        doc["movements"].push_back(std::move(jm));
    }
    return doc.dump(2) + "\n";
}

std::vector<demand::ODPair> load_demand(const std::string& json_text) {
    const json doc = parse(json_text, "demand file");
    if (!doc.is_array()) throw InputError("demand file: top level must be an array");
    std::vector<demand::ODPair> ods;
    for (const auto& jod : doc) {
        demand::ODPair od;
        od.origin = require<std::int64_t>(jod, "origin", "OD entry");
        od.destination = require<std::int64_t>(jod, "destination", "OD entry");
        for (const auto& jseg : jod.value("profile", json::array())) {
            demand::RateSegment seg;
            seg.start_s = require<double>(jseg, "start_s", "profile segment");
            seg.end_s = require<double>(jseg, "end_s", "profile segment");
            seg.rate_vps = require<double>(jseg, "rate_vph", "profile segment") / 3600.0;
            od.profile.segments.push_back(seg);
        }
        demand::validate_profile(od.profile);
        ods.push_back(std::move(od));
    }
    return ods;
}

SignalFile load_signals(const std::string& json_text) {
    const json doc = parse(json_text, "signal file");
    SignalFile out;
    for (const auto& jp : doc.value("plans", json::array()))
        out.plans.push_back(plan_from_json(jp));
    for (const auto& jw : doc.value("crossings", json::array())) {
        signals::CrossingWindow w;
        w.movement = require<std::int64_t>(jw, "movement", "crossing window");
        w.period_s = require<double>(jw, "period_s", "crossing window");
        w.active_s = require<double>(jw, "active_s", "crossing window");
        w.factor = require<double>(jw, "factor", "crossing window");
        if (const auto v = signals::validate_crossing(w); !v.empty())
            throw InputError(v.front());
        out.crossings.push_back(w);
    }
    return out;
}

std::map<std::string, netgraph::NodeId> load_alias_table(const std::string& json_text) {
    const json doc = parse(json_text, "alias table");
    if (!doc.is_object()) throw InputError("alias table: top level must be an object");
    std::map<std::string, netgraph::NodeId> table;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_number_integer())
            throw InputError("alias table: alias '" + key + "' must map to a node id");
        table[key] = value.get<std::int64_t>();
    }
    return table;
}

signals::SignalPlan plan_from_json_text(const std::string& json_text) {
    return plan_from_json(parse(json_text, "signal plan"));
}

std::string plan_to_json_text(const signals::SignalPlan& plan) {
    return plan_to_json(plan).dump(2) + "\n";
}

}  // namespace campusflow::json_io
