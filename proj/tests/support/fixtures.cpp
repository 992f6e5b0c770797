#include "support/fixtures.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "campusflow/errors.hpp"

namespace campusflow::fixtures {

using netgraph::LinkId;
using netgraph::NodeId;

netgraph::NetworkGraph make_net(
    const std::vector<LinkSpec>& links,
    const std::vector<std::pair<LinkId, LinkId>>& movement_pairs) {
    netgraph::NetworkGraph net;
    std::set<NodeId> nodes;
    for (const auto& l : links) {
        nodes.insert(l.from);
        nodes.insert(l.to);
    }
    for (NodeId n : nodes) {
        netgraph::NodeRecord rec;
        rec.id = n;
        rec.lon = static_cast<double>(n) * 0.001;  // synthetic coordinates
        rec.lat = 0.0;
        net.add_node(rec);
    }
    for (const auto& l : links) {
        netgraph::LinkRecord rec;
        rec.id = l.id;
        rec.from_node = l.from;
        rec.to_node = l.to;
        rec.length_m = l.length_m;
        rec.free_flow_speed_mps = l.speed_mps;
        rec.lanes = l.lanes;
        rec.sat_flow_per_lane_vps = l.sat_vps;
        rec.jam_density_per_lane_vpm = l.jam_vpm;
        rec.backward_wave_speed_mps = l.wave_mps;
        rec.road_class = "residential";
        net.add_link(rec);
    }
    netgraph::MovementId next = 1;
    for (const auto& [in, out] : movement_pairs)
        net.add_movement(netgraph::TurnMovement{next++, in, out, 1.0});
    return net;
}

simcore::TripRequest make_trip(simcore::VehicleId id, const netgraph::NetworkGraph& net,
                               std::vector<LinkId> route, double depart_s) {
    simcore::TripRequest t;
    t.vehicle_id = id;
    t.origin = net.link(route.front()).from_node;
    t.destination = net.link(route.back()).to_node;
    t.departure_s = depart_s;
    t.route = std::move(route);
    return t;
}

CapacityFixture capacity_fixture() {
    CapacityFixture f;
    f.net = make_net({LinkSpec{1, 1, 2}}, {});
    for (int i = 1; i <= 5; ++i) f.trips.push_back(make_trip(i, f.net, {1}, 0.0));
    return f;
}

SpillbackFixture spillback_fixture() {
    SpillbackFixture f;
    // B: 50 m, jam density 0.055 -> storage 2.75 (floor 2), wave 5 m/s
    // (hole travel 10 s). A holds the spillback queue.
    f.net = make_net(
        {
            LinkSpec{1, 1, 2, 100.0, 10.0, 1, 0.5, 0.15},
            LinkSpec{2, 2, 3, 50.0, 10.0, 1, 0.5, 0.055, 5.0},
            LinkSpec{3, 3, 4, 100.0, 10.0, 2, 0.5, 0.15},
        },
        {{1, 2}, {2, 3}});
    for (int i = 1; i <= 5; ++i) f.trips.push_back(make_trip(i, f.net, {1, 2, 3}, 0.0));

    // B->C is movement 2: red on [0,100), green on [100,200), cycle 200.
    signals::SignalPlan p;
    p.signal_id = 1;
    p.node = 3;
    p.cycle_s = 200.0;
    p.offset_s = 100.0;
    p.lost_time_s = 100.0;
    p.phases.push_back(signals::Phase{100.0, {2}});
    f.plans.push_back(std::move(p));
    return f;
}

CrossFixture cross_fixture(double rate_a_vps, double rate_b_vps, double green_a_s,
                           double green_b_s, double demand_end_s) {
    CrossFixture f;
    // 1: W->J, 2: E->J, 3: J->X; movement 1 = heavy (1->3), 2 = light (2->3)
    f.net = make_net(
        {
            LinkSpec{1, 1, 3, 500.0, 10.0},
            LinkSpec{2, 2, 3, 500.0, 10.0},
            LinkSpec{3, 3, 4, 200.0, 10.0, 2},
        },
        {{1, 3}, {2, 3}});

    demand::ODPair a;
    a.origin = 1;
    a.destination = 4;
    a.profile.segments.push_back({0.0, demand_end_s, rate_a_vps});
    demand::ODPair b;
    b.origin = 2;
    b.destination = 4;
    b.profile.segments.push_back({0.0, demand_end_s, rate_b_vps});
    f.demand = {a, b};

    signals::SignalPlan p;
    p.signal_id = 1;
    p.node = 3;
    p.cycle_s = green_a_s + green_b_s;
    p.offset_s = 0.0;
    p.lost_time_s = 0.0;
    p.phases.push_back(signals::Phase{green_a_s, {1}});
    p.phases.push_back(signals::Phase{green_b_s, {2}});
    f.plans.push_back(std::move(p));
    return f;
}

RandomInstance random_instance(std::uint64_t seed, bool with_signals, bool with_crossings) {
    std::mt19937_64 rng(seed);
    const auto pick = [&rng](std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };

    RandomInstance inst;
    const std::int64_t n_nodes = pick(3, 8);

    // Ring backbone keeps everything routable; chords add merge conflicts.
    struct Edge {
        NodeId a, b;
    };
    std::vector<Edge> edges;
    for (NodeId i = 1; i <= n_nodes; ++i) edges.push_back({i, i % n_nodes + 1});
    const std::int64_t extra = pick(0, n_nodes);
    for (std::int64_t k = 0; k < extra; ++k) {
        const NodeId a = pick(1, n_nodes);
        const NodeId b = pick(1, n_nodes);
        if (a == b) continue;
        edges.push_back({a, b});
    }

    const double lengths[] = {60.0, 100.0, 150.0, 240.0};
    const double speeds[] = {5.0, 10.0, 15.0, 20.0};
    const double sats[] = {0.25, 0.5};
    std::vector<LinkSpec> links;
    std::set<std::pair<NodeId, NodeId>> seen;
    LinkId next_link = 1;
    for (const auto& e : edges) {
        if (!seen.insert({e.a, e.b}).second) continue;
        LinkSpec l{next_link++, e.a, e.b};
        l.length_m = lengths[rng() % 4];
        l.speed_mps = speeds[rng() % 4];
        l.lanes = static_cast<int>(pick(1, 2));
        l.sat_vps = sats[rng() % 2];
        l.jam_vpm = 0.15;
        links.push_back(l);
    }

    std::vector<std::pair<LinkId, LinkId>> movements;
    for (const auto& in : links)
        for (const auto& out : links) {
            if (in.to != out.from) continue;
            if (in.from == out.to) continue;  // no U-turns
            movements.emplace_back(in.id, out.id);
        }
    inst.net = make_net(links, movements);

    // Demand over routed OD pairs.
    std::vector<demand::ODPair> ods;
    const std::int64_t n_od = pick(1, 4);
    for (std::int64_t k = 0; k < n_od; ++k) {
        const NodeId o = pick(1, n_nodes);
        const NodeId d = pick(1, n_nodes);
        if (o == d) continue;
        if (!netgraph::shortest_path(inst.net, o, d).found) continue;
        demand::ODPair od;
        od.origin = o;
        od.destination = d;
        const double rates[] = {0.05, 0.1, 0.2, 0.4};
        const double start = static_cast<double>(pick(0, 3)) * 30.0;
        const double duration = static_cast<double>(pick(1, 4)) * 60.0;
        od.profile.segments.push_back({start, start + duration, rates[rng() % 4]});
        ods.push_back(od);
    }
    auto trips = demand::build_trips(inst.net, ods, std::nullopt);
    if (trips.size() > 100) trips.resize(100);
    inst.trips = std::move(trips);

    std::vector<signals::SignalPlan> plans;
    std::vector<signals::CrossingWindow> crossings;
    if (with_signals) {
        // Signalize up to two junctions that have movements.
        std::set<NodeId> signalized;
        for (std::int64_t attempt = 0; attempt < 4 && signalized.size() < 2; ++attempt) {
            const NodeId node = pick(1, n_nodes);
            if (signalized.count(node)) continue;
            std::vector<netgraph::MovementId> at_node;
            for (const auto& m : inst.net.movements())
                if (inst.net.link(m.in_link).to_node == node) at_node.push_back(m.id);
            if (at_node.empty()) continue;
            signalized.insert(node);

            signals::SignalPlan p;
            p.signal_id = static_cast<signals::SignalId>(signalized.size());
            p.node = node;
            const double cycles[] = {40.0, 60.0, 90.0, 120.0};
            p.cycle_s = cycles[rng() % 4];
            p.lost_time_s = static_cast<double>(pick(0, 1)) * 2.0;
            const std::size_t n_phases = at_node.size() == 1 ? 1 : 2;
            const double green_total = p.cycle_s - static_cast<double>(n_phases) * p.lost_time_s;
            p.offset_s = static_cast<double>(pick(0, 3)) * p.cycle_s / 4.0;
            if (p.offset_s >= p.cycle_s) p.offset_s = 0.0;
            if (n_phases == 1) {
                p.phases.push_back(signals::Phase{green_total, at_node});
            } else {
                // split movements across two phases, both non-empty
                std::vector<netgraph::MovementId> first, second;
                for (std::size_t i = 0; i < at_node.size(); ++i)
                    (i % 2 == 0 ? first : second).push_back(at_node[i]);
                const double g1 = green_total / 2.0;
                p.phases.push_back(signals::Phase{g1, first});
                p.phases.push_back(signals::Phase{green_total - g1, second});
            }
            plans.push_back(std::move(p));
        }
    }
    if (with_crossings && !inst.net.movements().empty()) {
        signals::CrossingWindow w;
        const auto& mv = inst.net.movements()[rng() % inst.net.movements().size()];
        w.movement = mv.id;
        w.period_s = 60.0;
        w.active_s = static_cast<double>(pick(5, 20));
        w.factor = 0.25 * static_cast<double>(pick(0, 2));  // 0, 0.25, or 0.5
        crossings.push_back(w);
    }
    inst.inputs = simcore::wrap_plans(plans, crossings);
    inst.horizon_s = 3000.0;
    return inst;
}

}  // namespace campusflow::fixtures
