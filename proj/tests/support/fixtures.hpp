#ifndef CAMPUSFLOW_TESTS_FIXTURES_HPP
#define CAMPUSFLOW_TESTS_FIXTURES_HPP

#include <cstdint>
#include <vector>

#include "campusflow/demand.hpp"
#include "campusflow/netgraph.hpp"
#include "campusflow/signals.hpp"
#include "campusflow/simcore.hpp"

namespace campusflow::fixtures {

struct LinkSpec {
    netgraph::LinkId id;
    netgraph::NodeId from, to;
    double length_m = 100.0;
    double speed_mps = 10.0;
    int lanes = 1;
    double sat_vps = 0.5;
    double jam_vpm = 0.15;
    double wave_mps = 0.0;  // 0: derived
};

// Nodes are created implicitly from link endpoints; movements for all
// consecutive pairs unless a restricted list is given.
netgraph::NetworkGraph make_net(const std::vector<LinkSpec>& links,
                                const std::vector<std::pair<netgraph::LinkId, netgraph::LinkId>>&
                                    movement_pairs);

simcore::TripRequest make_trip(simcore::VehicleId id, const netgraph::NetworkGraph& net,
                               std::vector<netgraph::LinkId> route, double depart_s);

// Single 100 m / 10 m/s / 1 lane / 0.5 veh/s link; 5 departures at t=0.
// Exits at 10, 12, 14, 16, 18.
struct CapacityFixture {
    netgraph::NetworkGraph net;
    std::vector<simcore::TripRequest> trips;
};
CapacityFixture capacity_fixture();

// A(100 m, storage 15) -> B(50 m, w=5, floor storage 2) -> C, with B->C
// red until t=100. B entries 10, 12, 110, 112, 125; veh3 exits B at 115.
struct SpillbackFixture {
    netgraph::NetworkGraph net;
    std::vector<simcore::TripRequest> trips;
    std::vector<signals::SignalPlan> plans;
    netgraph::LinkId link_a = 1, link_b = 2, link_c = 3;
};
SpillbackFixture spillback_fixture();

// Two approaches into a signalized junction plus an egress link. Demand
// rates per approach are parameters; phase 1 serves the first approach.
struct CrossFixture {
    netgraph::NetworkGraph net;
    std::vector<demand::ODPair> demand;
    std::vector<signals::SignalPlan> plans;  // single plan, two phases
    netgraph::MovementId heavy_movement = 1, light_movement = 2;
};
CrossFixture cross_fixture(double rate_a_vps, double rate_b_vps, double green_a_s,
                           double green_b_s, double demand_end_s = 600.0);

// Randomized small instance for the property suites: <= 8 nodes, grid of
// safe parameters, routable demand, optional signals and crossings.
struct RandomInstance {
    netgraph::NetworkGraph net;
    std::vector<simcore::TripRequest> trips;
    simcore::KernelInputs inputs;
    double horizon_s = 0.0;
};
RandomInstance random_instance(std::uint64_t seed, bool with_signals, bool with_crossings);

}  // namespace campusflow::fixtures

#endif
