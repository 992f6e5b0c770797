#ifndef CAMPUSFLOW_DEMAND_HPP
#define CAMPUSFLOW_DEMAND_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "campusflow/netgraph.hpp"

namespace campusflow::demand {

using netgraph::LinkId;
using netgraph::NodeId;
using VehicleId = std::int64_t;

struct RateSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    double rate_vps = 0.0;  // >= 0
};

// Piecewise-constant arrival rate; segments sorted and non-overlapping.
struct DemandProfile {
    std::vector<RateSegment> segments;
};

struct ODPair {
    NodeId origin = 0;
    NodeId destination = 0;
    DemandProfile profile;
};

struct TripRequest {
    VehicleId vehicle_id = 0;
    NodeId origin = 0;
    NodeId destination = 0;
    std::size_t od_index = 0;  // declaration order of the source OD pair
    double departure_s = 0.0;
    std::vector<LinkId> route;
};

// Throws InputError on unsorted/overlapping segments, end <= start, or
// negative rates.
void validate_profile(const DemandProfile& p);

// Integral of the rate over [0, t]; piecewise linear and non-decreasing.
double cumulative_demand(const DemandProfile& p, double t);

// Deterministic expansion: t_k = inf{t : cumulative_demand(t) >= k} for
// k = 1 .. floor(total).
std::vector<double> departure_times(const DemandProfile& p);

// Inhomogeneous Poisson draws by thinning against the max segment rate.
// Equal seeds give equal output; the generator is pinned (mt19937_64 with
// an explicit inversion formula), not a stdlib distribution.
std::vector<double> poisson_departures(const DemandProfile& p, std::uint64_t seed);

// One TripRequest per departure, routed on free-flow shortest paths.
// Vehicle ids are assigned in (departure time, OD declaration order)
// order starting at 1. Throws InputError naming the first unroutable pair.
std::vector<TripRequest> build_trips(const netgraph::NetworkGraph& net,
                                     const std::vector<ODPair>& ods,
                                     std::optional<std::uint64_t> poisson_seed);

}  // namespace campusflow::demand

#endif
