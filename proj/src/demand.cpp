#include "campusflow/demand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "campusflow/errors.hpp"

namespace campusflow::demand {

void validate_profile(const DemandProfile& p) {
    double prev_end = -std::numeric_limits<double>::infinity();
    for (const auto& s : p.segments) {
        if (!(s.end_s > s.start_s))
            throw InputError("demand segment with end <= start (" + std::to_string(s.start_s) +
                             ", " + std::to_string(s.end_s) + ")");
        if (s.start_s < 0.0) throw InputError("demand segment starts before t=0");
        if (s.rate_vps < 0.0) throw InputError("negative demand rate");
        if (s.start_s < prev_end)
            throw InputError("demand segments overlap or are unsorted at t=" +
                             std::to_string(s.start_s));
        prev_end = s.end_s;
    }
}

double cumulative_demand(const DemandProfile& p, double t) {
    double total = 0.0;
    for (const auto& s : p.segments) {
        if (t <= s.start_s) break;
        const double covered = std::min(t, s.end_s) - s.start_s;
        total += covered * s.rate_vps;
    }
    return total;
}

std::vector<double> departure_times(const DemandProfile& p) {
    std::vector<double> times;
    double cum = 0.0;       // demand accumulated before the current segment
    std::int64_t next = 1;  // k of the next departure to emit
    for (const auto& s : p.segments) {
        if (s.rate_vps <= 0.0) continue;
        const double seg_total = (s.end_s - s.start_s) * s.rate_vps;
        while (static_cast<double>(next) <= cum + seg_total) {
            times.push_back(s.start_s + (static_cast<double>(next) - cum) / s.rate_vps);
            ++next;
        }
        cum += seg_total;
    }
    return times;
}

std::vector<double> poisson_departures(const DemandProfile& p, std::uint64_t seed) {
    validate_profile(p);
    std::vector<double> times;
    if (p.segments.empty()) return times;
    double max_rate = 0.0;
    for (const auto& s : p.segments) max_rate = std::max(max_rate, s.rate_vps);
    if (max_rate <= 0.0) return times;

    const double t_begin = p.segments.front().start_s;
    const double t_end = p.segments.back().end_s;

    std::mt19937_64 rng(seed);
    auto uniform01 = [&rng]() {
        // 53-bit mantissa draw in [0, 1); implementation-pinned.
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    auto rate_at = [&p](double t) {
        for (const auto& s : p.segments)
            if (t >= s.start_s && t < s.end_s) return s.rate_vps;
        return 0.0;
    };

    // Thinning: homogeneous candidates at max_rate, accepted with
    // probability rate(t)/max_rate.
    double t = t_begin;
    while (true) {
        t += -std::log1p(-uniform01()) / max_rate;
        if (t >= t_end) break;
        if (uniform01() < rate_at(t) / max_rate) times.push_back(t);
    }
    return times;
}

std::vector<TripRequest> build_trips(const netgraph::NetworkGraph& net,
                                     const std::vector<ODPair>& ods,
                                     std::optional<std::uint64_t> poisson_seed) {
    std::vector<TripRequest> trips;
    for (std::size_t i = 0; i < ods.size(); ++i) {
        const auto& od = ods[i];
        if (od.origin == od.destination)
            throw InputError("OD pair " + std::to_string(i) + " has origin == destination (" +
                             std::to_string(od.origin) + ")");
        validate_profile(od.profile);
        const auto path = netgraph::shortest_path(net, od.origin, od.destination);
        if (!path.found)
            throw InputError("unroutable OD pair " + std::to_string(od.origin) + " -> " +
                             std::to_string(od.destination));
        const auto times = poisson_seed ? poisson_departures(od.profile, *poisson_seed + i)
                                        : departure_times(od.profile);
        for (double t : times) {
            TripRequest req;
            req.origin = od.origin;
            req.destination = od.destination;
            req.od_index = i;
            req.departure_s = t;
            req.route = path.links;
            trips.push_back(std::move(req));
        }
    }
    std::stable_sort(trips.begin(), trips.end(), [](const TripRequest& a, const TripRequest& b) {
        if (a.departure_s != b.departure_s) return a.departure_s < b.departure_s;
        return a.od_index < b.od_index;
    });
    for (std::size_t i = 0; i < trips.size(); ++i)
        trips[i].vehicle_id = static_cast<VehicleId>(i) + 1;
    return trips;
}

}  // namespace campusflow::demand
