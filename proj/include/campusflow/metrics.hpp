#ifndef CAMPUSFLOW_METRICS_HPP
#define CAMPUSFLOW_METRICS_HPP

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "campusflow/netgraph.hpp"
#include "campusflow/simcore.hpp"

namespace campusflow::metrics {

using netgraph::LinkId;
using simcore::VehicleId;

struct TripRecord {
    VehicleId vehicle_id = 0;
    double depart_s = 0.0;
    std::optional<double> arrive_s;  // absent for incomplete trips
    double origin_wait_s = 0.0;
    double free_flow_s = 0.0;
    std::optional<double> delay_s;  // absent for incomplete trips
};

struct LinkSample {
    double time_s = 0.0;
    std::int64_t on_link_count = 0;
    std::int64_t queue_count = 0;
};

struct LinkSeries {
    LinkId link = 0;
    std::vector<LinkSample> samples;  // at the link's entry/exit event times
    double total_delay_s = 0.0;       // vehicle-seconds beyond free flow
    std::int64_t max_queue = 0;
    double time_of_max_queue_s = 0.0;
};

struct NetworkSummary {
    double total_travel_time_s = 0.0;  // completed trips, depart to arrive
    double total_delay_s = 0.0;        // sum of completed-trip delays
    std::int64_t completed_trips = 0;
    std::int64_t incomplete_trips = 0;
    double mean_delay_s = 0.0;  // completed trips only
    std::map<LinkId, double> link_delay_s;
};

// Vehicles held on the link past their free-flow traversal at time t
// (entry + free-flow time < t, not yet exited). The mesoscopic model has
// no within-link positions, so delayed-beyond-free-flow is the queue
// definition used throughout.
std::int64_t queue_length(const simcore::LinkLog& log, const netgraph::LinkRecord& link,
                          double t);

// (arrive - depart) - free_flow; origin wait is inside the elapsed term.
// Empty for incomplete trips.
std::optional<double> trip_delay(const TripRecord& tr);

TripRecord make_trip_record(const simcore::TripOutcome& o);

LinkSeries build_link_series(const simcore::LinkLog& log, const netgraph::LinkRecord& link);

NetworkSummary summarize(const simcore::SimResult& result, const netgraph::NetworkGraph& net);

// Top-k links by accumulated delay, descending, ties by ascending id.
std::vector<LinkId> hotspot_ranking(const NetworkSummary& summary, std::size_t k);

// CSV export, RFC-4180 style with a header row; floats at 6 significant
// digits; deterministic row order. Every file begins with a `# seed=...`
// comment line.
void export_trips_csv(std::ostream& out, const std::vector<TripRecord>& trips,
                      const std::string& seed_comment);
void export_links_csv(std::ostream& out, const std::vector<LinkSeries>& series,
                      const std::string& seed_comment);
void export_summary_csv(std::ostream& out, const NetworkSummary& summary,
                        const std::string& seed_comment);
void export_state_csv(std::ostream& out, const std::vector<LinkSeries>& series,
                      const std::string& seed_comment);

std::string csv_double(double v);

}  // namespace campusflow::metrics

#endif
