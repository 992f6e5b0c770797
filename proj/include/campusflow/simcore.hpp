#ifndef CAMPUSFLOW_SIMCORE_HPP
#define CAMPUSFLOW_SIMCORE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "campusflow/demand.hpp"
#include "campusflow/netgraph.hpp"
#include "campusflow/signals.hpp"

namespace campusflow::simcore {

using demand::TripRequest;
using demand::VehicleId;
using netgraph::LinkId;
using netgraph::MovementId;
using netgraph::NodeId;
using signals::SignalId;

// Event kinds in processing-priority order at equal timestamps: a phase
// change before any vehicle movement, hole arrivals before new entries,
// departures before exits, the horizon last.
enum class EventKind : int {
    PhaseChange = 0,
    HoleArrival = 1,
    Departure = 2,
    ExitCandidate = 3,
    HorizonEnd = 4,
};

const char* event_kind_name(EventKind k);

struct Event {
    double time_s = 0.0;
    EventKind kind = EventKind::HorizonEnd;
    std::int64_t subject = 0;  // vehicle, link, or signal id depending on kind
    std::uint64_t seq = 0;     // assigned monotonically at scheduling time
};

// One active plan per time range; ranges sorted, contiguous from 0, last
// one open-ended. Scenario plan overrides splice extra segments in.
struct PlanSegment {
    double start_s = 0.0;
    double end_s = 0.0;  // infinity for the final segment
    signals::SignalPlan plan;
};

struct SignalTimetable {
    SignalId signal_id = 0;
    NodeId node = 0;
    std::vector<PlanSegment> segments;
};

// Scenario capacity override: replaces the movement's base capacity
// factor inside [start_s, end_s).
struct CapacityWindow {
    MovementId movement = 0;
    double factor = 1.0;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct KernelInputs {
    std::vector<SignalTimetable> signals;
    std::vector<signals::CrossingWindow> crossings;
    std::vector<CapacityWindow> capacity_windows;
};

KernelInputs wrap_plans(const std::vector<signals::SignalPlan>& plans,
                        const std::vector<signals::CrossingWindow>& crossings = {});

struct KernelOptions {
    bool record_event_log = false;
    bool check_invariants = true;
};

enum class TripEndState { NotDeparted, WaitingAtOrigin, EnRoute, Arrived };

struct TripOutcome {
    VehicleId vehicle_id = 0;
    NodeId origin = 0;
    NodeId destination = 0;
    double departure_s = 0.0;
    std::optional<double> entered_s;  // first link entry
    std::optional<double> arrive_s;
    double origin_wait_s = 0.0;  // censored at clock end for unentered vehicles
    double free_flow_s = 0.0;
    TripEndState end_state = TripEndState::NotDeparted;
};

struct LinkLog {
    std::vector<std::pair<VehicleId, double>> entries;  // in entry order
    std::vector<std::pair<VehicleId, double>> exits;    // in exit order (== entry order)
};

struct SimResult {
    std::vector<TripOutcome> trips;
    std::map<LinkId, LinkLog> link_logs;
    std::uint64_t event_count = 0;
    double clock_end_s = 0.0;
    std::vector<std::string> event_log;  // populated when record_event_log is set
};

// Newell lower-bound composition for a vehicle holding a link, with a
// constant capacity factor and an optional fixed-time gate: max of
// (entry + free-flow time) and (last exit + discharge headway), pushed to
// the next green start of the gating movement when one is given.
double earliest_exit_time(double entry_s, const netgraph::LinkRecord& l,
                          std::optional<double> last_exit_s, double capacity_factor,
                          const signals::SignalPlan* gate_plan, MovementId gate_movement);

struct EntryPermission {
    enum class Kind { Unconstrained, At, Unresolved } kind = Kind::Unconstrained;
    double time_s = 0.0;  // meaningful for Kind::At
};

// Backward-wave entry constraint: the m-th entrant (1-based) of a link is
// unconstrained while m <= floor(storage); beyond that it may enter only
// once the hole opened by the (m - floor(storage))-th exit has travelled
// the link length at the backward wave speed. Unresolved when that exit
// has not happened yet.
EntryPermission entry_permission_time(std::int64_t entry_seq,
                                      const netgraph::LinkRecord& downstream,
                                      std::span<const double> exit_times);

// Runs the event-driven kernel until every vehicle has arrived or the
// horizon fires. Deterministic: equal inputs give identical results and
// byte-identical event logs. Throws InputError on invalid inputs
// (horizon <= 0, unvalidated network, broken routes or plans).
SimResult run_simulation(const netgraph::NetworkGraph& net,
                         const std::vector<TripRequest>& trips, const KernelInputs& inputs,
                         double horizon_s, const KernelOptions& opts = {});

SimResult run_simulation(const netgraph::NetworkGraph& net,
                         const std::vector<TripRequest>& trips,
                         const std::vector<signals::SignalPlan>& plans, double horizon_s,
                         const KernelOptions& opts = {});

}  // namespace campusflow::simcore

#endif
