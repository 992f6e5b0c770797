#ifndef CAMPUSFLOW_SIGNALS_HPP
#define CAMPUSFLOW_SIGNALS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "campusflow/netgraph.hpp"

namespace campusflow::signals {

using netgraph::MovementId;
using netgraph::NodeId;
using SignalId = std::int64_t;

struct Phase {
    double green_s = 0.0;  // > 0
    std::vector<MovementId> movements;
};

// Fixed-time plan. Phases occupy consecutive half-open windows
// [start, start + green) within the cycle, separated by lost_time_s of
// all-red clearance; sum of greens plus per-phase lost time equals the
// cycle exactly.
struct SignalPlan {
    SignalId signal_id = 0;
    NodeId node = 0;
    double cycle_s = 0.0;
    double offset_s = 0.0;  // [0, cycle_s)
    double lost_time_s = 0.0;
    std::vector<Phase> phases;
};

// Periodic capacity reduction on one movement (pedestrian crossing
// windows). While (t mod period) < active, the movement's effective
// capacity factor is base * factor.
struct CrossingWindow {
    MovementId movement = 0;
    double period_s = 0.0;
    double active_s = 0.0;  // <= period_s
    double factor = 0.0;    // [0, 1)
};

struct PlanReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool ok() const { return violations.empty(); }
};

// Structural checks (cycle sum, positive greens, offset range, movement
// listed in at most one phase). The overload with a network also checks
// that phase movements share the plan's junction and warns about
// permanently red movements at that junction.
PlanReport validate_plan(const SignalPlan& p);
PlanReport validate_plan(const SignalPlan& p, const netgraph::NetworkGraph& net);

bool is_green(const SignalPlan& p, MovementId m, double t);

// Smallest t' >= t at which m is green: t itself when already green,
// otherwise the next green-window start. Exact window arithmetic, no
// search. Throws InputError when m is listed in no phase (permanent red).
double next_green_start(const SignalPlan& p, MovementId m, double t);

double crossing_capacity_factor(const CrossingWindow& w, double t);

std::vector<std::string> validate_crossing(const CrossingWindow& w);

}  // namespace campusflow::signals

#endif
