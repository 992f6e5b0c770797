#ifndef CAMPUSFLOW_OPTIMIZER_HPP
#define CAMPUSFLOW_OPTIMIZER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "campusflow/demand.hpp"
#include "campusflow/netgraph.hpp"
#include "campusflow/scenarios.hpp"
#include "campusflow/signals.hpp"

namespace campusflow::optimizer {

// Per-signal offset plus per-phase greens, flattened in signal order with
// bounds. Cycle lengths are held fixed; decoded plans always validate.
struct PlanVector {
    struct SignalLayout {
        signals::SignalId signal_id = 0;
        std::size_t offset_index = 0;  // into values
        std::size_t first_green_index = 0;
        std::size_t phase_count = 0;
    };
    std::vector<double> values;
    std::vector<SignalLayout> layout;
    double min_green_s = 5.0;
};

struct OptimizerConfig {
    std::int64_t budget = 200;                      // simulation evaluations
    std::vector<double> step_schedule_s = {8.0, 4.0, 2.0, 1.0};
    double min_green_s = 5.0;
    double incomplete_trip_penalty_s = -1.0;  // < 0: default 2 * horizon per trip
};

struct TraceEntry {
    std::int64_t iteration = 0;
    std::vector<double> values;
    double objective_s = 0.0;
};

struct SearchTrace {
    std::vector<TraceEntry> entries;
    std::int64_t budget = 0;
    std::size_t best_index = 0;
};

// Fixed evaluation context: network, pre-built trips, crossing windows,
// and the scenario whose overrides ride on top of the decoded plans.
struct Objective {
    const netgraph::NetworkGraph* net = nullptr;
    std::vector<demand::TripRequest> trips;
    std::vector<signals::CrossingWindow> crossings;
    const scenarios::ScenarioSpec* scenario = nullptr;  // optional
    double horizon_s = 0.0;
    double incomplete_trip_penalty_s = 0.0;

    // total completed delay + penalty per incomplete trip; deterministic.
    double evaluate(const std::vector<signals::SignalPlan>& plans) const;
};

Objective make_objective(const netgraph::NetworkGraph& net,
                         const std::vector<demand::ODPair>& base_demand,
                         const std::vector<signals::CrossingWindow>& crossings,
                         const scenarios::ScenarioSpec* scenario, double horizon_s,
                         const OptimizerConfig& config);

PlanVector encode_plans(const std::vector<signals::SignalPlan>& plans, double min_green_s);
std::vector<signals::SignalPlan> decode_plans(const PlanVector& v,
                                              const std::vector<signals::SignalPlan>& templates);

double evaluate_plan(const Objective& objective, const PlanVector& v,
                     const std::vector<signals::SignalPlan>& templates);

struct PerturbResult {
    PlanVector vector;
    bool clamped_to_identity = false;
};

// Moves one parameter by step_s in the given direction. Green time is
// donated/received by the same signal's other phases proportionally so the
// cycle is preserved; offsets wrap mod cycle. Bounds clamp the move, and a
// fully annihilated move is flagged.
PerturbResult perturb_plan(const PlanVector& v,
                           const std::vector<signals::SignalPlan>& templates,
                           std::size_t parameter_index, double step_s, int direction);

// Coordinate descent: sweep parameters in order, try +step then -step,
// accept strict improvements; a sweep without acceptance moves to the next
// step in the schedule. Stops at budget exhaustion or schedule end. The
// trace records every evaluation.
SearchTrace hill_climb(const Objective& objective,
                       const std::vector<signals::SignalPlan>& initial_plans,
                       const OptimizerConfig& config);

std::string trace_to_csv(const SearchTrace& trace, const PlanVector& layout_reference,
                         const std::string& seed_comment);

}  // namespace campusflow::optimizer

#endif
