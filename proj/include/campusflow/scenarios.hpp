#ifndef CAMPUSFLOW_SCENARIOS_HPP
#define CAMPUSFLOW_SCENARIOS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "campusflow/demand.hpp"
#include "campusflow/metrics.hpp"
#include "campusflow/netgraph.hpp"
#include "campusflow/signals.hpp"
#include "campusflow/simcore.hpp"

namespace campusflow::scenarios {

using demand::ODPair;
using netgraph::MovementId;
using netgraph::NodeId;
using signals::SignalId;

struct TimeWindow {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct PlanOverride {
    signals::SignalPlan plan;
    TimeWindow window;  // defaults to the scenario window at load
};

struct CapacityOverride {
    MovementId movement = 0;
    double factor = 1.0;
    TimeWindow window;
};

// Declarative scenario: demand overlays are added to base demand with
// profiles shifted by the window start; plan overrides replace the same
// signal_id inside their window; capacity overrides replace a movement's
// base factor inside theirs.
struct ScenarioSpec {
    std::string name;
    TimeWindow window;
    std::vector<ODPair> demand_overlays;  // profiles relative to window start
    std::vector<PlanOverride> plan_overrides;
    std::vector<CapacityOverride> capacity_overrides;
};

struct CompositionSpec {
    std::vector<ScenarioSpec> scenarios;
    double gap_s = 0.0;
};

struct MetricDelta {
    std::string metric;
    double baseline = 0.0;
    double variant = 0.0;
    double absolute = 0.0;
    std::optional<double> relative;  // empty when the baseline is zero
};

struct ComparisonReport {
    std::vector<MetricDelta> deltas;
};

using AliasTable = std::map<std::string, NodeId>;

// Parses and validates a scenario JSON document against the network,
// resolving node aliases through the table. Throws InputError naming
// unknown aliases, absent nodes/movements/signals, or malformed windows.
ScenarioSpec load_scenario(const std::string& json_text, const netgraph::NetworkGraph& net,
                           const AliasTable& aliases);

// Base demand plus overlay OD pairs, overlay profiles shifted by the
// scenario window start. Base entries are untouched and keep their order.
std::vector<ODPair> apply_overlays(const std::vector<ODPair>& base, const ScenarioSpec& s);

// Single merged scenario whose parts run back to back with the given gap:
// scenario i+1 is translated to begin at scenario i's translated end plus
// gap_s. Overlapping translated plan overrides for one signal are an error.
ScenarioSpec compose_sequential(const CompositionSpec& c);

ComparisonReport compare_runs(const metrics::NetworkSummary& baseline,
                              const metrics::NetworkSummary& variant);

// Kernel inputs for base plans with this scenario's overrides spliced in
// (pass nullptr for a plain base run).
simcore::KernelInputs assemble_inputs(const std::vector<signals::SignalPlan>& base_plans,
                                      const std::vector<signals::CrossingWindow>& crossings,
                                      const ScenarioSpec* scenario);

}  // namespace campusflow::scenarios

#endif
