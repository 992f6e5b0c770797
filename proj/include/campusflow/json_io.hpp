#ifndef CAMPUSFLOW_JSON_IO_HPP
#define CAMPUSFLOW_JSON_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "campusflow/demand.hpp"
#include "campusflow/netgraph.hpp"
#include "campusflow/signals.hpp"

namespace campusflow::json_io {

// Network file: {nodes:[...], links:[...], movements:[...]}. Link speeds
// are km/h in files (field speed_kmh) and m/s in memory; omitted flow
// parameters fall back to the defaults table (sat flow 0.5 veh/s/lane,
// jam density 0.15 veh/m/lane, wave speed derived).
netgraph::NetworkGraph load_network(const std::string& json_text);
std::string save_network(const netgraph::NetworkGraph& net);

// Demand file: [{origin, destination, profile:[{start_s,end_s,rate_vph}]}].
// Rates are vehicles/hour in files, vehicles/second in memory.
std::vector<demand::ODPair> load_demand(const std::string& json_text);

struct SignalFile {
    std::vector<signals::SignalPlan> plans;
    std::vector<signals::CrossingWindow> crossings;
};

// Signal file: {plans:[{signal_id,node,cycle_s,offset_s,lost_time_s,
// phases:[{green_s,movements:[...]}]}], crossings:[...]}. Offsets outside
// [0, cycle) are normalized with a warning.
SignalFile load_signals(const std::string& json_text);

std::map<std::string, netgraph::NodeId> load_alias_table(const std::string& json_text);

// Shared with scenario documents, which embed full plans as overrides.
signals::SignalPlan plan_from_json_text(const std::string& json_text);
std::string plan_to_json_text(const signals::SignalPlan& plan);

}  // namespace campusflow::json_io

#endif
