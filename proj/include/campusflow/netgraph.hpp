#ifndef CAMPUSFLOW_NETGRAPH_HPP
#define CAMPUSFLOW_NETGRAPH_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace campusflow::netgraph {

using NodeId = std::int64_t;
using LinkId = std::int64_t;
using MovementId = std::int64_t;

struct NodeRecord {
    NodeId id = 0;
    double lon = 0.0;  // degrees, [-180, 180]
    double lat = 0.0;  // degrees, [-90, 90]
    bool signalized = false;
    std::string name;  // optional junction label
};

// A homogeneous directed road segment with triangular-fundamental-diagram
// flow parameters. Per-lane quantities; lanes act as a multiplier on
// capacity and storage only.
struct LinkRecord {
    LinkId id = 0;
    NodeId from_node = 0;
    NodeId to_node = 0;
    double length_m = 0.0;
    double free_flow_speed_mps = 0.0;
    int lanes = 1;
    double sat_flow_per_lane_vps = 0.0;
    double jam_density_per_lane_vpm = 0.0;
    double backward_wave_speed_mps = 0.0;  // derived when 0 is passed to add_link
    std::string road_class;
};

// Permitted in-link -> out-link transition at a junction. capacity_factor
// scales the discharge rate of the movement (turning pockets, crossings).
struct TurnMovement {
    MovementId id = 0;
    LinkId in_link = 0;
    LinkId out_link = 0;
    double capacity_factor = 1.0;  // (0, 1]
};

double free_flow_time(const LinkRecord& l);
double storage_capacity(const LinkRecord& l);

// Congested-branch wave speed of the triangular fundamental diagram,
// w = q / (k_j - q/v_f), with per-lane q and k_j.
double derived_backward_wave_speed(double sat_flow_per_lane_vps,
                                   double jam_density_per_lane_vpm,
                                   double free_flow_speed_mps);

class NetworkGraph {
public:
    // All three throw InputError on violated preconditions, naming the
    // offending id. add_link derives backward_wave_speed_mps when the
    // field is 0.
    void add_node(NodeRecord n);
    void add_link(LinkRecord l);
    void add_movement(TurnMovement m);

    bool has_node(NodeId id) const { return node_index_.count(id) != 0; }
    bool has_link(LinkId id) const { return link_index_.count(id) != 0; }
    bool has_movement(MovementId id) const { return movement_index_.count(id) != 0; }

    const NodeRecord& node(NodeId id) const;
    const LinkRecord& link(LinkId id) const;
    const TurnMovement& movement(MovementId id) const;

    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    const std::vector<LinkRecord>& links() const { return links_; }
    const std::vector<TurnMovement>& movements() const { return movements_; }

    // nullptr when the pair has no movement.
    const TurnMovement* find_movement(LinkId in_link, LinkId out_link) const;

    // Link ids sorted ascending.
    std::vector<LinkId> out_links(NodeId node) const;
    std::vector<LinkId> in_links(NodeId node) const;
    // Movements whose in_link is the given link, sorted by out_link id.
    std::vector<MovementId> movements_from(LinkId link) const;

private:
    std::vector<NodeRecord> nodes_;
    std::vector<LinkRecord> links_;
    std::vector<TurnMovement> movements_;
    std::map<NodeId, std::size_t> node_index_;
    std::map<LinkId, std::size_t> link_index_;
    std::map<MovementId, std::size_t> movement_index_;
    std::map<std::pair<LinkId, LinkId>, std::size_t> movement_pair_index_;
};

// Consistency gate run before simulation. Empty report <=> simulatable.
// Reported violations: dangling node/link references, storage capacity
// below one vehicle, nodes without incident links, movements whose links
// do not meet at a junction.
std::vector<std::string> validate_network(const NetworkGraph& net);

struct PathResult {
    bool found = false;
    std::vector<LinkId> links;
    double cost_s = 0.0;
};

// Minimum free-flow-time path from origin to dest. Consecutive links must
// be joined by a turn movement; the first link needs none. Cost ties are
// broken by the lexicographically smallest link-id sequence.
PathResult shortest_path(const NetworkGraph& net, NodeId origin, NodeId dest);

}  // namespace campusflow::netgraph

#endif
