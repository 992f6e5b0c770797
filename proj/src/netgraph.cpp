#include "campusflow/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "campusflow/errors.hpp"

namespace campusflow::netgraph {

double free_flow_time(const LinkRecord& l) {
    return l.length_m / l.free_flow_speed_mps;
}

double storage_capacity(const LinkRecord& l) {
    return l.length_m * l.lanes * l.jam_density_per_lane_vpm;
}

double derived_backward_wave_speed(double sat_flow_per_lane_vps,
                                   double jam_density_per_lane_vpm,
                                   double free_flow_speed_mps) {
    const double congested_density =
        jam_density_per_lane_vpm - sat_flow_per_lane_vps / free_flow_speed_mps;
    return sat_flow_per_lane_vps / congested_density;
}

void NetworkGraph::add_node(NodeRecord n) {
    if (node_index_.count(n.id))
        throw InputError("duplicate node id " + std::to_string(n.id));
    if (n.lon < -180.0 || n.lon > 180.0)
        throw InputError("node " + std::to_string(n.id) + ": lon out of range");
    if (n.lat < -90.0 || n.lat > 90.0)
        throw InputError("node " + std::to_string(n.id) + ": lat out of range");
    node_index_[n.id] = nodes_.size();
    nodes_.push_back(std::move(n));
}

void NetworkGraph::add_link(LinkRecord l) {
    const std::string tag = "link " + std::to_string(l.id);
    if (link_index_.count(l.id)) throw InputError("duplicate " + tag);
    if (!has_node(l.from_node))
        throw InputError(tag + ": missing endpoint node " + std::to_string(l.from_node));
    if (!has_node(l.to_node))
        throw InputError(tag + ": missing endpoint node " + std::to_string(l.to_node));
    if (l.from_node == l.to_node) throw InputError(tag + ": self loop rejected");
    if (!(l.length_m >= 1.0)) throw InputError(tag + ": length must be >= 1 m");
    if (!(l.free_flow_speed_mps > 0.0)) throw InputError(tag + ": nonpositive speed");
    if (l.lanes < 1) throw InputError(tag + ": lanes must be >= 1");
    if (!(l.sat_flow_per_lane_vps > 0.0)) throw InputError(tag + ": nonpositive saturation flow");
    if (!(l.jam_density_per_lane_vpm > 0.0)) throw InputError(tag + ": nonpositive jam density");
    if (!(l.sat_flow_per_lane_vps <
          l.free_flow_speed_mps * l.jam_density_per_lane_vpm))
        throw InputError(tag + ": fundamental diagram ill-formed (sat flow >= v_f * k_j)");
    if (l.backward_wave_speed_mps == 0.0)
        l.backward_wave_speed_mps = derived_backward_wave_speed(
            l.sat_flow_per_lane_vps, l.jam_density_per_lane_vpm, l.free_flow_speed_mps);
    if (!(l.backward_wave_speed_mps > 0.0))
        throw InputError(tag + ": nonpositive backward wave speed");
    link_index_[l.id] = links_.size();
    links_.push_back(std::move(l));
}

void NetworkGraph::add_movement(TurnMovement m) {
    const std::string tag = "movement " + std::to_string(m.id);
    if (movement_index_.count(m.id)) throw InputError("duplicate " + tag);
    if (!has_link(m.in_link))
        throw InputError(tag + ": missing in link " + std::to_string(m.in_link));
    if (!has_link(m.out_link))
        throw InputError(tag + ": missing out link " + std::to_string(m.out_link));
    if (link(m.in_link).to_node != link(m.out_link).from_node)
        throw InputError(tag + ": links do not meet at a junction");
    if (!(m.capacity_factor > 0.0 && m.capacity_factor <= 1.0))
        throw InputError(tag + ": capacity factor outside (0, 1]");
    const auto pair = std::make_pair(m.in_link, m.out_link);
    if (movement_pair_index_.count(pair))
        throw InputError(tag + ": duplicate movement for link pair " +
                         std::to_string(m.in_link) + "->" + std::to_string(m.out_link));
    movement_pair_index_[pair] = movements_.size();
    movement_index_[m.id] = movements_.size();
    movements_.push_back(m);
}

const NodeRecord& NetworkGraph::node(NodeId id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end())
        throw InputError("unknown node id " + std::to_string(id));
    return nodes_[it->second];
}

const LinkRecord& NetworkGraph::link(LinkId id) const {
    auto it = link_index_.find(id);
    if (it == link_index_.end())
        throw InputError("unknown link id " + std::to_string(id));
    return links_[it->second];
}

const TurnMovement& NetworkGraph::movement(MovementId id) const {
    auto it = movement_index_.find(id);
    if (it == movement_index_.end())
        throw InputError("unknown movement id " + std::to_string(id));
    return movements_[it->second];
}

const TurnMovement* NetworkGraph::find_movement(LinkId in_link, LinkId out_link) const {
    auto it = movement_pair_index_.find(std::make_pair(in_link, out_link));
    return it == movement_pair_index_.end() ? nullptr : &movements_[it->second];
}

std::vector<LinkId> NetworkGraph::out_links(NodeId node) const {
    std::vector<LinkId> out;
    for (const auto& l : links_)
        if (l.from_node == node) out.push_back(l.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<LinkId> NetworkGraph::in_links(NodeId node) const {
    std::vector<LinkId> in;
    for (const auto& l : links_)
        if (l.to_node == node) in.push_back(l.id);
    std::sort(in.begin(), in.end());
    return in;
}

std::vector<MovementId> NetworkGraph::movements_from(LinkId link) const {
    std::vector<std::pair<LinkId, MovementId>> out;
    for (const auto& m : movements_)
        if (m.in_link == link) out.emplace_back(m.out_link, m.id);
    std::sort(out.begin(), out.end());
    std::vector<MovementId> ids;
    ids.reserve(out.size());
    for (const auto& [_, id] : out) ids.push_back(id);
    return ids;
}

std::vector<std::string> validate_network(const NetworkGraph& net) {
    std::vector<std::string> report;
    std::set<NodeId> touched;
    for (const auto& l : net.links()) {
        if (!net.has_node(l.from_node))
            report.push_back("link " + std::to_string(l.id) + " references absent node " +
                             std::to_string(l.from_node));
        else
            touched.insert(l.from_node);
        if (!net.has_node(l.to_node))
            report.push_back("link " + std::to_string(l.id) + " references absent node " +
                             std::to_string(l.to_node));
        else
            touched.insert(l.to_node);
        if (storage_capacity(l) < 1.0)
            report.push_back("link " + std::to_string(l.id) + " storage < 1 vehicle (" +
                             std::to_string(storage_capacity(l)) + ")");
    }
    for (const auto& n : net.nodes())
        if (!touched.count(n.id))
            report.push_back("node " + std::to_string(n.id) + " has no incident links");
    for (const auto& m : net.movements()) {
        if (!net.has_link(m.in_link) || !net.has_link(m.out_link)) {
            report.push_back("movement " + std::to_string(m.id) + " references absent link");
            continue;
        }
        if (net.link(m.in_link).to_node != net.link(m.out_link).from_node)
            report.push_back("movement " + std::to_string(m.id) +
                             " joins links that do not meet at a junction");
    }
    return report;
}

namespace {

// Cost from the downstream end of each link to dest, over movement edges.
std::map<LinkId, double> cost_to_destination(const NetworkGraph& net, NodeId dest) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::map<LinkId, double> dist;
    for (const auto& l : net.links())
        dist[l.id] = (l.to_node == dest) ? 0.0 : inf;

    // Reverse adjacency: movement in->out lets "in" reach dest through "out".
    std::map<LinkId, std::vector<LinkId>> preds;
    for (const auto& m : net.movements()) preds[m.out_link].push_back(m.in_link);

    using Item = std::pair<double, LinkId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    for (const auto& [id, d] : dist)
        if (d == 0.0) pq.emplace(0.0, id);
    while (!pq.empty()) {
        auto [d, id] = pq.top();
        pq.pop();
        if (d > dist[id]) continue;
        auto it = preds.find(id);
        if (it == preds.end()) continue;
        const double through = d + free_flow_time(net.link(id));
        for (LinkId p : it->second) {
            if (through < dist[p]) {
                dist[p] = through;
                pq.emplace(through, p);
            }
        }
    }
    return dist;
}

}  // namespace

PathResult shortest_path(const NetworkGraph& net, NodeId origin, NodeId dest) {
    PathResult result;
    if (!net.has_node(origin) || !net.has_node(dest)) return result;
    if (origin == dest) return result;  // zero-length trips are not modeled

    const auto to_dest = cost_to_destination(net, dest);
    constexpr double inf = std::numeric_limits<double>::infinity();

    // Best total over candidate first links; exact-equality ties go to the
    // smaller link id, which the ascending out_links order provides.
    double best = inf;
    LinkId first = -1;
    for (LinkId cand : net.out_links(origin)) {
        const double total = free_flow_time(net.link(cand)) + to_dest.at(cand);
        if (total < best) {
            best = total;
            first = cand;
        }
    }
    if (first < 0 || !(best < inf)) return result;

    // Greedy lexicographic reconstruction: extend with the smallest link id
    // that still lies on a minimum-cost completion.
    result.found = true;
    result.cost_s = best;
    LinkId cur = first;
    result.links.push_back(cur);
    while (true) {
        const double remaining = to_dest.at(cur);
        if (net.link(cur).to_node == dest && remaining == 0.0) break;
        LinkId next = -1;
        for (MovementId mid : net.movements_from(cur)) {
            const LinkId out = net.movement(mid).out_link;
            if (free_flow_time(net.link(out)) + to_dest.at(out) == remaining) {
                next = out;
                break;  // movements_from is sorted by out link id
            }
        }
        if (next < 0)
            throw InternalError("shortest_path reconstruction lost the optimal path");
        cur = next;
        result.links.push_back(cur);
    }
    return result;
}

}  // namespace campusflow::netgraph
