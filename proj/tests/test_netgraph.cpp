#include <doctest.h>

#include <algorithm>
#include <limits>
#include <set>

#include "campusflow/errors.hpp"
#include "campusflow/netgraph.hpp"
#include "support/fixtures.hpp"

using namespace campusflow;
using netgraph::LinkId;
using netgraph::NodeId;

namespace {

netgraph::NodeRecord node(NodeId id) {
    netgraph::NodeRecord n;
    n.id = id;
    return n;
}

netgraph::LinkRecord link(LinkId id, NodeId from, NodeId to, double length = 100.0,
                          double speed = 10.0) {
    netgraph::LinkRecord l;
    l.id = id;
    l.from_node = from;
    l.to_node = to;
    l.length_m = length;
    l.free_flow_speed_mps = speed;
    l.lanes = 1;
    l.sat_flow_per_lane_vps = 0.5;
    l.jam_density_per_lane_vpm = 0.15;
    return l;
}

// Exhaustive simple-path enumeration over movement-joined link sequences.
void enumerate_paths(const netgraph::NetworkGraph& net, LinkId cur, NodeId dest, double cost,
                     std::set<LinkId>& used, double& best) {
    cost += netgraph::free_flow_time(net.link(cur));
    if (net.link(cur).to_node == dest) {
        best = std::min(best, cost);
        return;
    }
    for (auto mid : net.movements_from(cur)) {
        const LinkId next = net.movement(mid).out_link;
        if (used.count(next)) continue;
        used.insert(next);
        enumerate_paths(net, next, dest, cost, used, best);
        used.erase(next);
    }
}

double brute_force_cost(const netgraph::NetworkGraph& net, NodeId origin, NodeId dest) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : net.links()) {
        if (l.from_node != origin) continue;
        std::set<LinkId> used{l.id};
        enumerate_paths(net, l.id, dest, 0.0, used, best);
    }
    return best;
}

}  // namespace

TEST_CASE("add_node basics") {
    netgraph::NetworkGraph net;
    net.add_node(node(1));
    CHECK(net.nodes().size() == 1);
    CHECK_THROWS_WITH_AS(net.add_node(node(1)), doctest::Contains("1"), InputError);
    net.add_node(node(2));
    CHECK(net.nodes().size() == 2);
    CHECK(net.links().empty());
}

TEST_CASE("add_link accepts a valid link and rejects broken ones") {
    netgraph::NetworkGraph net;
    net.add_node(node(1));
    net.add_node(node(2));
    net.add_link(link(1, 1, 2));
    CHECK(net.has_link(1));

    // fundamental diagram: sat flow must stay below v_f * k_j
    auto bad = link(2, 1, 2);
    bad.jam_density_per_lane_vpm = 0.1;
    bad.sat_flow_per_lane_vps = 2.0;
    CHECK_THROWS_AS(net.add_link(bad), InputError);

    auto self_loop = link(3, 1, 1);
    CHECK_THROWS_WITH_AS(net.add_link(self_loop), doctest::Contains("self loop"), InputError);

    auto dangling = link(4, 1, 99);
    CHECK_THROWS_WITH_AS(net.add_link(dangling), doctest::Contains("99"), InputError);
}

TEST_CASE("free_flow_time arithmetic") {
    CHECK(netgraph::free_flow_time(link(1, 1, 2, 100.0, 10.0)) == doctest::Approx(10.0));
    CHECK(netgraph::free_flow_time(link(1, 1, 2, 250.0, 12.5)) == doctest::Approx(20.0));
    CHECK(netgraph::free_flow_time(link(1, 1, 2, 1.0, 1000.0)) == doctest::Approx(0.001));
}

TEST_CASE("storage_capacity arithmetic") {
    auto l = link(1, 1, 2, 100.0, 10.0);
    l.lanes = 2;
    CHECK(netgraph::storage_capacity(l) == doctest::Approx(30.0));
    l.lanes = 1;
    l.length_m = 50.0;
    CHECK(netgraph::storage_capacity(l) == doctest::Approx(7.5));
    l.length_m = 1.0;
    CHECK(netgraph::storage_capacity(l) == doctest::Approx(0.15));
}

TEST_CASE("purity of derived quantities") {
    const auto l = link(1, 1, 2, 123.0, 7.0);
    CHECK(netgraph::free_flow_time(l) == netgraph::free_flow_time(l));
    CHECK(netgraph::storage_capacity(l) == netgraph::storage_capacity(l));
}

TEST_CASE("validate_network") {
    netgraph::NetworkGraph net;
    net.add_node(node(1));
    net.add_node(node(2));
    net.add_link(link(1, 1, 2));
    CHECK(netgraph::validate_network(net).empty());

    // storage below one vehicle
    net.add_link(link(2, 2, 1, 1.0, 10.0));
    auto report = netgraph::validate_network(net);
    REQUIRE(report.size() == 1);
    CHECK(report[0].find("storage") != std::string::npos);

    // isolated node
    netgraph::NetworkGraph net2;
    net2.add_node(node(1));
    net2.add_node(node(2));
    net2.add_node(node(7));
    net2.add_link(link(1, 1, 2));
    auto report2 = netgraph::validate_network(net2);
    REQUIRE(report2.size() == 1);
    CHECK(report2[0].find("7") != std::string::npos);
}

TEST_CASE("movement preconditions") {
    netgraph::NetworkGraph net;
    net.add_node(node(1));
    net.add_node(node(2));
    net.add_node(node(3));
    net.add_link(link(1, 1, 2));
    net.add_link(link(2, 2, 3));
    net.add_movement({1, 1, 2, 1.0});
    CHECK_THROWS_AS(net.add_movement({2, 1, 2, 1.0}), InputError);   // duplicate pair
    CHECK_THROWS_AS(net.add_movement({3, 2, 1, 1.0}), InputError);   // links do not meet
    CHECK_THROWS_AS(net.add_movement({4, 1, 2, 0.0}), InputError);   // factor out of range
}

TEST_CASE("shortest_path single link and unreachable") {
    netgraph::NetworkGraph net;
    net.add_node(node(1));
    net.add_node(node(2));
    net.add_link(link(1, 1, 2));
    const auto r = netgraph::shortest_path(net, 1, 2);
    REQUIRE(r.found);
    CHECK(r.links == std::vector<LinkId>{1});
    CHECK(r.cost_s == doctest::Approx(10.0));

    CHECK_FALSE(netgraph::shortest_path(net, 2, 1).found);  // dest without incoming links
}

TEST_CASE("shortest_path triangle beats the direct link") {
    // A->B 10 s, B->C 10 s, A->C 25 s, all movements present
    netgraph::NetworkGraph net;
    for (NodeId n : {1, 2, 3}) net.add_node(node(n));
    net.add_link(link(1, 1, 2, 100.0, 10.0));
    net.add_link(link(2, 2, 3, 100.0, 10.0));
    net.add_link(link(3, 1, 3, 250.0, 10.0));
    net.add_movement({1, 1, 2, 1.0});

    const auto r = netgraph::shortest_path(net, 1, 3);
    REQUIRE(r.found);
    CHECK(r.links == std::vector<LinkId>{1, 2});
    CHECK(r.cost_s == doctest::Approx(20.0));
    CHECK(r.cost_s <= brute_force_cost(net, 1, 3) + 1e-9);
}

TEST_CASE("shortest_path respects turn movements") {
    // Two-link chain without a connecting movement is not a path.
    netgraph::NetworkGraph net;
    for (NodeId n : {1, 2, 3}) net.add_node(node(n));
    net.add_link(link(1, 1, 2));
    net.add_link(link(2, 2, 3));
    CHECK_FALSE(netgraph::shortest_path(net, 1, 3).found);
    net.add_movement({1, 1, 2, 1.0});
    CHECK(netgraph::shortest_path(net, 1, 3).found);
}

TEST_CASE("shortest_path tie-break picks the smallest link-id sequence") {
    // Two parallel equal-cost two-hop routes through nodes 2 and 3.
    netgraph::NetworkGraph net;
    for (NodeId n : {1, 2, 3, 4}) net.add_node(node(n));
    net.add_link(link(1, 1, 2, 100.0, 10.0));
    net.add_link(link(2, 1, 3, 100.0, 10.0));
    net.add_link(link(3, 2, 4, 100.0, 10.0));
    net.add_link(link(4, 3, 4, 100.0, 10.0));
    net.add_movement({1, 1, 3, 1.0});
    net.add_movement({2, 2, 4, 1.0});
    const auto r = netgraph::shortest_path(net, 1, 4);
    REQUIRE(r.found);
    CHECK(r.links == std::vector<LinkId>{1, 3});
}

TEST_CASE("shortest_path never beats exhaustive enumeration" *
          doctest::description("random instances vs brute force")) {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto inst = fixtures::random_instance(seed, false, false);
        for (const auto& a : inst.net.nodes())
            for (const auto& b : inst.net.nodes()) {
                if (a.id == b.id) continue;
                const auto r = netgraph::shortest_path(inst.net, a.id, b.id);
                const double brute = brute_force_cost(inst.net, a.id, b.id);
                if (r.found) {
                    REQUIRE(r.cost_s <= brute + 1e-9);
                    REQUIRE(r.cost_s == doctest::Approx(brute).epsilon(1e-9));
                } else {
                    REQUIRE(brute == std::numeric_limits<double>::infinity());
                }
            }
    }
}
