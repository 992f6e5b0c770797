#ifndef CAMPUSFLOW_OSM_INGEST_HPP
#define CAMPUSFLOW_OSM_INGEST_HPP

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "campusflow/netgraph.hpp"

namespace campusflow::osm {

struct OsmNode {
    double lon = 0.0;
    double lat = 0.0;
    std::map<std::string, std::string> tags;
};

struct OsmWay {
    std::vector<std::int64_t> node_refs;
    std::map<std::string, std::string> tags;
};

struct RawOsm {
    std::map<std::int64_t, OsmNode> nodes;
    std::map<std::int64_t, OsmWay> ways;  // highway-tagged ways only
    std::vector<std::string> warnings;
};

struct BoundingBox {
    double min_lon = 0.0;
    double min_lat = 0.0;
    double max_lon = 0.0;
    double max_lat = 0.0;
};

// Per-class attribute defaults applied when a way carries no explicit
// maxspeed/lanes tags.
struct ClassParams {
    double speed_kmh = 0.0;
    int lanes = 1;
    double sat_flow_per_lane_vps = 0.0;
    double jam_density_per_lane_vpm = 0.0;
};

struct ClassDefaults {
    std::map<std::string, ClassParams> classes;
    std::map<std::string, std::string> aliases;  // e.g. trunk -> motorway
    std::vector<std::string> ignored;            // non-vehicular highway values

    // Canonical class name for a highway tag value; empty when the value
    // is in the ignore set. Throws InputError for unknown classes.
    std::string resolve(const std::string& highway_value) const;
};

ClassDefaults shipped_class_defaults();

// Parses OSM XML (node/way/nd/tag elements). Keeps every node and every
// highway-tagged way; drops way references to undeclared nodes with a
// warning. Throws InputError with a byte offset on malformed XML.
RawOsm parse_osm(std::string_view document);

// Drops nodes outside the box (inclusive bounds), then cuts each way into
// maximal runs of surviving consecutive nodes; runs shorter than two nodes
// are dropped, extra runs get fresh way ids.
RawOsm filter_bbox(const RawOsm& raw, const BoundingBox& bbox);

// Great-circle distance, Earth radius 6,371,000 m.
double haversine_length(double lon_a, double lat_a, double lon_b, double lat_b);

// Directed link per consecutive node pair (both directions unless
// oneway=yes), class defaults with per-way tag overrides, movements for
// all feasible in/out pairs minus U-turns (unless allow_uturns).
netgraph::NetworkGraph build_graph(const RawOsm& raw, const ClassDefaults& defaults,
                                   bool allow_uturns = false);

// Removes non-signalized pass-through nodes whose incident links have
// homogeneous attributes, merging the links with summed lengths.
// Free-flow path costs between surviving nodes are preserved.
netgraph::NetworkGraph simplify_chains(const netgraph::NetworkGraph& net);

}  // namespace campusflow::osm

#endif
