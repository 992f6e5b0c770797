#include "campusflow/osm_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>

#include "campusflow/errors.hpp"
#include "campusflow/log.hpp"

namespace campusflow::osm {

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

// ---------------------------------------------------------------------------
// Minimal strict XML tag scanner. OSM documents only need elements,
// attributes, comments, and the XML declaration; text content is ignored.
// Errors carry the byte offset of the offending input.
// ---------------------------------------------------------------------------
class XmlScanner {
public:
    struct Tag {
        enum class Kind { Open, Close, SelfClose };
        Kind kind = Kind::Open;
        std::string name;
        std::vector<std::pair<std::string, std::string>> attrs;
        std::size_t offset = 0;
    };

    explicit XmlScanner(std::string_view doc) : doc_(doc) {}

    std::optional<Tag> next() {
        while (true) {
            skip_until_angle();
            if (pos_ >= doc_.size()) return std::nullopt;
            const std::size_t at = pos_;
            ++pos_;  // consume '<'
            if (peek() == '?') {
                skip_past("?>", at, "unterminated XML declaration");
                continue;
            }
            if (peek() == '!') {
                if (doc_.compare(pos_, 3, "!--") == 0)
                    skip_past("-->", at, "unterminated comment");
                else
                    skip_past(">", at, "unterminated markup declaration");
                continue;
            }
            return read_tag(at);
        }
    }

    [[noreturn]] void fail(const std::string& what, std::size_t at) const {
        throw InputError("OSM XML parse error at byte " + std::to_string(at) + ": " + what);
    }

private:
    char peek() const { return pos_ < doc_.size() ? doc_[pos_] : '\0'; }

    void skip_until_angle() {
        while (pos_ < doc_.size() && doc_[pos_] != '<') {
            if (doc_[pos_] == '>') fail("stray '>' outside markup", pos_);
            ++pos_;
        }
    }

    void skip_past(std::string_view terminator, std::size_t at, const char* what) {
        const auto found = doc_.find(terminator, pos_);
        if (found == std::string_view::npos) fail(what, at);
        pos_ = found + terminator.size();
    }

    void skip_ws() {
        while (pos_ < doc_.size() && std::isspace(static_cast<unsigned char>(doc_[pos_]))) ++pos_;
    }

    std::string read_name() {
        const std::size_t start = pos_;
        while (pos_ < doc_.size()) {
            const char c = doc_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' ||
                c == '.')
                ++pos_;
            else
                break;
        }
        if (pos_ == start) fail("expected a name", start);
        return std::string(doc_.substr(start, pos_ - start));
    }

    std::string decode_entities(std::string_view raw, std::size_t at) {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size();) {
            if (raw[i] != '&') {
                out += raw[i++];
                continue;
            }
            const auto end = raw.find(';', i);
            if (end == std::string_view::npos) fail("unterminated entity", at + i);
            const std::string_view ent = raw.substr(i + 1, end - i - 1);
            if (ent == "amp") out += '&';
            else if (ent == "lt") out += '<';
            else if (ent == "gt") out += '>';
            else if (ent == "quot") out += '"';
            else if (ent == "apos") out += '\'';
            else if (!ent.empty() && ent[0] == '#') {
                int code = 0;
                const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
                const auto* first = ent.data() + (hex ? 2 : 1);
                const auto* last = ent.data() + ent.size();
                if (std::from_chars(first, last, code, hex ? 16 : 10).ptr != last || code <= 0 ||
                    code > 0x10FFFF)
                    fail("bad character reference", at + i);
                if (code < 0x80) out += static_cast<char>(code);
                else fail("non-ASCII character reference unsupported", at + i);
            } else {
                fail("unknown entity '" + std::string(ent) + "'", at + i);
            }
            i = end + 1;
        }
        return out;
    }

    Tag read_tag(std::size_t at) {
        Tag tag;
        tag.offset = at;
        if (peek() == '/') {
            ++pos_;
            tag.kind = Tag::Kind::Close;
            tag.name = read_name();
            skip_ws();
            if (peek() != '>') fail("malformed closing tag", at);
            ++pos_;
            return tag;
        }
        tag.name = read_name();
        while (true) {
            skip_ws();
            const char c = peek();
            if (c == '>') {
                ++pos_;
                tag.kind = Tag::Kind::Open;
                return tag;
            }
            if (c == '/') {
                ++pos_;
                if (peek() != '>') fail("malformed self-closing tag", pos_);
                ++pos_;
                tag.kind = Tag::Kind::SelfClose;
                return tag;
            }
            if (c == '\0') fail("truncated tag", at);
            const std::string attr = read_name();
            skip_ws();
            if (peek() != '=') fail("attribute '" + attr + "' without value", pos_);
            ++pos_;
            skip_ws();
            const char quote = peek();
            if (quote != '"' && quote != '\'') fail("unquoted attribute value", pos_);
            ++pos_;
            const std::size_t vstart = pos_;
            while (pos_ < doc_.size() && doc_[pos_] != quote) ++pos_;
            if (pos_ >= doc_.size()) fail("unterminated attribute value", vstart);
            tag.attrs.emplace_back(attr,
                                   decode_entities(doc_.substr(vstart, pos_ - vstart), vstart));
            ++pos_;  // closing quote
        }
    }

    std::string_view doc_;
    std::size_t pos_ = 0;
};

const std::string* find_attr(const XmlScanner::Tag& tag, std::string_view name) {
    for (const auto& [k, v] : tag.attrs)
        if (k == name) return &v;
    return nullptr;
}

std::int64_t parse_i64(const XmlScanner& sc, const XmlScanner::Tag& tag, std::string_view attr) {
    const auto* v = find_attr(tag, attr);
    if (!v) sc.fail("<" + tag.name + "> missing attribute '" + std::string(attr) + "'", tag.offset);
    std::int64_t out = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc{} || res.ptr != v->data() + v->size())
        sc.fail("bad integer in attribute '" + std::string(attr) + "'", tag.offset);
    return out;
}

double parse_f64(const XmlScanner& sc, const XmlScanner::Tag& tag, std::string_view attr) {
    const auto* v = find_attr(tag, attr);
    if (!v) sc.fail("<" + tag.name + "> missing attribute '" + std::string(attr) + "'", tag.offset);
    double out = 0.0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc{} || res.ptr != v->data() + v->size())
        sc.fail("bad number in attribute '" + std::string(attr) + "'", tag.offset);
    return out;
}

}  // namespace

std::string ClassDefaults::resolve(const std::string& highway_value) const {
    if (classes.count(highway_value)) return highway_value;
    if (const auto it = aliases.find(highway_value); it != aliases.end()) return it->second;
    if (std::find(ignored.begin(), ignored.end(), highway_value) != ignored.end()) return {};
    throw InputError("no class defaults for road class '" + highway_value + "'");
}

ClassDefaults shipped_class_defaults() {
    ClassDefaults d;
    constexpr double sat = 0.5;   // veh/s/lane
    constexpr double jam = 0.15;  // veh/m/lane
    d.classes["motorway"] = ClassParams{80.0, 3, sat, jam};
    d.classes["primary"] = ClassParams{50.0, 2, sat, jam};
    d.classes["secondary"] = ClassParams{40.0, 2, sat, jam};
    d.classes["residential"] = ClassParams{30.0, 1, sat, jam};
    d.classes["service"] = ClassParams{20.0, 1, sat, jam};
    d.aliases["trunk"] = "motorway";
    d.aliases["motorway_link"] = "service";
    d.aliases["trunk_link"] = "service";
    d.aliases["primary_link"] = "service";
    d.aliases["secondary_link"] = "service";
    d.aliases["tertiary"] = "secondary";
    d.aliases["tertiary_link"] = "service";
    d.aliases["unclassified"] = "residential";
    d.aliases["living_street"] = "service";
    d.aliases["road"] = "residential";
    d.ignored = {"footway", "path", "cycleway", "steps",    "pedestrian", "corridor",
                 "platform", "construction", "proposed", "track", "bridleway", "elevator"};
    return d;
}

RawOsm parse_osm(std::string_view document) {
    RawOsm raw;
    XmlScanner sc(document);
    std::vector<std::string> stack;

    std::optional<std::int64_t> open_node;
    std::optional<std::int64_t> open_way;
    OsmWay pending_way;

    auto handle = [&](const XmlScanner::Tag& tag, bool leaf_only) {
        if (tag.name == "node") {
            OsmNode n;
            const std::int64_t id = parse_i64(sc, tag, "id");
            n.lat = parse_f64(sc, tag, "lat");
            n.lon = parse_f64(sc, tag, "lon");
            if (!raw.nodes.emplace(id, std::move(n)).second)
                raw.warnings.push_back("duplicate node " + std::to_string(id) + ", keeping first");
            else if (!leaf_only)
                open_node = id;
        } else if (tag.name == "way") {
            pending_way = OsmWay{};
            open_way = parse_i64(sc, tag, "id");
            if (leaf_only) open_way.reset();  // empty way, nothing to keep
        } else if (tag.name == "nd") {
            if (open_way) pending_way.node_refs.push_back(parse_i64(sc, tag, "ref"));
        } else if (tag.name == "tag") {
            const auto* k = find_attr(tag, "k");
            const auto* v = find_attr(tag, "v");
            if (!k || !v) sc.fail("<tag> requires k and v attributes", tag.offset);
            if (open_way) pending_way.tags[*k] = *v;
            else if (open_node) raw.nodes.at(*open_node).tags[*k] = *v;
        }
        // anything else (relation, member, bounds, ...) is ignored
    };

    while (auto tag = sc.next()) {
        switch (tag->kind) {
            case XmlScanner::Tag::Kind::Open:
                handle(*tag, false);
                stack.push_back(tag->name);
                break;
            case XmlScanner::Tag::Kind::SelfClose:
                handle(*tag, true);
                break;
            case XmlScanner::Tag::Kind::Close: {
                if (stack.empty() || stack.back() != tag->name)
                    sc.fail("mismatched closing tag </" + tag->name + ">", tag->offset);
                stack.pop_back();
                if (tag->name == "way" && open_way) {
                    if (pending_way.tags.count("highway")) {
                        if (!raw.ways.emplace(*open_way, std::move(pending_way)).second)
                            raw.warnings.push_back("duplicate way " + std::to_string(*open_way) +
                                                   ", keeping first");
                    }
                    open_way.reset();
                } else if (tag->name == "node") {
                    open_node.reset();
                }
                break;
            }
        }
    }
    if (!stack.empty())
        throw InputError("OSM XML parse error at byte " + std::to_string(document.size()) +
                         ": unexpected end of document inside <" + stack.back() + ">");

    // Drop references to undeclared nodes.
    for (auto& [id, way] : raw.ways) {
        auto& refs = way.node_refs;
        const auto unresolved = [&](std::int64_t r) { return raw.nodes.count(r) == 0; };
        for (std::int64_t r : refs)
            if (unresolved(r))
                raw.warnings.push_back("way " + std::to_string(id) +
                                       " references undeclared node " + std::to_string(r) +
                                       "; reference dropped");
        refs.erase(std::remove_if(refs.begin(), refs.end(), unresolved), refs.end());
    }
    return raw;
}

RawOsm filter_bbox(const RawOsm& raw, const BoundingBox& bbox) {
    if (!(bbox.min_lon < bbox.max_lon) || !(bbox.min_lat < bbox.max_lat))
        throw InputError("bounding box must have min < max on both axes");
    RawOsm out;
    out.warnings = raw.warnings;
    for (const auto& [id, n] : raw.nodes) {
        if (n.lon >= bbox.min_lon && n.lon <= bbox.max_lon && n.lat >= bbox.min_lat &&
            n.lat <= bbox.max_lat)
            out.nodes.emplace(id, n);
    }
    std::int64_t next_id = 0;
    for (const auto& [id, w] : raw.ways) next_id = std::max(next_id, id + 1);

    for (const auto& [id, w] : raw.ways) {
        std::vector<std::vector<std::int64_t>> runs(1);
        for (std::int64_t ref : w.node_refs) {
            if (out.nodes.count(ref)) runs.back().push_back(ref);
            else if (!runs.back().empty()) runs.emplace_back();
        }
        bool first = true;
        for (auto& run : runs) {
            if (run.size() < 2) continue;
            OsmWay piece;
            piece.node_refs = std::move(run);
            piece.tags = w.tags;
            out.ways.emplace(first ? id : next_id++, std::move(piece));
            first = false;
        }
    }
    return out;
}

double haversine_length(double lon_a, double lat_a, double lon_b, double lat_b) {
    const double phi_a = lat_a * kDegToRad;
    const double phi_b = lat_b * kDegToRad;
    const double dphi = (lat_b - lat_a) * kDegToRad;
    const double dlambda = (lon_b - lon_a) * kDegToRad;
    const double s = std::sin(dphi / 2.0);
    const double l = std::sin(dlambda / 2.0);
    const double h = s * s + std::cos(phi_a) * std::cos(phi_b) * l * l;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

std::optional<double> parse_maxspeed(const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || out <= 0.0) return std::nullopt;
    std::string rest(res.ptr, v.data() + v.size());
    rest.erase(std::remove(rest.begin(), rest.end(), ' '), rest.end());
    if (!rest.empty() && rest != "km/h" && rest != "kmh" && rest != "kph") return std::nullopt;
    return out;
}

std::optional<int> parse_lanes(const std::string& v) {
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || out < 1) return std::nullopt;
    return out;
}

}  // namespace

netgraph::NetworkGraph build_graph(const RawOsm& raw, const ClassDefaults& defaults,
                                   bool allow_uturns) {
    struct PendingLink {
        std::int64_t from, to;
        double length_m, speed_mps;
        int lanes;
        double sat, jam;
        std::string road_class;
    };
    std::vector<PendingLink> pending;
    std::set<std::int64_t> used_nodes;

    for (const auto& [wid, way] : raw.ways) {
        const std::string cls = defaults.resolve(way.tags.at("highway"));
        if (cls.empty()) continue;  // non-vehicular
        const ClassParams& params = defaults.classes.at(cls);

        double speed_kmh = params.speed_kmh;
        if (const auto it = way.tags.find("maxspeed"); it != way.tags.end()) {
            if (const auto v = parse_maxspeed(it->second)) speed_kmh = *v;
            else log::warn("way " + std::to_string(wid) + ": unparseable maxspeed '" +
                           it->second + "', using class default");
        }
        int lanes = params.lanes;
        if (const auto it = way.tags.find("lanes"); it != way.tags.end()) {
            if (const auto v = parse_lanes(it->second)) lanes = *v;
            else log::warn("way " + std::to_string(wid) + ": unparseable lanes '" + it->second +
                           "', using class default");
        }
        bool forward = true, backward = true;
        if (const auto it = way.tags.find("oneway"); it != way.tags.end()) {
            if (it->second == "yes" || it->second == "true" || it->second == "1") backward = false;
            else if (it->second == "-1") forward = false;
        }

        // One vehicle of storage is the floor the validator demands.
        const double min_length = std::max(1.0, 1.0 / (lanes * params.jam_density_per_lane_vpm));

        for (std::size_t i = 0; i + 1 < way.node_refs.size(); ++i) {
            const std::int64_t a = way.node_refs[i];
            const std::int64_t b = way.node_refs[i + 1];
            if (a == b) continue;
            const auto& na = raw.nodes.at(a);
            const auto& nb = raw.nodes.at(b);
            double length = haversine_length(na.lon, na.lat, nb.lon, nb.lat);
            if (length < min_length) {
                log::debug("segment " + std::to_string(a) + "-" + std::to_string(b) +
                           " shorter than one vehicle of storage, clamping length");
                length = min_length;
            }
            const double speed_mps = speed_kmh / 3.6;
            if (forward)
                pending.push_back({a, b, length, speed_mps, lanes, params.sat_flow_per_lane_vps,
                                   params.jam_density_per_lane_vpm, cls});
            if (backward)
                pending.push_back({b, a, length, speed_mps, lanes, params.sat_flow_per_lane_vps,
                                   params.jam_density_per_lane_vpm, cls});
            used_nodes.insert(a);
            used_nodes.insert(b);
        }
    }

    netgraph::NetworkGraph net;
    for (std::int64_t id : used_nodes) {
        const auto& n = raw.nodes.at(id);
        netgraph::NodeRecord rec;
        rec.id = id;
        rec.lon = n.lon;
        rec.lat = n.lat;
        if (const auto it = n.tags.find("highway"); it != n.tags.end())
            rec.signalized = (it->second == "traffic_signals");
        if (const auto it = n.tags.find("name"); it != n.tags.end()) rec.name = it->second;
        net.add_node(std::move(rec));
    }
    netgraph::LinkId next_link = 1;
    for (const auto& p : pending) {
        netgraph::LinkRecord rec;
        rec.id = next_link++;
        rec.from_node = p.from;
        rec.to_node = p.to;
        rec.length_m = p.length_m;
        rec.free_flow_speed_mps = p.speed_mps;
        rec.lanes = p.lanes;
        rec.sat_flow_per_lane_vps = p.sat;
        rec.jam_density_per_lane_vpm = p.jam;
        rec.road_class = p.road_class;
        net.add_link(std::move(rec));
    }
    netgraph::MovementId next_movement = 1;
    for (std::int64_t nid : used_nodes) {
        for (netgraph::LinkId in : net.in_links(nid)) {
            for (netgraph::LinkId out : net.out_links(nid)) {
                const auto& li = net.link(in);
                const auto& lo = net.link(out);
                const bool uturn = (lo.to_node == li.from_node && lo.from_node == li.to_node);
                if (uturn && !allow_uturns) continue;
                net.add_movement(netgraph::TurnMovement{next_movement++, in, out, 1.0});
            }
        }
    }
    return net;
}

namespace {

bool same_flow_attrs(const netgraph::LinkRecord& a, const netgraph::LinkRecord& b) {
    return a.free_flow_speed_mps == b.free_flow_speed_mps && a.lanes == b.lanes &&
           a.road_class == b.road_class && a.sat_flow_per_lane_vps == b.sat_flow_per_lane_vps &&
           a.jam_density_per_lane_vpm == b.jam_density_per_lane_vpm &&
           a.backward_wave_speed_mps == b.backward_wave_speed_mps;
}

struct Working {
    std::map<netgraph::NodeId, netgraph::NodeRecord> nodes;
    std::map<netgraph::LinkId, netgraph::LinkRecord> links;
    std::map<netgraph::MovementId, netgraph::TurnMovement> movements;

    std::vector<netgraph::LinkId> in_links(netgraph::NodeId n) const {
        std::vector<netgraph::LinkId> out;
        for (const auto& [id, l] : links)
            if (l.to_node == n) out.push_back(id);
        return out;
    }
    std::vector<netgraph::LinkId> out_links(netgraph::NodeId n) const {
        std::vector<netgraph::LinkId> out;
        for (const auto& [id, l] : links)
            if (l.from_node == n) out.push_back(id);
        return out;
    }
    std::vector<netgraph::MovementId> movements_at(netgraph::NodeId n) const {
        std::vector<netgraph::MovementId> out;
        for (const auto& [id, m] : movements)
            if (links.at(m.in_link).to_node == n) out.push_back(id);
        return out;
    }
};

// Merge the chain in -> node -> out into `in` (keeps in's id), dropping the
// through movement and retargeting movements that left from `out`.
void merge_pair(Working& w, netgraph::LinkId in, netgraph::LinkId out) {
    auto& a = w.links.at(in);
    const auto b = w.links.at(out);
    a.length_m += b.length_m;
    a.to_node = b.to_node;
    for (auto it = w.movements.begin(); it != w.movements.end();) {
        auto& m = it->second;
        if (m.in_link == in && m.out_link == out) {
            it = w.movements.erase(it);
            continue;
        }
        if (m.in_link == out) m.in_link = in;
        ++it;
    }
    w.links.erase(out);
}

}  // namespace

netgraph::NetworkGraph simplify_chains(const netgraph::NetworkGraph& net) {
    Working w;
    for (const auto& n : net.nodes()) w.nodes[n.id] = n;
    for (const auto& l : net.links()) w.links[l.id] = l;
    for (const auto& m : net.movements()) w.movements[m.id] = m;

    // True when the node is a pass-through and was merged away.
    const auto try_merge = [&w](netgraph::NodeId nid, const netgraph::NodeRecord& node) {
        if (node.signalized) return false;
        const auto ins = w.in_links(nid);
        const auto outs = w.out_links(nid);
        const auto moves = w.movements_at(nid);
        for (netgraph::MovementId mid : moves)
            if (w.movements.at(mid).capacity_factor != 1.0) return false;

        if (ins.size() == 1 && outs.size() == 1) {
            const auto& a = w.links.at(ins[0]);
            const auto& b = w.links.at(outs[0]);
            if (a.from_node == b.to_node) return false;  // U-shape, would self-loop
            if (!same_flow_attrs(a, b)) return false;
            if (moves.size() != 1) return false;
            const auto& m = w.movements.at(moves[0]);
            if (m.in_link != ins[0] || m.out_link != outs[0]) return false;
            merge_pair(w, ins[0], outs[0]);
            w.nodes.erase(nid);
            return true;
        }
        if (ins.size() == 2 && outs.size() == 2) {
            const auto& a1 = w.links.at(ins[0]);
            const auto& a2 = w.links.at(ins[1]);
            const netgraph::NodeId x = a1.from_node;
            const netgraph::NodeId y = a2.from_node;
            if (x == y) return false;
            // continuing out link for each incoming direction
            netgraph::LinkId to_y = -1, to_x = -1;
            for (netgraph::LinkId o : outs) {
                if (w.links.at(o).to_node == y) to_y = o;
                if (w.links.at(o).to_node == x) to_x = o;
            }
            if (to_y < 0 || to_x < 0) return false;
            if (!same_flow_attrs(a1, w.links.at(to_y)) || !same_flow_attrs(a2, w.links.at(to_x)))
                return false;
            // exactly the two through movements, no U-turns
            if (moves.size() != 2) return false;
            bool thru1 = false, thru2 = false;
            for (netgraph::MovementId mid : moves) {
                const auto& m = w.movements.at(mid);
                if (m.in_link == ins[0] && m.out_link == to_y) thru1 = true;
                else if (m.in_link == ins[1] && m.out_link == to_x) thru2 = true;
            }
            if (!thru1 || !thru2) return false;
            merge_pair(w, ins[0], to_y);
            merge_pair(w, ins[1], to_x);
            w.nodes.erase(nid);
            return true;
        }
        return false;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [nid, node] : w.nodes) {
            if (try_merge(nid, node)) {
                changed = true;
                break;  // the maps were edited; restart the scan
            }
        }
    }

    netgraph::NetworkGraph out;
    for (const auto& [id, n] : w.nodes) out.add_node(n);
    for (const auto& [id, l] : w.links) out.add_link(l);
    for (const auto& [id, m] : w.movements) out.add_movement(m);
    return out;
}

}  // namespace campusflow::osm
