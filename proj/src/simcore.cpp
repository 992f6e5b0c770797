#include "campusflow/simcore.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <set>

#include "campusflow/errors.hpp"
#include "campusflow/log.hpp"

namespace campusflow::simcore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

bool plan_lists(const signals::SignalPlan& p, MovementId m) {
    for (const auto& ph : p.phases)
        for (MovementId x : ph.movements)
            if (x == m) return true;
    return false;
}

const PlanSegment& segment_at(const SignalTimetable& tt, double t) {
    for (const auto& seg : tt.segments)
        if (t >= seg.start_s && t < seg.end_s) return seg;
    return tt.segments.back();
}

// Smallest green start >= t for m under the spliced plan sequence; +inf
// when m is never served again.
double timetable_next_green(const SignalTimetable& tt, MovementId m, double t) {
    std::size_t i = 0;
    while (i + 1 < tt.segments.size() && t >= tt.segments[i].end_s) ++i;
    double cur = t;
    for (; i < tt.segments.size(); ++i) {
        const auto& seg = tt.segments[i];
        cur = std::max(cur, seg.start_s);
        if (plan_lists(seg.plan, m)) {
            const double g = signals::next_green_start(seg.plan, m, cur);
            if (g < seg.end_s) return g;
        }
        if (seg.end_s == kInf) break;
        cur = seg.end_s;
    }
    return kInf;
}

// Next phase-window boundary (green start or end) strictly after t,
// capped by the active segment's end.
double timetable_next_boundary(const SignalTimetable& tt, double t) {
    const auto& seg = segment_at(tt, t);
    const auto& p = seg.plan;
    double tau = std::fmod(t - p.offset_s, p.cycle_s);
    if (tau < 0.0) tau += p.cycle_s;
    double best = kInf;
    double start = 0.0;
    for (const auto& ph : p.phases) {
        for (double b : {start, start + ph.green_s}) {
            double delta = std::fmod(b - tau, p.cycle_s);
            if (delta <= 0.0) delta += p.cycle_s;
            best = std::min(best, t + delta);
        }
        start += ph.green_s + p.lost_time_s;
    }
    if (seg.end_s < best) best = seg.end_s;
    return best;
}

bool boundary_at_zero(const SignalTimetable& tt) {
    const auto& p = tt.segments.front().plan;
    double tau = std::fmod(-p.offset_s, p.cycle_s);
    if (tau < 0.0) tau += p.cycle_s;
    double start = 0.0;
    for (const auto& ph : p.phases) {
        if (tau == start || tau == start + ph.green_s) return true;
        start += ph.green_s + p.lost_time_s;
    }
    return false;
}

}  // namespace

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::PhaseChange: return "PhaseChange";
        case EventKind::HoleArrival: return "HoleArrival";
        case EventKind::Departure: return "Departure";
        case EventKind::ExitCandidate: return "ExitCandidate";
        case EventKind::HorizonEnd: return "HorizonEnd";
    }
    return "?";
}

double earliest_exit_time(double entry_s, const netgraph::LinkRecord& l,
                          std::optional<double> last_exit_s, double capacity_factor,
                          const signals::SignalPlan* gate_plan, MovementId gate_movement) {
    double t = entry_s + netgraph::free_flow_time(l);
    if (last_exit_s) {
        const double headway =
            1.0 / (l.lanes * l.sat_flow_per_lane_vps * capacity_factor);
        t = std::max(t, *last_exit_s + headway);
    }
    if (gate_plan) t = signals::next_green_start(*gate_plan, gate_movement, t);
    return t;
}

EntryPermission entry_permission_time(std::int64_t entry_seq,
                                      const netgraph::LinkRecord& downstream,
                                      std::span<const double> exit_times) {
    const auto floor_storage =
        static_cast<std::int64_t>(std::floor(netgraph::storage_capacity(downstream)));
    EntryPermission p;
    if (entry_seq <= floor_storage) {
        p.kind = EntryPermission::Kind::Unconstrained;
        return p;
    }
    const std::int64_t needed = entry_seq - floor_storage;  // 1-based exit index
    if (static_cast<std::int64_t>(exit_times.size()) < needed) {
        p.kind = EntryPermission::Kind::Unresolved;
        return p;
    }
    p.kind = EntryPermission::Kind::At;
    p.time_s = exit_times[static_cast<std::size_t>(needed - 1)] +
               downstream.length_m / downstream.backward_wave_speed_mps;
    return p;
}

KernelInputs wrap_plans(const std::vector<signals::SignalPlan>& plans,
                        const std::vector<signals::CrossingWindow>& crossings) {
    KernelInputs in;
    for (const auto& p : plans) {
        SignalTimetable tt;
        tt.signal_id = p.signal_id;
        tt.node = p.node;
        tt.segments.push_back(PlanSegment{0.0, kInf, p});
        in.signals.push_back(std::move(tt));
    }
    in.crossings = crossings;
    return in;
}

namespace {

class Kernel {
public:
    Kernel(const netgraph::NetworkGraph& net, const std::vector<TripRequest>& trips,
           const KernelInputs& inputs, double horizon_s, const KernelOptions& opts)
        : net_(net), trips_(trips), inputs_(inputs), horizon_(horizon_s), opts_(opts) {
        validate_inputs();
        build_state();
    }

    SimResult run();

private:
    struct Veh {
        const TripRequest* trip = nullptr;
        std::size_t route_index = 0;  // current (or pending first) route link
        TripEndState phase = TripEndState::NotDeparted;
        double entry_s = 0.0;
        double ready_since = 0.0;
        bool waiting = false;
        std::uint64_t wake_epoch = 0;
        double pending_wake = -1.0;  // timestamp of the live ExitCandidate, if any
        std::optional<double> entered_s;
        std::optional<double> arrive_s;
    };

    struct LinkDyn {
        const netgraph::LinkRecord* rec = nullptr;
        double storage = 0.0;
        std::int64_t floor_storage = 0;
        double hole_travel_s = 0.0;
        std::deque<VehicleId> on_link;
        LinkLog log;
        double last_exit = 0.0;
        bool has_exit = false;
        std::set<std::pair<double, VehicleId>> waiting;  // (ready_since, vid)
    };

    struct QueuedEvent {
        Event ev;
        std::uint64_t tag = 0;  // wake-epoch guard for ExitCandidate
    };

    struct Cmp {
        bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
            if (a.ev.time_s != b.ev.time_s) return a.ev.time_s > b.ev.time_s;
            if (a.ev.kind != b.ev.kind) return static_cast<int>(a.ev.kind) > static_cast<int>(b.ev.kind);
            return a.ev.seq > b.ev.seq;
        }
    };

    // --- setup -----------------------------------------------------------
    void validate_inputs();
    void build_state();

    // --- event machinery -------------------------------------------------
    void schedule(double t, EventKind k, std::int64_t subject, std::uint64_t tag = 0) {
        pq_.push(QueuedEvent{Event{t, k, subject, next_seq_++}, tag});
    }
    void schedule_wake(Veh& v, VehicleId vid, double t) {
        if (v.pending_wake == t) return;  // an identical live wake is queued
        v.pending_wake = t;
        ++v.wake_epoch;
        schedule(t, EventKind::ExitCandidate, vid, v.wake_epoch);
    }

    // --- dynamics --------------------------------------------------------
    const netgraph::TurnMovement* movement_for(const Veh& v) const {
        const auto& route = v.trip->route;
        if (v.route_index + 1 >= route.size()) return nullptr;
        return net_.find_movement(route[v.route_index], route[v.route_index + 1]);
    }
    const SignalTimetable* signal_at(NodeId node) const {
        auto it = node_signal_.find(node);
        return it == node_signal_.end() ? nullptr : it->second;
    }

    double effective_capacity_factor(const netgraph::TurnMovement* mov, double t) const;
    double next_capacity_boundary(const netgraph::TurnMovement* mov, double t) const;
    double head_ready_time(const Veh& v, const LinkDyn& u, double lower) const;

    void attach_origin_head(VehicleId vid, double now, std::set<LinkId>& pending);
    void promote_head(LinkDyn& u, double now);
    void do_exit(LinkDyn& u, VehicleId vid, double now);
    void do_entry(LinkDyn& d, Veh& v, VehicleId vid, double now);
    void admit(LinkDyn& d, std::pair<double, VehicleId> key, double now,
               std::set<LinkId>& pending);
    void admission_pass(LinkId did, double now, std::set<LinkId>& pending);
    void pump(std::set<LinkId>& pending, double now) {
        while (!pending.empty()) {
            const LinkId d = *pending.begin();
            pending.erase(pending.begin());
            admission_pass(d, now, pending);
        }
    }

    void check_conservation() const;
    void log_event(const Event& e, const std::string& detail);
    SimResult finalize(double clock_end);

    // --- members ---------------------------------------------------------
    const netgraph::NetworkGraph& net_;
    const std::vector<TripRequest>& trips_;
    const KernelInputs& inputs_;
    double horizon_;
    KernelOptions opts_;

    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, Cmp> pq_;
    std::uint64_t next_seq_ = 0;

    std::map<VehicleId, Veh> vehicles_;
    std::map<LinkId, LinkDyn> links_;
    std::map<NodeId, std::deque<VehicleId>> origin_buffers_;
    std::map<NodeId, const SignalTimetable*> node_signal_;
    struct MovementMods {
        double base = 1.0;
        std::vector<const signals::CrossingWindow*> crossings;
        std::vector<const CapacityWindow*> overrides;
    };
    std::map<MovementId, MovementMods> movement_mods_;

    std::int64_t n_not_departed_ = 0;
    std::int64_t n_at_origin_ = 0;
    std::int64_t n_on_network_ = 0;
    std::int64_t n_arrived_ = 0;

    std::uint64_t event_count_ = 0;
    std::vector<std::string> event_log_;
};

void Kernel::validate_inputs() {
    if (!(horizon_ > 0.0)) throw InputError("horizon must be > 0");
    if (const auto report = netgraph::validate_network(net_); !report.empty())
        throw InputError("network fails validation: " + report.front() + " (" +
                         std::to_string(report.size()) + " violation(s))");
    std::set<VehicleId> ids;
    for (const auto& t : trips_) {
        const std::string tag = "trip " + std::to_string(t.vehicle_id);
        if (t.vehicle_id <= 0 ||
            t.vehicle_id == std::numeric_limits<VehicleId>::max())
            throw InputError(tag + ": vehicle id outside the usable id space");
        if (!ids.insert(t.vehicle_id).second) throw InputError(tag + ": duplicate vehicle id");
        if (t.departure_s < 0.0) throw InputError(tag + ": negative departure time");
        if (t.route.empty()) throw InputError(tag + ": empty route");
        for (LinkId l : t.route)
            if (!net_.has_link(l))
                throw InputError(tag + ": route references absent link " + std::to_string(l));
        if (net_.link(t.route.front()).from_node != t.origin)
            throw InputError(tag + ": route does not start at the origin");
        if (net_.link(t.route.back()).to_node != t.destination)
            throw InputError(tag + ": route does not end at the destination");
        for (std::size_t i = 0; i + 1 < t.route.size(); ++i)
            if (!net_.find_movement(t.route[i], t.route[i + 1]))
                throw InputError(tag + ": no turn movement between links " +
                                 std::to_string(t.route[i]) + " and " +
                                 std::to_string(t.route[i + 1]));
    }
    for (const auto& tt : inputs_.signals) {
        const std::string tag = "signal " + std::to_string(tt.signal_id);
        if (!net_.has_node(tt.node)) throw InputError(tag + ": unknown node");
        if (tt.segments.empty()) throw InputError(tag + ": empty timetable");
        if (tt.segments.front().start_s != 0.0)
            throw InputError(tag + ": timetable must start at t=0");
        if (tt.segments.back().end_s != kInf)
            throw InputError(tag + ": timetable must extend to the horizon");
        for (std::size_t i = 0; i < tt.segments.size(); ++i) {
            const auto& seg = tt.segments[i];
            if (i + 1 < tt.segments.size() && seg.end_s != tt.segments[i + 1].start_s)
                throw InputError(tag + ": timetable segments are not contiguous");
            if (!(seg.end_s > seg.start_s)) throw InputError(tag + ": empty timetable segment");
            if (seg.plan.node != tt.node)
                throw InputError(tag + ": plan segment is for a different node");
            const auto report = signals::validate_plan(seg.plan, net_);
            if (!report.ok())
                throw InputError(tag + ": invalid plan: " + report.violations.front());
            for (const auto& w : report.warnings) log::warn(w);
        }
    }
    for (const auto& w : inputs_.crossings) {
        if (const auto v = signals::validate_crossing(w); !v.empty()) throw InputError(v.front());
        if (!net_.has_movement(w.movement))
            throw InputError("crossing window references absent movement " +
                             std::to_string(w.movement));
    }
    for (const auto& w : inputs_.capacity_windows) {
        if (!net_.has_movement(w.movement))
            throw InputError("capacity override references absent movement " +
                             std::to_string(w.movement));
        if (!(w.factor > 0.0 && w.factor <= 1.0))
            throw InputError("capacity override factor outside (0, 1]");
        if (!(w.end_s > w.start_s)) throw InputError("capacity override window is empty");
    }
}

void Kernel::build_state() {
    for (const auto& l : net_.links()) {
        LinkDyn d;
        d.rec = &net_.link(l.id);
        d.storage = netgraph::storage_capacity(l);
        d.floor_storage = static_cast<std::int64_t>(std::floor(d.storage));
        d.hole_travel_s = l.length_m / l.backward_wave_speed_mps;
        links_.emplace(l.id, std::move(d));
    }
    for (const auto& t : trips_) {
        Veh v;
        v.trip = &t;
        vehicles_.emplace(t.vehicle_id, std::move(v));
    }
    for (const auto& tt : inputs_.signals) {
        if (!node_signal_.emplace(tt.node, &tt).second)
            throw InputError("two signal timetables at node " + std::to_string(tt.node));
    }
    for (const auto& m : net_.movements()) {
        if (m.capacity_factor != 1.0) movement_mods_[m.id].base = m.capacity_factor;
    }
    for (const auto& w : inputs_.crossings) {
        auto& mods = movement_mods_[w.movement];
        if (mods.base == 1.0 && net_.has_movement(w.movement))
            mods.base = net_.movement(w.movement).capacity_factor;
        mods.crossings.push_back(&w);
    }
    for (const auto& w : inputs_.capacity_windows) {
        auto& mods = movement_mods_[w.movement];
        if (mods.crossings.empty() && mods.overrides.empty() && mods.base == 1.0)
            mods.base = net_.movement(w.movement).capacity_factor;
        mods.overrides.push_back(&w);
    }
}

double Kernel::effective_capacity_factor(const netgraph::TurnMovement* mov, double t) const {
    if (!mov) return 1.0;
    const auto it = movement_mods_.find(mov->id);
    if (it == movement_mods_.end()) return mov->capacity_factor;
    const auto& mods = it->second;
    double base = mov->capacity_factor;
    for (const auto* w : mods.overrides)
        if (t >= w->start_s && t < w->end_s) base = w->factor;  // latest declaration wins
    double f = base;
    for (const auto* w : mods.crossings) f *= signals::crossing_capacity_factor(*w, t);
    return f;
}

double Kernel::next_capacity_boundary(const netgraph::TurnMovement* mov, double t) const {
    if (!mov) return kInf;
    const auto it = movement_mods_.find(mov->id);
    if (it == movement_mods_.end()) return kInf;
    double best = kInf;
    for (const auto* w : it->second.crossings) {
        double tau = std::fmod(t, w->period_s);
        if (tau < 0.0) tau += w->period_s;
        const double step = (tau < w->active_s) ? (w->active_s - tau) : (w->period_s - tau);
        best = std::min(best, t + step);
    }
    for (const auto* w : it->second.overrides) {
        if (w->start_s > t) best = std::min(best, w->start_s);
        if (w->end_s > t) best = std::min(best, w->end_s);
    }
    return best;
}

// Minimum feasible exit time >= lower for the head vehicle of link u:
// free-flow arrival at the stop line, discharge headway behind the last
// exit under the capacity factor in force at the candidate instant, and
// the green gate of the vehicle's turn movement. Piecewise stepping: a
// violated constraint advances the candidate to the constraint's own
// bound or the next factor boundary, whichever comes first.
double Kernel::head_ready_time(const Veh& v, const LinkDyn& u, double lower) const {
    const auto& l = *u.rec;
    const auto* mov = movement_for(v);
    const SignalTimetable* tt = mov ? signal_at(l.to_node) : nullptr;
    double t = std::max(lower, v.entry_s + netgraph::free_flow_time(l));
    for (int iter = 0; iter < 100000; ++iter) {
        if (u.has_exit) {
            const double f = effective_capacity_factor(mov, t);
            if (f <= 0.0) {
                t = next_capacity_boundary(mov, t);
                if (t == kInf) return kInf;
                continue;
            }
            const double headway = 1.0 / (l.lanes * l.sat_flow_per_lane_vps * f);
            if (u.last_exit + headway > t) {
                t = std::min(u.last_exit + headway, next_capacity_boundary(mov, t));
                continue;
            }
        }
        if (tt) {
            const double g = timetable_next_green(*tt, mov->id, t);
            if (g == kInf) return kInf;
            if (g > t) {
                t = g;
                continue;
            }
        }
        return t;
    }
    throw InternalError("exit-time search did not converge on link " +
                        std::to_string(l.id));
}

void Kernel::attach_origin_head(VehicleId vid, double now, std::set<LinkId>& pending) {
    Veh& v = vehicles_.at(vid);
    v.waiting = true;
    v.ready_since = now;
    const LinkId first = v.trip->route.front();
    links_.at(first).waiting.insert({now, vid});
    pending.insert(first);
}

void Kernel::promote_head(LinkDyn& u, double now) {
    const VehicleId vid = u.on_link.front();
    Veh& v = vehicles_.at(vid);
    const double r = head_ready_time(v, u, now);
    if (r < kInf) schedule_wake(v, vid, r);
    // r == inf: permanently red movement; the vehicle stays until the horizon
}

void Kernel::do_exit(LinkDyn& u, VehicleId vid, double now) {
    if (opts_.check_invariants) {
        if (u.on_link.empty() || u.on_link.front() != vid)
            throw InternalError("exit of a non-head vehicle (FIFO break)");
        const std::size_t pos = u.log.exits.size();
        if (u.log.entries[pos].first != vid)
            throw InternalError("exit order diverged from entry order");
    }
    u.on_link.pop_front();
    u.log.exits.emplace_back(vid, now);
    u.last_exit = now;
    u.has_exit = true;
    schedule(now + u.hole_travel_s, EventKind::HoleArrival, u.rec->id);
    if (!u.on_link.empty()) promote_head(u, now);
}

void Kernel::do_entry(LinkDyn& d, Veh& v, VehicleId vid, double now) {
    if (opts_.check_invariants &&
        !(static_cast<double>(d.on_link.size()) < d.storage))
        throw InternalError("storage violated at entry on link " +
                            std::to_string(d.rec->id));
    d.on_link.push_back(vid);
    d.log.entries.emplace_back(vid, now);
    v.phase = TripEndState::EnRoute;
    v.entry_s = now;
    if (d.on_link.size() == 1) promote_head(d, now);
}

void Kernel::admit(LinkDyn& d, std::pair<double, VehicleId> key, double now,
                   std::set<LinkId>& pending) {
    const VehicleId vid = key.second;
    Veh& v = vehicles_.at(vid);
    d.waiting.erase(key);
    v.waiting = false;
    ++v.wake_epoch;  // orphan any scheduled wake
    v.pending_wake = -1.0;
    if (v.phase == TripEndState::WaitingAtOrigin) {
        auto& buf = origin_buffers_.at(v.trip->origin);
        if (opts_.check_invariants && (buf.empty() || buf.front() != vid))
            throw InternalError("origin buffer head mismatch");
        buf.pop_front();
        v.entered_s = now;
        --n_at_origin_;
        ++n_on_network_;
        if (!buf.empty()) attach_origin_head(buf.front(), now, pending);
    } else {
        LinkDyn& u = links_.at(v.trip->route[v.route_index]);
        do_exit(u, vid, now);
        ++v.route_index;
    }
    do_entry(d, v, vid, now);
}

void Kernel::admission_pass(LinkId did, double now, std::set<LinkId>& pending) {
    LinkDyn& d = links_.at(did);
    while (!d.waiting.empty()) {
        const auto m = static_cast<std::int64_t>(d.log.entries.size()) + 1;
        const std::int64_t needed = m - d.floor_storage;
        if (needed >= 1) {
            if (static_cast<std::int64_t>(d.log.exits.size()) < needed) return;
            const double hole_at =
                d.log.exits[static_cast<std::size_t>(needed - 1)].second + d.hole_travel_s;
            if (hole_at > now) return;  // a HoleArrival is already queued for this instant
        }
        bool admitted = false;
        for (const auto& key : d.waiting) {
            Veh& v = vehicles_.at(key.second);
            double t_ok;
            if (v.phase == TripEndState::WaitingAtOrigin) {
                t_ok = now;
            } else {
                t_ok = head_ready_time(v, links_.at(v.trip->route[v.route_index]), now);
            }
            if (t_ok == now) {
                admit(d, key, now, pending);
                admitted = true;
                break;
            }
            if (t_ok < kInf) schedule_wake(v, key.second, t_ok);
        }
        if (!admitted) return;
    }
}

void Kernel::check_conservation() const {
    const auto total = static_cast<std::int64_t>(trips_.size());
    if (n_not_departed_ + n_at_origin_ + n_on_network_ + n_arrived_ != total)
        throw InternalError("vehicle conservation violated");
    for (const auto& [id, d] : links_) {
        if (d.log.entries.size() < d.log.exits.size())
            throw InternalError("more exits than entries on link " + std::to_string(id));
        if (d.on_link.size() != d.log.entries.size() - d.log.exits.size())
            throw InternalError("on-link count out of sync on link " + std::to_string(id));
    }
}

void Kernel::log_event(const Event& e, const std::string& detail) {
    ++event_count_;
    if (!opts_.record_event_log) return;
    std::string line = fmt_double(e.time_s);
    line += '\t';
    line += event_kind_name(e.kind);
    line += '\t';
    line += (e.kind == EventKind::HorizonEnd) ? "-" : std::to_string(e.subject);
    line += '\t';
    line += detail.empty() ? "-" : detail;
    event_log_.push_back(std::move(line));
}

SimResult Kernel::run() {
    schedule(horizon_, EventKind::HorizonEnd, 0);
    for (const auto& t : trips_) {
        ++n_not_departed_;
        if (t.departure_s <= horizon_)
            schedule(t.departure_s, EventKind::Departure, t.vehicle_id);
    }
    for (const auto& tt : inputs_.signals) {
        const double b = boundary_at_zero(tt) ? 0.0 : timetable_next_boundary(tt, 0.0);
        if (b < kInf) schedule(b, EventKind::PhaseChange, tt.signal_id);
    }

    const auto total = static_cast<std::int64_t>(trips_.size());
    double clock = 0.0;
    bool horizon_hit = false;

    while (!pq_.empty()) {
        if (n_arrived_ == total) break;
        std::vector<QueuedEvent> batch;
        batch.push_back(pq_.top());
        pq_.pop();
        const Event head = batch.front().ev;  // by value: the batch reallocates
        clock = head.time_s;
        while (!pq_.empty() && pq_.top().ev.time_s == head.time_s &&
               pq_.top().ev.kind == head.kind) {
            batch.push_back(pq_.top());
            pq_.pop();
        }

        if (head.kind == EventKind::HorizonEnd) {
            log_event(head, "");
            horizon_hit = true;
            break;
        }

        std::set<LinkId> pending;
        switch (head.kind) {
            case EventKind::Departure: {
                std::set<NodeId> touched;
                for (const auto& qe : batch) {
                    Veh& v = vehicles_.at(qe.ev.subject);
                    log_event(qe.ev, "origin=" + std::to_string(v.trip->origin));
                    v.phase = TripEndState::WaitingAtOrigin;
                    --n_not_departed_;
                    ++n_at_origin_;
                    origin_buffers_[v.trip->origin].push_back(qe.ev.subject);
                    touched.insert(v.trip->origin);
                }
                for (NodeId n : touched) {
                    const VehicleId headv = origin_buffers_.at(n).front();
                    if (!vehicles_.at(headv).waiting)
                        attach_origin_head(headv, clock, pending);
                }
                break;
            }
            case EventKind::ExitCandidate: {
                for (const auto& qe : batch) {
                    Veh& v = vehicles_.at(qe.ev.subject);
                    if (v.phase != TripEndState::EnRoute || qe.tag != v.wake_epoch) {
                        log_event(qe.ev, "stale");
                        continue;
                    }
                    v.pending_wake = -1.0;
                    const LinkId cur = v.trip->route[v.route_index];
                    if (v.route_index + 1 == v.trip->route.size()) {
                        log_event(qe.ev, "link=" + std::to_string(cur) + " arrive");
                        LinkDyn& u = links_.at(cur);
                        do_exit(u, qe.ev.subject, clock);
                        v.phase = TripEndState::Arrived;
                        v.arrive_s = clock;
                        --n_on_network_;
                        ++n_arrived_;
                    } else {
                        const LinkId next = v.trip->route[v.route_index + 1];
                        log_event(qe.ev, "link=" + std::to_string(cur) +
                                             " target=" + std::to_string(next));
                        if (!v.waiting) {
                            v.waiting = true;
                            v.ready_since = clock;
                            links_.at(next).waiting.insert({clock, qe.ev.subject});
                        }
                        pending.insert(next);
                    }
                }
                break;
            }
            case EventKind::HoleArrival: {
                for (const auto& qe : batch) {
                    log_event(qe.ev, "");
                    pending.insert(qe.ev.subject);
                }
                break;
            }
            case EventKind::PhaseChange: {
                for (const auto& qe : batch) {
                    log_event(qe.ev, "");
                    for (const auto& tt : inputs_.signals) {
                        if (tt.signal_id != qe.ev.subject) continue;
                        const double b = timetable_next_boundary(tt, clock);
                        if (b < kInf) schedule(b, EventKind::PhaseChange, tt.signal_id);
                        break;
                    }
                }
                break;
            }
            case EventKind::HorizonEnd:
                break;  // handled above
        }
        pump(pending, clock);
        if (opts_.check_invariants) check_conservation();
    }

    return finalize(horizon_hit ? horizon_ : clock);
}

SimResult Kernel::finalize(double clock_end) {
    SimResult r;
    r.event_count = event_count_;
    r.clock_end_s = clock_end;
    r.event_log = std::move(event_log_);
    for (auto& [id, d] : links_) r.link_logs.emplace(id, std::move(d.log));
    r.trips.reserve(trips_.size());
    for (const auto& t : trips_) {
        const Veh& v = vehicles_.at(t.vehicle_id);
        TripOutcome o;
        o.vehicle_id = t.vehicle_id;
        o.origin = t.origin;
        o.destination = t.destination;
        o.departure_s = t.departure_s;
        o.entered_s = v.entered_s;
        o.arrive_s = v.arrive_s;
        o.end_state = v.phase;
        if (v.entered_s)
            o.origin_wait_s = *v.entered_s - t.departure_s;
        else if (v.phase == TripEndState::WaitingAtOrigin)
            o.origin_wait_s = clock_end - t.departure_s;  // censored
        for (LinkId l : t.route) o.free_flow_s += netgraph::free_flow_time(net_.link(l));
        r.trips.push_back(std::move(o));
    }
    return r;
}

}  // namespace

SimResult run_simulation(const netgraph::NetworkGraph& net,
                         const std::vector<TripRequest>& trips, const KernelInputs& inputs,
                         double horizon_s, const KernelOptions& opts) {
    Kernel k(net, trips, inputs, horizon_s, opts);
    return k.run();
}

SimResult run_simulation(const netgraph::NetworkGraph& net,
                         const std::vector<TripRequest>& trips,
                         const std::vector<signals::SignalPlan>& plans, double horizon_s,
                         const KernelOptions& opts) {
    return run_simulation(net, trips, wrap_plans(plans), horizon_s, opts);
}

}  // namespace campusflow::simcore
