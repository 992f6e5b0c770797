#include "campusflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "campusflow/errors.hpp"

namespace campusflow::metrics {

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::int64_t queue_length(const simcore::LinkLog& log, const netgraph::LinkRecord& link,
                          double t) {
    const double fft = netgraph::free_flow_time(link);
    std::map<VehicleId, double> exit_at;
    for (const auto& [vid, et] : log.exits) exit_at[vid] = et;
    std::int64_t n = 0;
    for (const auto& [vid, entry] : log.entries) {
        if (entry > t) break;  // entries are time-ordered
        const auto it = exit_at.find(vid);
        const bool present = (it == exit_at.end()) || (it->second > t);
        if (present && entry + fft < t) ++n;
    }
    return n;
}

std::optional<double> trip_delay(const TripRecord& tr) {
    if (!tr.arrive_s) return std::nullopt;
    return (*tr.arrive_s - tr.depart_s) - tr.free_flow_s;
}

TripRecord make_trip_record(const simcore::TripOutcome& o) {
    TripRecord tr;
    tr.vehicle_id = o.vehicle_id;
    tr.depart_s = o.departure_s;
    tr.arrive_s = o.arrive_s;
    tr.origin_wait_s = o.origin_wait_s;
    tr.free_flow_s = o.free_flow_s;
    tr.delay_s = trip_delay(tr);
    return tr;
}

LinkSeries build_link_series(const simcore::LinkLog& log, const netgraph::LinkRecord& link) {
    LinkSeries s;
    s.link = link.id;
    const double fft = netgraph::free_flow_time(link);

    // Per-vehicle delay on this link.
    std::map<VehicleId, double> entry_at;
    for (const auto& [vid, t] : log.entries) entry_at[vid] = t;
    for (const auto& [vid, t] : log.exits) s.total_delay_s += (t - entry_at.at(vid)) - fft;

    // Queue level changes at "became delayed" instants (entry + fft) and at
    // exits of delayed vehicles; track the running level to find the max.
    std::map<VehicleId, double> exit_at;
    for (const auto& [vid, t] : log.exits) exit_at[vid] = t;
    std::vector<std::pair<double, int>> deltas;
    for (const auto& [vid, entry] : log.entries) {
        const double queued_from = entry + fft;
        const auto it = exit_at.find(vid);
        if (it != exit_at.end() && it->second <= queued_from) continue;  // never queued
        deltas.emplace_back(queued_from, +1);
        if (it != exit_at.end()) deltas.emplace_back(it->second, -1);
    }
    std::sort(deltas.begin(), deltas.end());
    std::int64_t level = 0;
    for (std::size_t i = 0; i < deltas.size();) {
        const double t = deltas[i].first;
        while (i < deltas.size() && deltas[i].first == t) level += deltas[i++].second;
        if (level > s.max_queue) {
            s.max_queue = level;
            s.time_of_max_queue_s = t;
        }
    }

    // State samples at this link's own event times.
    std::set<double> times;
    for (const auto& [vid, t] : log.entries) times.insert(t);
    for (const auto& [vid, t] : log.exits) times.insert(t);
    for (double t : times) {
        std::int64_t on = 0;
        for (const auto& [vid, entry] : log.entries) {
            if (entry > t) break;
            const auto it = exit_at.find(vid);
            if (it == exit_at.end() || it->second > t) ++on;
        }
        s.samples.push_back(LinkSample{t, on, queue_length(log, link, t)});
    }
    return s;
}

NetworkSummary summarize(const simcore::SimResult& result, const netgraph::NetworkGraph& net) {
    NetworkSummary s;
    for (const auto& o : result.trips) {
        const TripRecord tr = make_trip_record(o);
        if (tr.arrive_s) {
            ++s.completed_trips;
            s.total_travel_time_s += *tr.arrive_s - tr.depart_s;
            s.total_delay_s += *tr.delay_s;
        } else {
            ++s.incomplete_trips;
        }
    }
    s.mean_delay_s = s.completed_trips > 0
                         ? s.total_delay_s / static_cast<double>(s.completed_trips)
                         : 0.0;
    for (const auto& [id, log] : result.link_logs) {
        const auto& link = net.link(id);
        const double fft = netgraph::free_flow_time(link);
        std::map<VehicleId, double> entry_at;
        for (const auto& [vid, t] : log.entries) entry_at[vid] = t;
        double d = 0.0;
        for (const auto& [vid, t] : log.exits) d += (t - entry_at.at(vid)) - fft;
        s.link_delay_s[id] = d;
    }
    return s;
}

std::vector<LinkId> hotspot_ranking(const NetworkSummary& summary, std::size_t k) {
    std::vector<std::pair<double, LinkId>> ranked;
    ranked.reserve(summary.link_delay_s.size());
    for (const auto& [id, d] : summary.link_delay_s) ranked.emplace_back(d, id);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (ranked.size() > k) ranked.resize(k);
    std::vector<LinkId> out;
    out.reserve(ranked.size());
    for (const auto& [d, id] : ranked) out.push_back(id);
    return out;
}

void export_trips_csv(std::ostream& out, const std::vector<TripRecord>& trips,
                      const std::string& seed_comment) {
    out << seed_comment << "\n";
    out << "vehicle_id,depart_s,arrive_s,origin_wait_s,free_flow_s,delay_s\n";
    std::vector<const TripRecord*> ordered;
    ordered.reserve(trips.size());
    for (const auto& t : trips) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(),
              [](const TripRecord* a, const TripRecord* b) { return a->vehicle_id < b->vehicle_id; });
    for (const auto* t : ordered) {
        out << t->vehicle_id << ',' << csv_double(t->depart_s) << ','
            << (t->arrive_s ? csv_double(*t->arrive_s) : std::string("")) << ','
            << csv_double(t->origin_wait_s) << ',' << csv_double(t->free_flow_s) << ','
            << (t->delay_s ? csv_double(*t->delay_s) : std::string("")) << "\n";
    }
}

void export_links_csv(std::ostream& out, const std::vector<LinkSeries>& series,
                      const std::string& seed_comment) {
    out << seed_comment << "\n";
    out << "link_id,total_delay_s,max_queue,time_of_max_queue_s\n";
    std::vector<const LinkSeries*> ordered;
    for (const auto& s : series) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const LinkSeries* a, const LinkSeries* b) { return a->link < b->link; });
    for (const auto* s : ordered)
        out << s->link << ',' << csv_double(s->total_delay_s) << ',' << s->max_queue << ','
            << csv_double(s->time_of_max_queue_s) << "\n";
}

void export_summary_csv(std::ostream& out, const NetworkSummary& summary,
                        const std::string& seed_comment) {
    out << seed_comment << "\n";
    out << "total_travel_time_s,total_delay_s,completed_trips,incomplete_trips,mean_delay_s\n";
    out << csv_double(summary.total_travel_time_s) << ',' << csv_double(summary.total_delay_s)
        << ',' << summary.completed_trips << ',' << summary.incomplete_trips << ','
        << csv_double(summary.mean_delay_s) << "\n";
}

void export_state_csv(std::ostream& out, const std::vector<LinkSeries>& series,
                      const std::string& seed_comment) {
    out << seed_comment << "\n";
    out << "time_s,link_id,on_link_count,queue_count\n";
    std::vector<const LinkSeries*> ordered;
    for (const auto& s : series) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const LinkSeries* a, const LinkSeries* b) { return a->link < b->link; });
    for (const auto* s : ordered)
        for (const auto& sample : s->samples)
            out << csv_double(sample.time_s) << ',' << s->link << ',' << sample.on_link_count
                << ',' << sample.queue_count << "\n";
}

}  // namespace campusflow::metrics
