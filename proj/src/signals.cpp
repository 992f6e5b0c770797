#include "campusflow/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "campusflow/errors.hpp"

namespace campusflow::signals {

namespace {

constexpr double kSumTolerance = 1e-9;

double cycle_phase(const SignalPlan& p, double t) {
    double tau = std::fmod(t - p.offset_s, p.cycle_s);
    if (tau < 0.0) tau += p.cycle_s;
    return tau;
}

// Window [start, start + green) of each phase within the cycle.
std::vector<std::pair<double, double>> phase_windows(const SignalPlan& p) {
    std::vector<std::pair<double, double>> w;
    double start = 0.0;
    for (const auto& ph : p.phases) {
        w.emplace_back(start, ph.green_s);
        start += ph.green_s + p.lost_time_s;
    }
    return w;
}

bool phase_has(const Phase& ph, MovementId m) {
    return std::find(ph.movements.begin(), ph.movements.end(), m) != ph.movements.end();
}

}  // namespace

PlanReport validate_plan(const SignalPlan& p) {
    PlanReport r;
    const std::string tag = "plan " + std::to_string(p.signal_id);
    if (!(p.cycle_s > 0.0)) r.violations.push_back(tag + ": cycle must be > 0");
    if (p.offset_s < 0.0 || (p.cycle_s > 0.0 && p.offset_s >= p.cycle_s))
        r.violations.push_back(tag + ": offset outside [0, cycle)");
    if (p.lost_time_s < 0.0) r.violations.push_back(tag + ": negative lost time");
    if (p.phases.empty()) r.violations.push_back(tag + ": no phases");
    double green_sum = 0.0;
    std::set<MovementId> seen;
    for (std::size_t i = 0; i < p.phases.size(); ++i) {
        const auto& ph = p.phases[i];
        if (!(ph.green_s > 0.0))
            r.violations.push_back(tag + ": phase " + std::to_string(i) + " green must be > 0");
        if (ph.movements.empty())
            r.violations.push_back(tag + ": phase " + std::to_string(i) + " has no movements");
        for (MovementId m : ph.movements)
            if (!seen.insert(m).second)
                r.violations.push_back(tag + ": movement " + std::to_string(m) +
                                       " appears in more than one phase");
        green_sum += ph.green_s;
    }
    const double total = green_sum + static_cast<double>(p.phases.size()) * p.lost_time_s;
    if (p.cycle_s > 0.0 && std::abs(total - p.cycle_s) > kSumTolerance)
        r.violations.push_back(tag + ": greens + lost time sum to " + std::to_string(total) +
                               ", cycle is " + std::to_string(p.cycle_s));
    return r;
}

PlanReport validate_plan(const SignalPlan& p, const netgraph::NetworkGraph& net) {
    PlanReport r = validate_plan(p);
    const std::string tag = "plan " + std::to_string(p.signal_id);
    if (!net.has_node(p.node)) {
        r.violations.push_back(tag + ": unknown node " + std::to_string(p.node));
        return r;
    }
    std::set<MovementId> listed;
    for (const auto& ph : p.phases)
        for (MovementId m : ph.movements) {
            listed.insert(m);
            if (!net.has_movement(m)) {
                r.violations.push_back(tag + ": unknown movement " + std::to_string(m));
                continue;
            }
            const auto& mov = net.movement(m);
            if (net.link(mov.in_link).to_node != p.node)
                r.violations.push_back(tag + ": movement " + std::to_string(m) +
                                       " is not at node " + std::to_string(p.node));
        }
    for (const auto& mov : net.movements())
        if (net.link(mov.in_link).to_node == p.node && !listed.count(mov.id))
            r.warnings.push_back(tag + ": movement " + std::to_string(mov.id) +
                                 " at node " + std::to_string(p.node) +
                                 " is in no phase (permanently red)");
    return r;
}

bool is_green(const SignalPlan& p, MovementId m, double t) {
    const double tau = cycle_phase(p, t);
    const auto windows = phase_windows(p);
    for (std::size_t i = 0; i < p.phases.size(); ++i) {
        if (!phase_has(p.phases[i], m)) continue;
        const auto [start, green] = windows[i];
        if (tau >= start && tau < start + green) return true;
    }
    return false;
}

double next_green_start(const SignalPlan& p, MovementId m, double t) {
    const auto windows = phase_windows(p);
    bool listed = false;
    double best = std::numeric_limits<double>::infinity();
    const double tau = cycle_phase(p, t);
    for (std::size_t i = 0; i < p.phases.size(); ++i) {
        if (!phase_has(p.phases[i], m)) continue;
        listed = true;
        const auto [start, green] = windows[i];
        if (tau >= start && tau < start + green) return t;
        double wait = std::fmod(start - tau, p.cycle_s);
        if (wait < 0.0) wait += p.cycle_s;
        best = std::min(best, t + wait);
    }
    if (!listed)
        throw InputError("movement " + std::to_string(m) + " is permanently red under plan " +
                         std::to_string(p.signal_id));
    return best;
}

double crossing_capacity_factor(const CrossingWindow& w, double t) {
    double tau = std::fmod(t, w.period_s);
    if (tau < 0.0) tau += w.period_s;
    return tau < w.active_s ? w.factor : 1.0;
}

std::vector<std::string> validate_crossing(const CrossingWindow& w) {
    std::vector<std::string> v;
    const std::string tag = "crossing window on movement " + std::to_string(w.movement);
    if (!(w.period_s > 0.0)) v.push_back(tag + ": period must be > 0");
    if (w.active_s < 0.0 || w.active_s > w.period_s)
        v.push_back(tag + ": active duration outside [0, period]");
    if (w.factor < 0.0 || w.factor >= 1.0) v.push_back(tag + ": factor outside [0, 1)");
    return v;
}

}  // namespace campusflow::signals
