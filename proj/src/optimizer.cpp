#include "campusflow/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "campusflow/errors.hpp"
#include "campusflow/metrics.hpp"
#include "campusflow/simcore.hpp"

namespace campusflow::optimizer {

double Objective::evaluate(const std::vector<signals::SignalPlan>& plans) const {
    const auto inputs = scenarios::assemble_inputs(plans, crossings, scenario);
    simcore::KernelOptions opts;
    opts.check_invariants = false;  // property suites cover the kernel
    const auto result = simcore::run_simulation(*net, trips, inputs, horizon_s, opts);
    const auto summary = metrics::summarize(result, *net);
    return summary.total_delay_s +
           incomplete_trip_penalty_s * static_cast<double>(summary.incomplete_trips);
}

Objective make_objective(const netgraph::NetworkGraph& net,
                         const std::vector<demand::ODPair>& base_demand,
                         const std::vector<signals::CrossingWindow>& crossings,
                         const scenarios::ScenarioSpec* scenario, double horizon_s,
                         const OptimizerConfig& config) {
    Objective o;
    o.net = &net;
    const auto effective =
        scenario ? scenarios::apply_overlays(base_demand, *scenario) : base_demand;
    o.trips = demand::build_trips(net, effective, std::nullopt);
    o.crossings = crossings;
    o.scenario = scenario;
    o.horizon_s = horizon_s;
    o.incomplete_trip_penalty_s = config.incomplete_trip_penalty_s >= 0.0
                                      ? config.incomplete_trip_penalty_s
                                      : 2.0 * horizon_s;
    return o;
}

PlanVector encode_plans(const std::vector<signals::SignalPlan>& plans, double min_green_s) {
    PlanVector v;
    v.min_green_s = min_green_s;
    for (const auto& p : plans) {
        PlanVector::SignalLayout lay;
        lay.signal_id = p.signal_id;
        lay.offset_index = v.values.size();
        v.values.push_back(p.offset_s);
        lay.first_green_index = v.values.size();
        lay.phase_count = p.phases.size();
        for (const auto& ph : p.phases) {
            if (ph.green_s < min_green_s - 1e-9)
                throw InputError("plan " + std::to_string(p.signal_id) +
                                 " has a green below the minimum of " +
                                 std::to_string(min_green_s) + " s");
            v.values.push_back(ph.green_s);
        }
        v.layout.push_back(lay);
    }
    return v;
}

std::vector<signals::SignalPlan> decode_plans(const PlanVector& v,
                                              const std::vector<signals::SignalPlan>& templates) {
    if (v.layout.size() != templates.size())
        throw InputError("plan vector does not match the plan templates");
    std::vector<signals::SignalPlan> plans = templates;
    for (std::size_t i = 0; i < v.layout.size(); ++i) {
        const auto& lay = v.layout[i];
        auto& p = plans[i];
        if (p.signal_id != lay.signal_id || p.phases.size() != lay.phase_count)
            throw InputError("plan vector layout mismatch for signal " +
                             std::to_string(lay.signal_id));
        p.offset_s = v.values[lay.offset_index];
        for (std::size_t k = 0; k < lay.phase_count; ++k)
            p.phases[k].green_s = v.values[lay.first_green_index + k];
        const auto report = signals::validate_plan(p);
        if (!report.ok())
            throw InputError("decoded plan invalid: " + report.violations.front());
    }
    return plans;
}

double evaluate_plan(const Objective& objective, const PlanVector& v,
                     const std::vector<signals::SignalPlan>& templates) {
    return objective.evaluate(decode_plans(v, templates));
}

PerturbResult perturb_plan(const PlanVector& v,
                           const std::vector<signals::SignalPlan>& templates,
                           std::size_t parameter_index, double step_s, int direction) {
    PerturbResult out;
    out.vector = v;
    auto& values = out.vector.values;
    const double signed_step = step_s * static_cast<double>(direction);

    for (std::size_t i = 0; i < v.layout.size(); ++i) {
        const auto& lay = v.layout[i];
        const auto& tmpl = templates[i];

        if (parameter_index == lay.offset_index) {
            double next = std::fmod(values[parameter_index] + signed_step, tmpl.cycle_s);
            if (next < 0.0) next += tmpl.cycle_s;
            if (next == values[parameter_index]) out.clamped_to_identity = true;
            values[parameter_index] = next;
            return out;
        }
        if (parameter_index < lay.first_green_index ||
            parameter_index >= lay.first_green_index + lay.phase_count)
            continue;

        if (lay.phase_count < 2) {
            out.clamped_to_identity = true;  // single phase: cycle pins the green
            return out;
        }
        const double min_green = v.min_green_s;
        double move = signed_step;
        if (move > 0.0) {
            // receiving time: donors are the other phases' headroom
            double headroom = 0.0;
            for (std::size_t k = 0; k < lay.phase_count; ++k) {
                if (lay.first_green_index + k == parameter_index) continue;
                headroom += values[lay.first_green_index + k] - min_green;
            }
            move = std::min(move, headroom);
        } else {
            move = -std::min(-move, values[parameter_index] - min_green);
        }
        if (std::abs(move) < 1e-12) {
            out.clamped_to_identity = true;
            return out;
        }
        // distribute -move across the other phases: proportional to
        // headroom when taking, to current green when giving back
        std::vector<double> weights(lay.phase_count, 0.0);
        double weight_sum = 0.0;
        for (std::size_t k = 0; k < lay.phase_count; ++k) {
            if (lay.first_green_index + k == parameter_index) continue;
            const double g = values[lay.first_green_index + k];
            weights[k] = (move > 0.0) ? (g - min_green) : g;
            weight_sum += weights[k];
        }
        values[parameter_index] += move;
        std::size_t largest = lay.phase_count;  // residual absorber
        for (std::size_t k = 0; k < lay.phase_count; ++k) {
            if (lay.first_green_index + k == parameter_index || weights[k] <= 0.0) continue;
            values[lay.first_green_index + k] -= move * weights[k] / weight_sum;
            if (largest == lay.phase_count ||
                values[lay.first_green_index + k] > values[lay.first_green_index + largest])
                largest = k;
        }
        // pin the cycle sum exactly despite rounding
        double sum = 0.0;
        for (std::size_t k = 0; k < lay.phase_count; ++k)
            if (k != largest) sum += values[lay.first_green_index + k];
        const double lost = static_cast<double>(lay.phase_count) * tmpl.lost_time_s;
        values[lay.first_green_index + largest] = tmpl.cycle_s - lost - sum;
        return out;
    }
    throw InputError("parameter index " + std::to_string(parameter_index) +
                     " is outside the plan vector");
}

SearchTrace hill_climb(const Objective& objective,
                       const std::vector<signals::SignalPlan>& initial_plans,
                       const OptimizerConfig& config) {
    if (config.budget < 1) throw InputError("optimizer budget must be >= 1");
    for (const auto& p : initial_plans) {
        const auto report = signals::validate_plan(p);
        if (!report.ok()) throw InputError("initial plan invalid: " + report.violations.front());
    }

    SearchTrace trace;
    trace.budget = config.budget;

    PlanVector current = encode_plans(initial_plans, config.min_green_s);
    std::int64_t used = 0;
    const auto evaluate = [&](const PlanVector& v) {
        const double obj = evaluate_plan(objective, v, initial_plans);
        ++used;
        trace.entries.push_back(
            TraceEntry{static_cast<std::int64_t>(trace.entries.size()), v.values, obj});
        return obj;
    };

    double best = evaluate(current);
    trace.best_index = 0;

    for (double step : config.step_schedule_s) {
        if (step < 1.0) break;
        bool improved_at_step = true;
        while (improved_at_step && used < config.budget) {
            improved_at_step = false;
            for (std::size_t param = 0; param < current.values.size() && used < config.budget;
                 ++param) {
                for (int dir : {+1, -1}) {
                    if (used >= config.budget) break;
                    const auto cand = perturb_plan(current, initial_plans, param, step, dir);
                    if (cand.clamped_to_identity) continue;
                    const double obj = evaluate(cand.vector);
                    if (obj < best) {
                        best = obj;
                        current = cand.vector;
                        trace.best_index = trace.entries.size() - 1;
                        improved_at_step = true;
                        break;  // next parameter from the improved point
                    }
                }
            }
        }
        if (used >= config.budget) break;
    }
    return trace;
}

std::string trace_to_csv(const SearchTrace& trace, const PlanVector& layout_reference,
                         const std::string& seed_comment) {
    std::string out = seed_comment + "\n";
    out += "iteration";
    for (const auto& lay : layout_reference.layout) {
        out += ",offset_" + std::to_string(lay.signal_id);
        for (std::size_t k = 0; k < lay.phase_count; ++k)
            out += ",green_" + std::to_string(lay.signal_id) + "_" + std::to_string(k);
    }
    out += ",objective_s\n";
    for (const auto& e : trace.entries) {
        out += std::to_string(e.iteration);
        for (double v : e.values) out += "," + metrics::csv_double(v);
        out += "," + metrics::csv_double(e.objective_s) + "\n";
    }
    return out;
}

}  // namespace campusflow::optimizer
