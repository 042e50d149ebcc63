#include "mbrf/baselines.hpp"

#include <cmath>
#include <vector>

#include "mbrf/csv.hpp"

namespace mbrf {

ControllerKind parse_controller(const std::string& name, double g_min) {
    if (name == "maxpressure") return MaxPressure{};
    if (name == "lqf") return LongestQueueFirst{};
    if (name.rfind("fixed:", 0) == 0) {
        double cycle = 0.0;
        try {
            cycle = parse_double(name.substr(6));
        } catch (const std::invalid_argument&) {
            throw ConfigError("fixed-time controller needs a numeric cycle, got '" + name + "'");
        }
        if (!(cycle >= 2.0 * g_min))
            throw ConfigError("fixed-time cycle (" + format_double(cycle) + ") must be >= 2 * g_min (" +
                              format_double(2.0 * g_min) + ")");
        return FixedTime{cycle};
    }
    throw ConfigError("unknown controller '" + name + "' (valid: maxpressure, lqf, fixed:CYCLE)");
}

std::string controller_name(const ControllerKind& kind) {
    if (std::holds_alternative<MaxPressure>(kind)) return "maxpressure";
    if (std::holds_alternative<LongestQueueFirst>(kind)) return "lqf";
    return "fixed:" + format_double(std::get<FixedTime>(kind).cycle);
}

int max_pressure_action(std::span<const double> lane_queues, std::span<const int> lane_phase) {
    constexpr double downstream = 0.0;  // outgoing lanes are infinite sinks
    double pressure[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < lane_queues.size(); ++i) pressure[lane_phase[i]] += lane_queues[i] - downstream;
    return pressure[1] > pressure[0] ? 1 : 0;
}

int lqf_action(std::span<const double> lane_queues, std::span<const int> lane_phase) {
    std::size_t longest = 0;
    for (std::size_t i = 1; i < lane_queues.size(); ++i)
        if (lane_queues[i] > lane_queues[longest]) longest = i;
    return lane_queues.empty() ? 0 : lane_phase[longest];
}

int fixed_time_action(double clock, double cycle) {
    const double t = std::fmod(clock, cycle);
    return t < cycle / 2.0 - 1e-9 ? 0 : 1;
}

Policy make_controller_policy(const ControllerKind& kind) {
    return [kind](const Observation&, const SimState& state) {
        std::vector<double> queues;
        std::vector<int> phases;
        for (const auto& lane : state.lanes) {
            double halted = 0.0;
            for (const auto& v : lane.vehicles)
                if (v.speed < state.config.halt_speed_threshold) halted += 1.0;
            queues.push_back(halted);
            phases.push_back(lane.served_by_phase);
        }
        if (std::holds_alternative<MaxPressure>(kind)) return max_pressure_action(queues, phases);
        if (std::holds_alternative<LongestQueueFirst>(kind)) return lqf_action(queues, phases);
        return fixed_time_action(state.clock(), std::get<FixedTime>(kind).cycle);
    };
}

} // namespace mbrf
