#pragma once

#include <span>
#include <string>
#include <variant>

#include "mbrf/rollout.hpp"

namespace mbrf {

struct MaxPressure {};
struct LongestQueueFirst {};
struct FixedTime {
    double cycle = 30.0;  // s; phase 0 for the first half, phase 1 for the second
};

using ControllerKind = std::variant<MaxPressure, LongestQueueFirst, FixedTime>;

/// "maxpressure", "lqf", "fixed:CYCLE".
ControllerKind parse_controller(const std::string& name, double g_min);
std::string controller_name(const ControllerKind& kind);

/// Phase with the largest summed incoming queue. Outgoing lanes are sinks, so
/// the downstream term is zero. Ties go to phase 0.
int max_pressure_action(std::span<const double> lane_queues, std::span<const int> lane_phase);

/// Phase serving the single longest lane queue; ties go to the lower lane.
int lqf_action(std::span<const double> lane_queues, std::span<const int> lane_phase);

int fixed_time_action(double clock, double cycle);

/// Adapts a controller to the episode runner. Queues are read as halted
/// vehicle counts per lane at the decision instant.
Policy make_controller_policy(const ControllerKind& kind);

} // namespace mbrf
