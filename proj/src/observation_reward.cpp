#include "mbrf/observation_reward.hpp"

#include <algorithm>

namespace mbrf {

namespace {
double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }
} // namespace

Observation build_observation(const StepMeasurements& m, const SignalState& signal, const SimConfig& config) {
    const std::size_t n = m.mean_density.size();
    Observation obs;
    obs.features.reserve(observation_size(n));
    obs.features.push_back(signal.phase == 0 ? 1.0 : 0.0);
    obs.features.push_back(signal.phase == 1 ? 1.0 : 0.0);
    obs.features.push_back(!signal.in_yellow && signal.phase_elapsed >= config.g_min - 1e-9 ? 1.0 : 0.0);
    for (double d : m.mean_density) obs.features.push_back(clamp01(d));
    const double capacity = config.lane_capacity();
    for (double q : m.mean_halted) obs.features.push_back(clamp01(q / capacity));
    return obs;
}

std::string reward_name(RewardKind kind) {
    switch (kind) {
    case RewardKind::Mbrf: return "mbrf";
    case RewardKind::NegWaiting: return "wait";
    case RewardKind::NegQueue: return "queue";
    case RewardKind::DiffWaiting: return "diff";
    }
    return "?";
}

RewardKind parse_reward_kind(const std::string& name) {
    if (name == "mbrf") return RewardKind::Mbrf;
    if (name == "wait") return RewardKind::NegWaiting;
    if (name == "queue") return RewardKind::NegQueue;
    if (name == "diff") return RewardKind::DiffWaiting;
    throw ConfigError("unknown reward '" + name + "' (valid: mbrf, wait, queue, diff)");
}

double mbrf_reward(std::span<const ZoneSample> zone, bool mass_scaling) {
    if (zone.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : zone) sum += (mass_scaling ? s.mass / kReferenceMassKg : 1.0) * s.mean_speed;
    return sum / static_cast<double>(zone.size());
}

double RewardTracker::operator()(const StepMeasurements& m) {
    switch (spec_.kind) {
    case RewardKind::Mbrf: return mbrf_reward(m.zone, spec_.mass_scaling);
    case RewardKind::NegWaiting: return neg_waiting_reward(m.total_wait);
    case RewardKind::NegQueue: return neg_queue_reward(m.halted_total_end);
    case RewardKind::DiffWaiting: {
        auto [r, next] = diff_waiting_reward(prev_wait_, m.total_wait);
        prev_wait_ = next;
        return r;
    }
    }
    return 0.0;
}

} // namespace mbrf
