#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mbrf/microsim.hpp"

namespace mbrf {

/// Controller input: [phase one-hot (2), min-green flag, densities (n), queues (n)],
/// every component in [0, 1].
struct Observation {
    std::vector<double> features;

    std::size_t lane_count() const { return (features.size() - 3) / 2; }
    double density(std::size_t lane) const { return features[3 + lane]; }
    double queue(std::size_t lane) const { return features[3 + lane_count() + lane]; }
    double min_green_flag() const { return features[2]; }
};

inline constexpr std::size_t observation_size(std::size_t lanes) { return 3 + 2 * lanes; }

Observation build_observation(const StepMeasurements& m, const SignalState& signal, const SimConfig& config);

enum class RewardKind { Mbrf, NegWaiting, NegQueue, DiffWaiting };

struct RewardSpec {
    RewardKind kind = RewardKind::Mbrf;
    bool mass_scaling = false;
};

/// "mbrf", "wait", "queue", "diff".
std::string reward_name(RewardKind kind);
RewardKind parse_reward_kind(const std::string& name);

/// Mean (mass-weighted when scaled) speed of detection-zone vehicles; mass is
/// expressed relative to a 1500 kg car. Zero when the zone is empty.
double mbrf_reward(std::span<const ZoneSample> zone, bool mass_scaling);

inline double neg_waiting_reward(double total_wait) { return -total_wait; }
inline double neg_queue_reward(double halted_total) { return -halted_total; }

/// Returns {reward, new previous-wait}.
inline std::pair<double, double> diff_waiting_reward(double prev_wait, double curr_wait) {
    return {prev_wait - curr_wait, curr_wait};
}

/// Stateful per-episode reward evaluator (DiffWaiting keeps w_{t-1}).
class RewardTracker {
public:
    explicit RewardTracker(RewardSpec spec) : spec_(spec) {}

    double operator()(const StepMeasurements& m);
    void reset() { prev_wait_ = 0.0; }
    const RewardSpec& spec() const { return spec_; }

private:
    RewardSpec spec_;
    double prev_wait_ = 0.0;
};

} // namespace mbrf
