#pragma once

#include <functional>
#include <vector>

#include "mbrf/metrics.hpp"
#include "mbrf/microsim.hpp"
#include "mbrf/observation_reward.hpp"

namespace mbrf {

/// Chooses the next phase request from the latest observation and plant state.
using Policy = std::function<int(const Observation&, const SimState&)>;

struct EpisodeResult {
    EpisodeReport report;
    std::vector<double> rewards;
};

/// One full episode under `policy`. The report's episode_return is the
/// discounted return of `reward` with factor `gamma`.
EpisodeResult run_episode(const SimConfig& config, const Policy& policy, RewardSpec reward, double gamma,
                          const TraceSink* trace = nullptr);

EpisodeReport mean_report(const std::vector<EpisodeReport>& reports);

} // namespace mbrf
