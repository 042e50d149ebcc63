#include "mbrf/rollout.hpp"

#include "mbrf/dqn.hpp"

namespace mbrf {

EpisodeResult run_episode(const SimConfig& config, const Policy& policy, RewardSpec reward, double gamma,
                          const TraceSink* trace) {
    SimState state = init_sim(config);
    if (trace != nullptr) write_trace_headers(state, *trace);
    RewardTracker tracker(reward);
    EpisodeAccumulator acc;
    EpisodeResult out;
    Observation obs = build_observation(snapshot(state), state.signal, config);
    const int steps = config.control_steps_per_episode();
    out.rewards.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        const int action = policy(obs, state);
        const auto m = step(state, action, trace);
        acc.accumulate(m);
        out.rewards.push_back(tracker(m));
        obs = build_observation(m, state.signal, config);
    }
    out.report = acc.finish(state.total_wait(), discounted_return(out.rewards, gamma), config.seed);
    return out;
}

EpisodeReport mean_report(const std::vector<EpisodeReport>& reports) {
    EpisodeReport mean;
    if (reports.empty()) return mean;
    for (const auto& r : reports) {
        mean.mean_waiting += r.mean_waiting;
        mean.mean_queue += r.mean_queue;
        mean.throughput += r.throughput;
        mean.mean_travel_time += r.mean_travel_time;
        mean.co2_total += r.co2_total;
        mean.episode_return += r.episode_return;
    }
    const double n = static_cast<double>(reports.size());
    mean.mean_waiting /= n;
    mean.mean_queue /= n;
    mean.throughput /= n;
    mean.mean_travel_time /= n;
    mean.co2_total /= n;
    mean.episode_return /= n;
    return mean;
}

} // namespace mbrf
