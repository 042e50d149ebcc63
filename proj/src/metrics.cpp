#include "mbrf/metrics.hpp"

#include <algorithm>

namespace mbrf {

void EpisodeAccumulator::accumulate(const SubstepRecord& r) {
    elapsed_ += r.dt;
    halted_integral_ += r.halted_total * r.dt;
    for (double w : r.exit_waits) exited_wait_ += w;
    for (double t : r.exit_travel_times) travel_sum_ += t;
    completed_ += r.exits;
    co2_ += r.co2;
}

void EpisodeAccumulator::accumulate(const StepMeasurements& step) {
    for (const auto& r : step.substeps) accumulate(r);
}

EpisodeReport EpisodeAccumulator::finish(double remaining_wait, double episode_return, std::uint64_t seed) const {
    EpisodeReport rep;
    const double completed = static_cast<double>(completed_);
    rep.throughput = completed;
    rep.mean_waiting = (exited_wait_ + remaining_wait) / std::max(completed, 1.0);
    rep.mean_travel_time = completed > 0 ? travel_sum_ / completed : 0.0;
    rep.mean_queue = elapsed_ > 0 ? halted_integral_ / elapsed_ : 0.0;
    rep.co2_total = co2_;
    rep.episode_return = episode_return;
    rep.seed = seed;
    return rep;
}

} // namespace mbrf
