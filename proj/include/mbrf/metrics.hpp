#pragma once

#include <cstdint>

#include "mbrf/microsim.hpp"

namespace mbrf {

/// Episode-level evaluation metrics.
struct EpisodeReport {
    double mean_waiting = 0.0;      // s per completed vehicle
    double mean_queue = 0.0;        // time-averaged halted vehicles (all lanes)
    double throughput = 0.0;        // vehicles that completed the junction
    double mean_travel_time = 0.0;  // s, over completed vehicles
    double co2_total = 0.0;         // g
    double episode_return = 0.0;
    std::uint64_t seed = 0;
};

/// Folds sub-step records into an EpisodeReport.
///
/// mean_waiting divides the total accrued waiting (completed vehicles plus
/// those still in the network at the end) by the completed-vehicle count.
class EpisodeAccumulator {
public:
    void accumulate(const SubstepRecord& record);
    void accumulate(const StepMeasurements& step);

    /// `remaining_wait` is the accrued wait of vehicles still in the network.
    EpisodeReport finish(double remaining_wait, double episode_return, std::uint64_t seed) const;

    double elapsed() const { return elapsed_; }
    double co2_total() const { return co2_; }

private:
    double elapsed_ = 0.0;
    double halted_integral_ = 0.0;
    double exited_wait_ = 0.0;
    double travel_sum_ = 0.0;
    std::int64_t completed_ = 0;
    double co2_ = 0.0;
};

} // namespace mbrf
