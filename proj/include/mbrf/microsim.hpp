#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mbrf/emissions.hpp"
#include "mbrf/errors.hpp"
#include "mbrf/rng.hpp"
#include "mbrf/vehicle_class.hpp"

namespace mbrf {

enum class Approach : std::uint8_t { North = 0, South = 1, East = 2, West = 3 };

const char* approach_name(Approach a);

struct Vehicle {
    std::uint64_t id = 0;
    std::size_t class_index = 0;  // into SimConfig::classes
    int lane = 0;
    double position = 0.0;  // front bumper, metres from lane entry
    double speed = 0.0;
    double accel = 0.0;     // last realised acceleration
    double spawn_time = 0.0;
    double cumulative_wait = 0.0;
    bool exited = false;
    double junction_remaining = 0.0;  // > 0 while traversing the junction
};

struct LaneState {
    int id = 0;
    Approach approach = Approach::North;
    double length = 150.0;
    /// Front (closest to the stop line) first.
    std::deque<Vehicle> vehicles;
    /// Vehicles past the stop line, still traversing the junction.
    std::vector<Vehicle> crossing;
    int served_by_phase = 0;
};

struct SignalState {
    int phase = 0;
    double phase_elapsed = 0.0;
    bool in_yellow = false;
    double yellow_remaining = 0.0;
    int pending_phase = 0;

    bool is_green_for(int lane_phase) const { return !in_yellow && phase == lane_phase; }
};

struct SimConfig {
    double g_min = 5.0;
    double g_max = 50.0;
    double yellow = 2.0;
    double control_interval = 5.0;
    double sim_step = 1.0;
    double lane_length = 150.0;
    double detection_zone = 100.0;
    double halt_speed_threshold = 0.1;
    double episode_duration = 1000.0;
    double arrival_rate_low = 0.05;   // veh/s per approach
    double arrival_rate_high = 0.20;
    double min_gap = 2.5;             // m, standstill spacing behind a leader
    double junction_traversal = 2.0;  // s
    std::vector<VehicleClass> classes = canonical_classes();
    /// Probability per entry of `classes`.
    std::vector<double> class_mixture = {1.0, 0.0, 0.0, 0.0};
    std::uint64_t seed = 0;

    void validate() const;
    int substeps_per_interval() const;
    int control_steps_per_episode() const;
    /// floor(lane_length / (car length + min_gap)); used to normalise queues.
    int lane_capacity() const;
};

SimConfig homogeneous_config();
/// 50% car, 20% truck, 15% bus, 15% motorcycle.
SimConfig heterogeneous_config();

struct SimState {
    SimConfig config;
    std::int64_t ticks = 0;  // clock = ticks * sim_step
    std::vector<LaneState> lanes;
    SignalState signal;
    std::vector<double> arrival_rates;  // per lane, fixed for the episode
    std::vector<Rng> demand_streams;    // one per lane
    std::uint64_t next_vehicle_id = 1;
    std::int64_t spawned_count = 0;
    std::int64_t exited_count = 0;
    std::int64_t blocked_count = 0;
    double travel_time_sum = 0.0;
    double co2_total = 0.0;

    double clock() const { return static_cast<double>(ticks) * config.sim_step; }
    std::int64_t in_network_count() const;
    /// Sum of cumulative_wait over every vehicle still in the network.
    double total_wait() const;
};

/// Everything the metrics accumulator consumes for one simulation sub-step.
struct SubstepRecord {
    double time = 0.0;  // clock at the end of the sub-step
    double dt = 1.0;
    int spawns = 0;
    int blocked = 0;
    int exits = 0;
    std::vector<double> exit_travel_times;
    std::vector<double> exit_waits;
    int halted_total = 0;
    double co2 = 0.0;
    double in_network_wait = 0.0;
};

struct ZoneSample {
    double mass = kReferenceMassKg;
    double mean_speed = 0.0;
};

/// Aggregates over one control interval.
struct StepMeasurements {
    std::vector<double> mean_density;  // per lane, occupied fraction
    std::vector<double> mean_halted;   // per lane, halted vehicles
    std::vector<int> halted_end;       // per lane, at interval end
    std::vector<ZoneSample> zone;      // interval-mean speed per vehicle seen in a detection zone
    double total_wait = 0.0;           // w_t at interval end
    int halted_total_end = 0;
    double co2 = 0.0;
    int spawns = 0;
    int blocked = 0;
    int exits = 0;
    std::vector<SubstepRecord> substeps;
};

/// Optional CSV sinks for per-sub-step episode traces.
struct TraceSink {
    /// t,phase,in_yellow,queue_<lane>..,density_<lane>..,spawns,exits; the
    /// signal columns describe the sub-step ending at t, the rest its end state.
    std::ostream* signal = nullptr;
    std::ostream* vehicles = nullptr;  // t,id,lane,class,mass,position,speed,cumulative_wait,crossing,in_zone
};

void write_trace_headers(const SimState& state, const TraceSink& sink);

SimState init_sim(const SimConfig& config);

/// Places a vehicle directly (test scenarios, warm starts). Counts as spawned.
Vehicle& place_vehicle(SimState& state, int lane, std::size_t class_index, double position,
                       double speed);

/// Applies one agent decision at a control-interval boundary, enforcing
/// min/max green. Never fails: illegal requests are masked.
void apply_action(SimState& state, int action);

/// apply_action followed by control_interval / sim_step sub-steps.
StepMeasurements step(SimState& state, int action, const TraceSink* trace = nullptr);

/// Advances one sub-step without a decision (signal runs on its own timers).
SubstepRecord advance_substep(SimState& state, const TraceSink* trace = nullptr);

/// Instantaneous measurements of the current state (used before the first step).
StepMeasurements snapshot(const SimState& state);

struct Surroundings {
    double leader_gap = 1e9;                  // free space to leader's rear minus min gap
    double leader_stopping_distance = 0.0;    // leader's braking distance at its max decel
    double stop_line_distance = 1e9;
    bool facing_green = true;
};

/// Longitudinal update of one vehicle over dt. Speed heads toward the
/// minimum of max speed, the gap-safe speed and (on red/yellow) the stop-line
/// safe speed, limited by max_accel upward and max_decel downward. The travel
/// distance is then hard-limited so the vehicle never overlaps its leader or
/// passes a red stop line, braking harder than max_decel only when it must.
Vehicle advance_vehicle(Vehicle vehicle, const VehicleClass& cls, const Surroundings& around,
                        double dt);

/// Highest speed from which a vehicle currently at `speed` can still stop
/// within `distance`, one step of length dt ahead, braking at `decel`.
double safe_speed(double distance, double speed, double decel, double dt);

/// Poisson arrivals for every lane over dt.
void spawn_vehicles(SimState& state, double dt, SubstepRecord& record);

/// Bit-exact text serialisation (hexfloat) used for determinism checks.
std::string serialize(const SimState& state);

} // namespace mbrf
