#include "mbrf/microsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mbrf/csv.hpp"

namespace mbrf {

namespace {

constexpr double kTimeEps = 1e-9;

bool is_multiple(double value, double unit) {
    const double ratio = value / unit;
    return std::abs(ratio - std::round(ratio)) < 1e-9;
}

std::string fmt_bound(const char* lhs, double a, const char* op, const char* rhs, double b) {
    std::ostringstream os;
    os << lhs << " (" << a << ") must be " << op << " " << rhs << " (" << b << ")";
    return os.str();
}

void begin_yellow(SignalState& s, double yellow, int target) {
    if (yellow <= 0.0) {
        s.phase = target;
        s.phase_elapsed = 0.0;
        return;
    }
    s.in_yellow = true;
    s.yellow_remaining = yellow;
    s.pending_phase = target;
}

double occupied_fraction(const LaneState& lane, const SimConfig& cfg) {
    double occupied = 0.0;
    for (const auto& v : lane.vehicles) occupied += cfg.classes[v.class_index].length + cfg.min_gap;
    return std::min(1.0, occupied / lane.length);
}

int halted_in_lane(const LaneState& lane, double threshold) {
    int n = 0;
    for (const auto& v : lane.vehicles)
        if (v.speed < threshold) ++n;
    return n;
}

bool in_zone(const Vehicle& v, const LaneState& lane, const SimConfig& cfg) {
    return lane.length - v.position <= cfg.detection_zone;
}

double stopping_distance(double speed, double decel) { return speed * speed / (2.0 * decel); }

void write_signal_row(std::ostream& os, const SimState& s, const SignalState& during, const SubstepRecord& rec) {
    os << format_double(rec.time) << ',' << during.phase << ',' << (during.in_yellow ? 1 : 0);
    for (const auto& lane : s.lanes) os << ',' << halted_in_lane(lane, s.config.halt_speed_threshold);
    for (const auto& lane : s.lanes) os << ',' << format_double(occupied_fraction(lane, s.config));
    os << ',' << rec.spawns << ',' << rec.exits << '\n';
}

void write_vehicle_rows(std::ostream& os, const SimState& s, double t) {
    const auto row = [&](const Vehicle& v, const LaneState& lane, bool crossing) {
        const auto& cls = s.config.classes[v.class_index];
        os << format_double(t) << ',' << v.id << ',' << v.lane << ',' << cls.name << ','
           << format_double(cls.mass) << ',' << format_double(v.position) << ','
           << format_double(v.speed) << ',' << format_double(v.cumulative_wait) << ','
           << (crossing ? 1 : 0) << ',' << (!crossing && in_zone(v, lane, s.config) ? 1 : 0)
           << '\n';
    };
    for (const auto& lane : s.lanes) {
        for (const auto& v : lane.vehicles) row(v, lane, false);
        for (const auto& v : lane.crossing) row(v, lane, true);
    }
}

} // namespace

const char* approach_name(Approach a) {
    switch (a) {
    case Approach::North: return "N";
    case Approach::South: return "S";
    case Approach::East: return "E";
    case Approach::West: return "W";
    }
    return "?";
}

void SimConfig::validate() const {
    if (!(sim_step > 0)) throw ConfigError("sim_step must be > 0");
    if (!(g_min < g_max)) throw ConfigError(fmt_bound("g_min", g_min, "<", "g_max", g_max));
    if (g_min < 0) throw ConfigError("g_min must be >= 0");
    if (!(control_interval > 0) || !is_multiple(control_interval, sim_step))
        throw ConfigError(fmt_bound("control_interval", control_interval, "a positive multiple of",
                                    "sim_step", sim_step));
    if (yellow < 0 || yellow > control_interval)
        throw ConfigError(fmt_bound("yellow", yellow, "within [0,", "control_interval]", control_interval));
    if (!is_multiple(yellow, sim_step))
        throw ConfigError(fmt_bound("yellow", yellow, "a multiple of", "sim_step", sim_step));
    if (!(episode_duration > 0) || !is_multiple(episode_duration, control_interval))
        throw ConfigError(fmt_bound("episode_duration", episode_duration, "a positive multiple of",
                                    "control_interval", control_interval));
    if (!(lane_length > 0)) throw ConfigError("lane_length must be > 0");
    if (!(detection_zone > 0) || detection_zone > lane_length)
        throw ConfigError(fmt_bound("detection_zone", detection_zone, "within (0,", "lane_length]", lane_length));
    if (!(halt_speed_threshold > 0)) throw ConfigError("halt_speed_threshold must be > 0");
    if (arrival_rate_low < 0 || arrival_rate_low > arrival_rate_high)
        throw ConfigError(fmt_bound("arrival_rate_low", arrival_rate_low, "within [0,",
                                    "arrival_rate_high]", arrival_rate_high));
    if (min_gap < 0) throw ConfigError("min_gap must be >= 0");
    if (junction_traversal < 0) throw ConfigError("junction_traversal must be >= 0");
    if (classes.empty()) throw ConfigError("classes must not be empty");
    for (const auto& c : classes) c.validate();
    if (class_mixture.size() != classes.size())
        throw ConfigError("class_mixture must have one probability per vehicle class");
    double sum = 0.0;
    for (double p : class_mixture) {
        if (p < 0) throw ConfigError("class_mixture probabilities must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("class_mixture must sum to 1 (got " + format_double(sum) + ")");
}

int SimConfig::substeps_per_interval() const {
    return static_cast<int>(std::lround(control_interval / sim_step));
}

int SimConfig::control_steps_per_episode() const {
    return static_cast<int>(std::lround(episode_duration / control_interval));
}

int SimConfig::lane_capacity() const {
    return std::max(1, static_cast<int>(std::floor(lane_length / (classes.front().length + min_gap))));
}

SimConfig homogeneous_config() { return SimConfig{}; }

SimConfig heterogeneous_config() {
    SimConfig cfg;
    cfg.class_mixture = {0.50, 0.20, 0.15, 0.15};
    return cfg;
}

std::int64_t SimState::in_network_count() const {
    std::int64_t n = 0;
    for (const auto& lane : lanes) n += static_cast<std::int64_t>(lane.vehicles.size() + lane.crossing.size());
    return n;
}

double SimState::total_wait() const {
    double w = 0.0;
    for (const auto& lane : lanes) {
        for (const auto& v : lane.vehicles) w += v.cumulative_wait;
        for (const auto& v : lane.crossing) w += v.cumulative_wait;
    }
    return w;
}

SimState init_sim(const SimConfig& config) {
    config.validate();
    SimState s;
    s.config = config;
    const Approach approaches[] = {Approach::North, Approach::South, Approach::East, Approach::West};
    Rng rates = make_stream(config.seed, "arrival-rates");
    for (int i = 0; i < 4; ++i) {
        LaneState lane;
        lane.id = i;
        lane.approach = approaches[i];
        lane.length = config.lane_length;
        lane.served_by_phase = (i < 2) ? 0 : 1;
        s.lanes.push_back(std::move(lane));
        const double u = uniform01(rates);
        s.arrival_rates.push_back(config.arrival_rate_low + (config.arrival_rate_high - config.arrival_rate_low) * u);
        s.demand_streams.push_back(make_stream(config.seed, "demand", static_cast<std::uint64_t>(i)));
    }
    return s;
}

Vehicle& place_vehicle(SimState& state, int lane, std::size_t class_index, double position, double speed) {
    auto& l = state.lanes.at(static_cast<std::size_t>(lane));
    Vehicle v;
    v.id = state.next_vehicle_id++;
    v.class_index = class_index;
    v.lane = lane;
    v.position = position;
    v.speed = speed;
    v.spawn_time = state.clock();
    // keep front-first ordering
    auto it = std::find_if(l.vehicles.begin(), l.vehicles.end(),
                           [&](const Vehicle& other) { return other.position < position; });
    ++state.spawned_count;
    return *l.vehicles.insert(it, v);
}

void apply_action(SimState& state, int action) {
    if (action != 0 && action != 1) throw std::out_of_range("action must be 0 or 1");
    auto& sig = state.signal;
    if (sig.in_yellow) return;
    const auto& cfg = state.config;
    if (sig.phase_elapsed >= cfg.g_max - kTimeEps) {
        begin_yellow(sig, cfg.yellow, 1 - sig.phase);
    } else if (action != sig.phase && sig.phase_elapsed >= cfg.g_min - kTimeEps) {
        begin_yellow(sig, cfg.yellow, action);
    }
}

double safe_speed(double distance, double speed, double decel, double dt) {
    // v'^2/(2b) + v' dt + (v dt/2 - d) <= 0: travel this step plus a
    // conservative bound on the discrete braking distance from v'.
    const double c = speed * dt / 2.0 - distance;
    const double disc = dt * dt - 2.0 * c / decel;
    if (disc < 0.0) return 0.0;
    return std::max(0.0, decel * (-dt + std::sqrt(disc)));
}

Vehicle advance_vehicle(Vehicle vehicle, const VehicleClass& cls, const Surroundings& around, double dt) {
    const double v = vehicle.speed;
    double target = cls.max_speed;
    target = std::min(target, safe_speed(around.leader_gap + around.leader_stopping_distance, v, cls.max_decel, dt));
    if (!around.facing_green)
        target = std::min(target, safe_speed(around.stop_line_distance, v, cls.max_decel, dt));

    double v_new = std::min(target, v + cls.max_accel * dt);
    v_new = std::max(v_new, std::max(0.0, v - cls.max_decel * dt));

    double hard_limit = around.leader_gap;
    if (!around.facing_green) hard_limit = std::min(hard_limit, around.stop_line_distance);
    hard_limit = std::max(hard_limit, 0.0);

    double travel = 0.5 * (v + v_new) * dt;
    if (travel > hard_limit) {
        travel = hard_limit;
        v_new = std::min(v_new, std::max(0.0, 2.0 * hard_limit / dt - v));
    }
    vehicle.position += travel;
    vehicle.accel = (v_new - v) / dt;
    vehicle.speed = v_new;
    return vehicle;
}

void spawn_vehicles(SimState& state, double dt, SubstepRecord& record) {
    const auto& cfg = state.config;
    for (std::size_t i = 0; i < state.lanes.size(); ++i) {
        const double mean = state.arrival_rates[i] * dt;
        if (mean <= 0.0) continue;
        auto& rng = state.demand_streams[i];
        const int arrivals = std::poisson_distribution<int>(mean)(rng);
        auto& lane = state.lanes[i];
        for (int k = 0; k < arrivals; ++k) {
            const double u = uniform01(rng);
            std::size_t cls_index = cfg.class_mixture.size() - 1;
            double acc = 0.0;
            for (std::size_t c = 0; c < cfg.class_mixture.size(); ++c) {
                acc += cfg.class_mixture[c];
                if (u < acc) {
                    cls_index = c;
                    break;
                }
            }
            while (cfg.class_mixture[cls_index] == 0.0 && cls_index > 0) --cls_index;
            const auto& cls = cfg.classes[cls_index];

            double gap = 1e9;
            double leader_stop = 0.0;
            if (!lane.vehicles.empty()) {
                const auto& last = lane.vehicles.back();
                const auto& last_cls = cfg.classes[last.class_index];
                gap = last.position - last_cls.length - cfg.min_gap;
                leader_stop = stopping_distance(last.speed, last_cls.max_decel);
            }
            if (gap < 0.0) {
                ++record.blocked;
                ++state.blocked_count;
                continue;
            }
            Vehicle v;
            v.id = state.next_vehicle_id++;
            v.class_index = cls_index;
            v.lane = lane.id;
            v.position = 0.0;
            v.speed = std::min(cls.max_speed, safe_speed(gap + leader_stop, 0.0, cls.max_decel, dt));
            v.spawn_time = state.clock();
            lane.vehicles.push_back(v);
            ++state.spawned_count;
            ++record.spawns;
        }
    }
}

SubstepRecord advance_substep(SimState& state, const TraceSink* trace) {
    const auto& cfg = state.config;
    const double dt = cfg.sim_step;
    SubstepRecord rec;
    rec.dt = dt;
    rec.time = static_cast<double>(state.ticks + 1) * dt;

    // Sub-step order: arrivals, kinematics under the current signal,
    // waiting/CO2 accrual, junction exits, then the signal timers.
    spawn_vehicles(state, dt, rec);

    std::vector<Vehicle> new_crossers;
    for (auto& lane : state.lanes) {
        const bool green = state.signal.is_green_for(lane.served_by_phase);
        const Vehicle* leader = nullptr;
        std::size_t crossed = 0;
        for (auto& veh : lane.vehicles) {
            const auto& cls = cfg.classes[veh.class_index];
            Surroundings around;
            around.facing_green = green;
            around.stop_line_distance = lane.length - veh.position;
            if (leader != nullptr) {
                const auto& lcls = cfg.classes[leader->class_index];
                around.leader_gap = leader->position - lcls.length - cfg.min_gap - veh.position;
                around.leader_stopping_distance = stopping_distance(leader->speed, lcls.max_decel);
            }
            veh = advance_vehicle(veh, cls, around, dt);
            if (green && veh.position > lane.length && leader == nullptr) {
                ++crossed;  // leaves the lane; the next vehicle becomes the front
                continue;
            }
            veh.position = std::min(veh.position, lane.length);
            leader = &veh;
        }
        for (std::size_t k = 0; k < crossed; ++k) {
            Vehicle v = lane.vehicles.front();
            lane.vehicles.pop_front();
            v.position = lane.length;
            v.junction_remaining = cfg.junction_traversal;
            new_crossers.push_back(v);
        }
    }

    // waiting and CO2 for every vehicle in the network this sub-step
    const auto accrue = [&](Vehicle& v) {
        const auto& cls = cfg.classes[v.class_index];
        if (v.speed < cfg.halt_speed_threshold) v.cumulative_wait += dt;
        rec.co2 += co2_rate(v.speed, v.accel, emission_params_for(cls)) * dt;
    };
    for (auto& lane : state.lanes) {
        for (auto& v : lane.vehicles) accrue(v);
        for (auto& v : lane.crossing) {
            v.accel = 0.0;
            accrue(v);
        }
    }
    for (auto& v : new_crossers) accrue(v);

    const auto do_exit = [&](Vehicle& v) {
        v.exited = true;
        const double travel = rec.time - v.spawn_time;
        rec.exit_travel_times.push_back(travel);
        rec.exit_waits.push_back(v.cumulative_wait);
        state.travel_time_sum += travel;
        ++state.exited_count;
        ++rec.exits;
    };
    for (auto& lane : state.lanes) {
        auto& c = lane.crossing;
        for (auto& v : c) {
            v.junction_remaining -= dt;
            if (v.junction_remaining <= kTimeEps) do_exit(v);
        }
        c.erase(std::remove_if(c.begin(), c.end(), [](const Vehicle& v) { return v.exited; }), c.end());
    }
    for (auto& v : new_crossers) {
        if (v.junction_remaining <= kTimeEps) {
            do_exit(v);
        } else {
            state.lanes[static_cast<std::size_t>(v.lane)].crossing.push_back(v);
        }
    }

    const SignalState during = state.signal;
    auto& sig = state.signal;
    if (sig.in_yellow) {
        sig.yellow_remaining -= dt;
        if (sig.yellow_remaining <= kTimeEps) {
            sig.in_yellow = false;
            sig.yellow_remaining = 0.0;
            sig.phase = sig.pending_phase;
            sig.phase_elapsed = 0.0;
        }
    } else {
        sig.phase_elapsed += dt;
        if (sig.phase_elapsed >= cfg.g_max - kTimeEps) begin_yellow(sig, cfg.yellow, 1 - sig.phase);
    }

    ++state.ticks;
    state.co2_total += rec.co2;
    for (const auto& lane : state.lanes) rec.halted_total += halted_in_lane(lane, cfg.halt_speed_threshold);
    rec.in_network_wait = state.total_wait();

    if (trace != nullptr) {
        if (trace->signal != nullptr) write_signal_row(*trace->signal, state, during, rec);
        if (trace->vehicles != nullptr) write_vehicle_rows(*trace->vehicles, state, rec.time);
    }
    return rec;
}

StepMeasurements step(SimState& state, int action, const TraceSink* trace) {
    apply_action(state, action);
    const auto& cfg = state.config;
    const std::size_t n = state.lanes.size();
    const int substeps = cfg.substeps_per_interval();

    StepMeasurements m;
    m.mean_density.assign(n, 0.0);
    m.mean_halted.assign(n, 0.0);
    m.halted_end.assign(n, 0);
    struct ZoneAcc {
        double mass = 0.0;
        double speed_sum = 0.0;
        int count = 0;
    };
    std::map<std::uint64_t, ZoneAcc> zone;

    for (int k = 0; k < substeps; ++k) {
        auto rec = advance_substep(state, trace);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& lane = state.lanes[i];
            m.mean_density[i] += occupied_fraction(lane, cfg);
            m.mean_halted[i] += halted_in_lane(lane, cfg.halt_speed_threshold);
            for (const auto& v : lane.vehicles) {
                if (!in_zone(v, lane, cfg)) continue;
                auto& acc = zone[v.id];
                acc.mass = cfg.classes[v.class_index].mass;
                acc.speed_sum += v.speed;
                ++acc.count;
            }
        }
        m.co2 += rec.co2;
        m.spawns += rec.spawns;
        m.blocked += rec.blocked;
        m.exits += rec.exits;
        m.substeps.push_back(std::move(rec));
    }
    for (std::size_t i = 0; i < n; ++i) {
        m.mean_density[i] /= substeps;
        m.mean_halted[i] /= substeps;
        m.halted_end[i] = halted_in_lane(state.lanes[i], cfg.halt_speed_threshold);
        m.halted_total_end += m.halted_end[i];
    }
    for (const auto& [id, acc] : zone) m.zone.push_back({acc.mass, acc.speed_sum / acc.count});
    m.total_wait = state.total_wait();
    return m;
}

StepMeasurements snapshot(const SimState& state) {
    const auto& cfg = state.config;
    StepMeasurements m;
    for (const auto& lane : state.lanes) {
        m.mean_density.push_back(occupied_fraction(lane, cfg));
        const int h = halted_in_lane(lane, cfg.halt_speed_threshold);
        m.mean_halted.push_back(h);
        m.halted_end.push_back(h);
        m.halted_total_end += h;
        for (const auto& v : lane.vehicles)
            if (in_zone(v, lane, cfg)) m.zone.push_back({cfg.classes[v.class_index].mass, v.speed});
    }
    m.total_wait = state.total_wait();
    return m;
}

void write_trace_headers(const SimState& state, const TraceSink& sink) {
    if (sink.signal != nullptr) {
        auto& os = *sink.signal;
        os << "t,phase,in_yellow";
        for (const auto& lane : state.lanes) os << ",queue_" << approach_name(lane.approach);
        for (const auto& lane : state.lanes) os << ",density_" << approach_name(lane.approach);
        os << ",spawns,exits\n";
    }
    if (sink.vehicles != nullptr)
        *sink.vehicles << "t,id,lane,class,mass,position,speed,cumulative_wait,crossing,in_zone\n";
}

std::string serialize(const SimState& s) {
    std::ostringstream os;
    const auto hex = [&](double x) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%a", x);
        os << buf << ' ';
    };
    os << "ticks " << s.ticks << " next " << s.next_vehicle_id << " spawned " << s.spawned_count
       << " exited " << s.exited_count << " blocked " << s.blocked_count << '\n';
    hex(s.travel_time_sum);
    hex(s.co2_total);
    os << "\nsignal " << s.signal.phase << ' ' << s.signal.in_yellow << ' ' << s.signal.pending_phase << ' ';
    hex(s.signal.phase_elapsed);
    hex(s.signal.yellow_remaining);
    os << '\n';
    for (std::size_t i = 0; i < s.lanes.size(); ++i) {
        const auto& lane = s.lanes[i];
        os << "lane " << lane.id << " rate ";
        hex(s.arrival_rates[i]);
        os << "rng " << s.demand_streams[i] << '\n';
        const auto dump = [&](const Vehicle& v) {
            os << v.id << ' ' << v.class_index << ' ';
            hex(v.position);
            hex(v.speed);
            hex(v.accel);
            hex(v.spawn_time);
            hex(v.cumulative_wait);
            hex(v.junction_remaining);
            os << '\n';
        };
        for (const auto& v : lane.vehicles) dump(v);
        os << "crossing\n";
        for (const auto& v : lane.crossing) dump(v);
    }
    return os.str();
}

} // namespace mbrf
