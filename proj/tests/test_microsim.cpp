#include <set>
#include <sstream>

#include "doctest.h"
#include "mbrf/microsim.hpp"
#include "support/checks.hpp"

using namespace mbrf;

namespace {

SimConfig quiet_config() {
    SimConfig cfg;
    cfg.arrival_rate_low = 0.0;
    cfg.arrival_rate_high = 0.0;
    return cfg;
}

} // namespace

TEST_CASE("init_sim is deterministic for a seed") {
    SimConfig cfg;
    cfg.seed = 42;
    CHECK(serialize(init_sim(cfg)) == serialize(init_sim(cfg)));
    cfg.seed = 43;
    CHECK(serialize(init_sim(cfg)) != serialize(init_sim(SimConfig{})));
}

TEST_CASE("init_sim starts empty in phase 0") {
    const auto s = init_sim(SimConfig{});
    CHECK(s.clock() == 0.0);
    CHECK(s.in_network_count() == 0);
    CHECK(s.signal.phase == 0);
    CHECK(s.signal.phase_elapsed == 0.0);
    CHECK_FALSE(s.signal.in_yellow);
    REQUIRE(s.lanes.size() == 4);
    CHECK(s.lanes[0].served_by_phase == 0);
    CHECK(s.lanes[1].served_by_phase == 0);
    CHECK(s.lanes[2].served_by_phase == 1);
    CHECK(s.lanes[3].served_by_phase == 1);
    for (double r : s.arrival_rates) {
        CHECK(r >= 0.05);
        CHECK(r <= 0.20);
    }
}

TEST_CASE("invalid config names the violated bound") {
    SimConfig cfg;
    cfg.g_min = 50;
    cfg.g_max = 5;
    try {
        init_sim(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("g_min") != std::string::npos);
        CHECK(msg.find("g_max") != std::string::npos);
    }
    SimConfig mix;
    mix.class_mixture = {0.5, 0.2, 0.2, 0.2};
    CHECK_THROWS_AS(init_sim(mix), ConfigError);
    SimConfig yellow;
    yellow.yellow = 6;
    CHECK_THROWS_AS(init_sim(yellow), ConfigError);
}

TEST_CASE("degenerate car-only mixture spawns only cars") {
    SimConfig cfg;
    cfg.seed = 5;
    auto s = init_sim(cfg);
    std::set<std::size_t> seen;
    for (int k = 0; k < 200; ++k) {
        step(s, k % 2);
        for (const auto& lane : s.lanes)
            for (const auto& v : lane.vehicles) seen.insert(v.class_index);
    }
    CHECK(s.spawned_count > 0);
    CHECK(seen == std::set<std::size_t>{0});
}

TEST_CASE("apply_action masks min green and forces max green") {
    auto s = init_sim(quiet_config());

    s.signal.phase_elapsed = 3.0;
    apply_action(s, 1);
    CHECK(s.signal.phase == 0);
    CHECK_FALSE(s.signal.in_yellow);

    s.signal.phase_elapsed = 10.0;
    apply_action(s, 1);
    CHECK(s.signal.in_yellow);
    CHECK(s.signal.yellow_remaining == 2.0);
    CHECK(s.signal.pending_phase == 1);

    auto t = init_sim(quiet_config());
    t.signal.phase_elapsed = 50.0;
    apply_action(t, 0);
    CHECK(t.signal.in_yellow);
    CHECK(t.signal.pending_phase == 1);

    auto u = init_sim(quiet_config());
    u.signal.phase_elapsed = 20.0;
    apply_action(u, 0);
    CHECK_FALSE(u.signal.in_yellow);
    CHECK_THROWS_AS(apply_action(u, 2), std::out_of_range);
}

TEST_CASE("yellow lasts exactly two seconds then commits the pending phase") {
    auto s = init_sim(quiet_config());
    s.signal.phase_elapsed = 10.0;
    apply_action(s, 1);
    advance_substep(s);
    CHECK(s.signal.in_yellow);
    advance_substep(s);
    CHECK_FALSE(s.signal.in_yellow);
    CHECK(s.signal.phase == 1);
    CHECK(s.signal.phase_elapsed == 0.0);
}

TEST_CASE("step on an empty network measures nothing") {
    auto s = init_sim(quiet_config());
    for (int a : {0, 1, 1, 0}) {
        const auto m = step(s, a);
        CHECK(m.halted_total_end == 0);
        CHECK(m.total_wait == 0.0);
        CHECK(m.exits == 0);
        CHECK(m.co2 == 0.0);
        CHECK(m.zone.empty());
    }
    CHECK(s.clock() == 20.0);
}

TEST_CASE("a car at a green stop line clears the junction within one interval") {
    auto s = init_sim(quiet_config());
    place_vehicle(s, 0, 0, 150.0, 0.0);
    const auto m = step(s, 0);
    // t=1: 2.6 m/s, 1.3 m travelled -> past the line; 2 s traversal -> exit at t=3.
    CHECK(m.exits == 1);
    CHECK(s.exited_count == 1);
    CHECK(s.in_network_count() == 0);
    REQUIRE(m.substeps[2].exit_travel_times.size() == 1);
    CHECK(m.substeps[2].exit_travel_times[0] == doctest::Approx(3.0));
}

TEST_CASE("a car held at red accrues the full interval of waiting") {
    auto s = init_sim(quiet_config());
    place_vehicle(s, 2, 0, 150.0, 0.0);
    const auto m = step(s, 0);
    CHECK(m.halted_end[2] == 1);
    CHECK(m.halted_total_end == 1);
    CHECK(s.lanes[2].vehicles.front().cumulative_wait == 5.0);
    CHECK(m.total_wait == 5.0);
    CHECK(s.lanes[2].vehicles.front().position == 150.0);
}

TEST_CASE("advance_vehicle kinematics") {
    const auto car = car_class();
    Vehicle v;

    SUBCASE("accelerates from rest on an open green road") {
        const auto out = advance_vehicle(v, car, Surroundings{}, 1.0);
        CHECK(out.speed == doctest::Approx(2.6));
        CHECK(out.position == doctest::Approx(1.3));
    }
    SUBCASE("holds max speed") {
        v.speed = car.max_speed;
        const auto out = advance_vehicle(v, car, Surroundings{}, 1.0);
        CHECK(out.speed == car.max_speed);
    }
    SUBCASE("red light 5 m ahead at 10 m/s: stops without passing the line") {
        v.position = 145.0;
        v.speed = 10.0;
        Surroundings red;
        red.facing_green = false;
        red.stop_line_distance = 5.0;
        const auto out = advance_vehicle(v, car, red, 1.0);
        CHECK(out.position <= 150.0);
        CHECK(out.speed < v.speed);
        CHECK(out.speed == 0.0);  // cannot stop within 5 m at 4.5 m/s^2: emergency stop at the line
    }
    SUBCASE("red light with room to brake stays within max_decel") {
        v.position = 100.0;
        v.speed = 10.0;
        for (int k = 0; k < 20; ++k) {
            Surroundings red;
            red.facing_green = false;
            red.stop_line_distance = 150.0 - v.position;
            const auto out = advance_vehicle(v, car, red, 1.0);
            CHECK(v.speed - out.speed <= car.max_decel + 1e-12);
            CHECK(out.position <= 150.0);
            v = out;
        }
        CHECK(v.speed == 0.0);
    }
    SUBCASE("never closes the gap to its leader") {
        v.speed = 13.0;
        Surroundings close;
        close.leader_gap = 3.0;
        const auto out = advance_vehicle(v, car, close, 1.0);
        CHECK(out.position - v.position <= 3.0 + 1e-12);
    }
}

TEST_CASE("spawn_vehicles: zero rate never spawns") {
    auto s = init_sim(quiet_config());
    for (int k = 0; k < 200; ++k) step(s, 0);
    CHECK(s.spawned_count == 0);
    CHECK(s.blocked_count == 0);
}

TEST_CASE("spawn_vehicles: Poisson arrivals average lambda * T") {
    // 100 episodes at 0.1 veh/s for 1000 s: expect 100 arrivals per approach.
    double total = 0.0;
    for (std::uint64_t e = 0; e < 100; ++e) {
        SimConfig cfg;
        cfg.arrival_rate_low = cfg.arrival_rate_high = 0.1;
        cfg.seed = 1000 + e;
        auto s = init_sim(cfg);
        for (int k = 0; k < 200; ++k) step(s, (k / 4) % 2);
        total += static_cast<double>(s.spawned_count + s.blocked_count);
    }
    const double per_approach = total / 100.0 / 4.0;
    CHECK(per_approach == doctest::Approx(100.0).epsilon(0.10));
}

TEST_CASE("spawn_vehicles: heterogeneous mixture frequencies") {
    std::vector<double> counts(4, 0.0);
    double n = 0.0;
    for (std::uint64_t e = 0; n < 2000; ++e) {
        SimConfig cfg = heterogeneous_config();
        cfg.seed = 77 + e;
        auto s = init_sim(cfg);
        std::set<std::uint64_t> seen;
        for (int k = 0; k < 200; ++k) {
            step(s, (k / 4) % 2);
            for (const auto& lane : s.lanes) {
                for (const auto& v : lane.vehicles) {
                    if (seen.insert(v.id).second) {
                        counts[v.class_index] += 1;
                        n += 1;
                    }
                }
            }
        }
    }
    const double expected[] = {0.50, 0.20, 0.15, 0.15};
    for (int c = 0; c < 4; ++c) CHECK(std::abs(counts[c] / n - expected[c]) < 0.03);
}

TEST_CASE("random episodes keep every microsim invariant") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SimConfig cfg = seed % 2 ? heterogeneous_config() : homogeneous_config();
        cfg.seed = seed;
        cfg.arrival_rate_low = 0.1;
        cfg.arrival_rate_high = 0.35;  // push into saturation
        auto s = init_sim(cfg);
        std::ostringstream sig, veh;
        TraceSink sink{&sig, &veh};
        write_trace_headers(s, sink);
        Rng rng(seed);
        std::vector<double> waits;
        for (int k = 0; k < cfg.control_steps_per_episode(); ++k) {
            step(s, static_cast<int>(rng() % 2), &sink);
            const auto bad = testing::check_state(s);
            REQUIRE_MESSAGE(bad.empty(), bad.front());
            CHECK(s.signal.phase_elapsed <= cfg.g_max);
        }
        const auto signal_rows = testing::parse_signal_trace(sig.str());
        const auto vehicle_rows = testing::parse_vehicle_trace(veh.str());
        const auto sbad = testing::check_signal_trace(signal_rows, cfg);
        CHECK_MESSAGE(sbad.empty(), (sbad.empty() ? "" : sbad.front()));
        const auto rbad = testing::check_red_crossings(vehicle_rows, signal_rows, cfg);
        CHECK_MESSAGE(rbad.empty(), (rbad.empty() ? "" : rbad.front()));

        // cumulative wait never decreases per vehicle
        std::map<std::uint64_t, double> last_wait;
        for (const auto& r : vehicle_rows) {
            CHECK(r.wait >= last_wait[r.id]);
            last_wait[r.id] = r.wait;
        }
    }
}

TEST_CASE("identical config and actions give a bit-identical trace") {
    const auto run = [] {
        SimConfig cfg = heterogeneous_config();
        cfg.seed = 9;
        auto s = init_sim(cfg);
        std::ostringstream sig, veh;
        TraceSink sink{&sig, &veh};
        for (int k = 0; k < 100; ++k) step(s, (k * 7 / 3) % 2, &sink);
        return sig.str() + veh.str() + serialize(s);
    };
    CHECK(run() == run());
}
