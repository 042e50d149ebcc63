#include <sstream>

#include "doctest.h"
#include "mbrf/emissions.hpp"
#include "mbrf/metrics.hpp"
#include "mbrf/rollout.hpp"
#include "support/checks.hpp"

using namespace mbrf;

namespace {

SimConfig quiet_config() {
    SimConfig cfg;
    cfg.arrival_rate_low = 0.0;
    cfg.arrival_rate_high = 0.0;
    return cfg;
}

int keep_phase(const Observation&, const SimState& s) { return s.signal.phase; }

} // namespace

TEST_CASE("co2_rate at idle is the idle coefficient") {
    const auto p = emission_params_for(car_class());
    CHECK(co2_rate(0.0, 0.0, p) == doctest::Approx(0.45));
    CHECK(co2_rate(0.0, -3.0, p) == doctest::Approx(0.45));
}

TEST_CASE("co2_rate grows with acceleration at fixed speed") {
    const auto p = emission_params_for(car_class());
    double prev = co2_rate(10.0, 0.0, p);
    for (double a = 0.25; a <= 3.0; a += 0.25) {
        const double r = co2_rate(10.0, a, p);
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("co2_rate hand value") {
    const auto p = emission_params_for(car_class());
    // 0.45 + 0.3 + 0.2 + 0.1 + 0.06 * 1 * 10
    CHECK(co2_rate(10.0, 1.0, p) == doctest::Approx(1.65).epsilon(1e-12));
}

TEST_CASE("a bus emits eight times a car at the same state") {
    const auto car = emission_params_for(car_class());
    const auto bus = emission_params_for(bus_class());
    for (double v : {0.0, 5.0, 11.0}) {
        CHECK(co2_rate(v, 0.5, bus) == doctest::Approx(8.0 * co2_rate(v, 0.5, car)));
    }
}

TEST_CASE("doubling the emission scale doubles episode CO2") {
    SimConfig base = heterogeneous_config();
    base.seed = 12;
    SimConfig doubled = base;
    for (auto& c : doubled.classes) c.emission_scale *= 2.0;
    const auto a = run_episode(base, keep_phase, {}, 0.99);
    const auto b = run_episode(doubled, keep_phase, {}, 0.99);
    CHECK(a.report.co2_total > 0.0);
    CHECK(b.report.co2_total == doctest::Approx(2.0 * a.report.co2_total).epsilon(1e-12));
    CHECK(b.report.throughput == a.report.throughput);
}

TEST_CASE("an empty episode reports zeros") {
    const auto r = run_episode(quiet_config(), keep_phase, {}, 0.99).report;
    CHECK(r.mean_waiting == 0.0);
    CHECK(r.mean_queue == 0.0);
    CHECK(r.throughput == 0.0);
    CHECK(r.mean_travel_time == 0.0);
    CHECK(r.co2_total == 0.0);
    CHECK(r.episode_return == 0.0);
}

TEST_CASE("one car through a green junction: travel time by hand") {
    // From rest at the lane start: 2.6 m/s^2 up to 13.89 m/s, 150 m to the line,
    // past it at t=14, then 2 s in the junction.
    auto s = init_sim(quiet_config());
    place_vehicle(s, 0, 0, 0.0, 0.0);
    EpisodeAccumulator acc;
    for (int k = 0; k < 6; ++k) acc.accumulate(step(s, 0));
    const auto r = acc.finish(s.total_wait(), 0.0, 0);
    CHECK(r.throughput == 1.0);
    CHECK(r.mean_travel_time == doctest::Approx(16.0));
    CHECK(r.mean_waiting == 0.0);
    CHECK(r.co2_total > 16 * 0.45);
}

TEST_CASE("one car held at red for twenty seconds") {
    // Phase 0 already 32 s old: g_max forces the switch after 18 s, then 2 s yellow.
    auto s = init_sim(quiet_config());
    s.signal.phase_elapsed = 32.0;
    place_vehicle(s, 2, 0, 150.0, 0.0);
    EpisodeAccumulator acc;
    for (int k = 0; k < 10; ++k) acc.accumulate(step(s, s.signal.phase));
    const auto r = acc.finish(s.total_wait(), 0.0, 0);
    CHECK(r.throughput == 1.0);
    CHECK(r.mean_waiting == doctest::Approx(20.0).epsilon(0.05));
}

TEST_CASE("mean_queue equals the time average of halted counts in the trace") {
    SimConfig cfg;
    cfg.seed = 31;
    std::ostringstream sig, veh;
    TraceSink sink{&sig, &veh};
    const auto r = run_episode(cfg, keep_phase, {}, 0.99, &sink).report;
    const auto rows = testing::parse_vehicle_trace(veh.str());
    std::map<double, int> halted;
    for (const auto& row : rows) {
        if (!row.crossing && row.speed < cfg.halt_speed_threshold) halted[row.t] += 1;
    }
    double sum = 0.0;
    for (const auto& [t, n] : halted) sum += n;
    CHECK(r.mean_queue == doctest::Approx(sum / cfg.episode_duration).epsilon(1e-12));
}

TEST_CASE("report reconciles with microsim counters") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SimConfig cfg = seed % 2 ? heterogeneous_config() : homogeneous_config();
        cfg.seed = seed;
        SimState s = init_sim(cfg);
        EpisodeAccumulator acc;
        for (int k = 0; k < cfg.control_steps_per_episode(); ++k) acc.accumulate(step(s, (k / 6) % 2));
        const auto r = acc.finish(s.total_wait(), 0.0, seed);
        CHECK(r.throughput == static_cast<double>(s.exited_count));
        CHECK(s.spawned_count == s.exited_count + static_cast<std::int64_t>(s.in_network_count()));
        CHECK(r.mean_travel_time > 0.0);
        CHECK(r.co2_total >= 0.45 * r.throughput);
        CHECK(acc.elapsed() == doctest::Approx(cfg.episode_duration));
    }
}

TEST_CASE("mean_report averages field by field") {
    EpisodeReport a, b;
    a.mean_waiting = 1;
    b.mean_waiting = 3;
    a.throughput = 10;
    b.throughput = 20;
    a.co2_total = 5;
    b.co2_total = 7;
    const auto m = mean_report({a, b});
    CHECK(m.mean_waiting == 2.0);
    CHECK(m.throughput == 15.0);
    CHECK(m.co2_total == 6.0);
    CHECK(mean_report({}).throughput == 0.0);
}
