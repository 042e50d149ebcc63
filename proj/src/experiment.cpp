#include "mbrf/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace mbrf {

Method parse_method(const std::string& name, Scenario scenario, double g_min) {
    Method m;
    m.name = name;
    const bool hetero = scenario == Scenario::Heterogeneous;
    if (name == "mbrf" || name == "wait" || name == "queue" || name == "diff") {
        m.learning = true;
        m.reward.kind = parse_reward_kind(name);
        m.reward.mass_scaling = hetero && m.reward.kind == RewardKind::Mbrf;
        return m;
    }
    try {
        m.controller = parse_controller(name, g_min);
    } catch (const ConfigError& e) {
        if (name.rfind("fixed:", 0) == 0) throw;
        throw ConfigError("unknown method '" + name +
                          "' (valid: mbrf, wait, queue, diff, maxpressure, lqf, fixed:CYCLE)");
    }
    m.reward = RewardSpec{RewardKind::Mbrf, hetero};
    return m;
}

std::uint64_t train_demand_seed(std::uint64_t seed, std::uint64_t episode) {
    return derive_seed(seed, "train-demand", episode);
}
std::uint64_t training_eval_demand_seed(std::uint64_t seed, std::uint64_t episode) {
    return derive_seed(seed, "training-eval-demand", episode);
}
std::uint64_t eval_demand_seed(std::uint64_t seed, std::uint64_t episode) {
    return derive_seed(seed, "eval-demand", episode);
}
std::uint64_t agent_seed(const std::string& method, std::uint64_t seed) {
    return derive_seed(seed, "agent:" + method);
}

namespace {

std::vector<SimConfig> envs_with(const SimConfig& base, std::size_t n,
                                 const std::function<std::uint64_t(std::uint64_t)>& seeder) {
    std::vector<SimConfig> out(n, base);
    for (std::size_t e = 0; e < n; ++e) out[e].seed = seeder(e);
    return out;
}

JobResult run_job(const ExperimentConfig& config, const std::string& method_name, std::uint64_t seed,
                  const std::optional<std::filesystem::path>& trace_dir) {
    const Method method = parse_method(method_name, config.scenario, config.sim.g_min);
    const SimConfig base = config.scenario_sim();
    JobResult job;
    job.method = method_name;
    job.seed = seed;

    Policy policy;
    if (method.learning) {
        const EnvFactory factory = [&base, seed](std::uint64_t episode) {
            SimConfig cfg = base;
            cfg.seed = train_demand_seed(seed, episode);
            return cfg;
        };
        job.training = run_training(factory, training_eval_envs(base, seed, config.dqn.training_eval_episodes),
                                    method.reward, config.dqn, agent_seed(method_name, seed));
        const QNetwork* net = &job.training->network;
        policy = [net](const Observation& obs, const SimState&) { return greedy_action(*net, obs.features); };
    } else {
        policy = make_controller_policy(method.controller);
    }

    const auto envs = eval_envs(base, seed, config.eval_episodes);
    for (std::size_t e = 0; e < envs.size(); ++e) {
        if (trace_dir) {
            const auto dir = *trace_dir / run_dir_name(method_name, seed);
            std::filesystem::create_directories(dir);
            std::ofstream sig(dir / ("trace_ep" + std::to_string(e) + "_signal.csv"));
            std::ofstream veh(dir / ("trace_ep" + std::to_string(e) + "_vehicles.csv"));
            if (!sig || !veh) throw IoError("cannot write traces under " + dir.string());
            TraceSink sink{&sig, &veh};
            job.episodes.push_back(run_episode(envs[e], policy, method.reward, config.dqn.gamma, &sink).report);
        } else {
            job.episodes.push_back(run_episode(envs[e], policy, method.reward, config.dqn.gamma).report);
        }
    }
    return job;
}

} // namespace

std::vector<SimConfig> eval_envs(const SimConfig& base, std::uint64_t seed, std::size_t episodes) {
    return envs_with(base, episodes, [seed](std::uint64_t e) { return eval_demand_seed(seed, e); });
}

std::vector<SimConfig> training_eval_envs(const SimConfig& base, std::uint64_t seed, std::size_t episodes) {
    return envs_with(base, episodes, [seed](std::uint64_t e) { return training_eval_demand_seed(seed, e); });
}

std::string run_dir_name(const std::string& method, std::uint64_t seed) {
    std::string m = method;
    for (auto& c : m)
        if (c == ':' || c == '/' || c == '.') c = '-';
    return m + "_seed" + std::to_string(seed);
}

std::array<double, 5> metric_values(const EpisodeReport& r) {
    return {r.mean_waiting, r.mean_queue, r.throughput, r.mean_travel_time, r.co2_total};
}

ComparisonTable aggregate(const std::vector<std::string>& methods, const std::vector<std::uint64_t>& seeds,
                          const std::vector<JobResult>& jobs) {
    ComparisonTable table;
    for (const auto& method : methods) {
        ComparisonRow row;
        row.method = method;
        std::vector<std::array<double, 6>> per_seed;
        for (auto seed : seeds) {
            for (const auto& job : jobs) {
                if (job.method != method || job.seed != seed) continue;
                std::array<double, 6> acc{};
                for (const auto& ep : job.episodes) {
                    const auto v = metric_values(ep);
                    for (std::size_t k = 0; k < 5; ++k) acc[k] += v[k];
                    acc[5] += ep.episode_return;
                }
                for (auto& a : acc) a /= static_cast<double>(std::max<std::size_t>(job.episodes.size(), 1));
                per_seed.push_back(acc);
            }
        }
        std::array<double, 6> mean{}, sd{};
        const double n = static_cast<double>(per_seed.size());
        for (const auto& s : per_seed)
            for (std::size_t k = 0; k < 6; ++k) mean[k] += s[k];
        for (auto& m : mean) m /= std::max(n, 1.0);
        if (per_seed.size() > 1) {
            for (const auto& s : per_seed)
                for (std::size_t k = 0; k < 6; ++k) sd[k] += (s[k] - mean[k]) * (s[k] - mean[k]);
            for (auto& v : sd) v = std::sqrt(v / (n - 1.0));
        }
        for (std::size_t k = 0; k < 5; ++k) {
            row.mean[k] = mean[k];
            row.stddev[k] = sd[k];
        }
        row.return_mean = mean[5];
        row.return_std = sd[5];
        table.rows.push_back(row);
    }
    for (std::size_t k = 0; k < 5; ++k) {
        if (table.rows.empty()) break;
        const bool maximise = (k == 2);
        double best = table.rows.front().mean[k];
        for (const auto& r : table.rows) best = maximise ? std::max(best, r.mean[k]) : std::min(best, r.mean[k]);
        for (auto& r : table.rows) r.best[k] = (r.mean[k] == best);
    }
    return table;
}

ExperimentResults run_experiment(const ExperimentConfig& config,
                                 const std::optional<std::filesystem::path>& trace_dir) {
    config.validate();
    ExperimentResults results;
    results.config = config;

    struct Spec {
        std::string method;
        std::uint64_t seed;
    };
    std::vector<Spec> specs;
    for (const auto& m : config.methods)
        for (auto s : config.seeds) specs.push_back({m, s});
    results.jobs.resize(specs.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&]() {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            try {
                results.jobs[i] = run_job(config, specs[i].method, specs[i].seed, trace_dir);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(config.workers, std::max<std::size_t>(specs.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    results.table = aggregate(config.methods, config.seeds, results.jobs);
    return results;
}

} // namespace mbrf
