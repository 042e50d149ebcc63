// Command-line front end: train, eval, baseline, compare.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "mbrf/csv.hpp"
#include "mbrf/experiment.hpp"

namespace fs = std::filesystem;
using namespace mbrf;

namespace {

ExperimentConfig base_config(const std::string& config_path, bool heterogeneous) {
    ExperimentConfig cfg = config_path.empty() ? parse_config("") : load_config(config_path);
    if (heterogeneous) cfg.scenario = Scenario::Heterogeneous;
    return cfg;
}

void print_header() {
    std::cout << "episode,demand_seed,waiting,queue,throughput,travel,co2,return\n";
}

void print_report(std::size_t e, const EpisodeReport& r) {
    std::cout << e << ',' << r.seed;
    for (double v : metric_values(r)) std::cout << ',' << format_double(v);
    std::cout << ',' << format_double(r.episode_return) << '\n';
}

/// Evaluates `policy` on the standard evaluation demand for `seed`.
void evaluate(const ExperimentConfig& cfg, const Policy& policy, RewardSpec reward, std::uint64_t seed,
              std::size_t episodes, const std::string& trace_dir) {
    const auto envs = eval_envs(cfg.scenario_sim(), seed, episodes);
    std::vector<EpisodeReport> reports;
    print_header();
    for (std::size_t e = 0; e < envs.size(); ++e) {
        EpisodeResult result;
        if (!trace_dir.empty()) {
            ensure_writable_dir(trace_dir);
            std::ofstream sig(fs::path(trace_dir) / ("trace_ep" + std::to_string(e) + "_signal.csv"));
            std::ofstream veh(fs::path(trace_dir) / ("trace_ep" + std::to_string(e) + "_vehicles.csv"));
            TraceSink sink{&sig, &veh};
            result = run_episode(envs[e], policy, reward, cfg.dqn.gamma, &sink);
        } else {
            result = run_episode(envs[e], policy, reward, cfg.dqn.gamma);
        }
        print_report(e, result.report);
        reports.push_back(result.report);
    }
    const auto mean = mean_report(reports);
    std::cout << "mean,";
    for (double v : metric_values(mean)) std::cout << ',' << format_double(v);
    std::cout << ',' << format_double(mean.episode_return) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Momentum-based reward workbench for adaptive traffic-signal control"};
    app.require_subcommand(1);

    std::string config_path;
    bool heterogeneous = false;

    auto* train = app.add_subcommand("train", "Train a DQN agent on one reward");
    std::string reward_name = "mbrf";
    bool mass_scaling = false;
    std::uint64_t seed = 1;
    std::string out_dir;
    std::optional<std::uint64_t> steps;
    std::string trace_dir;
    train->add_option("--reward", reward_name, "mbrf | wait | queue | diff")
        ->check(CLI::IsMember({"mbrf", "wait", "queue", "diff"}));
    train->add_flag("--mass-scaling", mass_scaling, "Weight MBRF speeds by mass / 1500 kg");
    train->add_option("--seed", seed, "Base seed");
    train->add_option("--out", out_dir, "Output directory")->required();
    train->add_option("--steps", steps, "Override total training steps");
    train->add_option("--config", config_path, "Experiment config file (sim/dqn sections)");
    train->add_flag("--heterogeneous", heterogeneous, "Use the mixed vehicle fleet");
    train->add_option("--trace", trace_dir, "Dump traces of the final evaluation episodes here");

    auto* eval = app.add_subcommand("eval", "Evaluate a saved network greedily");
    std::string model_path;
    std::size_t episodes = 10;
    eval->add_option("--model", model_path, "Network file")->required()->check(CLI::ExistingFile);
    eval->add_option("--episodes", episodes, "Evaluation episodes");
    eval->add_option("--seed", seed, "Base seed for evaluation demand");
    eval->add_option("--reward", reward_name, "Reward used for the reported return")
        ->check(CLI::IsMember({"mbrf", "wait", "queue", "diff"}));
    eval->add_flag("--mass-scaling", mass_scaling, "Weight MBRF speeds by mass / 1500 kg");
    eval->add_option("--config", config_path, "Experiment config file (sim/dqn sections)");
    eval->add_flag("--heterogeneous", heterogeneous, "Use the mixed vehicle fleet");
    eval->add_option("--trace", trace_dir, "Directory for per-step episode traces");

    auto* baseline = app.add_subcommand("baseline", "Run a classical controller");
    std::string controller = "maxpressure";
    baseline->add_option("--controller", controller, "maxpressure | lqf | fixed:CYCLE");
    baseline->add_option("--episodes", episodes, "Evaluation episodes");
    baseline->add_option("--seed", seed, "Base seed for evaluation demand");
    baseline->add_option("--config", config_path, "Experiment config file (sim/dqn sections)");
    baseline->add_flag("--heterogeneous", heterogeneous, "Use the mixed vehicle fleet");
    baseline->add_option("--trace", trace_dir, "Directory for per-step episode traces");

    auto* compare = app.add_subcommand("compare", "Run a full multi-method, multi-seed comparison");
    std::optional<std::size_t> workers;
    bool trace = false;
    compare->add_option("--config", config_path, "Experiment config file")->required();
    compare->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    compare->add_option("--workers", workers, "Concurrent jobs");
    compare->add_flag("--trace", trace, "Dump per-step traces of every evaluation episode");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            auto cfg = base_config(config_path, heterogeneous);
            if (steps) cfg.dqn.total_train_steps = *steps;
            const RewardSpec reward{parse_reward_kind(reward_name), mass_scaling};
            const SimConfig base = cfg.scenario_sim();
            ensure_writable_dir(out_dir);
            const EnvFactory factory = [&](std::uint64_t episode) {
                SimConfig c = base;
                c.seed = train_demand_seed(seed, episode);
                return c;
            };
            auto result = run_training(factory, training_eval_envs(base, seed, cfg.dqn.training_eval_episodes),
                                       reward, cfg.dqn, agent_seed(reward_name, seed));
            write_network(result.network, fs::path(out_dir) / "model.qnet");
            write_training_log(result.log, fs::path(out_dir) / "training_log.csv");
            const auto& last = result.log.back();
            std::cout << "trained " << last.step << " steps; final greedy return "
                      << format_double(last.eval.episode_return) << '\n';
            if (!trace_dir.empty()) {
                const QNetwork& net = result.network;
                evaluate(cfg, [&](const Observation& o, const SimState&) { return greedy_action(net, o.features); },
                         reward, seed, cfg.eval_episodes, trace_dir);
            }
        } else if (*eval) {
            const auto cfg = base_config(config_path, heterogeneous);
            const QNetwork net = read_network(model_path);
            const RewardSpec reward{parse_reward_kind(reward_name), mass_scaling};
            evaluate(cfg, [&](const Observation& o, const SimState&) { return greedy_action(net, o.features); },
                     reward, seed, episodes, trace_dir);
        } else if (*baseline) {
            const auto cfg = base_config(config_path, heterogeneous);
            const auto kind = parse_controller(controller, cfg.sim.g_min);
            const RewardSpec reward{RewardKind::Mbrf, cfg.scenario == Scenario::Heterogeneous};
            evaluate(cfg, make_controller_policy(kind), reward, seed, episodes, trace_dir);
        } else if (*compare) {
            auto cfg = load_config(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            if (workers) cfg.workers = *workers;
            if (trace) cfg.trace = true;
            cfg.validate();
            const fs::path out = cfg.output_dir;
            ensure_writable_dir(out);
            const auto results = run_experiment(cfg, cfg.trace ? std::optional<fs::path>(out / "traces") : std::nullopt);
            emit_reports(results, out);
            std::ifstream md(out / "summary.md");
            std::cout << md.rdbuf();
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
