#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mbrf/baselines.hpp"
#include "mbrf/dqn.hpp"
#include "mbrf/microsim.hpp"

namespace mbrf {

enum class Scenario { Homogeneous, Heterogeneous };

std::string scenario_name(Scenario s);

struct ExperimentConfig {
    Scenario scenario = Scenario::Homogeneous;
    std::vector<std::string> methods = {"mbrf", "wait", "queue", "diff", "maxpressure", "lqf"};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::size_t eval_episodes = 10;
    std::size_t workers = 1;
    bool trace = false;
    std::string output_dir = "results";
    SimConfig sim;
    Hyperparams dqn;

    /// Throws ConfigError naming the offending key path.
    void validate() const;
    /// `sim` with the scenario's class mixture applied.
    SimConfig scenario_sim() const;
};

/// A learning agent (reward) or a classical controller.
struct Method {
    std::string name;
    bool learning = false;
    RewardSpec reward;          // training reward, or the reward used to score a controller
    ControllerKind controller;  // ignored for learning methods
};

/// Valid names: mbrf, wait, queue, diff, maxpressure, lqf, fixed:CYCLE.
/// MBRF is mass-scaled in the heterogeneous scenario.
Method parse_method(const std::string& name, Scenario scenario, double g_min);

/// YAML (or JSON) text. Unknown keys are errors; an empty document gives defaults.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Resolved config as JSON text accepted back by parse_config.
std::string config_to_json(const ExperimentConfig& config);
/// Reads the "config" object of a manifest.json written by emit_reports.
ExperimentConfig config_from_manifest(const std::filesystem::path& manifest);

/// Demand seeds; (base seed, purpose, episode) only, so every method sees
/// the same traffic for a given seed and adding methods perturbs nothing.
std::uint64_t train_demand_seed(std::uint64_t seed, std::uint64_t episode);
std::uint64_t training_eval_demand_seed(std::uint64_t seed, std::uint64_t episode);
std::uint64_t eval_demand_seed(std::uint64_t seed, std::uint64_t episode);
/// Agent stream seed keyed by (method, seed).
std::uint64_t agent_seed(const std::string& method, std::uint64_t seed);

std::vector<SimConfig> eval_envs(const SimConfig& base, std::uint64_t seed, std::size_t episodes);
std::vector<SimConfig> training_eval_envs(const SimConfig& base, std::uint64_t seed, std::size_t episodes);

struct JobResult {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<EpisodeReport> episodes;
    std::optional<TrainingResult> training;
};

inline constexpr std::array<const char*, 5> kMetricNames = {"waiting", "queue", "throughput", "travel", "co2"};

struct ComparisonRow {
    std::string method;
    std::array<double, 5> mean{};
    std::array<double, 5> stddev{};
    std::array<bool, 5> best{};
    double return_mean = 0.0;
    double return_std = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
};

std::array<double, 5> metric_values(const EpisodeReport& r);

/// Per seed: mean over episodes; per method: mean and sample std over seeds
/// (std = 0 for one seed). Best: min for all metrics except throughput (max).
ComparisonTable aggregate(const std::vector<std::string>& methods, const std::vector<std::uint64_t>& seeds,
                          const std::vector<JobResult>& jobs);

struct ExperimentResults {
    ExperimentConfig config;
    std::vector<JobResult> jobs;  // methods-major, seeds-minor
    ComparisonTable table;
};

/// Trains (when learning) and evaluates every method x seed job.
/// Traces, when enabled, go under `trace_dir`.
ExperimentResults run_experiment(const ExperimentConfig& config,
                                 const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

/// summary.csv, summary.md, episodes.csv, manifest.json and per-run
/// training_log.csv / model.qnet under `dir`.
void emit_reports(const ExperimentResults& results, const std::filesystem::path& dir);

/// Creates `dir` and verifies it is writable; throws IoError otherwise.
void ensure_writable_dir(const std::filesystem::path& dir);

void write_training_log(const std::vector<TrainingLogRow>& log, const std::filesystem::path& path);
void write_network(const QNetwork& net, const std::filesystem::path& path);
QNetwork read_network(const std::filesystem::path& path);

std::string run_dir_name(const std::string& method, std::uint64_t seed);

} // namespace mbrf
