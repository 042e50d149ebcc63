#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mbrf/metrics.hpp"
#include "mbrf/neural.hpp"
#include "mbrf/observation_reward.hpp"
#include "mbrf/rng.hpp"

namespace mbrf {

struct Hyperparams {
    double learning_rate = 0.001;
    double gamma = 0.99;
    std::uint64_t target_sync_interval = 500;  // gradient steps
    double epsilon_start = 0.05;
    double epsilon_end = 0.01;
    std::uint64_t epsilon_decay_horizon = 80'000;
    std::size_t replay_capacity = 50'000;
    std::size_t batch_size = 32;
    std::size_t learn_start = 1'000;
    std::uint64_t total_train_steps = 100'000;  // environment steps
    std::uint64_t eval_frequency = 10'000;
    std::size_t training_eval_episodes = 3;     // greedy episodes per evaluation point
    std::vector<std::size_t> architecture = default_q_architecture();

    void validate() const;
};

struct Transition {
    std::vector<double> obs;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_obs;
    bool terminal = false;
};

/// Fixed-capacity FIFO ring of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t inserted() const { return inserted_; }
    /// i = 0 is the oldest retained transition.
    const Transition& operator[](std::size_t i) const;
    /// Uniform draw with replacement.
    const Transition& sample(Rng& rng) const;

private:
    std::size_t capacity_;
    std::vector<Transition> data_;
    std::size_t head_ = 0;  // slot of the oldest element once full
    std::uint64_t inserted_ = 0;
};

/// Argmax over outputs, ties to the lower index.
int argmax_action(std::span<const double> q);
int greedy_action(const QNetwork& net, std::span<const double> obs);
/// Epsilon-greedy: uniform random action with probability epsilon.
int select_action(const QNetwork& net, std::span<const double> obs, double epsilon, Rng& rng);

/// Linear from epsilon_start at step 0 to epsilon_end at the decay horizon, then flat.
double epsilon_at(std::uint64_t step, const Hyperparams& hp);

double td_target(const QNetwork& target_net, const Transition& t, double gamma);

/// Sum_k gamma^k r_k.
double discounted_return(std::span<const double> rewards, double gamma);

class DqnAgent {
public:
    DqnAgent(const Hyperparams& hp, std::uint64_t seed);

    /// One optimizer step on a uniformly sampled batch; nullopt while the
    /// buffer holds fewer than max(batch_size, learn_start) transitions.
    /// Returns the batch's mean 0.5 * td_error^2.
    std::optional<double> train_step();

    int act(std::span<const double> obs, double epsilon) { return select_action(online_, obs, epsilon, action_rng_); }

    QNetwork& online() { return online_; }
    const QNetwork& online() const { return online_; }
    const QNetwork& target() const { return target_; }
    ReplayBuffer& replay() { return replay_; }
    std::uint64_t gradient_steps() const { return gradient_steps_; }
    const Hyperparams& hyperparams() const { return hp_; }

private:
    Hyperparams hp_;
    QNetwork online_;
    QNetwork target_;
    OptimizerState optimizer_;
    ReplayBuffer replay_;
    Rng action_rng_;
    Rng replay_rng_;
    std::uint64_t gradient_steps_ = 0;
};

struct TrainingLogRow {
    std::uint64_t step = 0;  // environment steps so far
    std::uint64_t gradient_steps = 0;
    double epsilon = 0.0;
    double mean_td_loss = 0.0;  // over gradient steps since the previous row
    EpisodeReport eval;         // mean over the greedy evaluation episodes
};

struct TrainingResult {
    QNetwork network;
    std::vector<TrainingLogRow> log;
};

/// Simulation config for the given training episode index (fresh demand each time).
using EnvFactory = std::function<SimConfig(std::uint64_t episode)>;

/// Mean greedy-policy report over `envs`.
EpisodeReport evaluate_greedy(const QNetwork& net, const std::vector<SimConfig>& envs, RewardSpec reward,
                              double gamma);

/// Interleaves one transition per control interval with one train_step,
/// evaluating greedily at step 0, every eval_frequency steps, and at the end.
TrainingResult run_training(const EnvFactory& train_env, const std::vector<SimConfig>& eval_envs,
                            RewardSpec reward, const Hyperparams& hp, std::uint64_t seed);

} // namespace mbrf
