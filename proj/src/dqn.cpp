#include "mbrf/dqn.hpp"

#include <algorithm>
#include <stdexcept>

#include "mbrf/rollout.hpp"

namespace mbrf {

void Hyperparams::validate() const {
    if (!(learning_rate > 0)) throw ConfigError("dqn.learning_rate must be > 0");
    if (!(gamma > 0 && gamma <= 1)) throw ConfigError("dqn.gamma must be in (0, 1]");
    if (target_sync_interval == 0) throw ConfigError("dqn.target_sync_interval must be > 0");
    if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0 || epsilon_end > 1)
        throw ConfigError("dqn.epsilon_start and dqn.epsilon_end must be in [0, 1]");
    if (epsilon_end > epsilon_start) throw ConfigError("dqn.epsilon_end must be <= dqn.epsilon_start");
    if (batch_size == 0) throw ConfigError("dqn.batch_size must be > 0");
    if (batch_size > replay_capacity) throw ConfigError("dqn.batch_size must be <= dqn.replay_capacity");
    if (eval_frequency == 0) throw ConfigError("dqn.eval_frequency must be > 0");
    if (architecture.size() < 2) throw ConfigError("dqn.architecture needs at least two layers");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
    data_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
    ++inserted_;
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
        return;
    }
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
    if (i >= data_.size()) throw std::out_of_range("replay index out of range");
    return data_[(head_ + i) % data_.size()];
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
    if (data_.empty()) throw std::out_of_range("sampling from an empty replay buffer");
    return data_[std::uniform_int_distribution<std::size_t>(0, data_.size() - 1)(rng)];
}

int argmax_action(std::span<const double> q) {
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
    return best;
}

int greedy_action(const QNetwork& net, std::span<const double> obs) { return argmax_action(net.forward(obs)); }

int select_action(const QNetwork& net, std::span<const double> obs, double epsilon, Rng& rng) {
    if (uniform01(rng) < epsilon) {
        return std::uniform_int_distribution<int>(0, static_cast<int>(net.output_size()) - 1)(rng);
    }
    return greedy_action(net, obs);
}

double epsilon_at(std::uint64_t step, const Hyperparams& hp) {
    if (hp.epsilon_decay_horizon == 0 || step >= hp.epsilon_decay_horizon) return hp.epsilon_end;
    const double frac = static_cast<double>(step) / static_cast<double>(hp.epsilon_decay_horizon);
    return hp.epsilon_start + (hp.epsilon_end - hp.epsilon_start) * frac;
}

double td_target(const QNetwork& target_net, const Transition& t, double gamma) {
    if (t.terminal) return t.reward;
    const auto q = target_net.forward(t.next_obs);
    return t.reward + gamma * *std::max_element(q.begin(), q.end());
}

double discounted_return(std::span<const double> rewards, double gamma) {
    // Horner form from the tail.
    double g = 0.0;
    for (std::size_t k = rewards.size(); k-- > 0;) g = rewards[k] + gamma * g;
    return g;
}

DqnAgent::DqnAgent(const Hyperparams& hp, std::uint64_t seed)
    : hp_(hp),
      online_(Mlp::initialized(hp.architecture, derive_seed(seed, "q-network"))),
      target_(online_),
      optimizer_(online_, AdamConfig{hp.learning_rate, 0.9, 0.999, 1e-8}),
      replay_(hp.replay_capacity),
      action_rng_(make_stream(seed, "epsilon-greedy")),
      replay_rng_(make_stream(seed, "replay-sampling")) {
    hp_.validate();
}

std::optional<double> DqnAgent::train_step() {
    if (replay_.size() < std::max(hp_.batch_size, hp_.learn_start)) return std::nullopt;

    const auto batch = static_cast<Eigen::Index>(hp_.batch_size);
    const auto in = static_cast<Eigen::Index>(online_.input_size());
    Eigen::MatrixXd obs(in, batch);
    Eigen::MatrixXd next(in, batch);
    std::vector<int> actions(hp_.batch_size);
    std::vector<double> rewards(hp_.batch_size);
    std::vector<bool> terminal(hp_.batch_size);
    for (Eigen::Index j = 0; j < batch; ++j) {
        const auto& t = replay_.sample(replay_rng_);
        obs.col(j) = Eigen::Map<const Eigen::VectorXd>(t.obs.data(), in);
        if (t.terminal)
            next.col(j).setZero();  // never read; terminal transitions may omit next_obs
        else
            next.col(j) = Eigen::Map<const Eigen::VectorXd>(t.next_obs.data(), in);
        actions[static_cast<std::size_t>(j)] = t.action;
        rewards[static_cast<std::size_t>(j)] = t.reward;
        terminal[static_cast<std::size_t>(j)] = t.terminal;
    }

    const Eigen::MatrixXd next_q = target_.forward_batch(next);
    std::vector<double> targets(hp_.batch_size);
    for (Eigen::Index j = 0; j < batch; ++j) {
        const auto k = static_cast<std::size_t>(j);
        targets[k] = terminal[k] ? rewards[k] : rewards[k] + hp_.gamma * next_q.col(j).maxCoeff();
    }

    auto result = batch_td_gradients(online_, obs, actions, targets);
    optimizer_step(online_, optimizer_, result.grads);
    ++gradient_steps_;
    if (gradient_steps_ % hp_.target_sync_interval == 0) copy_parameters(online_, target_);
    return result.loss;
}

EpisodeReport evaluate_greedy(const QNetwork& net, const std::vector<SimConfig>& envs, RewardSpec reward,
                              double gamma) {
    const Policy policy = [&net](const Observation& obs, const SimState&) { return greedy_action(net, obs.features); };
    std::vector<EpisodeReport> reports;
    reports.reserve(envs.size());
    for (const auto& cfg : envs) reports.push_back(run_episode(cfg, policy, reward, gamma).report);
    return mean_report(reports);
}

TrainingResult run_training(const EnvFactory& train_env, const std::vector<SimConfig>& eval_envs,
                            RewardSpec reward, const Hyperparams& hp, std::uint64_t seed) {
    hp.validate();
    DqnAgent agent(hp, seed);
    TrainingResult result;

    double loss_sum = 0.0;
    std::uint64_t loss_count = 0;
    const auto log_row = [&](std::uint64_t env_steps) {
        TrainingLogRow row;
        row.step = env_steps;
        row.gradient_steps = agent.gradient_steps();
        row.epsilon = epsilon_at(env_steps, hp);
        row.mean_td_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        row.eval = evaluate_greedy(agent.online(), eval_envs, reward, hp.gamma);
        result.log.push_back(row);
        loss_sum = 0.0;
        loss_count = 0;
    };

    log_row(0);
    std::uint64_t env_steps = 0;
    for (std::uint64_t episode = 0; env_steps < hp.total_train_steps; ++episode) {
        const SimConfig cfg = train_env(episode);
        SimState state = init_sim(cfg);
        RewardTracker tracker(reward);
        Observation obs = build_observation(snapshot(state), state.signal, cfg);
        const int steps = cfg.control_steps_per_episode();
        for (int k = 0; k < steps && env_steps < hp.total_train_steps; ++k) {
            const int action = agent.act(obs.features, epsilon_at(env_steps, hp));
            const auto m = step(state, action);
            Transition t;
            t.obs = obs.features;
            t.action = action;
            t.reward = tracker(m);
            obs = build_observation(m, state.signal, cfg);
            t.next_obs = obs.features;
            t.terminal = (k == steps - 1);
            agent.replay().push(std::move(t));
            ++env_steps;

            if (auto loss = agent.train_step()) {
                loss_sum += *loss;
                ++loss_count;
            }
            if (env_steps % hp.eval_frequency == 0) log_row(env_steps);
        }
    }
    if (env_steps % hp.eval_frequency != 0) log_row(env_steps);
    result.network = agent.online();
    return result;
}

} // namespace mbrf
