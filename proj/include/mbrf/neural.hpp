#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mbrf/errors.hpp"

namespace mbrf {

/// Dense feed-forward network: ReLU on hidden layers, identity output.
/// Weights are stored (out x in); batched inputs are column-per-sample.
class Mlp {
public:
    Mlp() = default;
    /// All-zero parameters.
    explicit Mlp(std::vector<std::size_t> layer_sizes);

    /// Uniform +/- sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    static Mlp initialized(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    std::size_t layer_count() const { return weights_.size(); }
    std::size_t parameter_count() const;

    std::vector<Eigen::MatrixXd>& weights() { return weights_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    std::vector<Eigen::VectorXd>& biases() { return biases_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

    std::vector<double> forward(std::span<const double> input) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

    bool all_finite() const;
    bool same_architecture(const Mlp& other) const { return sizes_ == other.sizes_; }
    bool operator==(const Mlp& other) const;

private:
    std::vector<std::size_t> sizes_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

using QNetwork = Mlp;

/// 11 inputs, two hidden layers of 64, one output per signal phase.
std::vector<std::size_t> default_q_architecture();

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static Gradients zeros_like(const Mlp& net);
};

/// Gradient of 0.5 * (Q(obs, action) - target)^2.
Gradients backward(const Mlp& net, std::span<const double> obs, std::size_t action, double target);

struct BatchGradients {
    Gradients grads;
    double loss = 0.0;  // mean of 0.5 * td_error^2
};

/// Mean squared-TD gradient over a batch (columns of `inputs`).
BatchGradients batch_td_gradients(const Mlp& net, const Eigen::MatrixXd& inputs,
                                  std::span<const int> actions, std::span<const double> targets);

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state; moments mirror the network's shapes.
struct OptimizerState {
    AdamConfig config;
    std::uint64_t steps = 0;
    Gradients first_moment;
    Gradients second_moment;

    OptimizerState() = default;
    OptimizerState(const Mlp& net, AdamConfig cfg);
};

void optimizer_step(Mlp& net, OptimizerState& state, const Gradients& grads);

/// dst <- src, bitwise. Throws ShapeError on architecture mismatch.
void copy_parameters(const Mlp& src, Mlp& dst);

/// Frobenius-norm product over layers; an upper bound on the Lipschitz constant.
double lipschitz_bound(const Mlp& net);

void save_network(const Mlp& net, std::ostream& os);
Mlp load_network(std::istream& is);

} // namespace mbrf
