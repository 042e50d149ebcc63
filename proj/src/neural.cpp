#include "mbrf/neural.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "mbrf/csv.hpp"
#include "mbrf/rng.hpp"

namespace mbrf {

namespace {

constexpr const char* kFormatTag = "mbrf-qnetwork";
constexpr int kFormatVersion = 1;

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

void check_input(const Mlp& net, std::size_t n) {
    if (n != net.input_size())
        throw ShapeError("input has " + std::to_string(n) + " features, network expects " +
                         std::to_string(net.input_size()));
}

} // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw ShapeError("network needs at least an input and an output layer");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ShapeError("layer sizes must be positive");
        weights_.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1]),
                                                 static_cast<Eigen::Index>(sizes_[l])));
        biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1])));
    }
}

Mlp Mlp::initialized(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
    Mlp net(std::move(layer_sizes));
    Rng rng = make_stream(seed, "mlp-init");
    for (auto& w : net.weights_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    }
    return net;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    return n;
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
    check_input(*this, input.size());
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::VectorXd z = weights_[l] * a + biases_[l];
        a = (l + 1 < weights_.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    return {a.data(), a.data() + a.size()};
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
    check_input(*this, static_cast<std::size_t>(inputs.rows()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::MatrixXd z = weights_[l] * a;
        z.colwise() += biases_[l];
        a = (l + 1 < weights_.size()) ? relu(z) : z;
    }
    return a;
}

bool Mlp::all_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
        if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
}

bool Mlp::operator==(const Mlp& other) const {
    if (!same_architecture(other)) return false;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
    return true;
}

std::vector<std::size_t> default_q_architecture() { return {11, 64, 64, 2}; }

Gradients Gradients::zeros_like(const Mlp& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(net.biases()[l].size()));
    }
    return g;
}

BatchGradients batch_td_gradients(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> actions,
                                  std::span<const double> targets) {
    check_input(net, static_cast<std::size_t>(inputs.rows()));
    const Eigen::Index batch = inputs.cols();
    if (actions.size() != static_cast<std::size_t>(batch) || targets.size() != static_cast<std::size_t>(batch))
        throw ShapeError("actions/targets must have one entry per batch column");

    const std::size_t layers = net.layer_count();
    std::vector<Eigen::MatrixXd> pre(layers);      // z_l
    std::vector<Eigen::MatrixXd> post(layers + 1);  // a_l, post[0] = inputs
    post[0] = inputs;
    for (std::size_t l = 0; l < layers; ++l) {
        pre[l] = net.weights()[l] * post[l];
        pre[l].colwise() += net.biases()[l];
        post[l + 1] = (l + 1 < layers) ? relu(pre[l]) : pre[l];
    }

    BatchGradients out;
    out.grads = Gradients::zeros_like(net);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(pre.back().rows(), batch);
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (Eigen::Index j = 0; j < batch; ++j) {
        const int a = actions[static_cast<std::size_t>(j)];
        if (a < 0 || a >= delta.rows()) throw ShapeError("action index out of range");
        const double err = post[layers](a, j) - targets[static_cast<std::size_t>(j)];
        out.loss += 0.5 * err * err * inv_batch;
        delta(a, j) = err * inv_batch;
    }
    for (std::size_t l = layers; l-- > 0;) {
        out.grads.weights[l].noalias() = delta * post[l].transpose();
        out.grads.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = net.weights()[l].transpose() * delta;
            delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return out;
}

Gradients backward(const Mlp& net, std::span<const double> obs, std::size_t action, double target) {
    check_input(net, obs.size());
    Eigen::MatrixXd input = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
    const int a = static_cast<int>(action);
    return batch_td_gradients(net, input, std::span<const int>(&a, 1), std::span<const double>(&target, 1)).grads;
}

OptimizerState::OptimizerState(const Mlp& net, AdamConfig cfg)
    : config(cfg), first_moment(Gradients::zeros_like(net)), second_moment(Gradients::zeros_like(net)) {}

void optimizer_step(Mlp& net, OptimizerState& s, const Gradients& g) {
    if (g.weights.size() != net.layer_count() || s.first_moment.weights.size() != net.layer_count())
        throw ShapeError("gradient/optimizer shapes do not match the network");
    ++s.steps;
    const auto& c = s.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.steps));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.steps));
    const auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
        if (param.size() != grad.size()) throw ShapeError("gradient shape mismatch");
        m = c.beta1 * m + (1.0 - c.beta1) * grad;
        v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
        param.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        update(net.weights()[l], s.first_moment.weights[l], s.second_moment.weights[l], g.weights[l]);
        update(net.biases()[l], s.first_moment.biases[l], s.second_moment.biases[l], g.biases[l]);
    }
}

void copy_parameters(const Mlp& src, Mlp& dst) {
    if (&src == &dst) return;
    if (!src.same_architecture(dst)) throw ShapeError("cannot copy parameters between different architectures");
    dst.weights() = src.weights();
    dst.biases() = src.biases();
}

double lipschitz_bound(const Mlp& net) {
    double bound = 1.0;
    for (const auto& w : net.weights()) bound *= w.norm();
    return bound;
}

void save_network(const Mlp& net, std::ostream& os) {
    os << kFormatTag << ' ' << kFormatVersion << '\n';
    os << "layers " << net.layer_sizes().size();
    for (auto s : net.layer_sizes()) os << ' ' << s;
    os << '\n';
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& w = net.weights()[l];
        os << "W " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) os << (c ? " " : "") << format_double(w(r, c));
            os << '\n';
        }
        const auto& b = net.biases()[l];
        os << "b " << l << ' ' << b.size() << '\n';
        for (Eigen::Index i = 0; i < b.size(); ++i) os << (i ? " " : "") << format_double(b(i));
        os << '\n';
    }
}

Mlp load_network(std::istream& is) {
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != kFormatTag) throw ShapeError("not a network file (missing header)");
    if (version != kFormatVersion) throw ShapeError("unsupported network format version " + std::to_string(version));
    std::string word;
    std::size_t count = 0;
    if (!(is >> word >> count) || word != "layers") throw ShapeError("missing layer header");
    std::vector<std::size_t> sizes(count);
    for (auto& s : sizes) is >> s;
    Mlp net(sizes);
    const auto read_value = [&]() {
        std::string text;
        if (!(is >> text)) throw ShapeError("truncated network file");
        return parse_double(text);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        std::size_t idx = 0;
        Eigen::Index rows = 0, cols = 0, n = 0;
        auto& w = net.weights()[l];
        if (!(is >> word >> idx >> rows >> cols) || word != "W" || idx != l || rows != w.rows() || cols != w.cols())
            throw ShapeError("weight block " + std::to_string(l) + " does not match the declared architecture");
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = read_value();
        auto& b = net.biases()[l];
        if (!(is >> word >> idx >> n) || word != "b" || idx != l || n != b.size())
            throw ShapeError("bias block " + std::to_string(l) + " does not match the declared architecture");
        for (Eigen::Index i = 0; i < n; ++i) b(i) = read_value();
    }
    return net;
}

} // namespace mbrf
