#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mbrf/neural.hpp"
#include "mbrf/rng.hpp"

using namespace mbrf;

namespace {

std::vector<double> random_input(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = 2.0 * uniform01(rng) - 1.0;
    return x;
}

double half_sq(const Mlp& net, const std::vector<double>& x, std::size_t a, double target) {
    const double d = net.forward(x)[a] - target;
    return 0.5 * d * d;
}

// Central differences over every parameter, flattened weights then biases.
std::vector<double> numeric_gradient(Mlp net, const std::vector<double>& x, std::size_t a, double target) {
    const double h = 1e-6;
    std::vector<double> g;
    const auto probe = [&](double& p) {
        const double keep = p;
        p = keep + h;
        const double up = half_sq(net, x, a, target);
        p = keep - h;
        const double down = half_sq(net, x, a, target);
        p = keep;
        g.push_back((up - down) / (2 * h));
    };
    for (auto& w : net.weights())
        for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i]);
    for (auto& b : net.biases())
        for (Eigen::Index i = 0; i < b.size(); ++i) probe(b.data()[i]);
    return g;
}

std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (const auto& w : g.weights) out.insert(out.end(), w.data(), w.data() + w.size());
    for (const auto& b : g.biases) out.insert(out.end(), b.data(), b.data() + b.size());
    return out;
}

Mlp hand_net() {
    Mlp net({1, 2, 1});
    net.weights()[0] << 1.0, -1.0;
    net.weights()[1] << 2.0, 3.0;
    net.biases()[1] << 0.5;
    return net;
}

} // namespace

TEST_CASE("an all-zero network outputs zeros") {
    const Mlp net(default_q_architecture());
    const auto q = net.forward(std::vector<double>(11, 0.3));
    CHECK(q == std::vector<double>{0.0, 0.0});
    CHECK(net.parameter_count() == 11 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
}

TEST_CASE("hand-computed two-neuron forward pass with ReLU gating") {
    const auto net = hand_net();
    CHECK(net.forward(std::vector<double>{2.0})[0] == doctest::Approx(4.5));
    CHECK(net.forward(std::vector<double>{-1.0})[0] == doctest::Approx(3.5));
    CHECK(net.forward(std::vector<double>{0.0})[0] == doctest::Approx(0.5));
}

TEST_CASE("backward: ReLU blocks gradient through inactive units") {
    const auto net = hand_net();
    const auto g = backward(net, std::vector<double>{2.0}, 0, 4.0);  // delta = 0.5
    CHECK(g.biases[1](0) == doctest::Approx(0.5));
    CHECK(g.weights[1](0, 0) == doctest::Approx(1.0));  // 0.5 * hidden 2
    CHECK(g.weights[1](0, 1) == 0.0);
    CHECK(g.weights[0](0, 0) == doctest::Approx(0.5 * 2.0 * 2.0));
    CHECK(g.weights[0](1, 0) == 0.0);
    CHECK(g.biases[0](1) == 0.0);
}

TEST_CASE("forward rejects a wrong input size") {
    const Mlp net(default_q_architecture());
    CHECK_THROWS_AS(net.forward(std::vector<double>(10, 0.0)), ShapeError);
    CHECK_THROWS_AS(Mlp(std::vector<std::size_t>{4}), ShapeError);
}

TEST_CASE("batched forward matches per-sample forward") {
    Rng rng(5);
    const auto net = Mlp::initialized(default_q_architecture(), 5);
    Eigen::MatrixXd batch(11, 7);
    for (int c = 0; c < 7; ++c) {
        const auto x = random_input(rng, 11);
        for (int r = 0; r < 11; ++r) batch(r, c) = x[r];
    }
    const auto out = net.forward_batch(batch);
    for (int c = 0; c < 7; ++c) {
        std::vector<double> x(batch.col(c).data(), batch.col(c).data() + 11);
        const auto q = net.forward(x);
        CHECK(out(0, c) == doctest::Approx(q[0]).epsilon(1e-14));
        CHECK(out(1, c) == doctest::Approx(q[1]).epsilon(1e-14));
    }
}

TEST_CASE("analytic gradients agree with central differences") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = Mlp::initialized({11, 16, 16, 2}, 100 + trial);
        const auto x = random_input(rng, 11);
        const std::size_t a = rng() % 2;
        const double target = 4.0 * uniform01(rng) - 2.0;
        const auto analytic = flatten(backward(net, x, a, target));
        const auto numeric = numeric_gradient(net, x, a, target);
        REQUIRE(analytic.size() == numeric.size());
        double diff = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
            norm += analytic[i] * analytic[i] + numeric[i] * numeric[i];
        }
        CHECK(std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12) < 1e-4);
    }
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
    Rng rng(3);
    const auto net = Mlp::initialized({5, 8, 2}, 3);
    Eigen::MatrixXd inputs(5, 4);
    std::vector<int> actions;
    std::vector<double> targets;
    auto expected = Gradients::zeros_like(net);
    double loss = 0.0;
    for (int c = 0; c < 4; ++c) {
        const auto x = random_input(rng, 5);
        for (int r = 0; r < 5; ++r) inputs(r, c) = x[r];
        actions.push_back(c % 2);
        targets.push_back(uniform01(rng));
        const auto g = backward(net, x, c % 2, targets.back());
        for (std::size_t l = 0; l < g.weights.size(); ++l) {
            expected.weights[l] += g.weights[l] / 4.0;
            expected.biases[l] += g.biases[l] / 4.0;
        }
        loss += half_sq(net, x, c % 2, targets.back()) / 4.0;
    }
    const auto batch = batch_td_gradients(net, inputs, actions, targets);
    CHECK(batch.loss == doctest::Approx(loss).epsilon(1e-12));
    for (std::size_t l = 0; l < expected.weights.size(); ++l) {
        CHECK((batch.grads.weights[l] - expected.weights[l]).norm() < 1e-12);
        CHECK((batch.grads.biases[l] - expected.biases[l]).norm() < 1e-12);
    }
}

TEST_CASE("Adam first step moves each parameter by the learning rate against the gradient") {
    auto net = hand_net();
    const auto before = net;
    OptimizerState opt(net, AdamConfig{});
    auto g = Gradients::zeros_like(net);
    g.weights[1](0, 0) = 0.8;
    g.biases[1](0) = -2.0;
    optimizer_step(net, opt, g);
    // m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
    CHECK(net.weights()[1](0, 0) == doctest::Approx(2.0 - 0.001 * 0.8 / (0.8 + 1e-8)).epsilon(1e-14));
    CHECK(net.biases()[1](0) == doctest::Approx(0.5 + 0.001 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
    CHECK(net.weights()[1](0, 1) == before.weights()[1](0, 1));
    CHECK(net.weights()[0] == before.weights()[0]);
    CHECK(opt.steps == 1);
}

TEST_CASE("zero gradients leave the network unchanged") {
    auto net = Mlp::initialized(default_q_architecture(), 9);
    const auto before = net;
    OptimizerState opt(net, AdamConfig{});
    for (int k = 0; k < 5; ++k) optimizer_step(net, opt, Gradients::zeros_like(net));
    CHECK(net == before);
}

TEST_CASE("copy_parameters produces an independent bitwise copy") {
    const auto src = Mlp::initialized(default_q_architecture(), 1);
    auto dst = Mlp::initialized(default_q_architecture(), 2);
    CHECK_FALSE(src == dst);
    copy_parameters(src, dst);
    CHECK(src == dst);
    dst.weights()[0](0, 0) += 1.0;
    CHECK_FALSE(src == dst);
    copy_parameters(dst, dst);
    Mlp other({11, 32, 2});
    CHECK_THROWS_AS(copy_parameters(src, other), ShapeError);
}

TEST_CASE("lipschitz_bound bounds output differences") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = Mlp::initialized(default_q_architecture(), 300 + trial);
        const double bound = lipschitz_bound(net);
        for (int k = 0; k < 50; ++k) {
            const auto x = random_input(rng, 11);
            const auto y = random_input(rng, 11);
            const auto fx = net.forward(x), fy = net.forward(y);
            double dout = 0.0, din = 0.0;
            for (std::size_t i = 0; i < 2; ++i) dout += (fx[i] - fy[i]) * (fx[i] - fy[i]);
            for (std::size_t i = 0; i < 11; ++i) din += (x[i] - y[i]) * (x[i] - y[i]);
            CHECK(std::sqrt(dout) <= bound * std::sqrt(din) + 1e-12);
        }
    }
}

TEST_CASE("initialization is seeded, bounded and finite") {
    const auto a = Mlp::initialized(default_q_architecture(), 77);
    const auto b = Mlp::initialized(default_q_architecture(), 77);
    const auto c = Mlp::initialized(default_q_architecture(), 78);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.all_finite());
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        const auto& w = a.weights()[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        CHECK(w.cwiseAbs().maxCoeff() <= limit);
        CHECK(a.biases()[l].isZero());
    }
}

TEST_CASE("save and load round-trip exactly") {
    const auto net = Mlp::initialized(default_q_architecture(), 4);
    std::stringstream ss;
    save_network(net, ss);
    const auto back = load_network(ss);
    CHECK(back == net);

    std::istringstream garbage("not a network");
    CHECK_THROWS_AS(load_network(garbage), ShapeError);
    std::string text;
    {
        std::ostringstream os;
        save_network(net, os);
        text = os.str();
    }
    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_network(truncated), ShapeError);
}
