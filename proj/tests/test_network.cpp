#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "dlmf/network.hpp"
#include "dlmf/rng.hpp"

using namespace dlmf;
using Catch::Approx;

namespace {

// Central finite differences over every parameter, the independent oracle
// for the analytic backward pass.
ParamGrads finite_difference_grads(Network net, const Eigen::MatrixXd& inputs,
                                   const Eigen::VectorXd& targets, double h = 1e-5) {
    ParamGrads fd;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        fd.w.emplace_back(net.weights[l].rows(), net.weights[l].cols());
        fd.b.emplace_back(net.biases[l].size());
        for (Eigen::Index i = 0; i < net.weights[l].rows(); ++i) {
            for (Eigen::Index j = 0; j < net.weights[l].cols(); ++j) {
                const double orig = net.weights[l](i, j);
                net.weights[l](i, j) = orig + h;
                const double up = mse_loss(net, inputs, targets);
                net.weights[l](i, j) = orig - h;
                const double down = mse_loss(net, inputs, targets);
                net.weights[l](i, j) = orig;
                fd.w[l](i, j) = (up - down) / (2.0 * h);
            }
        }
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
            const double orig = net.biases[l](i);
            net.biases[l](i) = orig + h;
            const double up = mse_loss(net, inputs, targets);
            net.biases[l](i) = orig - h;
            const double down = mse_loss(net, inputs, targets);
            net.biases[l](i) = orig;
            fd.b[l](i) = (up - down) / (2.0 * h);
        }
    }
    return fd;
}

void require_close_rel(double got, double want, double rel) {
    const double tol = rel * std::max({std::abs(got), std::abs(want), 1e-8});
    REQUIRE(std::abs(got - want) <= tol);
}

Network random_small_net(RngStream& rng) {
    const int depth = 1 + static_cast<int>(rng.next_u64() % 3);   // 1..3 hidden layers
    std::vector<int> sizes;
    sizes.push_back(1 + static_cast<int>(rng.next_u64() % 5));
    for (int l = 0; l < depth; ++l) sizes.push_back(1 + static_cast<int>(rng.next_u64() % 6));
    sizes.push_back(1);
    Network net = mlp_init(sizes, rng.next_u64());
    // jitter the biases: fresh nets have exact-zero preactivations where the
    // loss is kinked and central differences stop being a valid oracle
    for (auto& b : net.biases) {
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * rng.next_normal();
    }
    return net;
}

} // namespace

TEST_CASE("mlp_init is deterministic and zero-biased", "[network]") {
    const Network a = mlp_init({2, 3, 1}, 7);
    const Network b = mlp_init({2, 3, 1}, 7);
    REQUIRE(a.weights.size() == 2);
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        REQUIRE(a.weights[l] == b.weights[l]);
        REQUIRE(a.biases[l].isZero(0.0));
        const double bound = std::sqrt(6.0 / (a.layer_sizes[l] + a.layer_sizes[l + 1]));
        REQUIRE(a.weights[l].cwiseAbs().maxCoeff() <= bound);
    }
    REQUIRE_THROWS_AS(mlp_init({2, 0, 1}, 7), std::invalid_argument);
    REQUIRE_THROWS_AS(mlp_init({2, 1}, 7), std::invalid_argument);
}

TEST_CASE("forward evaluates the ReLU composition by hand", "[network]") {
    Network net = mlp_init({2, 1, 1}, 0);
    net.weights[0] << 1.0, 0.0;
    net.biases[0] << 0.0;
    net.weights[1] << 1.0;
    net.biases[1] << 0.0;

    Eigen::VectorXd in(2);
    in << -3.0, 5.0;
    REQUIRE(forward(net, in) == 0.0);   // ReLU kills the negative preactivation
    in << 2.0, 9.0;
    REQUIRE(forward(net, in) == Approx(2.0));

    Network zero = mlp_init({3, 4, 1}, 1);
    for (auto& w : zero.weights) w.setZero();
    Eigen::VectorXd any(3);
    any << 1.0, -2.0, 0.5;
    REQUIRE(forward(zero, any) == 0.0);

    REQUIRE_THROWS_AS(forward(net, any), std::invalid_argument);
}

TEST_CASE("perfect fit gives zero loss and zero gradients", "[network]") {
    Network net = mlp_init({2, 3, 1}, 3);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(6, 2);
    const Eigen::VectorXd targets = forward_batch(net, inputs);
    const auto [loss, grads] = loss_and_grads(net, inputs, targets);
    REQUIRE(loss == 0.0);
    for (std::size_t l = 0; l < grads.w.size(); ++l) {
        REQUIRE(grads.w[l].isZero(0.0));
        REQUIRE(grads.b[l].isZero(0.0));
    }
    REQUIRE_THROWS_AS(loss_and_grads(net, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)),
                      std::invalid_argument);
}

TEST_CASE("loss is symmetric in the residual sign", "[network]") {
    Network net = mlp_init({3, 4, 1}, 5);
    const Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(5, 3);
    const Eigen::VectorXd out = forward_batch(net, inputs);
    const Eigen::VectorXd resid = Eigen::VectorXd::Random(5);
    const double up = mse_loss(net, inputs, out + resid);
    const double down = mse_loss(net, inputs, out - resid);
    REQUIRE(up == Approx(down).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences on one net", "[network]") {
    RngStream rng(99, "fd/single");
    Network net = random_small_net(rng);
    Eigen::MatrixXd inputs(5, net.in_dim());
    Eigen::VectorXd targets(5);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (int j = 0; j < net.in_dim(); ++j) inputs(i, j) = rng.next_normal();
        targets(i) = rng.next_normal();
    }
    const auto [loss, grads] = loss_and_grads(net, inputs, targets);
    REQUIRE(std::isfinite(loss));
    const ParamGrads fd = finite_difference_grads(net, inputs, targets);
    for (std::size_t l = 0; l < grads.w.size(); ++l) {
        for (Eigen::Index i = 0; i < grads.w[l].rows(); ++i) {
            for (Eigen::Index j = 0; j < grads.w[l].cols(); ++j) {
                require_close_rel(grads.w[l](i, j), fd.w[l](i, j), 1e-4);
            }
        }
        for (Eigen::Index i = 0; i < grads.b[l].size(); ++i) {
            require_close_rel(grads.b[l](i), fd.b[l](i), 1e-4);
        }
    }
}

TEST_CASE("gradient exactness across 50 random networks", "[network][oracle]") {
    RngStream rng(2024, "fd/sweep");
    for (int trial = 0; trial < 50; ++trial) {
        Network net = random_small_net(rng);
        const Eigen::Index rows = 1 + static_cast<Eigen::Index>(rng.next_u64() % 6);
        Eigen::MatrixXd inputs(rows, net.in_dim());
        Eigen::VectorXd targets(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (int j = 0; j < net.in_dim(); ++j) inputs(i, j) = rng.next_normal();
            targets(i) = rng.next_normal();
        }
        const auto [loss, grads] = loss_and_grads(net, inputs, targets);
        REQUIRE(std::isfinite(loss));
        const ParamGrads fd = finite_difference_grads(net, inputs, targets);
        for (std::size_t l = 0; l < grads.w.size(); ++l) {
            for (Eigen::Index i = 0; i < grads.w[l].rows(); ++i) {
                for (Eigen::Index j = 0; j < grads.w[l].cols(); ++j) {
                    require_close_rel(grads.w[l](i, j), fd.w[l](i, j), 1e-4);
                }
            }
            for (Eigen::Index i = 0; i < grads.b[l].size(); ++i) {
                require_close_rel(grads.b[l](i), fd.b[l](i), 1e-4);
            }
        }
    }
}

TEST_CASE("input gradients match finite differences through the net", "[network]") {
    RngStream rng(4, "fd/input");
    Network net = random_small_net(rng);
    Eigen::MatrixXd inputs(3, net.in_dim());
    Eigen::VectorXd targets(3);
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (int j = 0; j < net.in_dim(); ++j) inputs(i, j) = rng.next_normal();
        targets(i) = rng.next_normal();
    }
    ForwardCache cache = forward_cached(net, inputs);
    const Eigen::VectorXd grad_out =
        (2.0 / 3.0) * (cache.out - targets);
    Eigen::MatrixXd grad_in;
    backward(net, cache, grad_out, &grad_in);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (int j = 0; j < net.in_dim(); ++j) {
            Eigen::MatrixXd up = inputs, down = inputs;
            up(i, j) += h;
            down(i, j) -= h;
            const double fd = (mse_loss(net, up, targets) - mse_loss(net, down, targets)) / (2.0 * h);
            require_close_rel(grad_in(i, j), fd, 1e-3);
        }
    }
}

TEST_CASE("single optimizer steps match closed forms", "[network][oracle]") {
    // one parameter network stand-in: 1x1 weight layers with controlled grads
    auto one_param_net = [] {
        Network net = mlp_init({1, 1, 1}, 0);
        net.weights[0](0, 0) = 1.0;
        net.weights[1](0, 0) = 0.0;
        net.biases[0](0) = 0.0;
        net.biases[1](0) = 0.0;
        return net;
    };
    auto grads_for = [](const Network& net, double g) {
        ParamGrads grads;
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            grads.w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
            grads.b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        }
        grads.w[0](0, 0) = g;
        return grads;
    };

    SECTION("sgd") {
        Network net = one_param_net();
        OptimizerState st = make_optimizer(OptimizerKind::SGD, 0.1, net);
        optimizer_step(st, net, grads_for(net, 0.5));
        REQUIRE(net.weights[0](0, 0) == Approx(0.95).margin(1e-10));
    }
    SECTION("rmsprop") {
        Network net = one_param_net();
        net.weights[0](0, 0) = 0.0;
        OptimizerState st = make_optimizer(OptimizerKind::RMSProp, 0.001, net);
        optimizer_step(st, net, grads_for(net, 2.0));
        // v = 0.01 * 4 = 0.04, step = -0.001 * 2 / (0.2 + 1e-8)
        REQUIRE(net.weights[0](0, 0) == Approx(-0.001 * 2.0 / (0.2 + 1e-8)).margin(1e-10));
        REQUIRE(st.v_w[0](0, 0) == Approx(0.04).margin(1e-10));
    }
    SECTION("adam") {
        Network net = one_param_net();
        net.weights[0](0, 0) = 0.0;
        OptimizerState st = make_optimizer(OptimizerKind::Adam, 0.001, net);
        optimizer_step(st, net, grads_for(net, 1.0));
        // bias correction makes mhat = vhat = 1 on the first step
        REQUIRE(net.weights[0](0, 0) == Approx(-0.001 / (1.0 + 1e-8)).margin(1e-10));
        REQUIRE(st.step_count == 1);
    }
    SECTION("zero gradient leaves sgd parameters unchanged exactly") {
        Network net = one_param_net();
        const Network before = net;
        OptimizerState st = make_optimizer(OptimizerKind::SGD, 0.1, net);
        optimizer_step(st, net, grads_for(net, 0.0));
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            REQUIRE(net.weights[l] == before.weights[l]);
            REQUIRE(net.biases[l] == before.biases[l]);
        }
    }
    SECTION("shape mismatch is rejected") {
        Network net = one_param_net();
        Network other = mlp_init({2, 3, 1}, 1);
        OptimizerState st = make_optimizer(OptimizerKind::SGD, 0.1, net);
        const auto [loss, grads] = loss_and_grads(other, Eigen::MatrixXd::Random(2, 2),
                                                  Eigen::VectorXd::Random(2));
        REQUIRE_THROWS_AS(optimizer_step(st, net, grads), std::invalid_argument);
    }
}

TEST_CASE("clipping clamps, preserves interior values, and is idempotent", "[network]") {
    Network net = mlp_init({2, 2, 1}, 6);
    net.weights[0](0, 0) = 25.0;
    net.weights[0](0, 1) = -25.0;
    net.weights[0](1, 0) = 3.5;
    clip_params(net, 20.0);
    REQUIRE(net.weights[0](0, 0) == 20.0);
    REQUIRE(net.weights[0](0, 1) == -20.0);
    REQUIRE(net.weights[0](1, 0) == 3.5);
    const Network once = net;
    clip_params(net, 20.0);
    for (std::size_t l = 0; l < net.num_layers(); ++l) REQUIRE(net.weights[l] == once.weights[l]);
    REQUIRE_THROWS_AS(clip_params(net, 0.0), std::invalid_argument);
}

TEST_CASE("forward is positively homogeneous with zero biases", "[network]") {
    Network net = mlp_init({3, 5, 1}, 8);   // biases start at zero
    RngStream rng(8, "homog");
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(3);
        for (int j = 0; j < 3; ++j) x(j) = rng.next_normal();
        const double c = 0.1 + 3.0 * rng.next_double();
        REQUIRE(forward(net, (c * x).eval()) == Approx(c * forward(net, x)).margin(1e-12));
    }
}

TEST_CASE("theory sizing reproduces hand-computed values", "[network][oracle]") {
    const TheoryArchitecture big = theory_architecture(5, 1, 2000, 2.0);
    REQUIRE(big.n1 == 3);
    REQUIRE(big.n2 == 8);
    REQUIRE(big.width == 118098);   // 3^9 * 6
    REQUIRE(big.depth == 122);      // 12*8 + 14 + 12

    const TheoryArchitecture tiny = theory_architecture(1, 1, 3, 2.0);
    REQUIRE(tiny.n2 == 2);
    REQUIRE(tiny.depth == 42);

    REQUIRE_THROWS_AS(theory_architecture(5, 1, 2000, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(theory_architecture(1, 0, 2000, 2.0), std::invalid_argument);
    REQUIRE_THROWS_AS(theory_architecture(5, 1, 2, 2.0), std::invalid_argument);
}

TEST_CASE("network text serialization round-trips", "[network]") {
    const Network net = mlp_init({3, 4, 2, 1}, 31);
    std::stringstream ss;
    write_network(ss, net);
    const Network back = read_network(ss);
    REQUIRE(back.layer_sizes == net.layer_sizes);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        REQUIRE(back.weights[l] == net.weights[l]);
        REQUIRE(back.biases[l] == net.biases[l]);
    }
}
