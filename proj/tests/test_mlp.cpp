#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "hapcal/mlp.hpp"

#include "oracles.hpp"

using namespace hapcal;

namespace {

Mlp random_net(const std::vector<int>& sizes, std::uint64_t seed) {
    // Independent of Mlp::initialized so init bugs cannot mask forward bugs.
    Mlp net;
    net.layer_sizes = sizes;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t in = static_cast<std::size_t>(sizes[l]);
        const std::size_t out = static_cast<std::size_t>(sizes[l + 1]);
        std::vector<double> w(in * out);
        for (auto& v : w) v = d(gen);
        std::vector<double> b(out);
        for (auto& v : b) v = d(gen);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

TrainingSet random_batch(const std::vector<int>& sizes, std::size_t n,
                         std::mt19937_64& gen) {
    TrainingSet b;
    for (std::size_t i = 0; i < n; ++i) {
        b.inputs.push_back(random_vec(static_cast<std::size_t>(sizes.front()), gen));
        b.targets.push_back(random_vec(static_cast<std::size_t>(sizes.back()), gen));
    }
    return b;
}

// Flat view of all parameters for finite-difference probing.
std::vector<double*> parameter_pointers(Mlp& net) {
    std::vector<double*> ptrs;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (auto& w : net.weights[l]) ptrs.push_back(&w);
        for (auto& b : net.biases[l]) ptrs.push_back(&b);
    }
    return ptrs;
}

std::vector<double> flatten_gradient(const MlpGradient& g) {
    std::vector<double> flat;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        flat.insert(flat.end(), g.weights[l].begin(), g.weights[l].end());
        flat.insert(flat.end(), g.biases[l].begin(), g.biases[l].end());
    }
    return flat;
}

} // namespace

TEST_CASE("forward: all-zero parameters give zero output") {
    Mlp net;
    net.layer_sizes = {2, 3, 2};
    net.weights = {std::vector<double>(6, 0.0), std::vector<double>(6, 0.0)};
    net.biases = {std::vector<double>(3, 0.0), std::vector<double>(2, 0.0)};
    const auto y = mlp_forward(net, {0.7, -0.3});
    CHECK(y == std::vector<double>{0.0, 0.0});
}

TEST_CASE("forward: dead ReLU region passes only the output bias") {
    Mlp net;
    net.layer_sizes = {1, 1, 1};
    net.weights = {{1.0}, {5.0}};
    net.biases = {{-1.0}, {0.25}};
    // Hidden pre-activation 0.5 - 1 = -0.5 -> ReLU 0 -> output = bias.
    const auto y = mlp_forward(net, {0.5});
    REQUIRE(y.size() == 1);
    CHECK(y[0] == 0.25);
}

TEST_CASE("forward matches the straight-line oracle") {
    std::mt19937_64 gen(17);
    const std::vector<std::vector<int>> shapes = {
        {2, 16, 2}, {2, 64, 3}, {3, 5, 4, 2}, {1, 1, 1}};
    for (const auto& shape : shapes) {
        Mlp net = random_net(shape, gen());
        for (int trial = 0; trial < 25; ++trial) {
            const auto x = random_vec(static_cast<std::size_t>(shape.front()), gen);
            const auto a = mlp_forward(net, x);
            const auto b = oracles::mlp_forward_reference(net, x);
            REQUIRE(a.size() == b.size());
            for (std::size_t d = 0; d < a.size(); ++d)
                REQUIRE(std::fabs(a[d] - b[d]) < 1e-12);
        }
    }
}

TEST_CASE("forward rejects wrong input length") {
    Mlp net = random_net({2, 4, 2}, 5);
    CHECK_THROWS_AS(mlp_forward(net, {1.0}), ContractError);
    CHECK_THROWS_AS(mlp_forward(net, {1.0, 2.0, 3.0}), ContractError);
}

TEST_CASE("forward is piecewise linear within a ReLU region") {
    Mlp net = random_net({2, 8, 2}, 99);
    // Three collinear inputs close together; if no unit flips sign between
    // them, outputs must be collinear too: y1 - 2*ymid + y0 = 0.
    const std::vector<double> x0 = {0.31, -0.12};
    const std::vector<double> dx = {1e-4, 2e-4};
    const auto at = [&](double s) {
        return mlp_forward(net, {x0[0] + s * dx[0], x0[1] + s * dx[1]});
    };
    const auto y0 = at(0.0), y1 = at(1.0), y2 = at(2.0);
    for (std::size_t d = 0; d < y0.size(); ++d)
        CHECK(std::fabs(y2[d] - 2.0 * y1[d] + y0[d]) < 1e-12);
}

TEST_CASE("gradient: zero error means zero gradient") {
    Mlp net = random_net({2, 6, 2}, 21);
    std::mt19937_64 gen(22);
    TrainingSet batch;
    for (int i = 0; i < 4; ++i) {
        const auto x = random_vec(2, gen);
        batch.inputs.push_back(x);
        batch.targets.push_back(mlp_forward(net, x));
    }
    const auto flat = flatten_gradient(mlp_gradient(net, batch));
    for (double g : flat) CHECK(g == 0.0);
}

TEST_CASE("gradient: inactive ReLU unit gets no incoming-weight gradient") {
    Mlp net;
    net.layer_sizes = {1, 2, 1};
    net.weights = {{1.0, 1.0}, {1.0, 1.0}};
    net.biases = {{-10.0, 0.0}, {0.0}};
    // Unit 0 is dead for input 0.5 (pre = -9.5); unit 1 is active.
    TrainingSet batch;
    batch.inputs = {{0.5}};
    batch.targets = {{3.0}};
    const MlpGradient g = mlp_gradient(net, batch);
    CHECK(g.weights[0][0] == 0.0); // into dead unit
    CHECK(g.biases[0][0] == 0.0);
    CHECK(g.weights[0][1] != 0.0); // into live unit
}

TEST_CASE("gradient matches central finite differences") {
    std::mt19937_64 gen(4242);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<int> shape = (trial % 2 == 0)
                                           ? std::vector<int>{2, 16, 2}
                                           : std::vector<int>{3, 7, 5, 2};
        Mlp net = random_net(shape, gen());
        TrainingSet batch = random_batch(shape, 5, gen);
        const auto analytic = flatten_gradient(mlp_gradient(net, batch));
        const auto ptrs = parameter_pointers(net);
        REQUIRE(analytic.size() == ptrs.size());
        for (std::size_t p = 0; p < ptrs.size(); ++p) {
            const double saved = *ptrs[p];
            *ptrs[p] = saved + h;
            const double up = mean_squared_error(net, batch);
            *ptrs[p] = saved - h;
            const double dn = mean_squared_error(net, batch);
            *ptrs[p] = saved;
            const double fd = (up - dn) / (2.0 * h);
            const double scale = std::max({1.0, std::fabs(fd), std::fabs(analytic[p])});
            REQUIRE(std::fabs(analytic[p] - fd) / scale < 1e-4);
        }
    }
}

TEST_CASE("adam: first step matches the hand computation") {
    TrainConfig cfg;
    cfg.learning_rate = 0.001;
    AdamOptimizer adam(1, cfg);
    std::vector<double> theta = {0.7};
    adam.step(theta, {3.0});
    // m_hat = 3, v_hat = 9 after bias correction at t = 1.
    const double expect = 0.7 - 0.001 * 3.0 / (3.0 + 1e-7);
    CHECK(std::fabs(theta[0] - expect) < 1e-12);
}

TEST_CASE("adam: sign-SGD limit at beta1 = beta2 = 0") {
    TrainConfig cfg;
    cfg.beta1 = 0.0;
    cfg.beta2 = 0.0;
    cfg.epsilon = 1e-12;
    cfg.learning_rate = 0.01;
    AdamOptimizer adam(1, cfg);
    std::vector<double> theta = {1.0};
    // Scalar quadratic 0.5*(theta - 5)^2, gradient theta - 5.
    for (int i = 0; i < 10; ++i) adam.step(theta, {theta[0] - 5.0});
    CHECK(std::fabs(theta[0] - (1.0 + 10 * 0.01)) < 1e-9);
}

TEST_CASE("train_adam fits the identity task") {
    std::mt19937_64 gen(808);
    TrainingSet data;
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int i = 0; i < 250; ++i) {
        const std::vector<double> x = {d(gen), d(gen)};
        data.inputs.push_back(x);
        data.targets.push_back(x);
    }
    TrainConfig cfg;
    cfg.rng_seed = 11;
    const TrainResult r =
        train_adam(Mlp::initialized({2, 64, 2}, 7), data, cfg);
    REQUIRE(r.loss_trace.size() == 200);
    CHECK(r.loss_trace.back() < 1e-4);
    for (double l : r.loss_trace) REQUIRE(std::isfinite(l));
}

TEST_CASE("train_adam is deterministic") {
    std::mt19937_64 gen(9);
    TrainingSet data = random_batch({2, 16, 2}, 40, gen);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.rng_seed = 4;
    const auto a = train_adam(Mlp::initialized({2, 16, 2}, 3), data, cfg);
    const auto b = train_adam(Mlp::initialized({2, 16, 2}, 3), data, cfg);
    REQUIRE(a.net.weights == b.net.weights);
    REQUIRE(a.net.biases == b.net.biases);
    REQUIRE(a.loss_trace == b.loss_trace);
}

TEST_CASE("train_adam raises on divergence with the epoch index") {
    TrainingSet data;
    data.inputs = {{1.0}};
    data.targets = {{1e200}};
    TrainConfig cfg;
    cfg.learning_rate = 1e150;
    cfg.epochs = 50;
    Mlp net = random_net({1, 2, 1}, 1);
    try {
        train_adam(net, data, cfg);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch >= 0);
        CHECK(e.epoch < 50);
    }
}

TEST_CASE("normalizer round trip and degenerate dimension") {
    TrainingSet data;
    data.inputs = {{0.0, 5.0}, {2.0, 5.0}, {1.0, 5.0}};
    data.targets = {{-1.0}, {3.0}, {0.0}};
    const Normalizer norm = Normalizer::fit(data);

    SECTION("maps observed extremes to 0 and 1") {
        CHECK(norm.normalize_input({0.0, 5.0})[0] == 0.0);
        CHECK(norm.normalize_input({2.0, 5.0})[0] == 1.0);
        CHECK(norm.normalize_output({3.0})[0] == 1.0);
    }
    SECTION("round trip is identity") {
        std::mt19937_64 gen(3);
        std::uniform_real_distribution<double> d(-2.0, 6.0);
        for (int i = 0; i < 100; ++i) {
            const std::vector<double> v = {d(gen), d(gen)};
            const auto back = norm.denormalize_input(norm.normalize_input(v));
            REQUIRE(std::fabs(back[0] - v[0]) < 1e-12);
            REQUIRE(std::fabs(back[1] - v[1]) < 1e-12);
        }
    }
    SECTION("constant dimension stays invertible") {
        const auto u = norm.normalize_input({1.5, 5.0});
        CHECK(u[1] == 0.0);
        CHECK(norm.denormalize_input(u)[1] == 5.0);
    }
}

TEST_CASE("cross_validate: fold sizes differ by at most one") {
    for (std::size_t n : {10u, 11u, 13u, 250u}) {
        // Fold boundaries are n*i/k; check the partition directly.
        const int k = 5;
        std::vector<std::size_t> sizes;
        for (int fold = 0; fold < k; ++fold)
            sizes.push_back(n * (fold + 1) / k - n * fold / k);
        std::size_t total = 0;
        for (auto s : sizes) total += s;
        REQUIRE(total == n);
        const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
        REQUIRE(*hi - *lo <= 1);
    }
}

TEST_CASE("cross_validate: constant dataset reaches near-zero fold error") {
    TrainingSet data;
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        data.inputs.push_back({d(gen), d(gen)});
        data.targets.push_back({0.4, -0.2, 0.9});
    }
    TrainConfig cfg;
    cfg.rng_seed = 77;
    cfg.epochs = 400;
    const auto mse = cross_validate(data, 5, {2, 16, 3}, cfg);
    REQUIRE(mse.size() == 5);
    for (double m : mse) CHECK(m < 1e-3);
}

TEST_CASE("cross_validate rejects undersized datasets") {
    TrainingSet data;
    data.inputs = {{0.0}, {1.0}};
    data.targets = {{0.0}, {1.0}};
    CHECK_THROWS_AS(cross_validate(data, 5, {1, 2, 1}, TrainConfig{}),
                    InsufficientData);
}
