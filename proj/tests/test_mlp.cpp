#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "termrec/mlp.hpp"
#include "termrec/rng.hpp"

using namespace termrec;

namespace {

Matrix random_rows(size_t n, size_t d, uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, d);
    for (size_t r = 0; r < n; ++r)
        for (size_t c = 0; c < d; ++c) m.at(r, c) = rng.normal(0.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("initialization is deterministic and shaped correctly") {
    auto a = init_network({30, 24, 16, 8}, 7);
    auto b = init_network({30, 24, 16, 8}, 7);
    auto c = init_network({30, 24, 16, 8}, 8);
    CHECK(a.weights[0].rows() == 24);
    CHECK(a.weights[0].cols() == 30);
    CHECK(a.weights.size() == 3);
    CHECK(flatten_parameters(a) == flatten_parameters(b));
    CHECK(flatten_parameters(a) != flatten_parameters(c));
    for (const auto& bias : a.biases)
        for (double v : bias) CHECK(v == 0.0);
}

TEST_CASE("autoencoder layers mirror around the bottleneck") {
    auto net = make_autoencoder(30, {24, 16, 8}, 1);
    CHECK(net.layer_sizes == std::vector<size_t>{30, 24, 16, 8, 16, 24, 30});
    CHECK(net.embedding_layer == 3);
    CHECK(net.input_dim() == 30);
    CHECK(net.output_dim() == 30);
}

TEST_CASE("zero parameters map everything to zero") {
    auto net = make_autoencoder(30, {24, 16, 8}, 1);
    unflatten_parameters(net, std::vector<double>(net.parameter_count(), 0.0));
    auto fwd = ae_forward(net, std::vector<double>(30, 1.5));
    CHECK(fwd.embedding.size() == 8);
    CHECK(fwd.reconstruction.size() == 30);
    for (double v : fwd.embedding) CHECK(v == 0.0);
    for (double v : fwd.reconstruction) CHECK(v == 0.0);
}

TEST_CASE("relu positive-homogeneity for non-negative weights and inputs") {
    auto net = init_network({4, 3, 2}, 3);
    auto params = flatten_parameters(net);
    for (double& p : params) p = std::abs(p);
    unflatten_parameters(net, params);
    std::vector<double> x{0.5, 1.0, 0.25, 2.0};
    std::vector<double> x2;
    for (double v : x) x2.push_back(2.0 * v);
    auto a1 = forward_activations(net, x);
    auto a2 = forward_activations(net, x2);
    for (size_t i = 0; i < a1[1].size(); ++i)
        CHECK(a2[1][i] == doctest::Approx(2.0 * a1[1][i]).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    auto net = make_autoencoder(30, {24, 16, 8}, 42);
    Matrix rows = random_rows(5, 30, 99);
    auto analytic = ae_gradient(net, rows);
    auto params = flatten_parameters(net);
    REQUIRE(analytic.size() == params.size());

    const double eps = 1e-5;
    double worst = 0.0;
    // Checking every one of the ~3000 parameters is cheap enough.
    for (size_t i = 0; i < params.size(); ++i) {
        auto plus = params, minus = params;
        plus[i] += eps;
        minus[i] -= eps;
        unflatten_parameters(net, plus);
        double lp = ae_loss(net, rows);
        unflatten_parameters(net, minus);
        double lm = ae_loss(net, rows);
        double fd = (lp - lm) / (2 * eps);
        double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("training on a constant dataset drives the loss below 1e-3") {
    Matrix rows(64, 30);
    Rng rng(5);
    std::vector<double> row(30);
    for (auto& v : row) v = rng.normal(0.0, 1.0);
    for (size_t r = 0; r < 64; ++r)
        for (size_t c = 0; c < 30; ++c) rows.at(r, c) = row[c];

    auto net = make_autoencoder(30, {24, 16, 8}, 17);
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.learning_rate = 0.05;
    cfg.seed = 2;
    cfg.tolerance = 1e-9;
    auto curve = train_autoencoder(net, rows, cfg);
    REQUIRE_FALSE(curve.empty());
    CHECK(curve.back() < 1e-3);
    CHECK(curve.back() <= curve.front());
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
    Matrix rows = random_rows(40, 30, 4);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 12;
    auto n1 = make_autoencoder(30, {24, 16, 8}, 3);
    auto n2 = make_autoencoder(30, {24, 16, 8}, 3);
    auto c1 = train_autoencoder(n1, rows, cfg);
    auto c2 = train_autoencoder(n2, rows, cfg);
    CHECK(c1 == c2);
    CHECK(flatten_parameters(n1) == flatten_parameters(n2));
}

TEST_CASE("encoder output is finite and 8-dimensional") {
    Matrix rows = random_rows(20, 30, 8);
    auto net = make_autoencoder(30, {24, 16, 8}, 1);
    TrainConfig cfg;
    cfg.epochs = 5;
    train_autoencoder(net, rows, cfg);
    auto emb = encode_rows(net, rows);
    CHECK(emb.rows() == 20);
    CHECK(emb.cols() == 8);
    CHECK(all_finite(emb.data()));
}

TEST_CASE("softmax head learns a separable toy problem") {
    Matrix x(20, 2);
    std::vector<int> y;
    for (size_t i = 0; i < 20; ++i) {
        double side = i < 10 ? -1.0 : 1.0;
        x.at(i, 0) = side * (1.0 + 0.01 * static_cast<double>(i));
        x.at(i, 1) = side;
        y.push_back(i < 10 ? 0 : 1);
    }
    auto net = init_network({2, 8, 2}, 6);
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.1;
    cfg.seed = 9;
    train_softmax(net, x, y, 2, cfg);
    auto proba = predict_softmax(net, x);
    size_t correct = 0;
    for (size_t i = 0; i < 20; ++i) {
        CHECK(proba.at(i, 0) + proba.at(i, 1) == doctest::Approx(1.0).epsilon(1e-9));
        if ((proba.at(i, 1) > proba.at(i, 0)) == (y[i] == 1)) ++correct;
    }
    CHECK(correct == 20);
}

TEST_CASE("dimension and input errors") {
    auto net = make_autoencoder(30, {24, 16, 8}, 1);
    CHECK_THROWS_AS(ae_forward(net, std::vector<double>(29, 0.0)), DimensionMismatch);
    TrainConfig cfg;
    CHECK_THROWS_AS(train_autoencoder(net, Matrix(0, 30), cfg), EmptyInput);
}
