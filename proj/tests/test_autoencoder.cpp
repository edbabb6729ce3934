#include "hexembed/autoencoder.hpp"
#include "hexembed/error.hpp"
#include "hexembed/random.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace hexembed;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0, double hi = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

ModelParams random_params(Rng& rng, const ModelDims& d) {
    ModelParams p = init_params(rng.next_u64(), d);
    // Non-zero biases so their gradients are exercised too.
    auto jitter = [&](auto& t, auto&) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.1, 0.1);
    };
    for_each_tensor(p, p, jitter);
    return p;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-8});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

}  // namespace

TEST_SUITE("autoencoder") {

TEST_CASE("initialisation is seeded, bounded and has zero biases") {
    const ModelDims d;
    const ModelParams a = init_params(7, d);
    CHECK(a == init_params(7, d));
    CHECK_FALSE(a == init_params(8, d));
    CHECK(a.enc_w1.rows() == 88);
    CHECK(a.enc_w1.cols() == 64);
    const double bound = std::sqrt(6.0 / (88 + 64));
    CHECK(bound == doctest::Approx(0.1987).epsilon(1e-3));
    CHECK(a.enc_w1.cwiseAbs().maxCoeff() <= bound);
    CHECK(a.enc_w1.cwiseAbs().maxCoeff() > 0.9 * bound);
    for (const auto* b : {&a.enc_b1, &a.enc_b2, &a.dec_b1, &a.dec_b2}) CHECK(b->isZero(0.0));
}

TEST_CASE("forward shapes, zero weights and hand algebra") {
    const ModelDims d;
    Rng rng(1);
    const Eigen::MatrixXd x = random_matrix(rng, 5, 88);
    const ForwardResult z = forward(zero_params(d), Eigen::MatrixXd::Zero(3, 88));
    CHECK(z.h.isZero(0.0));
    CHECK(z.x_hat.isZero(0.0));
    const ForwardResult f = forward(init_params(3, d), x);
    CHECK(f.h.rows() == 5);
    CHECK(f.h.cols() == 30);
    CHECK(f.x_hat.cols() == 88);
    CHECK_THROWS_AS(forward(init_params(3, d), Eigen::MatrixXd::Zero(2, 87)), DataError);

    const ModelDims small{4, 3, 2};
    const ModelParams p = random_params(rng, small);
    const Eigen::MatrixXd xs = random_matrix(rng, 6, 4, -1, 1);
    const Eigen::MatrixXd expected = oracle::naive_reconstruction(p, xs);
    CHECK((forward(p, xs).x_hat - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(encode(p, xs) == forward(p, xs).h);
    const Eigen::VectorXd row = xs.row(2).transpose();
    CHECK((encode(p, row) - forward(p, xs).h.row(2).transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mse values") {
    Eigen::MatrixXd a(1, 2), b(1, 2);
    a << 1, 0;
    b << 0, 0;
    CHECK(mse_loss(a, b) == 0.5);
    CHECK(mse_loss(a, a) == 0.0);
    Rng rng(2);
    const Eigen::MatrixXd x = random_matrix(rng, 50, 88), y = random_matrix(rng, 50, 88);
    CHECK(std::abs(mse_loss(x, y) - oracle::naive_mse(x, y)) < 1e-12);
    CHECK(mse_loss(x, y) > 0.0);
}

TEST_CASE("6-4-2 gradients match central differences") {
    Rng rng(3);
    const ModelDims d{6, 4, 2};
    const ModelParams p = random_params(rng, d);
    const Eigen::MatrixXd batch = random_matrix(rng, 9, 6);
    const Gradient g = backward(p, batch);
    CHECK(g.loss == doctest::Approx(oracle::naive_mse(batch, forward(p, batch).x_hat)).epsilon(1e-14));
    CHECK(max_relative_error(oracle::flatten(g.grad), oracle::numeric_gradient(p, batch, 1e-5)) < 1e-4);
}

TEST_CASE("cross-entropy gradients match central differences") {
    Rng rng(4);
    const ModelDims d{5, 4, 3};
    const ModelParams p = random_params(rng, d);
    Eigen::MatrixXd batch = random_matrix(rng, 7, 5);
    batch = (batch.array() > 0.5).cast<double>();
    const Gradient g = backward(p, batch, LossKind::Bce);
    CHECK(max_relative_error(oracle::flatten(g.grad), oracle::numeric_gradient(p, batch, 1e-5, LossKind::Bce)) < 1e-4);
}

TEST_CASE("duplicated batch leaves gradients unchanged") {
    Rng rng(5);
    const ModelParams p = random_params(rng, {6, 4, 2});
    const Eigen::MatrixXd batch = random_matrix(rng, 8, 6);
    Eigen::MatrixXd twice(16, 6);
    twice << batch, batch;
    const auto a = oracle::flatten(backward(p, batch).grad);
    const auto b = oracle::flatten(backward(p, twice).grad);
    CHECK(max_relative_error(a, b) < 1e-12);
}

TEST_CASE("perfect reconstruction gives zero output-layer gradient") {
    ModelParams p = zero_params({4, 3, 2});
    const Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(5, 4);
    const Gradient g = backward(p, batch);
    CHECK(g.loss == 0.0);
    CHECK(g.grad.dec_w2.isZero(0.0));
    CHECK(g.grad.dec_b2.isZero(0.0));
}

TEST_CASE("constant data is memorised") {
    TrainConfig cfg;
    cfg.dims = {8, 6, 3};
    cfg.batch_size = 10;
    cfg.learning_rate = 0.01;
    Eigen::RowVectorXd row(8);
    row << 1, 0, 1, 1, 0, 0, 1, 0;
    const Eigen::MatrixXd data = row.replicate(100, 1);
    const TrainResult r = train(data, cfg);
    REQUIRE(r.history.size() == 50);
    CHECK(r.history.back().train_mse < 1e-6);
}

TEST_CASE("archetypes with bit noise reconstruct well and training is deterministic") {
    Rng rng(6);
    Eigen::MatrixXd protos(10, 88);
    for (Eigen::Index i = 0; i < protos.size(); ++i) protos.data()[i] = rng.uniform() < 0.12 ? 1.0 : 0.0;
    Eigen::MatrixXd data(5000, 88);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        data.row(r) = protos.row(static_cast<Eigen::Index>(rng.below(10)));
        if (rng.uniform() < 0.1) {
            const auto c = static_cast<Eigen::Index>(rng.below(88));
            data(r, c) = 1.0 - data(r, c);
        }
    }
    TrainConfig cfg;
    const TrainResult a = train(data, cfg);
    CHECK(a.test_rows.size() == 1000);
    CHECK(a.train_rows.size() == 4000);
    CHECK(a.history.back().train_mse < 0.01);
    CHECK(a.history.back().train_mse < a.history.front().train_mse);
    for (const auto& e : a.history) CHECK(std::isfinite(e.test_mse));
    const TrainResult b = train(data, cfg);
    CHECK(a.params == b.params);
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].train_mse == b.history[i].train_mse);

    // Identical inputs embed identically; prototypes far apart embed apart.
    const Eigen::MatrixXd h = encode(a.params, protos);
    CHECK(encode(a.params, protos) == h);
    CHECK((encode(a.params, Eigen::MatrixXd(protos.row(0))) - h.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index i = 1; i < 10; ++i) {
        if ((protos.row(0) - protos.row(i)).cwiseAbs().sum() >= 10) CHECK((h.row(0) - h.row(i)).norm() > 0.0);
    }
}

TEST_CASE("stratified split keeps every group on both sides") {
    Rng rng(7);
    const Eigen::MatrixXd data = random_matrix(rng, 100, 8).array().round();
    std::vector<std::string> groups;
    for (int i = 0; i < 100; ++i) groups.push_back(i < 30 ? "a" : "b");
    TrainConfig cfg;
    cfg.dims = {8, 4, 2};
    cfg.epochs = 1;
    const TrainResult r = train(data, cfg, &groups);
    std::size_t a_test = 0;
    for (auto i : r.test_rows) a_test += groups[i] == "a";
    CHECK(a_test == 6);
    CHECK(r.test_rows.size() == 20);
}

TEST_CASE("invalid configurations and tiny datasets are refused") {
    TrainConfig cfg;
    cfg.dims = {4, 3, 2};
    cfg.learning_rate = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.learning_rate = 0.001;
    cfg.test_ratio = 1.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.test_ratio = 0.2;
    CHECK_THROWS_AS(train(Eigen::MatrixXd::Zero(9, 4), cfg), DataError);
    cfg.epochs = 1;
    CHECK_NOTHROW(train(Eigen::MatrixXd::Zero(10, 4), cfg));
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(20, 4);
    bad(3, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(bad, cfg), DataError);
}

TEST_CASE("non-finite loss aborts with its position") {
    TrainConfig cfg;
    cfg.dims = {4, 3, 2};
    cfg.batch_size = 4;
    // Finite inputs whose squared error overflows.
    const Eigen::MatrixXd data = Eigen::MatrixXd::Constant(20, 4, 1e200);
    try {
        train(data, cfg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch() == 1);
        CHECK(e.batch() == 0);
    }
}

TEST_CASE("model JSON round trip is exact") {
    const ModelParams p = init_params(11, ModelDims{});
    const std::string text = model_to_json(p, 11, "1");
    CHECK(model_from_json(text) == p);
    CHECK(model_to_json(model_from_json(text), 11, "1") == text);
}

}
