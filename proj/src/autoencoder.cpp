#include "hexembed/autoencoder.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"
#include "hexembed/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace hexembed {

bool ModelParams::operator==(const ModelParams& o) const {
    if (!(dims == o.dims)) return false;
    bool same = true;
    for_each_tensor(*this, o, [&](const auto& a, const auto& b) {
        same = same && a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    });
    return same;
}

ModelParams zero_params(const ModelDims& d) {
    if (d.input <= 0 || d.hidden <= 0 || d.latent <= 0) throw UsageError("model dimensions must be positive");
    ModelParams p;
    p.dims = d;
    p.enc_w1 = Eigen::MatrixXd::Zero(d.input, d.hidden);
    p.enc_b1 = Eigen::RowVectorXd::Zero(d.hidden);
    p.enc_w2 = Eigen::MatrixXd::Zero(d.hidden, d.latent);
    p.enc_b2 = Eigen::RowVectorXd::Zero(d.latent);
    p.dec_w1 = Eigen::MatrixXd::Zero(d.latent, d.hidden);
    p.dec_b1 = Eigen::RowVectorXd::Zero(d.hidden);
    p.dec_w2 = Eigen::MatrixXd::Zero(d.hidden, d.input);
    p.dec_b2 = Eigen::RowVectorXd::Zero(d.input);
    return p;
}

ModelParams init_params(std::uint64_t seed, const ModelDims& dims) {
    ModelParams p = zero_params(dims);
    Rng rng(seed);
    auto glorot = [&rng](Eigen::MatrixXd& w) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
        }
    };
    glorot(p.enc_w1);
    glorot(p.enc_w2);
    glorot(p.dec_w1);
    glorot(p.dec_w2);
    return p;
}

namespace {

struct Activations {
    Eigen::MatrixXd a1, h1, z, a3, h3, out;
};

Activations run(const ModelParams& p, const Eigen::MatrixXd& x) {
    if (x.cols() != p.dims.input) {
        throw DataError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                        std::to_string(p.dims.input));
    }
    Activations a;
    a.a1 = (x * p.enc_w1).rowwise() + p.enc_b1;
    a.h1 = a.a1.cwiseMax(0.0);
    a.z = (a.h1 * p.enc_w2).rowwise() + p.enc_b2;
    a.a3 = (a.z * p.dec_w1).rowwise() + p.dec_b1;
    a.h3 = a.a3.cwiseMax(0.0);
    a.out = (a.h3 * p.dec_w2).rowwise() + p.dec_b2;
    return a;
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& m) {
    return m.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre) {
    return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

}  // namespace

ForwardResult forward(const ModelParams& p, const Eigen::MatrixXd& x, LossKind loss) {
    Activations a = run(p, x);
    return {std::move(a.z), loss == LossKind::Bce ? sigmoid(a.out) : std::move(a.out)};
}

Eigen::MatrixXd encode(const ModelParams& p, const Eigen::MatrixXd& x) {
    if (x.cols() != p.dims.input) {
        throw DataError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                        std::to_string(p.dims.input));
    }
    const Eigen::MatrixXd h1 = ((x * p.enc_w1).rowwise() + p.enc_b1).cwiseMax(0.0);
    return (h1 * p.enc_w2).rowwise() + p.enc_b2;
}

Eigen::VectorXd encode(const ModelParams& p, const Eigen::VectorXd& x) {
    return encode(p, Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

double mse_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw DataError("mse_loss: shape mismatch");
    if (x.size() == 0) return 0.0;
    return (x - x_hat).squaredNorm() / static_cast<double>(x.size());
}

double bce_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw DataError("bce_loss: shape mismatch");
    constexpr double kClip = 1e-12;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double q = std::clamp(x_hat(i, j), kClip, 1.0 - kClip);
            sum -= x(i, j) * std::log(q) + (1.0 - x(i, j)) * std::log(1.0 - q);
        }
    }
    return sum / static_cast<double>(x.size());
}

Gradient backward(const ModelParams& p, const Eigen::MatrixXd& batch, LossKind loss) {
    if (batch.rows() == 0) throw DataError("backward: empty batch");
    const Activations a = run(p, batch);
    const double n = static_cast<double>(batch.size());

    Gradient g;
    g.grad = zero_params(p.dims);
    Eigen::MatrixXd d_out;
    if (loss == LossKind::Bce) {
        // Sigmoid and cross-entropy combined: d/d(out) = (sigmoid(out) - x) / n.
        const Eigen::MatrixXd q = sigmoid(a.out);
        g.loss = bce_loss(batch, q);
        d_out = (q - batch) / n;
    } else {
        g.loss = mse_loss(batch, a.out);
        d_out = 2.0 * (a.out - batch) / n;
    }

    ModelParams& d = g.grad;
    d.dec_w2.noalias() = a.h3.transpose() * d_out;
    d.dec_b2 = d_out.colwise().sum();
    const Eigen::MatrixXd d_a3 = (d_out * p.dec_w2.transpose()).cwiseProduct(relu_mask(a.a3));
    d.dec_w1.noalias() = a.z.transpose() * d_a3;
    d.dec_b1 = d_a3.colwise().sum();
    const Eigen::MatrixXd d_z = d_a3 * p.dec_w1.transpose();
    d.enc_w2.noalias() = a.h1.transpose() * d_z;
    d.enc_b2 = d_z.colwise().sum();
    const Eigen::MatrixXd d_a1 = (d_z * p.enc_w2.transpose()).cwiseProduct(relu_mask(a.a1));
    d.enc_w1.noalias() = batch.transpose() * d_a1;
    d.enc_b1 = d_a1.colwise().sum();
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    if (!(test_ratio > 0.0 && test_ratio < 1.0)) throw UsageError("test ratio must be in (0, 1)");
    if (batch_size < 1) throw UsageError("batch size must be at least 1");
    if (epochs < 0) throw UsageError("epochs must be non-negative");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
        throw UsageError("invalid Adam constants");
    }
}

namespace {

// Derives an independent stream for data shuffling from the run seed.
constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

std::size_t test_count(std::size_t n, double ratio) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));
}

void split_rows(std::size_t n, const TrainConfig& cfg, const std::vector<std::string>* groups, Rng& rng,
                std::vector<std::size_t>& train_rows, std::vector<std::size_t>& test_rows) {
    if (!groups) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span(order));
        const std::size_t n_test = test_count(n, cfg.test_ratio);
        test_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
        train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    } else {
        if (groups->size() != n) throw DataError("one group label per row is required");
        std::map<std::string, std::vector<std::size_t>> by_group;
        for (std::size_t i = 0; i < n; ++i) by_group[(*groups)[i]].push_back(i);
        for (auto& [name, rows] : by_group) {
            rng.shuffle(std::span(rows));
            const std::size_t n_test = test_count(rows.size(), cfg.test_ratio);
            test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
            train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
        }
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& data, const std::vector<std::size_t>& rows, std::size_t from,
                       std::size_t count) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), data.cols());
    for (std::size_t i = 0; i < count; ++i) {
        out.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(rows[from + i]));
    }
    return out;
}

bool all_finite(const ModelParams& p) {
    bool ok = true;
    for_each_tensor(p, p, [&](const auto& a, const auto&) { ok = ok && a.allFinite(); });
    return ok;
}

}  // namespace

TrainResult train(const Eigen::MatrixXd& data, const TrainConfig& cfg, const std::vector<std::string>* groups) {
    cfg.validate();
    if (data.cols() != cfg.dims.input) {
        throw DataError("feature matrix has " + std::to_string(data.cols()) + " columns, model expects " +
                        std::to_string(cfg.dims.input));
    }
    const auto n = static_cast<std::size_t>(data.rows());
    if (!data.allFinite()) throw DataError("feature matrix contains non-finite values");

    TrainResult r;
    Rng rng(cfg.seed ^ kShuffleStream);
    split_rows(n, cfg, groups, rng, r.train_rows, r.test_rows);
    // Precondition rows >= 2 / test_ratio, tolerant to the rounding of the ratio.
    if (static_cast<double>(n) * cfg.test_ratio < 2.0 - 1e-9 || r.train_rows.empty() || r.test_rows.empty()) {
        throw DataError("need at least " + std::to_string(static_cast<int>(std::ceil(2.0 / cfg.test_ratio))) +
                        " rows so both splits are non-empty, got " + std::to_string(n));
    }
    const Eigen::MatrixXd train_x = gather(data, r.train_rows, 0, r.train_rows.size());
    const Eigen::MatrixXd test_x = gather(data, r.test_rows, 0, r.test_rows.size());

    r.params = init_params(cfg.seed, cfg.dims);
    ModelParams m = zero_params(cfg.dims);
    ModelParams v = zero_params(cfg.dims);
    std::vector<std::size_t> order(r.train_rows.size());
    std::iota(order.begin(), order.end(), 0);
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    long long step = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        int batch_index = 0;
        for (std::size_t from = 0; from < order.size(); from += bs, ++batch_index) {
            const std::size_t count = std::min(bs, order.size() - from);
            const Eigen::MatrixXd batch = gather(train_x, order, from, count);
            Gradient g = backward(r.params, batch, cfg.loss);
            if (!std::isfinite(g.loss)) throw TrainingError("loss is not finite", epoch, batch_index);

            ++step;
            const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
            auto adam = [&](auto& w, const auto& gw, auto& mw, auto& vw) {
                mw = cfg.adam_beta1 * mw + (1.0 - cfg.adam_beta1) * gw;
                vw = cfg.adam_beta2 * vw + (1.0 - cfg.adam_beta2) * gw.cwiseProduct(gw);
                w.array() -= cfg.learning_rate * (mw.array() / c1) / ((vw.array() / c2).sqrt() + cfg.adam_eps);
            };
            adam(r.params.enc_w1, g.grad.enc_w1, m.enc_w1, v.enc_w1);
            adam(r.params.enc_b1, g.grad.enc_b1, m.enc_b1, v.enc_b1);
            adam(r.params.enc_w2, g.grad.enc_w2, m.enc_w2, v.enc_w2);
            adam(r.params.enc_b2, g.grad.enc_b2, m.enc_b2, v.enc_b2);
            adam(r.params.dec_w1, g.grad.dec_w1, m.dec_w1, v.dec_w1);
            adam(r.params.dec_b1, g.grad.dec_b1, m.dec_b1, v.dec_b1);
            adam(r.params.dec_w2, g.grad.dec_w2, m.dec_w2, v.dec_w2);
            adam(r.params.dec_b2, g.grad.dec_b2, m.dec_b2, v.dec_b2);
            if (!all_finite(r.params)) throw TrainingError("parameters became non-finite", epoch, batch_index);
        }
        EpochLoss e;
        e.epoch = epoch;
        e.train_mse = mse_loss(train_x, forward(r.params, train_x, cfg.loss).x_hat);
        e.test_mse = mse_loss(test_x, forward(r.params, test_x, cfg.loss).x_hat);
        r.history.push_back(e);
    }
    return r;
}

namespace {

using nlohmann::ordered_json;

template <typename M>
ordered_json tensor_json(const M& t) {
    ordered_json j;
    j["rows"] = t.rows();
    j["cols"] = t.cols();
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index k = 0; k < t.cols(); ++k) flat.push_back(t(i, k));
    }
    j["data"] = flat;
    return j;
}

template <typename M>
void tensor_from(const ordered_json& j, M& t) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto flat = j.at("data").get<std::vector<double>>();
    if (rows != t.rows() || cols != t.cols() || static_cast<Eigen::Index>(flat.size()) != rows * cols) {
        throw DataError("model file: tensor shape does not match dims");
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) t(i, k) = flat[static_cast<std::size_t>(i * cols + k)];
    }
}

constexpr const char* kTensorNames[] = {"enc_w1", "enc_b1", "enc_w2", "enc_b2",
                                        "dec_w1", "dec_b1", "dec_w2", "dec_b2"};

}  // namespace

std::string model_to_json(const ModelParams& p, std::uint64_t seed, const std::string& schema_version) {
    ordered_json j;
    j["dims"] = {p.dims.input, p.dims.hidden, p.dims.latent};
    j["seed"] = seed;
    j["schema_version"] = schema_version;
    ordered_json layers;
    int idx = 0;
    for_each_tensor(p, p, [&](const auto& t, const auto&) { layers[kTensorNames[idx++]] = tensor_json(t); });
    j["layers"] = std::move(layers);
    return j.dump() + "\n";
}

ModelParams model_from_json(const std::string& text) {
    try {
        const ordered_json j = ordered_json::parse(text);
        const auto dims = j.at("dims").get<std::vector<int>>();
        if (dims.size() != 3) throw DataError("model file: dims must have three entries");
        ModelParams p = zero_params({dims[0], dims[1], dims[2]});
        int idx = 0;
        for_each_tensor(p, p, [&](auto& t, auto&) { tensor_from(j.at("layers").at(kTensorNames[idx++]), t); });
        return p;
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history) {
    std::string out = "epoch,train_mse,test_mse\n";
    for (const auto& e : history) {
        out += std::to_string(e.epoch) + "," + io::format_double(e.train_mse) + "," +
               io::format_double(e.test_mse) + "\n";
    }
    io::write_file(path, out);
}

}  // namespace hexembed
