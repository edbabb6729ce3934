// Fully connected autoencoder: input -> ReLU hidden -> linear latent ->
// ReLU hidden -> linear reconstruction, trained with Adam.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hexembed {

struct ModelDims {
    int input = 88;
    int hidden = 64;
    int latent = 30;

    bool operator==(const ModelDims&) const = default;
};

/// Weights are stored (fan_in x fan_out) so a batch X (rows = samples)
/// maps through X * W + b.
struct ModelParams {
    ModelDims dims;
    Eigen::MatrixXd enc_w1, enc_w2, dec_w1, dec_w2;
    Eigen::RowVectorXd enc_b1, enc_b2, dec_b1, dec_b2;

    bool operator==(const ModelParams& o) const;
};

/// Calls f(a.x, b.x) for every parameter tensor, in a fixed order.
template <typename P, typename Q, typename F>
void for_each_tensor(P& a, Q& b, F&& f) {
    f(a.enc_w1, b.enc_w1);
    f(a.enc_b1, b.enc_b1);
    f(a.enc_w2, b.enc_w2);
    f(a.enc_b2, b.enc_b2);
    f(a.dec_w1, b.dec_w1);
    f(a.dec_b1, b.dec_b1);
    f(a.dec_w2, b.dec_w2);
    f(a.dec_b2, b.dec_b2);
}

enum class LossKind { Mse, Bce };

/// Glorot-uniform weights, zero biases.
ModelParams init_params(std::uint64_t seed, const ModelDims& dims);
/// Same shapes, all zeros.
ModelParams zero_params(const ModelDims& dims);

struct ForwardResult {
    Eigen::MatrixXd h;      // latent, batch x latent
    Eigen::MatrixXd x_hat;  // reconstruction, batch x input
};

/// Batched forward pass. In Bce mode x_hat is the sigmoid of the output layer.
ForwardResult forward(const ModelParams& p, const Eigen::MatrixXd& x, LossKind loss = LossKind::Mse);
Eigen::MatrixXd encode(const ModelParams& p, const Eigen::MatrixXd& x);
Eigen::VectorXd encode(const ModelParams& p, const Eigen::VectorXd& x);

/// Mean over rows and columns of the squared difference.
double mse_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat);
/// Mean binary cross-entropy of probabilities x_hat against targets x.
double bce_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat);

/// Loss of the batch and its exact gradient with respect to every parameter.
/// ReLU'(0) is taken as 0.
struct Gradient {
    double loss = 0.0;
    ModelParams grad;
};
Gradient backward(const ModelParams& p, const Eigen::MatrixXd& batch, LossKind loss = LossKind::Mse);

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 200;
    int epochs = 50;
    double test_ratio = 0.2;
    std::uint64_t seed = 42;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossKind loss = LossKind::Mse;
    ModelDims dims;

    void validate() const;
};

struct EpochLoss {
    int epoch = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochLoss> history;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

/// Seeded split, per-epoch reshuffled mini-batches, Adam. `groups` (one label
/// per row) switches to a split stratified by group. Epoch losses are the MSE
/// of the whole train and test partitions after the epoch. Throws
/// TrainingError when a batch loss stops being finite.
TrainResult train(const Eigen::MatrixXd& data, const TrainConfig& config,
                  const std::vector<std::string>* groups = nullptr);

std::string model_to_json(const ModelParams& p, std::uint64_t seed, const std::string& schema_version);
ModelParams model_from_json(const std::string& text);
void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history);

}  // namespace hexembed
