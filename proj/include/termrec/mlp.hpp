#pragma once

#include <cstdint>
#include <vector>

#include "termrec/common.hpp"

namespace termrec {

// Fully-connected network, ReLU hidden layers, linear output.
// For the autoencoder the layer list is mirror-symmetric and
// embedding_layer marks the bottleneck.
struct MlpNetwork {
    std::vector<size_t> layer_sizes;
    std::vector<Matrix> weights;              // [out x in] per layer
    std::vector<std::vector<double>> biases;  // per layer
    size_t embedding_layer = 0;               // 0 = none

    size_t input_dim() const { return layer_sizes.front(); }
    size_t output_dim() const { return layer_sizes.back(); }
    size_t layer_count() const { return weights.size(); }
    size_t parameter_count() const;
};

struct TrainConfig {
    size_t epochs = 200;
    size_t batch_size = 64;
    double learning_rate = 0.01;
    uint64_t seed = 0;
    size_t early_stop_patience = 20;
    double tolerance = 1e-5;
};

// Glorot-uniform weights, zero biases; deterministic given the seed.
MlpNetwork init_network(const std::vector<size_t>& layer_sizes, uint64_t seed);

// Mirror-symmetric autoencoder: input -> hidden... -> bottleneck -> ...hidden -> input.
MlpNetwork make_autoencoder(size_t input_dim, const std::vector<size_t>& encoder_hidden,
                            uint64_t seed);

// Post-activation outputs of every layer; index 0 is the input itself.
std::vector<std::vector<double>> forward_activations(const MlpNetwork& net,
                                                     const std::vector<double>& x);

struct AeForward {
    std::vector<double> embedding;
    std::vector<double> reconstruction;
};
AeForward ae_forward(const MlpNetwork& net, const std::vector<double>& x);

// Mean over rows of (1/Q) * sum_q (x_q - xhat_q)^2.
double ae_loss(const MlpNetwork& net, const Matrix& rows);

// Analytic full-batch gradient of ae_loss, flattened layer by layer
// (weights row-major, then biases). Used by the finite-difference check.
std::vector<double> ae_gradient(const MlpNetwork& net, const Matrix& rows);

std::vector<double> flatten_parameters(const MlpNetwork& net);
void unflatten_parameters(MlpNetwork& net, const std::vector<double>& flat);

// Mini-batch SGD on the reconstruction loss. Returns the per-epoch training
// loss curve. Throws NonFinite if the loss diverges.
std::vector<double> train_autoencoder(MlpNetwork& net, const Matrix& rows,
                                      const TrainConfig& cfg);

// Encoder output per row (rows must be non-empty-segment vectors).
Matrix encode_rows(const MlpNetwork& net, const Matrix& rows);

// Softmax cross-entropy training for the NN baseline classifier.
std::vector<double> train_softmax(MlpNetwork& net, const Matrix& rows,
                                  const std::vector<int>& labels, size_t n_classes,
                                  const TrainConfig& cfg);

Matrix predict_softmax(const MlpNetwork& net, const Matrix& rows);

}  // namespace termrec
