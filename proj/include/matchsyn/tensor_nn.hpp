#pragma once

#include <cstdint>
#include <vector>

#include "matchsyn/circuit_model.hpp"
#include "matchsyn/dataset.hpp"
#include "matchsyn/linalg.hpp"

namespace matchsyn {

enum class Activation : std::uint8_t { relu, identity };

struct DenseLayer {
    Matrix w;                // out_dim x in_dim
    std::vector<double> b;   // out_dim
    Activation act = Activation::relu;

    std::size_t in_dim() const { return w.cols; }
    std::size_t out_dim() const { return w.rows; }
};

// Hidden widths of the three stacks. Every hidden layer is ReLU; each
// head ends in an extra identity layer of width output_dim.
struct ModelConfig {
    std::size_t input_dim = 4;
    std::size_t output_dim = 6;
    std::vector<std::size_t> encoder;
    std::vector<std::size_t> circuit_hidden;
    std::vector<std::size_t> physical_hidden;

    static ModelConfig desk();   // encoder 3x256, heads 256->6 and 2x256->6
    static ModelConfig paper();  // encoder 7x2048, heads 2048->6 and 3x2048->6
};

// Shared-encoder two-head regressor: the circuit head predicts the six
// lumped circuit parameters, the physical head the six geometry fields.
// Both heads read the same encoder features.
struct SENNModel {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> circuit_head;
    std::vector<DenseLayer> physical_head;
    NormStats input_stats{};
    ModelConfig config;
    std::uint64_t init_seed = 0;
    std::uint64_t train_seed = 0;

    std::size_t parameter_count() const;
};

struct LayerGrad {
    Matrix dw;
    std::vector<double> db;
};

struct GradientSet {
    std::vector<LayerGrad> encoder;
    std::vector<LayerGrad> circuit_head;
    std::vector<LayerGrad> physical_head;
};

// Pre- and post-activations recorded by forward() for the exact
// reverse-mode pass.
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> enc_pre, enc_post;
    std::vector<Matrix> ch_pre, ch_post;
    std::vector<Matrix> ph_pre, ph_post;
};

struct ForwardResult {
    Matrix z_hat;  // circuit head output, batch x 6
    Matrix y_hat;  // physical head output, batch x 6
};

// He-normal weights (std sqrt(2/in_dim)), zero biases; deterministic in
// the seed.
SENNModel init_model(const ModelConfig& cfg, std::uint64_t seed);

// x_batch is batch x input_dim, already normalized. Pass a cache to
// enable backward().
ForwardResult forward(const SENNModel& m, const Matrix& x_batch,
                      ForwardCache* cache = nullptr);

// Exact reverse-mode gradients. Encoder gradients accumulate the
// contributions flowing back from both heads.
GradientSet backward(const SENNModel& m, const ForwardCache& cache,
                     const Matrix& d_z_hat, const Matrix& d_y_hat);

GradientSet zero_gradients(const SENNModel& m);

// Deployment path: normalize, run encoder + physical head only.
Geometry predict_geometry(const SENNModel& m, const Performance& x);

}  // namespace matchsyn
