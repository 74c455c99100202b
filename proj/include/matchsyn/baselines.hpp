#pragma once

#include "matchsyn/dataset.hpp"
#include "matchsyn/linalg.hpp"
#include "matchsyn/optimizer.hpp"

namespace matchsyn {

// Ordinary least squares from normalized inputs to the six physical
// parameters in natural units.
struct LinearModel {
    Matrix w;                // 6 x 4
    std::vector<double> b;   // 6
    NormStats input_stats{};
};

// Normal equations with a 1e-9 ridge jitter for conditioning. Requires
// a split dataset with at least 5 training rows.
LinearModel fit_linear(const Dataset& d);

// y_hat = x_norm * W^T + b.
Matrix linear_predict(const LinearModel& m, const Matrix& x_norm);

Geometry linear_predict_geometry(const LinearModel& m, const Performance& x);

EvalMetrics evaluate_linear(const LinearModel& m, const Dataset& d);

// Ablation baseline: the same architecture and trainer with lambda
// forced to zero, so the circuit head receives no learning signal.
TrainResult train_naive(const Dataset& d, const ModelConfig& mc, TrainConfig tc);

}  // namespace matchsyn
