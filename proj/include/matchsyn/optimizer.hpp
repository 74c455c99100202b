#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchsyn/dataset.hpp"
#include "matchsyn/losses.hpp"
#include "matchsyn/tensor_nn.hpp"

namespace matchsyn {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double tau = 0.0;  // decoupled weight decay; off by default
};

// First/second moment accumulators, shape-matched to the model.
struct AdamState {
    GradientSet m;
    GradientSet v;
    std::int64_t t = 0;
    double eta = 1e-3;  // base learning rate
    AdamParams hp;

    static AdamState init(const SENNModel& model, double eta, AdamParams hp = {});
};

// One update: moment update, bias correction, then
// params <- (1 - eta*tau) * params - eta * m_hat / (sqrt(v_hat) + eps).
// Throws std::runtime_error on non-finite gradient entries.
void adam_step(SENNModel& model, const GradientSet& grads, AdamState& state,
               double eta_t);

// Step decay: lr0 * 0.5^floor(epoch / decay_every).
double lr_schedule(int epoch, double lr0, int decay_every = 50);

struct TrainConfig {
    int epochs = 500;
    std::size_t batch_size = 1024;
    double lr0 = 0.001;
    int decay_every = 50;
    double lambda = 0.5;
    LossKind loss_kind = LossKind::smse;
    std::uint64_t init_seed = 1;
    std::uint64_t shuffle_seed = 2;
    AdamParams adam;
    bool verbose = false;

    // Paper-scale batch; the desk preset drops to 256.
    static TrainConfig desk();
};

struct EpochLog {
    int epoch = 0;
    double eta = 0.0;
    double train_loss = 0.0;
    double test_smse = 0.0;
    double test_sdmse = 0.0;
    double test_r2 = 0.0;
};

struct TrainResult {
    SENNModel model;
    std::vector<EpochLog> log;
};

struct EvalMetrics {
    double smse = 0.0;
    double sdmse = 0.0;
    double r2 = 0.0;
};

// Physical-parameter prediction quality on the test split, using the
// model's own normalization statistics.
EvalMetrics evaluate_model(const SENNModel& m, const Dataset& d);

// Mini-batch Adam training of the two-head model. Deterministic: the
// run is a pure function of the dataset bytes, configs and seeds.
TrainResult train(const Dataset& d, const ModelConfig& mc, const TrainConfig& tc);

// epoch,eta,train_loss,test_smse,test_sdmse,test_r2
void write_log_csv(const std::string& path, const std::vector<EpochLog>& log);

// Normalized-input / natural-unit target matrices for a row subset.
struct DesignMatrices {
    Matrix x;  // n x 4, normalized
    Matrix z;  // n x 6, circuit targets
    Matrix y;  // n x 6, physical targets
};
DesignMatrices build_matrices(const Dataset& d, const std::vector<std::size_t>& idx,
                              const NormStats& stats);

}  // namespace matchsyn
