#include "matchsyn/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "matchsyn/rng.hpp"

namespace matchsyn {

namespace {

void check_finite(const LayerGrad& g, const char* stack, std::size_t layer) {
    for (double v : g.dw.data)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("adam_step: non-finite gradient in ") +
                                     stack + " layer " + std::to_string(layer));
    for (double v : g.db)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("adam_step: non-finite gradient in ") +
                                     stack + " layer " + std::to_string(layer));
}

void update_tensor(std::vector<double>& params, const std::vector<double>& grad,
                   std::vector<double>& m, std::vector<double>& v,
                   const AdamParams& hp, double eta_t, double bc1, double bc2) {
    const double decay = 1.0 - eta_t * hp.tau;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] = decay * params[i] - eta_t * m_hat / (std::sqrt(v_hat) + hp.eps);
    }
}

void step_stack(std::vector<DenseLayer>& stack, const std::vector<LayerGrad>& grads,
                std::vector<LayerGrad>& m, std::vector<LayerGrad>& v,
                const AdamParams& hp, double eta_t, double bc1, double bc2,
                const char* name) {
    if (grads.size() != stack.size())
        throw std::invalid_argument("adam_step: gradient stack depth mismatch");
    for (std::size_t i = 0; i < stack.size(); ++i) {
        if (!grads[i].dw.same_shape(stack[i].w) || grads[i].db.size() != stack[i].b.size())
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        check_finite(grads[i], name, i);
        update_tensor(stack[i].w.data, grads[i].dw.data, m[i].dw.data, v[i].dw.data,
                      hp, eta_t, bc1, bc2);
        update_tensor(stack[i].b, grads[i].db, m[i].db, v[i].db, hp, eta_t, bc1, bc2);
    }
}

}  // namespace

AdamState AdamState::init(const SENNModel& model, double eta, AdamParams hp) {
    AdamState st;
    st.m = zero_gradients(model);
    st.v = zero_gradients(model);
    st.t = 0;
    st.eta = eta;
    st.hp = hp;
    return st;
}

void adam_step(SENNModel& model, const GradientSet& grads, AdamState& state,
               double eta_t) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.hp.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.hp.beta2, static_cast<double>(state.t));
    step_stack(model.encoder, grads.encoder, state.m.encoder, state.v.encoder,
               state.hp, eta_t, bc1, bc2, "encoder");
    step_stack(model.circuit_head, grads.circuit_head, state.m.circuit_head,
               state.v.circuit_head, state.hp, eta_t, bc1, bc2, "circuit head");
    step_stack(model.physical_head, grads.physical_head, state.m.physical_head,
               state.v.physical_head, state.hp, eta_t, bc1, bc2, "physical head");
}

double lr_schedule(int epoch, double lr0, int decay_every) {
    if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
    if (decay_every <= 0) throw std::invalid_argument("lr_schedule: decay interval must be positive");
    return lr0 * std::pow(0.5, static_cast<double>(epoch / decay_every));
}

TrainConfig TrainConfig::desk() {
    TrainConfig tc;
    tc.batch_size = 256;
    tc.epochs = 12;
    return tc;
}

DesignMatrices build_matrices(const Dataset& d, const std::vector<std::size_t>& idx,
                              const NormStats& stats) {
    DesignMatrices m;
    m.x = Matrix(idx.size(), 4);
    m.z = Matrix(idx.size(), 6);
    m.y = Matrix(idx.size(), 6);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const Triple& t = d.rows[idx[r]];
        const auto xn = normalize_input(t.x, stats);
        for (int j = 0; j < 4; ++j) m.x(r, j) = xn[j];
        m.z(r, 0) = t.z.l1;
        m.z(r, 1) = t.z.l2;
        m.z(r, 2) = t.z.k;
        m.z(r, 3) = t.z.q1;
        m.z(r, 4) = t.z.q2;
        m.z(r, 5) = t.z.cp;
        m.y(r, 0) = t.y.w_oa;
        m.y(r, 1) = t.y.w_ob;
        m.y(r, 2) = t.y.r0;
        m.y(r, 3) = t.y.r1;
        m.y(r, 4) = t.y.x_gnd;
        m.y(r, 5) = t.y.l_f;
    }
    return m;
}

namespace {

// Forward in bounded batches; returns y_hat (and z_hat if asked).
Matrix predict_physical(const SENNModel& m, const Matrix& x) {
    constexpr std::size_t kChunk = 4096;
    Matrix y_hat(x.rows, m.config.output_dim);
    for (std::size_t start = 0; start < x.rows; start += kChunk) {
        const std::size_t stop = std::min(x.rows, start + kChunk);
        Matrix block(stop - start, x.cols);
        for (std::size_t r = start; r < stop; ++r)
            for (std::size_t c = 0; c < x.cols; ++c) block(r - start, c) = x(r, c);
        const ForwardResult out = forward(m, block);
        for (std::size_t r = start; r < stop; ++r)
            for (std::size_t c = 0; c < y_hat.cols; ++c)
                y_hat(r, c) = out.y_hat(r - start, c);
    }
    return y_hat;
}

}  // namespace

EvalMetrics evaluate_model(const SENNModel& m, const Dataset& d) {
    if (!d.split_info)
        throw std::invalid_argument("evaluate_model: dataset has no split");
    const auto dm = build_matrices(d, d.test_indices(), m.input_stats);
    const Matrix y_hat = predict_physical(m, dm.x);
    EvalMetrics ev;
    ev.smse = smse(y_hat, dm.y);
    ev.sdmse = sdmse(y_hat, dm.y);
    ev.r2 = r_squared(y_hat, dm.y);
    return ev;
}

TrainResult train(const Dataset& d, const ModelConfig& mc, const TrainConfig& tc) {
    if (!d.split_info)
        throw std::invalid_argument("train: dataset has no train/test split");
    if (tc.epochs < 1 || tc.batch_size < 1)
        throw std::invalid_argument("train: epochs and batch size must be positive");

    const auto train_idx = d.train_indices();
    const auto dm = build_matrices(d, train_idx, d.norm_stats);
    const std::size_t n_train = train_idx.size();

    TrainResult result;
    result.model = init_model(mc, tc.init_seed);
    result.model.input_stats = d.norm_stats;
    result.model.train_seed = tc.shuffle_seed;

    AdamState state = AdamState::init(result.model, tc.lr0, tc.adam);
    const RiskConfig risk{tc.loss_kind, tc.lambda};

    std::vector<std::uint32_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = static_cast<std::uint32_t>(i);

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const double eta_t = lr_schedule(epoch, tc.lr0, tc.decay_every);

        // Epoch-specific shuffle, derived so the whole run replays from
        // (shuffle_seed, epoch).
        SplitMix64 rng(derive_stream(tc.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n_train; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        std::size_t batch_count = 0;
        for (std::size_t start = 0; start < n_train; start += tc.batch_size) {
            const std::size_t stop = std::min(n_train, start + tc.batch_size);
            const std::size_t b = stop - start;
            Matrix xb(b, 4), zb(b, 6), yb(b, 6);
            for (std::size_t r = 0; r < b; ++r) {
                const std::uint32_t src = order[start + r];
                for (std::size_t c = 0; c < 4; ++c) xb(r, c) = dm.x(src, c);
                for (std::size_t c = 0; c < 6; ++c) zb(r, c) = dm.z(src, c);
                for (std::size_t c = 0; c < 6; ++c) yb(r, c) = dm.y(src, c);
            }

            ForwardCache cache;
            const ForwardResult out = forward(result.model, xb, &cache);
            const RiskResult rr = combined_risk(out.z_hat, zb, out.y_hat, yb, risk);
            if (!std::isfinite(rr.loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_count));
            const GradientSet grads = backward(result.model, cache, rr.d_z_hat, rr.d_y_hat);
            adam_step(result.model, grads, state, eta_t);
            loss_sum += rr.loss;
            ++batch_count;
        }

        const EvalMetrics ev = evaluate_model(result.model, d);
        EpochLog log;
        log.epoch = epoch;
        log.eta = eta_t;
        log.train_loss = loss_sum / static_cast<double>(batch_count);
        log.test_smse = ev.smse;
        log.test_sdmse = ev.sdmse;
        log.test_r2 = ev.r2;
        result.log.push_back(log);
        if (tc.verbose) {
            std::printf("epoch %4d  eta %.6g  train %.6g  test smse %.6g  sdmse %.6g  r2 %.6g\n",
                        log.epoch, log.eta, log.train_loss, log.test_smse,
                        log.test_sdmse, log.test_r2);
            std::fflush(stdout);
        }
    }
    return result;
}

void write_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_log_csv: cannot open " + path);
    out << "epoch,eta,train_loss,test_smse,test_sdmse,test_r2\n";
    char buf[160];
    for (const EpochLog& l : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", l.epoch,
                      l.eta, l.train_loss, l.test_smse, l.test_sdmse, l.test_r2);
        out << buf;
    }
}

}  // namespace matchsyn
