#include <cmath>
#include <set>
#include <stdexcept>

#include <doctest.h>

#include "matchsyn/baselines.hpp"
#include "matchsyn/checkpoint.hpp"
#include "matchsyn/optimizer.hpp"
#include "matchsyn/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace matchsyn;

namespace {

// A model whose only interesting tensor is physical_head[0].w; used to
// drive adam_step with hand-chosen gradients.
SENNModel probe_model(std::size_t in, std::size_t out) {
    ModelConfig cfg;
    cfg.input_dim = in;
    cfg.output_dim = out;
    cfg.encoder = {};
    cfg.circuit_hidden = {};
    cfg.physical_hidden = {};
    SENNModel m = init_model(cfg, 0);
    for (auto* stack : {&m.encoder, &m.circuit_head, &m.physical_head})
        for (DenseLayer& l : *stack) {
            for (double& v : l.w.data) v = 0.0;
            for (double& v : l.b) v = 0.0;
        }
    return m;
}

GradientSet gradient_for(const SENNModel& m, const std::vector<double>& g) {
    GradientSet gs = zero_gradients(m);
    REQUIRE(gs.physical_head[0].dw.data.size() == g.size());
    gs.physical_head[0].dw.data = g;
    return gs;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.encoder = {16, 16};
    cfg.circuit_hidden = {};
    cfg.physical_hidden = {12};
    return cfg;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("first step with constant unit gradient") {
    SENNModel m = probe_model(1, 1);
    AdamState st = AdamState::init(m, 0.001);
    adam_step(m, gradient_for(m, {1.0}), st, 0.001);
    CHECK(m.physical_head[0].w.data[0] ==
          doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(st.t == 1);
}

TEST_CASE("first-step identity theta1 = theta0 - eta*g/(|g|+eps)") {
    for (double g : {3.0, -0.25, 1e-3}) {
        for (double beta1 : {0.5, 0.9, 0.99}) {
            SENNModel m = probe_model(1, 1);
            AdamState st = AdamState::init(m, 0.001);
            st.hp.beta1 = beta1;
            adam_step(m, gradient_for(m, {g}), st, 0.001);
            const double expect = -0.001 * g / (std::fabs(g) + 1e-8);
            CHECK(m.physical_head[0].w.data[0] ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero gradient leaves parameters unchanged") {
    SENNModel m = init_model(tiny_config(), 4);
    const SENNModel before = m;
    AdamState st = AdamState::init(m, 0.001);
    const GradientSet gs = zero_gradients(m);
    for (int i = 0; i < 5; ++i) adam_step(m, gs, st, 0.001);
    for (std::size_t li = 0; li < m.encoder.size(); ++li)
        CHECK(m.encoder[li].w.data == before.encoder[li].w.data);
    CHECK(m.physical_head[0].w.data == before.physical_head[0].w.data);
}

TEST_CASE("quadratic descent matches the hand-rolled trace") {
    SUBCASE("scalar, 100 steps") {
        SENNModel m = probe_model(1, 1);
        AdamState st = AdamState::init(m, 0.001);
        std::vector<double> theta_ref{0.7};
        oracle::AdamTraceState ref;
        m.physical_head[0].w.data[0] = 0.7;
        for (int step = 0; step < 100; ++step) {
            const double g_impl = m.physical_head[0].w.data[0];  // grad of x^2/2
            adam_step(m, gradient_for(m, {g_impl}), st, 0.001);
            oracle::adam_trace_step(theta_ref, {theta_ref[0]}, ref, 0.001, 0.9,
                                    0.999, 1e-8, 0.0);
            CHECK(m.physical_head[0].w.data[0] ==
                  doctest::Approx(theta_ref[0]).epsilon(1e-12));
        }
    }
    SUBCASE("10-dimensional with weight decay") {
        SENNModel m = probe_model(5, 2);  // physical head w is 2x5 = 10 params
        AdamState st = AdamState::init(m, 0.001);
        st.hp.tau = 0.01;
        std::vector<double> curvature(10), theta_ref(10);
        SplitMix64 rng(71);
        for (int i = 0; i < 10; ++i) {
            curvature[i] = rng.uniform(0.5, 4.0);
            theta_ref[i] = rng.uniform(-1.0, 1.0);
        }
        m.physical_head[0].w.data = theta_ref;
        oracle::AdamTraceState ref;
        for (int step = 0; step < 100; ++step) {
            std::vector<double> g_impl(10), g_ref(10);
            for (int i = 0; i < 10; ++i) {
                g_impl[i] = curvature[i] * m.physical_head[0].w.data[i];
                g_ref[i] = curvature[i] * theta_ref[i];
            }
            adam_step(m, gradient_for(m, g_impl), st, 0.001);
            oracle::adam_trace_step(theta_ref, g_ref, ref, 0.001, 0.9, 0.999, 1e-8,
                                    0.01);
            for (int i = 0; i < 10; ++i)
                CHECK(m.physical_head[0].w.data[i] ==
                      doctest::Approx(theta_ref[i]).epsilon(1e-12));
        }
        // other tensors saw zero gradients and tau decay only
        for (double v : m.circuit_head[0].w.data) CHECK(v == 0.0);
    }
}

TEST_CASE("constant gradient drives sign-steps of magnitude eta") {
    // With g constant and tau = 0, bias correction gives m_hat = g and
    // v_hat = g^2 at every step, so each move is eta * g / (|g| + eps).
    SENNModel m = probe_model(1, 1);
    AdamState st = AdamState::init(m, 0.001);
    double prev = 0.0;
    for (int step = 0; step < 10; ++step) {
        adam_step(m, gradient_for(m, {-2.5}), st, 0.001);
        const double cur = m.physical_head[0].w.data[0];
        CHECK(cur - prev == doctest::Approx(0.001).epsilon(1e-7));
        prev = cur;
    }
}

TEST_CASE("non-finite gradients abort") {
    SENNModel m = probe_model(1, 1);
    AdamState st = AdamState::init(m, 0.001);
    CHECK_THROWS_AS(
        adam_step(m, gradient_for(m, {std::nan("")}), st, 0.001),
        std::runtime_error);
}

TEST_CASE("learning-rate schedule halves every 50 epochs") {
    CHECK(lr_schedule(0, 0.001) == 0.001);
    CHECK(lr_schedule(49, 0.001) == 0.001);
    CHECK(lr_schedule(50, 0.001) == 0.0005);
    CHECK(lr_schedule(99, 0.001) == 0.0005);
    CHECK(lr_schedule(100, 0.001) == 0.00025);
    CHECK(lr_schedule(499, 0.001) ==
          doctest::Approx(0.001 * std::pow(0.5, 9)).epsilon(1e-15));

    std::set<double> distinct;
    for (int e = 0; e < 500; ++e) distinct.insert(lr_schedule(e, 0.001));
    CHECK(distinct.size() == 10);

    CHECK_THROWS_AS(lr_schedule(-1, 0.001), std::invalid_argument);
}

TEST_CASE("training on a toy set reduces the loss") {
    Dataset d = generate(100, 55, SamplingRanges{}, EnvConfig{});
    split(d, 0.8, 1);
    TrainConfig tc = TrainConfig::desk();
    tc.epochs = 10;
    tc.batch_size = 16;
    const TrainResult tr = train(d, ModelConfig::desk(), tc);
    REQUIRE(tr.log.size() == 10);
    CHECK(tr.log.back().train_loss < tr.log.front().train_loss);
    for (const EpochLog& l : tr.log) {
        CHECK(std::isfinite(l.train_loss));
        CHECK(std::isfinite(l.test_smse));
    }
}

TEST_CASE("training is deterministic: identical checkpoints byte for byte") {
    Dataset d = generate(300, 42, SamplingRanges{}, EnvConfig{});
    split(d, 0.8, 2);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 64;
    tc.init_seed = 5;
    tc.shuffle_seed = 6;

    const TrainResult a = train(d, tiny_config(), tc);
    const TrainResult b = train(d, tiny_config(), tc);

    testutil::TempFile fa("det_a"), fb("det_b");
    save_checkpoint(fa.path.string(), a.model, "senn");
    save_checkpoint(fb.path.string(), b.model, "senn");
    CHECK(testutil::read_file(fa.path) == testutil::read_file(fb.path));

    // and the logged metrics replay exactly through evaluate_model
    const EvalMetrics ev = evaluate_model(a.model, d);
    CHECK(ev.smse == a.log.back().test_smse);
    CHECK(ev.sdmse == a.log.back().test_sdmse);
    CHECK(ev.r2 == a.log.back().test_r2);
}

TEST_CASE("lambda = 0 never touches the circuit head") {
    Dataset d = generate(200, 43, SamplingRanges{}, EnvConfig{});
    split(d, 0.8, 2);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 32;
    tc.lambda = 0.0;

    const SENNModel fresh = init_model(tiny_config(), tc.init_seed);
    const TrainResult tr = train(d, tiny_config(), tc);
    for (std::size_t li = 0; li < fresh.circuit_head.size(); ++li) {
        CHECK(tr.model.circuit_head[li].w.data == fresh.circuit_head[li].w.data);
        CHECK(tr.model.circuit_head[li].b == fresh.circuit_head[li].b);
    }

    // while lambda = 0.5 with the same seeds trains a different physical head
    TrainConfig tc2 = tc;
    tc2.lambda = 0.5;
    const TrainResult tr2 = train(d, tiny_config(), tc2);
    CHECK(tr.model.physical_head[0].w.data != tr2.model.physical_head[0].w.data);
}

TEST_CASE("a final partial mini-batch is consumed, not dropped") {
    Dataset d = generate(10, 44, SamplingRanges{}, EnvConfig{});
    split(d, 0.8, 2);  // 8 train rows
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 5;  // 5 + 3
    const TrainResult tr = train(d, tiny_config(), tc);
    CHECK(tr.log.size() == 1);

    // batch_size larger than the split still works (single partial batch)
    TrainConfig tc2;
    tc2.epochs = 1;
    tc2.batch_size = 100;
    CHECK_NOTHROW(train(d, tiny_config(), tc2));
}

TEST_CASE("epoch log csv format") {
    std::vector<EpochLog> log(2);
    log[0] = {0, 0.001, 0.5, 0.4, 0.3, 0.2};
    log[1] = {1, 0.001, 0.25, 0.2, 0.15, 0.6};
    testutil::TempFile f("log.csv");
    write_log_csv(f.path.string(), log);
    const std::string text = testutil::read_file(f.path);
    CHECK(text.find("epoch,eta,train_loss,test_smse,test_sdmse,test_r2\n") == 0);
    CHECK(text.find("\n1,") != std::string::npos);
}

TEST_CASE("train requires a split dataset") {
    Dataset d = generate(50, 45, SamplingRanges{}, EnvConfig{});
    CHECK_THROWS_AS(train(d, tiny_config(), TrainConfig{}), std::invalid_argument);
}

}  // TEST_SUITE
