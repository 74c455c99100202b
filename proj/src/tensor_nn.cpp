#include "matchsyn/tensor_nn.hpp"

#include <cmath>
#include <stdexcept>

#include "matchsyn/rng.hpp"

namespace matchsyn {

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out, Activation act,
                      SplitMix64& rng) {
    DenseLayer layer;
    layer.w = Matrix(out, in);
    layer.b.assign(out, 0.0);
    layer.act = act;
    const double stdev = std::sqrt(2.0 / static_cast<double>(in));
    for (double& v : layer.w.data) v = stdev * rng.normal();
    return layer;
}

std::vector<DenseLayer> make_stack(std::size_t in,
                                   const std::vector<std::size_t>& hidden,
                                   std::size_t out, bool with_output,
                                   SplitMix64& rng) {
    std::vector<DenseLayer> stack;
    std::size_t cur = in;
    for (std::size_t width : hidden) {
        stack.push_back(make_layer(cur, width, Activation::relu, rng));
        cur = width;
    }
    if (with_output) stack.push_back(make_layer(cur, out, Activation::identity, rng));
    return stack;
}

void apply_activation(Activation act, const Matrix& pre, Matrix& post) {
    post = pre;
    if (act == Activation::relu)
        for (double& v : post.data) v = v > 0.0 ? v : 0.0;
}

// Runs a stack, recording pre/post per layer when requested.
Matrix run_stack(const std::vector<DenseLayer>& stack, const Matrix& input,
                 std::vector<Matrix>* pre_out, std::vector<Matrix>* post_out) {
    Matrix cur = input;
    for (const DenseLayer& layer : stack) {
        Matrix pre;
        affine_forward(cur, layer.w, layer.b, pre);
        Matrix post;
        apply_activation(layer.act, pre, post);
        if (pre_out) pre_out->push_back(std::move(pre));
        if (post_out) post_out->push_back(post);
        cur = std::move(post);
    }
    return cur;
}

// Backpropagates through a stack given dL/d(output); returns dL/d(input).
Matrix backprop_stack(const std::vector<DenseLayer>& stack, const Matrix& input,
                      const std::vector<Matrix>& pre,
                      const std::vector<Matrix>& post, const Matrix& d_out,
                      std::vector<LayerGrad>& grads) {
    grads.resize(stack.size());
    Matrix d_post = d_out;
    for (std::size_t li = stack.size(); li-- > 0;) {
        const DenseLayer& layer = stack[li];
        // d_pre = d_post ⊙ act'(pre); ReLU subgradient at 0 is 0.
        Matrix d_pre = d_post;
        if (layer.act == Activation::relu) {
            const Matrix& p = pre[li];
            for (std::size_t i = 0; i < d_pre.data.size(); ++i)
                if (!(p.data[i] > 0.0)) d_pre.data[i] = 0.0;
        }
        const Matrix& layer_input = li == 0 ? input : post[li - 1];
        grad_weights(d_pre, layer_input, grads[li].dw);
        grad_bias(d_pre, grads[li].db);
        grad_input(d_pre, layer.w, d_post);
    }
    return d_post;
}

void check_stack_cache(const std::vector<DenseLayer>& stack,
                       const std::vector<Matrix>& pre,
                       const std::vector<Matrix>& post, std::size_t batch,
                       const char* name) {
    if (pre.size() != stack.size() || post.size() != stack.size())
        throw std::invalid_argument(std::string("backward: cache depth mismatch in ") + name);
    for (std::size_t i = 0; i < stack.size(); ++i) {
        if (pre[i].rows != batch || pre[i].cols != stack[i].out_dim())
            throw std::invalid_argument(std::string("backward: stale cache for ") + name);
    }
}

}  // namespace

ModelConfig ModelConfig::desk() {
    ModelConfig cfg;
    cfg.encoder = {256, 256, 256};
    cfg.circuit_hidden = {};
    cfg.physical_hidden = {256, 256};
    return cfg;
}

ModelConfig ModelConfig::paper() {
    ModelConfig cfg;
    cfg.encoder = std::vector<std::size_t>(7, 2048);
    cfg.circuit_hidden = {};
    cfg.physical_hidden = {2048, 2048, 2048};
    return cfg;
}

std::size_t SENNModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto* stack : {&encoder, &circuit_head, &physical_head})
        for (const DenseLayer& l : *stack) n += l.w.data.size() + l.b.size();
    return n;
}

SENNModel init_model(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.input_dim == 0 || cfg.output_dim == 0)
        throw std::invalid_argument("init_model: zero model dimensions");
    SENNModel m;
    m.config = cfg;
    m.init_seed = seed;
    SplitMix64 rng(mix64(seed ^ 0x53454e4e'696e6974ull));
    m.encoder = make_stack(cfg.input_dim, cfg.encoder, 0, false, rng);
    const std::size_t enc_out = cfg.encoder.empty() ? cfg.input_dim : cfg.encoder.back();
    m.circuit_head = make_stack(enc_out, cfg.circuit_hidden, cfg.output_dim, true, rng);
    m.physical_head = make_stack(enc_out, cfg.physical_hidden, cfg.output_dim, true, rng);
    return m;
}

ForwardResult forward(const SENNModel& m, const Matrix& x_batch, ForwardCache* cache) {
    if (x_batch.cols != m.config.input_dim)
        throw std::invalid_argument("forward: input width mismatch");
    ForwardResult out;
    if (cache) {
        *cache = ForwardCache{};
        cache->input = x_batch;
        const Matrix features =
            run_stack(m.encoder, x_batch, &cache->enc_pre, &cache->enc_post);
        out.z_hat = run_stack(m.circuit_head, features, &cache->ch_pre, &cache->ch_post);
        out.y_hat = run_stack(m.physical_head, features, &cache->ph_pre, &cache->ph_post);
    } else {
        const Matrix features = run_stack(m.encoder, x_batch, nullptr, nullptr);
        out.z_hat = run_stack(m.circuit_head, features, nullptr, nullptr);
        out.y_hat = run_stack(m.physical_head, features, nullptr, nullptr);
    }
    return out;
}

GradientSet backward(const SENNModel& m, const ForwardCache& cache,
                     const Matrix& d_z_hat, const Matrix& d_y_hat) {
    const std::size_t batch = cache.input.rows;
    check_stack_cache(m.encoder, cache.enc_pre, cache.enc_post, batch, "encoder");
    check_stack_cache(m.circuit_head, cache.ch_pre, cache.ch_post, batch, "circuit head");
    check_stack_cache(m.physical_head, cache.ph_pre, cache.ph_post, batch, "physical head");
    if (d_z_hat.rows != batch || d_y_hat.rows != batch)
        throw std::invalid_argument("backward: upstream gradient batch mismatch");

    const Matrix& features =
        m.encoder.empty() ? cache.input : cache.enc_post.back();

    GradientSet g;
    const Matrix d_feat_circuit = backprop_stack(m.circuit_head, features, cache.ch_pre,
                                                 cache.ch_post, d_z_hat, g.circuit_head);
    const Matrix d_feat_physical = backprop_stack(m.physical_head, features, cache.ph_pre,
                                                  cache.ph_post, d_y_hat, g.physical_head);

    // Hard parameter sharing: the encoder sees the sum of both flows.
    Matrix d_features = d_feat_circuit;
    for (std::size_t i = 0; i < d_features.data.size(); ++i)
        d_features.data[i] += d_feat_physical.data[i];

    backprop_stack(m.encoder, cache.input, cache.enc_pre, cache.enc_post, d_features,
                   g.encoder);
    return g;
}

GradientSet zero_gradients(const SENNModel& m) {
    GradientSet g;
    auto fill = [](const std::vector<DenseLayer>& stack, std::vector<LayerGrad>& out) {
        out.resize(stack.size());
        for (std::size_t i = 0; i < stack.size(); ++i) {
            out[i].dw = Matrix(stack[i].out_dim(), stack[i].in_dim());
            out[i].db.assign(stack[i].out_dim(), 0.0);
        }
    };
    fill(m.encoder, g.encoder);
    fill(m.circuit_head, g.circuit_head);
    fill(m.physical_head, g.physical_head);
    return g;
}

Geometry predict_geometry(const SENNModel& m, const Performance& x) {
    const auto v = normalize_input(x, m.input_stats);
    Matrix row(1, 4);
    for (int j = 0; j < 4; ++j) row(0, j) = v[j];
    const Matrix features = run_stack(m.encoder, row, nullptr, nullptr);
    const Matrix y = run_stack(m.physical_head, features, nullptr, nullptr);
    if (y.cols != 6) throw std::invalid_argument("predict_geometry: head width != 6");
    return Geometry{y(0, 0), y(0, 1), y(0, 2), y(0, 3), y(0, 4), y(0, 5)};
}

}  // namespace matchsyn
