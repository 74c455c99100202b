#include "matchsyn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace matchsyn {

namespace {

static_assert(sizeof(double) == 8, "checkpoint format assumes 64-bit doubles");

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated header length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& out, const double* p, std::size_t n) {
    // Little-endian hosts only; asserted at load time via the header.
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
}

void read_doubles(std::istream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 8));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor payload");
}

const char* act_name(Activation a) {
    return a == Activation::relu ? "relu" : "identity";
}

Activation act_from_name(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw std::runtime_error("checkpoint: unknown activation '" + s + "'");
}

nlohmann::json stack_json(const std::vector<DenseLayer>& stack) {
    nlohmann::json arr = nlohmann::json::array();
    for (const DenseLayer& l : stack)
        arr.push_back({{"in", l.in_dim()}, {"out", l.out_dim()}, {"act", act_name(l.act)}});
    return arr;
}

std::vector<DenseLayer> stack_from_json(const nlohmann::json& arr) {
    std::vector<DenseLayer> stack;
    for (const auto& j : arr) {
        DenseLayer l;
        const auto in = j.at("in").get<std::size_t>();
        const auto out = j.at("out").get<std::size_t>();
        if (in == 0 || out == 0) throw std::runtime_error("checkpoint: zero layer dimension");
        l.w = Matrix(out, in);
        l.b.assign(out, 0.0);
        l.act = act_from_name(j.at("act").get<std::string>());
        stack.push_back(std::move(l));
    }
    return stack;
}

nlohmann::json stats_json(const NormStats& s) {
    return {{"mean", std::vector<double>(s.mean.begin(), s.mean.end())},
            {"stdev", std::vector<double>(s.stdev.begin(), s.stdev.end())}};
}

NormStats stats_from_json(const nlohmann::json& j) {
    NormStats s;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto stdev = j.at("stdev").get<std::vector<double>>();
    if (mean.size() != 4 || stdev.size() != 4)
        throw std::runtime_error("checkpoint: input stats must have 4 coordinates");
    for (int i = 0; i < 4; ++i) {
        s.mean[i] = mean[i];
        s.stdev[i] = stdev[i];
    }
    return s;
}

void write_container(const std::string& path, const nlohmann::json& header,
                     const std::vector<const std::vector<DenseLayer>*>& stacks) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kCheckpointMagic, 5);
    const std::string h = header.dump();
    write_u64_le(out, h.size());
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto* stack : stacks) {
        for (const DenseLayer& l : *stack) {
            write_doubles(out, l.w.data.data(), l.w.data.size());
            write_doubles(out, l.b.data(), l.b.size());
        }
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

}  // namespace

void save_checkpoint(const std::string& path, const SENNModel& m,
                     const std::string& kind) {
    nlohmann::json header;
    header["kind"] = kind;
    header["input_dim"] = m.config.input_dim;
    header["output_dim"] = m.config.output_dim;
    header["encoder"] = stack_json(m.encoder);
    header["circuit_head"] = stack_json(m.circuit_head);
    header["physical_head"] = stack_json(m.physical_head);
    header["input_stats"] = stats_json(m.input_stats);
    header["config"] = {{"encoder", m.config.encoder},
                        {"circuit_hidden", m.config.circuit_hidden},
                        {"physical_hidden", m.config.physical_hidden}};
    header["init_seed"] = m.init_seed;
    header["train_seed"] = m.train_seed;
    write_container(path, header, {&m.encoder, &m.circuit_head, &m.physical_head});
}

void save_checkpoint(const std::string& path, const LinearModel& m) {
    nlohmann::json header;
    header["kind"] = "linear";
    header["input_dim"] = m.w.cols;
    header["output_dim"] = m.w.rows;
    header["input_stats"] = stats_json(m.input_stats);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kCheckpointMagic, 5);
    const std::string h = header.dump();
    write_u64_le(out, h.size());
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    write_doubles(out, m.w.data.data(), m.w.data.size());
    write_doubles(out, m.b.data(), m.b.size());
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kCheckpointMagic, 5) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    const std::uint64_t header_len = read_u64_le(in);
    if (header_len > (1ull << 30))
        throw std::runtime_error("load_checkpoint: implausible header length");
    std::string h(header_len, '\0');
    in.read(h.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::runtime_error("load_checkpoint: truncated header");
    const nlohmann::json header = nlohmann::json::parse(h);

    LoadedModel lm;
    lm.kind = header.at("kind").get<std::string>();

    if (lm.kind == "linear") {
        const auto in_dim = header.at("input_dim").get<std::size_t>();
        const auto out_dim = header.at("output_dim").get<std::size_t>();
        if (in_dim != 4 || out_dim != 6)
            throw std::runtime_error("load_checkpoint: linear model must map 4 -> 6");
        lm.linear.w = Matrix(out_dim, in_dim);
        lm.linear.b.assign(out_dim, 0.0);
        lm.linear.input_stats = stats_from_json(header.at("input_stats"));
        read_doubles(in, lm.linear.w.data.data(), lm.linear.w.data.size());
        read_doubles(in, lm.linear.b.data(), lm.linear.b.size());
    } else {
        SENNModel& m = lm.senn;
        m.config.input_dim = header.at("input_dim").get<std::size_t>();
        m.config.output_dim = header.at("output_dim").get<std::size_t>();
        m.encoder = stack_from_json(header.at("encoder"));
        m.circuit_head = stack_from_json(header.at("circuit_head"));
        m.physical_head = stack_from_json(header.at("physical_head"));
        m.input_stats = stats_from_json(header.at("input_stats"));
        m.config.encoder = header.at("config").at("encoder").get<std::vector<std::size_t>>();
        m.config.circuit_hidden =
            header.at("config").at("circuit_hidden").get<std::vector<std::size_t>>();
        m.config.physical_hidden =
            header.at("config").at("physical_hidden").get<std::vector<std::size_t>>();
        m.init_seed = header.at("init_seed").get<std::uint64_t>();
        m.train_seed = header.at("train_seed").get<std::uint64_t>();

        // Chained dims must agree before touching the payload.
        std::size_t cur = m.config.input_dim;
        for (const auto* stack : {&m.encoder, &m.circuit_head, &m.physical_head}) {
            std::size_t at = stack == &m.encoder
                                 ? m.config.input_dim
                                 : (m.encoder.empty() ? m.config.input_dim
                                                      : m.encoder.back().out_dim());
            for (const DenseLayer& l : *stack) {
                if (l.in_dim() != at)
                    throw std::runtime_error("load_checkpoint: layer dimension mismatch");
                at = l.out_dim();
            }
            if (stack != &m.encoder && at != m.config.output_dim)
                throw std::runtime_error("load_checkpoint: head output dimension mismatch");
            if (stack == &m.encoder) cur = at;
        }
        (void)cur;

        for (auto* stack : {&m.encoder, &m.circuit_head, &m.physical_head}) {
            for (DenseLayer& l : *stack) {
                read_doubles(in, l.w.data.data(), l.w.data.size());
                read_doubles(in, l.b.data(), l.b.size());
            }
        }
    }
    // Reject trailing garbage.
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0)
        throw std::runtime_error("load_checkpoint: trailing bytes in " + path);
    return lm;
}

Geometry LoadedModel::predict(const Performance& x) const {
    if (is_linear()) return linear_predict_geometry(linear, x);
    return predict_geometry(senn, x);
}

const NormStats& LoadedModel::stats() const {
    return is_linear() ? linear.input_stats : senn.input_stats;
}

}  // namespace matchsyn
