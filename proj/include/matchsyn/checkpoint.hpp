#pragma once

#include <string>

#include "matchsyn/baselines.hpp"
#include "matchsyn/tensor_nn.hpp"

namespace matchsyn {

// Checkpoint container: magic "SENN1", a little-endian uint64 header
// length, a JSON header (kind, layer dims, activations, input stats,
// config echo, seeds), then every tensor as 64-bit little-endian
// floats in declaration order (per layer: weights row-major, then
// bias; encoder, circuit head, physical head).
inline constexpr const char* kCheckpointMagic = "SENN1";

void save_checkpoint(const std::string& path, const SENNModel& m,
                     const std::string& kind = "senn");
void save_checkpoint(const std::string& path, const LinearModel& m);

struct LoadedModel {
    std::string kind;   // "senn", "naive" or "linear"
    SENNModel senn;     // valid unless kind == "linear"
    LinearModel linear; // valid when kind == "linear"

    bool is_linear() const { return kind == "linear"; }
    Geometry predict(const Performance& x) const;
    const NormStats& stats() const;
};

// Throws std::runtime_error on bad magic, malformed header, or any
// dimension mismatch between header and tensor payload.
LoadedModel load_checkpoint(const std::string& path);

}  // namespace matchsyn
