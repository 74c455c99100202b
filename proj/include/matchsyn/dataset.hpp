#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "matchsyn/circuit_model.hpp"

namespace matchsyn {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Closed sampling intervals for the geometry fields and the loading
// capacitors. Defaults bracket the synthesized-example scale.
struct SamplingRanges {
    Interval w_oa{8.0, 16.0};
    Interval w_ob{8.0, 16.0};
    Interval r0{38.0, 50.0};
    Interval r1{42.0, 60.0};
    Interval x_gnd{50.0, 70.0};
    Interval l_f{10.0, 40.0};
    Interval c1{50.0, 400.0};
    Interval c2{50.0, 400.0};

    // Throws std::invalid_argument unless every interval has
    // 0 < lo < hi.
    void validate() const;
};

// Per-coordinate input normalization, computed on the training split.
struct NormStats {
    std::array<double, 4> mean{};
    std::array<double, 4> stdev{};
};

enum class Split : std::uint8_t { train = 0, test = 1 };

struct Triple {
    Performance x;
    CircuitParams z;
    Geometry y;
};

struct SplitInfo {
    double fraction = 0.8;
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<Triple> rows;
    std::uint64_t seed = 0;
    SamplingRanges ranges;
    EnvConfig env;
    std::optional<SplitInfo> split_info;
    std::vector<Split> split_tag;  // empty until split() is applied
    NormStats norm_stats{};        // valid only once split

    std::size_t train_count() const;
    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
};

struct GeometrySample {
    Geometry g;
    double c1 = 0.0;
    double c2 = 0.0;
};

// Uniform sample of (geometry, c1, c2) at a given row index. Pure
// function of (index, master_seed, ranges).
GeometrySample sample_geometry(std::uint64_t index, std::uint64_t master_seed,
                               const SamplingRanges& ranges);

// n surrogate-labelled triples. Row i is a pure function of
// (master_seed, i); generation may run on any number of threads with
// identical output. Rows whose targets fall below the 1e-6 magnitude
// floor (or hit a surrogate domain error) are redrawn from a derived
// sub-stream, up to 100 attempts each.
Dataset generate(std::size_t n, std::uint64_t master_seed,
                 const SamplingRanges& ranges, const EnvConfig& env);

// Tags each row train/test by a seeded permutation; the first
// floor(n * train_fraction) permuted rows become the training split.
// Normalization statistics are computed from the training rows only.
void split(Dataset& d, double train_fraction, std::uint64_t seed);

// The seeded permutation used by split(); exposed so loaders rebuild
// identical tags from the sidecar metadata.
std::vector<std::uint32_t> split_permutation(std::size_t n, std::uint64_t seed);

std::array<double, 4> normalize_input(const Performance& x, const NormStats& stats);
Performance denormalize_input(const std::array<double, 4>& v, const NormStats& stats);

// CSV with a fixed 16-column header plus a JSON sidecar
// (<csv_path>.meta.json) carrying seed, ranges, env, split and
// normalization metadata. Values are printed with 17 significant
// digits so the round trip is lossless.
void save_csv(const Dataset& d, const std::string& csv_path);
Dataset load_csv(const std::string& csv_path);
std::string sidecar_path(const std::string& csv_path);

// FNV-1a 64-bit checksum of a file's bytes.
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace matchsyn
