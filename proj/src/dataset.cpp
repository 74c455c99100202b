#include "matchsyn/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "matchsyn/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "matchsyn/linalg.hpp"  // set_max_threads / max_threads

namespace matchsyn {

namespace {

constexpr double kTargetFloor = 1e-6;
constexpr int kMaxRedraws = 100;

const char* kCsvHeader =
    "re_zopt,im_zopt,c1,c2,l1,l2,k,q1,q2,cp,w_oa,w_ob,r0,r1,x_gnd,l_f";

void check_interval(const Interval& iv, const char* name) {
    if (!(iv.lo > 0.0) || !(iv.lo < iv.hi)) {
        throw std::invalid_argument(std::string("sampling range ") + name +
                                    ": need 0 < lo < hi");
    }
}

// Every regression target (6 circuit + 6 physical coordinates) must
// clear the magnitude floor that keeps the scaled losses well posed.
bool targets_above_floor(const CircuitParams& z, const Geometry& y) {
    const double v[12] = {z.l1, z.l2, z.k,  z.q1,   z.q2,  z.cp,
                          y.w_oa, y.w_ob, y.r0, y.r1, y.x_gnd, y.l_f};
    for (double t : v)
        if (!(t >= kTargetFloor)) return false;
    return true;
}

Triple make_triple(const GeometrySample& s, const EnvConfig& env) {
    Triple t;
    t.y = s.g;
    t.z = geometry_to_circuit(s.g, env);
    t.x = performance_from_geometry(s.g, s.c1, s.c2, env);
    return t;
}

std::array<double, 16> row_values(const Triple& t) {
    return {t.x.re_z, t.x.im_z, t.x.c1,  t.x.c2,   t.z.l1,  t.z.l2,
            t.z.k,    t.z.q1,   t.z.q2,  t.z.cp,   t.y.w_oa, t.y.w_ob,
            t.y.r0,   t.y.r1,   t.y.x_gnd, t.y.l_f};
}

Triple triple_from_values(const std::array<double, 16>& v) {
    Triple t;
    t.x = Performance{v[0], v[1], v[2], v[3]};
    t.z = CircuitParams{v[4], v[5], v[6], v[7], v[8], v[9]};
    t.y = Geometry{v[10], v[11], v[12], v[13], v[14], v[15]};
    return t;
}

nlohmann::json interval_json(const Interval& iv) {
    return nlohmann::json::array({iv.lo, iv.hi});
}

Interval interval_from_json(const nlohmann::json& j) {
    return Interval{j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

void SamplingRanges::validate() const {
    check_interval(w_oa, "w_oa");
    check_interval(w_ob, "w_ob");
    check_interval(r0, "r0");
    check_interval(r1, "r1");
    check_interval(x_gnd, "x_gnd");
    check_interval(l_f, "l_f");
    check_interval(c1, "c1");
    check_interval(c2, "c2");
}

std::size_t Dataset::train_count() const {
    std::size_t n = 0;
    for (Split s : split_tag)
        if (s == Split::train) ++n;
    return n;
}

std::vector<std::size_t> Dataset::train_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < split_tag.size(); ++i)
        if (split_tag[i] == Split::train) idx.push_back(i);
    return idx;
}

std::vector<std::size_t> Dataset::test_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < split_tag.size(); ++i)
        if (split_tag[i] == Split::test) idx.push_back(i);
    return idx;
}

namespace {

// Geometry is drawn sweep-style through a two-factor Gaussian copula,
// which keeps every marginal exactly uniform over its interval while
// correlating the joint draw the way EM sweep sets are correlated:
//
//   field_i = Phi( a_i * g_sweep + b_i * g_null + c_i * g_i )
//
// g_sweep moves all fields together along the design sweep. g_null
// moves them along the surrogate's near-null direction (a shorter feed
// traded against slightly larger coils leaves every circuit parameter
// almost unchanged), so distinct geometries realize the same circuit;
// the per-field g_i adds independent jitter. The null and jitter
// factors keep the performance -> geometry inverse underdetermined.
// Loading capacitors are free design inputs and stay independent.
constexpr double kNullFactor = 0.55;
// Null direction of d(log z)/d(log y) at the range centers, expressed
// in copula coordinates and normalized.
constexpr double kNullDir[6] = {0.124, 0.127, 0.319, 0.231, 0.504, -0.748};
constexpr double kJitter = 0.15;

double gauss_to_unit(double v) {
    return 0.5 * std::erfc(-v / 1.4142135623730950488);
}

GeometrySample sample_with(SplitMix64 rng, const SamplingRanges& ranges) {
    const double sweep = rng.normal();
    const double null_move = rng.normal();
    int field = 0;
    auto draw = [&](const Interval& iv) {
        const double b = kNullFactor * kNullDir[field++];
        const double a = std::sqrt(1.0 - b * b - kJitter * kJitter);
        const double v = a * sweep + b * null_move + kJitter * rng.normal();
        return iv.lo + (iv.hi - iv.lo) * gauss_to_unit(v);
    };
    GeometrySample s;
    s.g.w_oa = draw(ranges.w_oa);
    s.g.w_ob = draw(ranges.w_ob);
    s.g.r0 = draw(ranges.r0);
    s.g.r1 = draw(ranges.r1);
    s.g.x_gnd = draw(ranges.x_gnd);
    s.g.l_f = draw(ranges.l_f);
    s.c1 = rng.uniform(ranges.c1.lo, ranges.c1.hi);
    s.c2 = rng.uniform(ranges.c2.lo, ranges.c2.hi);
    return s;
}

}  // namespace

GeometrySample sample_geometry(std::uint64_t index, std::uint64_t master_seed,
                               const SamplingRanges& ranges) {
    return sample_with(SplitMix64(derive_stream(master_seed, index)), ranges);
}

namespace {

Triple generate_row(std::uint64_t index, std::uint64_t master_seed,
                    const SamplingRanges& ranges, const EnvConfig& env) {
    GeometrySample s = sample_geometry(index, master_seed, ranges);
    for (int attempt = 0;; ++attempt) {
        try {
            Triple t = make_triple(s, env);
            if (targets_above_floor(t.z, t.y)) return t;
        } catch (const std::domain_error&) {
            // redraw below
        }
        if (attempt + 1 >= kMaxRedraws)
            throw std::runtime_error("generate: row " + std::to_string(index) +
                                     " failed after 100 redraws");
        s = sample_with(SplitMix64(derive_stream(
                            master_seed, index, static_cast<std::uint64_t>(attempt) + 1)),
                        ranges);
    }
}

}  // namespace

Dataset generate(std::size_t n, std::uint64_t master_seed,
                 const SamplingRanges& ranges, const EnvConfig& env) {
    if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
    ranges.validate();

    Dataset d;
    d.seed = master_seed;
    d.ranges = ranges;
    d.env = env;
    d.rows.resize(n);

    std::exception_ptr first_error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        try {
            d.rows[static_cast<std::size_t>(i)] = generate_row(
                static_cast<std::uint64_t>(i), master_seed, ranges, env);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            {
                if (!first_error) first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return d;
}

std::vector<std::uint32_t> split_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    SplitMix64 rng(mix64(seed ^ 0x5370'6c69'7452'6e67ull));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

void split(Dataset& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw std::invalid_argument("split: train fraction must lie in (0, 1)");
    const std::size_t n = d.rows.size();
    const auto perm = split_permutation(n, seed);
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));

    d.split_tag.assign(n, Split::test);
    for (std::size_t i = 0; i < n_train; ++i) d.split_tag[perm[i]] = Split::train;
    d.split_info = SplitInfo{train_fraction, seed};

    // Normalization moments from the training rows only.
    std::array<double, 4> sum{}, sumsq{};
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d.split_tag[i] != Split::train) continue;
        const Performance& x = d.rows[i].x;
        const double v[4] = {x.re_z, x.im_z, x.c1, x.c2};
        for (int j = 0; j < 4; ++j) {
            sum[j] += v[j];
            sumsq[j] += v[j] * v[j];
        }
        ++count;
    }
    if (count == 0) throw std::invalid_argument("split: empty training split");
    for (int j = 0; j < 4; ++j) {
        const double mean = sum[j] / static_cast<double>(count);
        const double var = sumsq[j] / static_cast<double>(count) - mean * mean;
        const double stdev = std::sqrt(var > 0.0 ? var : 0.0);
        if (!(stdev > 0.0))
            throw std::runtime_error("split: input coordinate " + std::to_string(j) +
                                     " is constant on the training split");
        d.norm_stats.mean[j] = mean;
        d.norm_stats.stdev[j] = stdev;
    }
}

std::array<double, 4> normalize_input(const Performance& x, const NormStats& stats) {
    return {(x.re_z - stats.mean[0]) / stats.stdev[0],
            (x.im_z - stats.mean[1]) / stats.stdev[1],
            (x.c1 - stats.mean[2]) / stats.stdev[2],
            (x.c2 - stats.mean[3]) / stats.stdev[3]};
}

Performance denormalize_input(const std::array<double, 4>& v, const NormStats& stats) {
    return Performance{v[0] * stats.stdev[0] + stats.mean[0],
                       v[1] * stats.stdev[1] + stats.mean[1],
                       v[2] * stats.stdev[2] + stats.mean[2],
                       v[3] * stats.stdev[3] + stats.mean[3]};
}

std::string sidecar_path(const std::string& csv_path) {
    return csv_path + ".meta.json";
}

void save_csv(const Dataset& d, const std::string& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("save_csv: cannot open " + csv_path);
    out << kCsvHeader << '\n';
    char buf[32];
    for (const Triple& t : d.rows) {
        const auto vals = row_values(t);
        std::string line;
        line.reserve(16 * 26);
        for (std::size_t j = 0; j < vals.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", vals[j]);
            if (j) line += ',';
            line += buf;
        }
        line += '\n';
        out << line;
    }
    if (!out) throw std::runtime_error("save_csv: write failed for " + csv_path);
    out.close();

    nlohmann::json meta;
    meta["n"] = d.rows.size();
    meta["seed"] = d.seed;
    meta["env"] = {{"freq", d.env.freq}, {"r_load", d.env.r_load}};
    meta["ranges"] = {{"w_oa", interval_json(d.ranges.w_oa)},
                      {"w_ob", interval_json(d.ranges.w_ob)},
                      {"r0", interval_json(d.ranges.r0)},
                      {"r1", interval_json(d.ranges.r1)},
                      {"x_gnd", interval_json(d.ranges.x_gnd)},
                      {"l_f", interval_json(d.ranges.l_f)},
                      {"c1", interval_json(d.ranges.c1)},
                      {"c2", interval_json(d.ranges.c2)}};
    if (d.split_info) {
        meta["split"] = {{"fraction", d.split_info->fraction},
                         {"seed", d.split_info->seed}};
        meta["norm_stats"] = {
            {"mean", std::vector<double>(d.norm_stats.mean.begin(), d.norm_stats.mean.end())},
            {"stdev", std::vector<double>(d.norm_stats.stdev.begin(), d.norm_stats.stdev.end())}};
    } else {
        meta["split"] = nullptr;
    }
    std::ofstream meta_out(sidecar_path(csv_path), std::ios::binary);
    if (!meta_out)
        throw std::runtime_error("save_csv: cannot open " + sidecar_path(csv_path));
    meta_out << meta.dump(2) << '\n';
    if (!meta_out)
        throw std::runtime_error("save_csv: write failed for " + sidecar_path(csv_path));
}

Dataset load_csv(const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw std::runtime_error("load_csv: cannot open " + csv_path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw std::runtime_error("load_csv: unexpected header in " + csv_path);

    Dataset d;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 16> vals{};
        const char* p = line.c_str();
        char* end = nullptr;
        for (int j = 0; j < 16; ++j) {
            vals[j] = std::strtod(p, &end);
            if (end == p) throw std::runtime_error("load_csv: malformed row");
            p = end;
            if (j < 15) {
                if (*p != ',') throw std::runtime_error("load_csv: malformed row");
                ++p;
            }
        }
        d.rows.push_back(triple_from_values(vals));
    }

    std::ifstream meta_in(sidecar_path(csv_path), std::ios::binary);
    if (!meta_in)
        throw std::runtime_error("load_csv: missing sidecar " + sidecar_path(csv_path));
    nlohmann::json meta = nlohmann::json::parse(meta_in);

    d.seed = meta.at("seed").get<std::uint64_t>();
    d.env.freq = meta.at("env").at("freq").get<double>();
    d.env.r_load = meta.at("env").at("r_load").get<double>();
    const auto& r = meta.at("ranges");
    d.ranges.w_oa = interval_from_json(r.at("w_oa"));
    d.ranges.w_ob = interval_from_json(r.at("w_ob"));
    d.ranges.r0 = interval_from_json(r.at("r0"));
    d.ranges.r1 = interval_from_json(r.at("r1"));
    d.ranges.x_gnd = interval_from_json(r.at("x_gnd"));
    d.ranges.l_f = interval_from_json(r.at("l_f"));
    d.ranges.c1 = interval_from_json(r.at("c1"));
    d.ranges.c2 = interval_from_json(r.at("c2"));

    if (meta.at("n").get<std::size_t>() != d.rows.size())
        throw std::runtime_error("load_csv: row count does not match sidecar");

    if (!meta.at("split").is_null()) {
        const double fraction = meta.at("split").at("fraction").get<double>();
        const std::uint64_t split_seed = meta.at("split").at("seed").get<std::uint64_t>();
        split(d, fraction, split_seed);
        // Stats stored in the sidecar are authoritative; split() above
        // recomputes identical values from the same rows.
        const auto mean = meta.at("norm_stats").at("mean").get<std::vector<double>>();
        const auto stdev = meta.at("norm_stats").at("stdev").get<std::vector<double>>();
        for (int j = 0; j < 4; ++j) {
            d.norm_stats.mean[j] = mean.at(j);
            d.norm_stats.stdev[j] = stdev.at(j);
        }
    }
    return d;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a_file: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

}  // namespace matchsyn
