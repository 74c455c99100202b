#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "matchsyn/dataset.hpp"
#include "matchsyn/linalg.hpp"
#include "matchsyn/rng.hpp"
#include "test_util.hpp"

using namespace matchsyn;

TEST_SUITE("dataset") {

TEST_CASE("sample_geometry is a pure function of (index, seed, ranges)") {
    const SamplingRanges ranges;
    const auto a = sample_geometry(42, 7, ranges);
    const auto b = sample_geometry(42, 7, ranges);
    CHECK(a.g.w_oa == b.g.w_oa);
    CHECK(a.g.l_f == b.g.l_f);
    CHECK(a.c1 == b.c1);
    CHECK(a.c2 == b.c2);

    const auto c = sample_geometry(43, 7, ranges);
    CHECK(a.g.w_oa != c.g.w_oa);
    const auto d = sample_geometry(42, 8, ranges);
    CHECK(a.g.w_oa != d.g.w_oa);
}

TEST_CASE("sampled fields stay inside their intervals") {
    const SamplingRanges ranges;
    double lo[8], hi[8];
    std::fill(std::begin(lo), std::end(lo), 1e300);
    std::fill(std::begin(hi), std::end(hi), -1e300);
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const auto s = sample_geometry(i, 12345, ranges);
        const double v[8] = {s.g.w_oa, s.g.w_ob, s.g.r0,   s.g.r1,
                             s.g.x_gnd, s.g.l_f, s.c1,     s.c2};
        for (int j = 0; j < 8; ++j) {
            lo[j] = std::min(lo[j], v[j]);
            hi[j] = std::max(hi[j], v[j]);
        }
    }
    const Interval iv[8] = {ranges.w_oa, ranges.w_ob, ranges.r0,  ranges.r1,
                            ranges.x_gnd, ranges.l_f, ranges.c1, ranges.c2};
    for (int j = 0; j < 8; ++j) {
        CHECK(lo[j] >= iv[j].lo);
        CHECK(hi[j] <= iv[j].hi);
        // and the sampler actually explores the interval
        CHECK(lo[j] < iv[j].lo + 0.05 * (iv[j].hi - iv[j].lo));
        CHECK(hi[j] > iv[j].hi - 0.05 * (iv[j].hi - iv[j].lo));
    }
}

TEST_CASE("single-row generation matches manual composition") {
    const SamplingRanges ranges;
    const EnvConfig env;
    const Dataset d = generate(1, 99, ranges, env);
    REQUIRE(d.rows.size() == 1);
    const auto s = sample_geometry(0, 99, ranges);
    const CircuitParams z = geometry_to_circuit(s.g, env);
    const Performance x = performance_from_geometry(s.g, s.c1, s.c2, env);
    CHECK(d.rows[0].y.r0 == s.g.r0);
    CHECK(d.rows[0].z.l1 == z.l1);
    CHECK(d.rows[0].z.cp == z.cp);
    CHECK(d.rows[0].x.re_z == x.re_z);
    CHECK(d.rows[0].x.im_z == x.im_z);
    CHECK(d.rows[0].x.c1 == s.c1);
}

TEST_CASE("generation rejects n = 0") {
    CHECK_THROWS_AS(generate(0, 1, SamplingRanges{}, EnvConfig{}), std::invalid_argument);
}

TEST_CASE("every target clears the magnitude floor") {
    const Dataset d = generate(2000, 5, SamplingRanges{}, EnvConfig{});
    for (const Triple& t : d.rows) {
        const double targets[12] = {t.z.l1,  t.z.l2,  t.z.k,    t.z.q1,
                                    t.z.q2,  t.z.cp,  t.y.w_oa, t.y.w_ob,
                                    t.y.r0,  t.y.r1,  t.y.x_gnd, t.y.l_f};
        for (double v : targets) CHECK(v >= 1e-6);
        CHECK(t.z.k > 0.0);
        CHECK(t.z.k < 1.0);
    }
}

TEST_CASE("serialized dataset is byte-identical across runs and thread counts") {
    const SamplingRanges ranges;
    const EnvConfig env;

    testutil::TempFile f1("gen1.csv"), f2("gen2.csv"), f3("gen3.csv");

    set_max_threads(1);
    Dataset a = generate(1000, 2024, ranges, env);
    split(a, 0.8, 11);
    save_csv(a, f1.path.string());

    set_max_threads(1);
    Dataset b = generate(1000, 2024, ranges, env);
    split(b, 0.8, 11);
    save_csv(b, f2.path.string());

    set_max_threads(8);
    Dataset c = generate(1000, 2024, ranges, env);
    split(c, 0.8, 11);
    save_csv(c, f3.path.string());
    set_max_threads(0);

    const std::string bytes1 = testutil::read_file(f1.path);
    CHECK(bytes1.size() > 1000);
    CHECK(bytes1 == testutil::read_file(f2.path));
    CHECK(bytes1 == testutil::read_file(f3.path));
    CHECK(testutil::read_file(f1.path.string() + ".meta.json") ==
          testutil::read_file(f2.path.string() + ".meta.json"));
}

TEST_CASE("split tags, fractions and reproducibility") {
    Dataset d = generate(10, 3, SamplingRanges{}, EnvConfig{});
    split(d, 0.8, 17);
    REQUIRE(d.split_tag.size() == 10);
    CHECK(d.train_count() == 8);
    CHECK(d.test_indices().size() == 2);

    Dataset e = generate(10, 3, SamplingRanges{}, EnvConfig{});
    split(e, 0.8, 17);
    for (std::size_t i = 0; i < 10; ++i) CHECK(d.split_tag[i] == e.split_tag[i]);

    Dataset f = generate(10, 3, SamplingRanges{}, EnvConfig{});
    split(f, 0.8, 18);
    bool any_diff = false;
    for (std::size_t i = 0; i < 10; ++i)
        if (d.split_tag[i] != f.split_tag[i]) any_diff = true;
    CHECK(any_diff);

    // partition: each row is tagged exactly once (train xor test)
    CHECK(d.train_indices().size() + d.test_indices().size() == d.rows.size());

    CHECK_THROWS_AS(split(d, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(d, 1.0, 1), std::invalid_argument);
}

TEST_CASE("constant input coordinate makes normalization fail") {
    Dataset d = generate(20, 3, SamplingRanges{}, EnvConfig{});
    for (Triple& t : d.rows) t.x.c1 = 100.0;
    CHECK_THROWS_AS(split(d, 0.5, 1), std::runtime_error);
}

TEST_CASE("normalization round trip and moments") {
    Dataset d = generate(5000, 21, SamplingRanges{}, EnvConfig{});
    split(d, 0.8, 2);

    SUBCASE("mean maps to zero") {
        Performance mean{d.norm_stats.mean[0], d.norm_stats.mean[1],
                         d.norm_stats.mean[2], d.norm_stats.mean[3]};
        const auto v = normalize_input(mean, d.norm_stats);
        for (double x : v) CHECK(x == 0.0);
    }

    SUBCASE("round trip is lossless to 1e-12 relative") {
        for (std::size_t i = 0; i < d.rows.size(); i += 37) {
            const auto v = normalize_input(d.rows[i].x, d.norm_stats);
            const Performance back = denormalize_input(v, d.norm_stats);
            CHECK(back.re_z == doctest::Approx(d.rows[i].x.re_z).epsilon(1e-12));
            CHECK(back.im_z == doctest::Approx(d.rows[i].x.im_z).epsilon(1e-12));
            CHECK(back.c1 == doctest::Approx(d.rows[i].x.c1).epsilon(1e-12));
            CHECK(back.c2 == doctest::Approx(d.rows[i].x.c2).epsilon(1e-12));
        }
    }

    SUBCASE("normalized training moments are 0 and 1") {
        double sum[4] = {0, 0, 0, 0}, sumsq[4] = {0, 0, 0, 0};
        std::size_t n = 0;
        for (std::size_t i = 0; i < d.rows.size(); ++i) {
            if (d.split_tag[i] != Split::train) continue;
            const auto v = normalize_input(d.rows[i].x, d.norm_stats);
            for (int j = 0; j < 4; ++j) {
                sum[j] += v[j];
                sumsq[j] += v[j] * v[j];
            }
            ++n;
        }
        for (int j = 0; j < 4; ++j) {
            const double mean = sum[j] / static_cast<double>(n);
            const double var = sumsq[j] / static_cast<double>(n) - mean * mean;
            CHECK(std::fabs(mean) < 1e-10);
            CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("csv round trip is lossless and restores the split") {
    Dataset d = generate(500, 77, SamplingRanges{}, EnvConfig{});
    split(d, 0.75, 5);

    testutil::TempFile f("roundtrip.csv");
    save_csv(d, f.path.string());
    const Dataset back = load_csv(f.path.string());

    REQUIRE(back.rows.size() == d.rows.size());
    CHECK(back.seed == d.seed);
    CHECK(back.env.freq == d.env.freq);
    CHECK(back.ranges.r1.hi == d.ranges.r1.hi);
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        CHECK(back.rows[i].x.re_z == d.rows[i].x.re_z);
        CHECK(back.rows[i].x.im_z == d.rows[i].x.im_z);
        CHECK(back.rows[i].z.l1 == d.rows[i].z.l1);
        CHECK(back.rows[i].z.k == d.rows[i].z.k);
        CHECK(back.rows[i].y.w_oa == d.rows[i].y.w_oa);
        CHECK(back.rows[i].y.l_f == d.rows[i].y.l_f);
        CHECK(back.split_tag[i] == d.split_tag[i]);
    }
    for (int j = 0; j < 4; ++j) {
        CHECK(back.norm_stats.mean[j] == d.norm_stats.mean[j]);
        CHECK(back.norm_stats.stdev[j] == d.norm_stats.stdev[j]);
    }

    // Saving the reloaded dataset reproduces the file byte for byte.
    testutil::TempFile g("roundtrip2.csv");
    save_csv(back, g.path.string());
    CHECK(testutil::read_file(f.path) == testutil::read_file(g.path));
    CHECK(testutil::read_file(f.path.string() + ".meta.json") ==
          testutil::read_file(g.path.string() + ".meta.json"));
}

TEST_CASE("invalid ranges are rejected") {
    SamplingRanges r;
    r.r0 = {50.0, 38.0};
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
    SamplingRanges r2;
    r2.c1 = {0.0, 10.0};
    CHECK_THROWS_AS(r2.validate(), std::invalid_argument);
}

}  // TEST_SUITE
